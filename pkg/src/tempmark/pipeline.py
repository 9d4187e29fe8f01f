"""Glue between clause pairs, feature bundles and models."""

from __future__ import annotations

import random
from typing import Iterable, NamedTuple, Sequence

from .extraction import ClausePair, Task
from .features import FEATURE_CLASSES, WORD_CLASS, FeatureBundle, Lexicons, as_config, clause_bundle
from .models import (
    Example,
    MarkerModel,
    Prediction,
    predict_fusion,
    predict_marker,
)


class FusionCase(NamedTuple):
    a: FeatureBundle
    b: FeatureBundle
    marker: str
    gold: str  # "a_is_main" | "b_is_main"
    id: str = ""


def examples_from_pairs(
    pairs: Iterable[ClausePair],
    lexicons: Lexicons,
    classes: Sequence[str] = FEATURE_CLASSES + (WORD_CLASS,),
) -> list[Example]:
    """Bundles for every class in ``classes`` (word tokens included by default)."""
    lexical = tuple(c for c in classes if c != WORD_CLASS)
    out = []
    for p in pairs:
        m = clause_bundle(p.main, lexical, lexicons, "M", p.position).values
        s = clause_bundle(p.sub, lexical, lexicons, "S", p.position).values
        if WORD_CLASS in classes:
            m = {**m, **clause_bundle(p.main, WORD_CLASS, lexicons).values}
            s = {**s, **clause_bundle(p.sub, WORD_CLASS, lexicons).values}
        out.append(Example(FeatureBundle(m, "M"), FeatureBundle(s, "S"), p.marker, p.source_id))
    return out


def fusion_cases(examples: Iterable[Example], seed: int = 0) -> list[FusionCase]:
    """Present each pair's clauses in a seeded random order with the marker visible.

    The order for a pair depends only on ``seed`` and the pair id, matching
    :func:`tempmark.extraction.make_test_instance`.
    """
    out = []
    for ex in examples:
        a, b = ex.main.with_side(None), ex.sub.with_side(None)
        if random.Random(f"{seed}:{ex.id}").random() < 0.5:
            out.append(FusionCase(b, a, ex.marker, "b_is_main", ex.id))
        else:
            out.append(FusionCase(a, b, ex.marker, "a_is_main", ex.id))
    return out


def predict_example(model: MarkerModel, ex: Example) -> Prediction:
    cfg = model.config
    return predict_marker(model, ex.main.project(cfg), ex.sub.project(cfg))


def predict_case(model: MarkerModel, case: FusionCase) -> Prediction:
    cfg = model.config
    return predict_fusion(model, case.a.project(cfg), case.b.project(cfg), case.marker)


def predict_all(model: MarkerModel, items: Sequence, task: Task = Task.INTERPRETATION) -> list[str]:
    task = Task(task)
    if task is Task.FUSION:
        return [predict_case(model, c).chosen for c in items]
    return [predict_example(model, ex).chosen for ex in items]


def gold_labels(items: Sequence, task: Task = Task.INTERPRETATION) -> list[str]:
    return [it.gold if Task(task) is Task.FUSION else it.marker for it in items]


def strip_position(config):
    """Fusion never sees clause order."""
    config = as_config(config)
    return config.without("P") if "P" in config else config


def accuracy(gold: Sequence[str], pred: Sequence[str]) -> float:
    if len(gold) != len(pred):
        raise ValueError("length mismatch")
    return sum(g == p for g, p in zip(gold, pred)) / len(gold) if gold else 0.0


def evaluate_model(model: MarkerModel, items: Sequence, task=Task.INTERPRETATION) -> float:
    return accuracy(gold_labels(items, task), predict_all(model, items, task))
