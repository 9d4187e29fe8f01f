"""Feature-space search and stacked ensembles with a decision-tree combiner."""

from __future__ import annotations

import itertools
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, InvariantError
from .extraction import DEFAULT_MARKERS, Task
from .features import FEATURE_CLASSES, FeatureConfig
from .io import dump_json
from .models import SCORE_TIE_TOL, Example, MarkerModel, ModelKind, load_model, save_model, train
from .pipeline import FusionCase, fusion_cases, predict_case, predict_example

ENSEMBLE_FORMAT_VERSION = 1
_GAIN_EPS = 1e-12


# -- components ---------------------------------------------------------------

@dataclass(frozen=True)
class ComponentSpec:
    kind: ModelKind
    config: FeatureConfig

    @classmethod
    def parse(cls, text: str) -> "ComponentSpec":
        kind, sep, cfg = str(text).partition(":")
        if not sep:
            raise ConfigError(f"component spec {text!r} should look like 'disj:SV'")
        kind = ModelKind.parse(kind)
        return cls(kind, FeatureConfig.parse("W" if kind is ModelKind.WORD_BASED else cfg))

    def __str__(self):
        return f"{self.kind.value}:{self.config}"


def _preset_dir():
    return resources.files("tempmark.data").joinpath("presets")


def list_presets() -> list[str]:
    return sorted(p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith(".txt"))


def load_preset(name: str) -> list[ComponentSpec]:
    """Component roster shipped under ``tempmark/data/presets/<name>.txt``."""
    f = _preset_dir().joinpath(f"{name}.txt")
    if not f.is_file():
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(list_presets())}")
    return load_roster(f.read_text("utf-8"))


def load_roster(text: str) -> list[ComponentSpec]:
    specs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            specs.append(ComponentSpec.parse(line))
    return specs


# -- feature search --------------------------------------------------------------

def enumerate_configs(classes: Iterable[str] = FEATURE_CLASSES) -> list[FeatureConfig]:
    """Every non-empty subset of ``classes``, ordered by config string."""
    classes = sorted(set(classes))
    if not 1 <= len(classes) <= len(FEATURE_CLASSES):
        raise ConfigError(f"need between 1 and {len(FEATURE_CLASSES)} classes")
    configs = [
        FeatureConfig(combo)
        for r in range(1, len(classes) + 1)
        for combo in itertools.combinations(classes, r)
    ]
    return sorted(configs, key=str)


@dataclass(frozen=True)
class SearchResult:
    config: FeatureConfig
    accuracy: float
    per_marker: Mapping[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"config": str(self.config), "accuracy": self.accuracy, "per_marker": dict(self.per_marker)}


def feature_search(
    train_set: Sequence[Example],
    dev_set: Sequence[Example],
    kind=ModelKind.DISJUNCTIVE,
    classes: Iterable[str] = FEATURE_CLASSES,
    task=Task.INTERPRETATION,
    marker_set: Sequence[str] = DEFAULT_MARKERS,
    seed: int = 0,
) -> list[SearchResult]:
    """Score every feature combination on the development set.

    Equivalent to training one model per combination: the count tables of
    different classes never interact, so each class is trained and scored
    once and combinations just add their per-class log-likelihoods.
    Sorted by accuracy (descending), then config string.
    """
    if not dev_set:
        raise ConfigError("feature search needs a non-empty development set")
    if not train_set:
        raise ConfigError("feature search needs a non-empty training set")
    task = Task(task)
    kind = ModelKind.parse(kind)
    if kind is ModelKind.WORD_BASED:
        raise ConfigError("the word-based model has no feature space to search")
    classes = sorted(set(classes))
    if task is Task.FUSION and "P" in classes:
        classes.remove("P")
    configs = enumerate_configs(classes)

    if task is Task.INTERPRETATION:
        scorer = _InterpretationScorer(train_set, dev_set, kind, classes, marker_set)
    else:
        scorer = _FusionScorer(train_set, fusion_cases(dev_set, seed), kind, classes, marker_set)

    results = [scorer.score(cfg) for cfg in configs]
    return sorted(results, key=lambda r: (-r.accuracy, str(r.config)))


class _InterpretationScorer:
    def __init__(self, train_set, dev_set, kind, classes, marker_set):
        ref = train(train_set, kind, classes[0], marker_set)
        # candidate order encodes the tie-break: more training instances, then name
        self.markers = sorted((t for t in ref.marker_set if ref.priors.get(t, 0)),
                              key=lambda t: (-ref.priors[t], t))
        self.prior = np.array([ref.log_prior(t) for t in self.markers])
        self.gold = np.array([ex.marker for ex in dev_set])
        self.per_class = {}
        for c in classes:
            model = train(train_set, kind, c, marker_set)
            self.per_class[c] = np.array([
                [model.log_likelihood(ex.main.project(c), ex.sub.project(c), t) for t in self.markers]
                for ex in dev_set
            ])

    def score(self, cfg: FeatureConfig) -> SearchResult:
        total = self.prior + sum(self.per_class[c] for c in cfg)
        best = total.max(axis=1, keepdims=True)
        near = total >= best - SCORE_TIE_TOL * np.maximum(1.0, np.abs(best))
        pred = np.array(self.markers)[np.argmax(near, axis=1)]  # first tied column wins
        hit = pred == self.gold
        per_marker = {t: float(hit[self.gold == t].mean()) for t in sorted(set(self.gold))}
        return SearchResult(cfg, float(hit.mean()), per_marker)


class _FusionScorer:
    def __init__(self, train_set, cases: list[FusionCase], kind, classes, marker_set):
        self.gold = np.array([c.gold for c in cases])
        self.markers = np.array([c.marker for c in cases])
        self.per_class = {}
        for cl in classes:
            model = train(train_set, kind, cl, marker_set)
            self.per_class[cl] = np.array([
                [model.log_likelihood(c.a.project(cl), c.b.project(cl), c.marker),
                 model.log_likelihood(c.b.project(cl), c.a.project(cl), c.marker)]
                for c in cases
            ])

    def score(self, cfg: FeatureConfig) -> SearchResult:
        total = sum(self.per_class[c] for c in cfg)
        a, b = total[:, 0], total[:, 1]
        tied = np.abs(a - b) <= SCORE_TIE_TOL * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        pred = np.where((b > a) & ~tied, "b_is_main", "a_is_main")
        hit = pred == self.gold
        per_marker = {t: float(hit[self.markers == t].mean()) for t in sorted(set(self.markers))}
        return SearchResult(cfg, float(hit.mean()), per_marker)


# -- decision tree -------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    counts: Mapping[str, int]


@dataclass(frozen=True)
class Split:
    attribute: int
    branches: Mapping[str, Union["Split", Leaf]]
    counts: Mapping[str, int]  # class counts at this node, used when no branch matches


DecisionTree = Union[Split, Leaf]


def majority(counts: Mapping[str, int]) -> str:
    return min(counts, key=lambda k: (-counts[k], k))


def entropy(counts: Iterable[int]) -> float:
    counts = [c for c in counts if c]
    n = sum(counts)
    return -sum(c / n * math.log2(c / n) for c in counts) if n else 0.0


def information_gain(rows: Sequence[tuple[Sequence[str], str]], attribute: int) -> float:
    base = entropy(Counter(label for _, label in rows).values())
    parts: dict[str, Counter] = {}
    for attrs, label in rows:
        parts.setdefault(attrs[attribute], Counter())[label] += 1
    n = len(rows)
    return base - sum(sum(c.values()) / n * entropy(c.values()) for c in parts.values())


def build_tree(records: Sequence[tuple[Sequence[str], str]], min_leaf: int = 2) -> DecisionTree:
    """ID3-style induction over categorical attributes.

    Splits multiway on the attribute with the highest information gain
    (lowest index on ties); an attribute is used at most once per path.
    Stops on pure nodes, nodes with fewer than ``min_leaf`` records, or when
    no attribute has positive gain.  No pruning.
    """
    if not records:
        raise ConfigError("cannot build a tree from zero records")
    if min_leaf < 1:
        raise ConfigError("min_leaf must be positive")
    arity = len(records[0][0])
    if any(len(a) != arity for a, _ in records):
        raise ConfigError("records have differing numbers of attributes")
    records = [(tuple(a), lab) for a, lab in records]

    def grow(rows, available):
        counts = dict(sorted(Counter(lab for _, lab in rows).items()))
        if len(counts) == 1 or len(rows) < min_leaf or not available:
            return Leaf(counts)
        gains = {a: information_gain(rows, a) for a in available}
        best = min(available, key=lambda a: (-gains[a], a))
        if any(g > gains[best] for g in gains.values()):
            raise InvariantError("chosen split does not have maximal information gain")
        if gains[best] <= _GAIN_EPS:
            return Leaf(counts)
        groups: dict[str, list] = {}
        for r in rows:
            groups.setdefault(r[0][best], []).append(r)
        rest = tuple(a for a in available if a != best)
        return Split(best, {v: grow(g, rest) for v, g in sorted(groups.items())}, counts)

    return grow(records, tuple(range(arity)))


def classify(tree: DecisionTree, record: Sequence[str]) -> str:
    """Follow matching branches; fall back to the majority at the last node reached."""
    node = tree
    while isinstance(node, Split):
        nxt = node.branches.get(record[node.attribute])
        if nxt is None:
            return majority(node.counts)
        node = nxt
    return majority(node.counts)


def tree_depth(tree: DecisionTree) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(b) for b in tree.branches.values())


def tree_to_json(tree: DecisionTree) -> dict:
    if isinstance(tree, Leaf):
        return {"leaf": dict(tree.counts)}
    return {
        "split": tree.attribute,
        "counts": dict(tree.counts),
        "branches": {v: tree_to_json(b) for v, b in tree.branches.items()},
    }


def tree_from_json(obj: dict) -> DecisionTree:
    if "leaf" in obj:
        return Leaf(dict(obj["leaf"]))
    return Split(int(obj["split"]), {v: tree_from_json(b) for v, b in obj["branches"].items()}, dict(obj["counts"]))


def tree_attributes(tree: DecisionTree) -> set[int]:
    if isinstance(tree, Leaf):
        return set()
    out = {tree.attribute}
    for b in tree.branches.values():
        out |= tree_attributes(b)
    return out


# -- stacking ------------------------------------------------------------------

@dataclass(frozen=True)
class StackedEnsemble:
    components: tuple[tuple[ComponentSpec, MarkerModel], ...]
    tree: DecisionTree
    task: Task
    cv_accuracy: Optional[float] = None
    secondary_accuracy: Optional[float] = None

    def __post_init__(self):
        if any(a >= len(self.components) for a in tree_attributes(self.tree)):
            raise InvariantError("decision tree refers to a component that does not exist")

    def record(self, item) -> tuple[str, ...]:
        if self.task is Task.FUSION:
            return tuple(predict_case(m, item).chosen for _, m in self.components)
        return tuple(predict_example(m, item).chosen for _, m in self.components)

    def predict(self, item) -> str:
        return classify(self.tree, self.record(item))

    def predict_all(self, items) -> list[str]:
        return [self.predict(it) for it in items]

    def to_json(self, model_refs: Optional[Sequence[str]] = None) -> dict:
        comps = []
        for i, (spec, model) in enumerate(self.components):
            entry = {"spec": str(spec)}
            if model_refs is not None:
                entry["model_ref"] = model_refs[i]
            else:
                entry["model"] = model.to_json()
            comps.append(entry)
        return {
            "version": ENSEMBLE_FORMAT_VERSION,
            "task": self.task.value,
            "components": comps,
            "tree": tree_to_json(self.tree),
            "cv_accuracy": self.cv_accuracy,
            "secondary_accuracy": self.secondary_accuracy,
        }

    @classmethod
    def from_json(cls, obj: dict, base_dir=None) -> "StackedEnsemble":
        if obj.get("version") != ENSEMBLE_FORMAT_VERSION:
            raise ConfigError(f"unsupported ensemble version {obj.get('version')!r}")
        comps = []
        for entry in obj["components"]:
            spec = ComponentSpec.parse(entry["spec"])
            if "model" in entry:
                model = MarkerModel.from_json(entry["model"])
            else:
                model = load_model(Path(base_dir or ".") / entry["model_ref"])
            comps.append((spec, model))
        return cls(tuple(comps), tree_from_json(obj["tree"]), Task(obj["task"]),
                   obj.get("cv_accuracy"), obj.get("secondary_accuracy"))


def _component_label(spec: ComponentSpec) -> str:
    return str(spec).replace(":", "_")


def save_ensemble(ens: StackedEnsemble, path) -> None:
    """Write the ensemble JSON plus one model file per component next to it."""
    path = Path(path)
    refs = []
    for i, (spec, model) in enumerate(ens.components):
        ref = f"{path.stem}_components/{i:02d}_{_component_label(spec)}.json"
        save_model(model, path.parent / ref)
        refs.append(ref)
    dump_json(ens.to_json(refs), path)


def load_ensemble(path) -> StackedEnsemble:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        return StackedEnsemble.from_json(json.load(f), path.parent)


def _kfold(n: int, folds: int, seed: int) -> list[list[int]]:
    idx = list(range(n))
    random.Random(seed).shuffle(idx)
    return [sorted(idx[k::folds]) for k in range(folds)]


def train_ensemble(
    components: Sequence[Union[ComponentSpec, str]],
    primary_train: Sequence[Example],
    secondary_train: Sequence[Example],
    task=Task.INTERPRETATION,
    folds: int = 10,
    seed: int = 0,
    min_leaf: int = 2,
    retrain: bool = True,
    marker_set: Sequence[str] = DEFAULT_MARKERS,
) -> StackedEnsemble:
    """Stack component models under a decision tree.

    Components are trained on ``primary_train`` and their predictions on
    ``secondary_train`` become the tree's training records.  k-fold
    cross-validation over those records estimates the tree's accuracy
    (``cv_accuracy``); the final tree sees all of them.  With ``retrain``
    the components are then refit on both sets for use at test time.
    """
    task = Task(task)
    specs = [c if isinstance(c, ComponentSpec) else ComponentSpec.parse(c) for c in components]
    if not specs:
        raise ConfigError("ensemble needs at least one component")
    if folds < 2:
        raise ConfigError("need at least 2 folds")
    if folds > len(secondary_train):
        raise ConfigError(f"{folds} folds but only {len(secondary_train)} secondary instances")
    if task is Task.FUSION and any("P" in s.config for s in specs):
        raise ConfigError("fusion components cannot use the position feature")

    models = [train(primary_train, s.kind, s.config, marker_set) for s in specs]
    staging = StackedEnsemble(tuple(zip(specs, models)), Leaf({"_": 1}), task)
    items = fusion_cases(secondary_train, seed) if task is Task.FUSION else list(secondary_train)
    gold = [it.gold for it in items] if task is Task.FUSION else [it.marker for it in items]
    records = [(staging.record(it), g) for it, g in zip(items, gold)]

    hits = 0
    for held in _kfold(len(records), folds, seed):
        held_set = set(held)
        fold_tree = build_tree([r for i, r in enumerate(records) if i not in held_set], min_leaf)
        hits += sum(classify(fold_tree, records[i][0]) == records[i][1] for i in held)
    cv_accuracy = hits / len(records)

    tree = build_tree(records, min_leaf)
    secondary_accuracy = sum(classify(tree, a) == g for a, g in records) / len(records)

    if retrain:
        both = list(primary_train) + list(secondary_train)
        models = [train(both, s.kind, s.config, marker_set) for s in specs]
    return StackedEnsemble(tuple(zip(specs, models)), tree, task, cv_accuracy, secondary_accuracy)
