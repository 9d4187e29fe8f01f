"""Partitioning, scoring, significance and agreement statistics."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .errors import ConfigError
from .models import ModelKind, train
from .pipeline import accuracy, evaluate_model
from .extraction import DEFAULT_MARKERS, Task

CHI2_CRITICAL_05 = 3.841


# -- partition -----------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    train_ids: tuple
    dev_ids: tuple
    test_ids: tuple
    seed: int

    def to_json(self) -> dict:
        return {"seed": self.seed, "train": list(self.train_ids), "dev": list(self.dev_ids), "test": list(self.test_ids)}


def partition(ids: Sequence[Hashable], seed: int = 0, ratios=(0.8, 0.1, 0.1)) -> Partition:
    """Seeded shuffle followed by an 80/10/10 split (dev and test get the floor)."""
    ids = list(ids)
    if len(ids) < 10:
        raise ConfigError(f"need at least 10 instances to partition, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ConfigError("instance ids must be unique")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    order = sorted(ids, key=str)
    random.Random(seed).shuffle(order)
    n = len(order)
    n_dev = int(n * ratios[1] + 1e-9)
    n_test = int(n * ratios[2] + 1e-9)
    n_train = n - n_dev - n_test
    return Partition(
        tuple(order[:n_train]),
        tuple(order[n_train:n_train + n_dev]),
        tuple(order[n_train + n_dev:]),
        seed,
    )


# -- scoring -------------------------------------------------------------------

@dataclass(frozen=True)
class LabelScore:
    precision: float
    recall: float
    f_score: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    overall_accuracy: float
    per_label: Mapping[str, LabelScore]
    confusion: Mapping[str, Mapping[str, int]]  # gold -> predicted -> count
    n: int

    @property
    def overall_f(self) -> float:
        """Support-weighted mean of per-label F."""
        total = sum(s.support for s in self.per_label.values())
        return sum(s.f_score * s.support for s in self.per_label.values()) / total if total else 0.0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.overall_accuracy,
            "f_score_weighted": self.overall_f,
            "per_label": {
                lab: {"precision": s.precision, "recall": s.recall, "f_score": s.f_score, "support": s.support}
                for lab, s in self.per_label.items()
            },
            "confusion": {g: dict(row) for g, row in self.confusion.items()},
        }

    def to_table(self) -> str:
        rows = [(lab, f"{s.support}", _pct(s.recall), _pct(s.precision), _pct(s.f_score))
                for lab, s in self.per_label.items()]
        rows.append(("All", f"{self.n}", _pct(self.overall_accuracy), "", _pct(self.overall_f)))
        return render_table(("Label", "Support", "Accuracy", "Precision", "F-score"), rows)


def _pct(x: float) -> str:
    return f"{100 * x:.2f}"


def score(gold: Sequence[str], pred: Sequence[str]) -> EvalReport:
    if len(gold) != len(pred):
        raise ConfigError(f"gold has {len(gold)} labels but predictions have {len(pred)}")
    if not gold:
        raise ConfigError("cannot score an empty prediction set")
    labels = sorted(set(gold) | set(pred))
    confusion = {g: {p: 0 for p in labels} for g in labels}
    for g, p in zip(gold, pred):
        confusion[g][p] += 1
    per_label = {}
    for lab in labels:
        tp = confusion[lab][lab]
        support = sum(confusion[lab].values())
        predicted = sum(confusion[g][lab] for g in labels)
        p = tp / predicted if predicted else 0.0
        r = tp / support if support else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        per_label[lab] = LabelScore(p, r, f, support)
    return EvalReport(accuracy(gold, pred), per_label, confusion, len(gold))


# -- significance ----------------------------------------------------------------

def chi_square_counts(correct1: int, wrong1: int, correct2: int, wrong2: int) -> float:
    """Pearson statistic for a 2x2 table, no continuity correction."""
    table = ((correct1, wrong1), (correct2, wrong2))
    n = correct1 + wrong1 + correct2 + wrong2
    rows = [sum(r) for r in table]
    cols = [correct1 + correct2, wrong1 + wrong2]
    if n == 0 or 0 in rows or 0 in cols:
        return 0.0
    stat = 0.0
    for i, j in itertools.product(range(2), range(2)):
        expected = rows[i] * cols[j] / n
        stat += (table[i][j] - expected) ** 2 / expected
    return stat


def chi_square(gold: Sequence[str], pred1: Sequence[str], pred2: Sequence[str]) -> tuple[float, bool]:
    """Compare two classifiers by their correct/incorrect counts on the same items."""
    if not len(gold) == len(pred1) == len(pred2):
        raise ConfigError("gold and both prediction lists must have equal length")
    c1 = sum(g == p for g, p in zip(gold, pred1))
    c2 = sum(g == p for g, p in zip(gold, pred2))
    n = len(gold)
    stat = chi_square_counts(c1, n - c1, c2, n - c2)
    return stat, stat > CHI2_CRITICAL_05


# -- agreement -----------------------------------------------------------------

def percent_agreement(a: Sequence[str], b: Sequence[str]) -> float:
    if len(a) != len(b):
        raise ConfigError("raters labelled different numbers of items")
    if not a:
        raise ConfigError("no items to compare")
    return sum(x == y for x, y in zip(a, b)) / len(a)


def kappa(a: Sequence[str], b: Sequence[str]) -> float:
    """Cohen's kappa with each rater's own marginals."""
    p_o = percent_agreement(a, b)
    n = len(a)
    ca, cb = {}, {}
    for x in a:
        ca[x] = ca.get(x, 0) + 1
    for y in b:
        cb[y] = cb.get(y, 0) + 1
    p_e = sum(ca[k] * cb.get(k, 0) for k in ca) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1 - p_e)


def _pairwise(raters, fn) -> float:
    raters = list(raters)
    if len(raters) < 2:
        raise ConfigError("need at least two raters")
    vals = [fn(x, y) for x, y in itertools.combinations(raters, 2)]
    return sum(vals) / len(vals)


def pairwise_mean_kappa(raters: Sequence[Sequence[str]]) -> float:
    return _pairwise(raters, kappa)


def pairwise_mean_agreement(raters: Sequence[Sequence[str]]) -> float:
    return _pairwise(raters, percent_agreement)


# -- learning curve --------------------------------------------------------------

def learning_curve(
    train_set,
    eval_set,
    kind=ModelKind.DISJUNCTIVE,
    config="SV",
    sizes: Sequence[int] = (),
    seed: int = 0,
    task=Task.INTERPRETATION,
    marker_set=DEFAULT_MARKERS,
) -> list[tuple[int, float]]:
    """Accuracy of models trained on growing prefixes of one seeded shuffle."""
    sizes = list(sizes)
    if not sizes:
        raise ConfigError("no training sizes given")
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("sizes must be ascending")
    if sizes[0] < 1 or sizes[-1] > len(train_set):
        raise ConfigError(f"sizes must lie in 1..{len(train_set)}")
    order = list(train_set)
    random.Random(seed).shuffle(order)
    return [(n, evaluate_model(train(order[:n], kind, config, marker_set), eval_set, task)) for n in sizes]


# -- rendering -------------------------------------------------------------------

def render_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Aligned plain-text columns; first column left-aligned, the rest right."""
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]

    def line(r):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(cells[0]), rule] + [line(r) for r in cells[1:]]) + "\n"
