"""Conjunctive, disjunctive and word-based marker models.

Every model is a bag of counts.  The disjunctive model keeps one table per
(feature class, clause side) mapping a value to per-marker counts; the
conjunctive model keeps one table per class keyed by (main value,
subordinate value) pairs.  Probabilities use the m-estimate with a uniform
prior and m equal to the number of distinct keys in the table, which
reduces to ``(count + 1) / (marker_total + m)``.

Scores are natural-log joint probabilities ``log P(t) + sum log P(f | t)``;
the clause likelihoods that do not depend on the marker are never computed.
"""

from __future__ import annotations

import enum
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import ConfigError
from .extraction import DEFAULT_MARKERS, MarkerSet
from .features import WORD_CLASS, FeatureBundle, FeatureConfig, as_config
from .io import atomic_write_text

MODEL_FORMAT_VERSION = 1
FUSION_LABELS = ("a_is_main", "b_is_main")
SCORE_TIE_TOL = 1e-12


class ModelKind(str, enum.Enum):
    CONJUNCTIVE = "conj"
    DISJUNCTIVE = "disj"
    WORD_BASED = "word"

    @classmethod
    def parse(cls, text) -> "ModelKind":
        if isinstance(text, cls):
            return text
        aliases = {"conjunctive": "conj", "disjunctive": "disj", "word-based": "word", "wordbased": "word", "words": "word"}
        t = str(text).strip().lower()
        try:
            return cls(aliases.get(t, t))
        except ValueError:
            raise ConfigError(f"unknown model kind {text!r}") from None


class Example(NamedTuple):
    main: FeatureBundle
    sub: FeatureBundle
    marker: str
    id: str = ""


@dataclass(frozen=True)
class Prediction:
    ranked: tuple[tuple[str, float], ...]
    chosen: str
    tie: bool = False

    def to_json(self) -> dict:
        return {"chosen": self.chosen, "tie": self.tie, "ranked": [[l, s] for l, s in self.ranked]}


def smoothed_prob(count: int, class_total: int, space_size: int) -> float:
    """m-estimate with uniform prior ``1/space_size`` and ``m = space_size``."""
    if space_size < 1:
        raise ValueError("space_size must be >= 1")
    m = space_size
    return (count + m * (1.0 / m)) / (class_total + m)


def _table_names(kind: ModelKind, config: FeatureConfig) -> list[str]:
    if kind is ModelKind.CONJUNCTIVE:
        return list(config)
    return [f"{c}|{side}" for c in config for side in ("M", "S")]


@dataclass(frozen=True)
class MarkerModel:
    kind: ModelKind
    config: FeatureConfig
    marker_set: tuple[str, ...]
    priors: Mapping[str, int]
    # table name -> key -> marker -> count; conjunctive keys are (main, sub) tuples
    tables: Mapping[str, Mapping[object, Mapping[str, int]]]
    _totals: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        totals = {}
        for name, tbl in self.tables.items():
            t = Counter()
            for row in tbl.values():
                t.update(row)
            totals[name] = t
        object.__setattr__(self, "_totals", totals)

    @property
    def space_sizes(self) -> dict[str, int]:
        return {name: len(tbl) for name, tbl in self.tables.items()}

    @property
    def n_instances(self) -> int:
        return sum(self.priors.values())

    def class_total(self, table: str, marker: str) -> int:
        return self._totals.get(table, Counter())[marker]

    def prob(self, table: str, key, marker: str) -> float:
        """Smoothed ``P(key | marker)`` for a key seen in training."""
        tbl = self.tables[table]
        return smoothed_prob(tbl.get(key, {}).get(marker, 0), self.class_total(table, marker), len(tbl))

    def log_factor(self, table: str, key, marker: str) -> float:
        tbl = self.tables.get(table, {})
        m = len(tbl)
        row = tbl.get(key)
        if row is None:
            # never seen with any marker: the same factor for every candidate
            return -math.log(m) if m else 0.0
        return math.log(smoothed_prob(row.get(marker, 0), self.class_total(table, marker), m))

    def factors(self, main: FeatureBundle, sub: FeatureBundle):
        """``(table, key)`` pairs contributing to the likelihood, in scoring order."""
        for c in self.config:
            mv, sv = main.get(c), sub.get(c)
            if self.kind is ModelKind.CONJUNCTIVE:
                for a in mv:
                    for b in sv:
                        yield c, (a, b)
            else:
                for a in mv:
                    yield f"{c}|M", a
                for b in sv:
                    yield f"{c}|S", b

    def log_likelihood(self, main: FeatureBundle, sub: FeatureBundle, marker: str) -> float:
        return math.fsum(self.log_factor(t, k, marker) for t, k in self.factors(main, sub))

    def log_prior(self, marker: str) -> float:
        n = self.priors.get(marker, 0)
        return math.log(n / self.n_instances) if n else -math.inf

    def check_bundle(self, bundle: FeatureBundle) -> None:
        extra = set(bundle.values) - set(self.config)
        if extra:
            raise ConfigError(
                f"bundle has classes {''.join(sorted(extra))} outside model config {self.config}"
            )

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        def enc(key):
            return "\t".join(key) if isinstance(key, tuple) else key

        return {
            "version": MODEL_FORMAT_VERSION,
            "kind": self.kind.value,
            "config": str(self.config),
            "marker_set": list(self.marker_set),
            "priors": dict(self.priors),
            "tables": {
                name: {enc(k): dict(row) for k, row in tbl.items()}
                for name, tbl in self.tables.items()
            },
            "space_sizes": self.space_sizes,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, obj: dict) -> "MarkerModel":
        try:
            if obj["version"] != MODEL_FORMAT_VERSION:
                raise ConfigError(f"unsupported model version {obj['version']!r}")
            kind = ModelKind.parse(obj["kind"])
            conj = kind is ModelKind.CONJUNCTIVE
            tables = {
                name: {(tuple(k.split("\t")) if conj else k): dict(row) for k, row in tbl.items()}
                for name, tbl in obj["tables"].items()
            }
            model = cls(kind, FeatureConfig.parse(obj["config"]), tuple(obj["marker_set"]),
                        dict(obj["priors"]), tables)
        except (KeyError, TypeError) as e:
            raise ConfigError(f"malformed model file: missing or bad field {e}") from e
        if model.space_sizes != obj.get("space_sizes", model.space_sizes):
            raise ConfigError("model file space_sizes disagree with its tables")
        return model

    @classmethod
    def loads(cls, text: str) -> "MarkerModel":
        return cls.from_json(json.loads(text))


class _Accumulator:
    def __init__(self, kind: ModelKind, config: FeatureConfig, marker_set: Sequence[str]):
        self.kind, self.config, self.marker_set = kind, config, tuple(marker_set)
        self.priors: Counter = Counter()
        self.tables: dict = {name: {} for name in _table_names(kind, config)}

    def add(self, main: FeatureBundle, sub: FeatureBundle, marker: str):
        self.priors[marker] += 1
        for c in self.config:
            mv, sv = main.get(c), sub.get(c)
            if self.kind is ModelKind.CONJUNCTIVE:
                tbl = self.tables[c]
                for a in mv:
                    for b in sv:
                        tbl.setdefault((a, b), Counter())[marker] += 1
            else:
                for side, vals in (("M", mv), ("S", sv)):
                    tbl = self.tables[f"{c}|{side}"]
                    for v in vals:
                        tbl.setdefault(v, Counter())[marker] += 1

    def freeze(self) -> MarkerModel:
        tables = {
            name: {k: dict(sorted(row.items())) for k, row in sorted(tbl.items())}
            for name, tbl in self.tables.items()
        }
        return MarkerModel(self.kind, self.config, self.marker_set, dict(sorted(self.priors.items())), tables)


def train(
    instances: Iterable,
    kind=ModelKind.DISJUNCTIVE,
    config="SV",
    marker_set: Sequence[str] = DEFAULT_MARKERS,
) -> MarkerModel:
    """Count feature/marker co-occurrences.

    ``instances`` are ``(main_bundle, sub_bundle, marker)`` triples (or
    :class:`Example`).  Bundles may carry more classes than ``config``; only
    the configured ones are counted.  The word-based kind always uses the
    ``W`` class.
    """
    kind = ModelKind.parse(kind)
    config = FeatureConfig((WORD_CLASS,)) if kind is ModelKind.WORD_BASED else as_config(config)
    if kind is not ModelKind.WORD_BASED and WORD_CLASS in config:
        raise ConfigError("the W class is only for the word-based model")
    marker_set = MarkerSet(marker_set)
    acc = _Accumulator(kind, config, marker_set)
    n = 0
    for i, inst in enumerate(instances):
        main, sub, marker = inst[0], inst[1], inst[2]
        if marker not in marker_set:
            ident = inst[3] if len(inst) > 3 and inst[3] else f"#{i}"
            raise ConfigError(f"instance {ident}: marker {marker!r} not in marker set {','.join(marker_set)}")
        acc.add(main, sub, marker)
        n += 1
    if n == 0:
        raise ConfigError("cannot train on an empty instance set")
    return acc.freeze()


def merge_models(a: MarkerModel, b: MarkerModel) -> MarkerModel:
    """Add the counts of two models trained with identical settings."""
    if (a.kind, a.config, a.marker_set) != (b.kind, b.config, b.marker_set):
        raise ConfigError("can only merge models with the same kind, config and marker set")
    acc = _Accumulator(a.kind, a.config, a.marker_set)
    acc.priors.update(a.priors)
    acc.priors.update(b.priors)
    for model in (a, b):
        for name, tbl in model.tables.items():
            dst = acc.tables.setdefault(name, {})
            for k, row in tbl.items():
                dst.setdefault(k, Counter()).update(row)
    return acc.freeze()


def scores_tied(a: float, b: float) -> bool:
    """Equal up to summation noise; exact ties in probability space can differ by an ulp in log space."""
    return abs(a - b) <= SCORE_TIE_TOL * max(1.0, abs(a), abs(b))


def _rank(scores: dict[str, float], priors: Mapping[str, int]) -> list[list[tuple[str, float]]]:
    """Score-ordered tiers of tied candidates, each ordered by prior count then name."""
    tiers: list[list[tuple[str, float]]] = []
    for kv in sorted(scores.items(), key=lambda kv: -kv[1]):
        if tiers and scores_tied(tiers[-1][0][1], kv[1]):
            tiers[-1].append(kv)
        else:
            tiers.append([kv])
    return [sorted(t, key=lambda kv: (-priors.get(kv[0], 0), kv[0])) for t in tiers]


def predict_marker(model: MarkerModel, bundle_m: FeatureBundle, bundle_s: FeatureBundle) -> Prediction:
    """Pick the marker maximising ``log P(t) + sum log P(features | t)``.

    Markers with no training instances have zero prior and are not ranked.
    Ties go to the marker with more training instances, then to the
    alphabetically first one.
    """
    model.check_bundle(bundle_m)
    model.check_bundle(bundle_s)
    factors = list(model.factors(bundle_m, bundle_s))
    scores = {}
    for t in model.marker_set:
        if model.priors.get(t, 0) == 0:
            continue
        scores[t] = model.log_prior(t) + math.fsum(model.log_factor(tb, k, t) for tb, k in factors)
    tiers = _rank(scores, model.priors)
    ranked = tuple(kv for tier in tiers for kv in tier)
    return Prediction(ranked, ranked[0][0], len(tiers[0]) > 1)


def predict_fusion(model: MarkerModel, fragment_a: FeatureBundle, fragment_b: FeatureBundle, marker: str) -> Prediction:
    """Decide which fragment is the main clause given the marker.

    Both role assignments are scored with the main-side and
    subordinate-side statistics.  Equal scores are a tie and resolve to
    ``a_is_main``.
    """
    if "P" in model.config:
        raise ConfigError("clause position is unknown in fusion; train the model without P")
    if marker not in model.marker_set:
        raise ConfigError(f"marker {marker!r} not in the model's marker set")
    model.check_bundle(fragment_a)
    model.check_bundle(fragment_b)
    prior = model.log_prior(marker) if model.priors.get(marker, 0) else 0.0
    a_main = prior + model.log_likelihood(fragment_a, fragment_b, marker)
    b_main = prior + model.log_likelihood(fragment_b, fragment_a, marker)
    if b_main > a_main and not scores_tied(a_main, b_main):
        return Prediction((("b_is_main", b_main), ("a_is_main", a_main)), "b_is_main")
    return Prediction((("a_is_main", a_main), ("b_is_main", b_main)), "a_is_main", tie=scores_tied(a_main, b_main))


# -- baselines -----------------------------------------------------------------

class MajorityBaseline:
    """Always predicts the most frequent training marker."""

    def __init__(self, markers: Iterable[str]):
        self.counts = Counter(markers)
        if not self.counts:
            raise ConfigError("majority baseline needs at least one training marker")
        self.label = min(self.counts, key=lambda m: (-self.counts[m], m))

    def predict(self, *_) -> Prediction:
        n = sum(self.counts.values())
        tiers = _rank({m: math.log(c / n) for m, c in self.counts.items()}, self.counts)
        return Prediction(tuple(kv for tier in tiers for kv in tier), self.label, len(tiers[0]) > 1)


def majority_baseline(train_set: Iterable) -> MajorityBaseline:
    """Accepts markers or ``(main, sub, marker)`` triples."""
    return MajorityBaseline(x if isinstance(x, str) else x[2] for x in train_set)


class RandomBaseline:
    """Fusion baseline: picks either role uniformly at random."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = random.Random(seed)

    def predict_fusion(self, *_) -> Prediction:
        label = FUSION_LABELS[self._rng.randrange(2)]
        other = FUSION_LABELS[1 - FUSION_LABELS.index(label)]
        return Prediction(((label, math.log(0.5)), (other, math.log(0.5))), label, tie=True)


def random_baseline(seed: int = 0) -> RandomBaseline:
    return RandomBaseline(seed)


def save_model(model: MarkerModel, path) -> None:
    atomic_write_text(path, model.dumps() + "\n")


def load_model(path) -> MarkerModel:
    with open(path, encoding="utf-8") as f:
        try:
            return MarkerModel.from_json(json.load(f))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not a JSON model file: {e}") from e
