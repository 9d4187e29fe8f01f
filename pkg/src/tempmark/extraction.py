"""Main/subordinate clause pairs joined by a temporal marker."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .errors import ConfigError
from .io import dump_jsonl
from .treebank import ParseTree, parse_tree, serialize

DEFAULT_MARKERS = ("after", "before", "while", "when", "as", "once", "until", "since")

# categories that make an SBAR noun-attached when they sit between it and its S
_NOMINAL = frozenset({"NP", "NX", "NAC", "WHNP"})


class Position(str, enum.Enum):
    SUB_FIRST = "sub_first"
    SUB_SECOND = "sub_second"


class Task(str, enum.Enum):
    INTERPRETATION = "interpretation"
    FUSION = "fusion"


class MarkerSet(tuple):
    """Ordered, lowercase, non-empty set of marker strings."""

    def __new__(cls, markers: Iterable[str] = DEFAULT_MARKERS):
        seen = []
        for m in markers:
            m = m.strip().lower()
            if m and m not in seen:
                seen.append(m)
        if not seen:
            raise ConfigError("marker set must not be empty")
        return super().__new__(cls, seen)

    @classmethod
    def parse(cls, text: str) -> "MarkerSet":
        return cls(text.split(","))


@dataclass(frozen=True)
class ClausePair:
    main: ParseTree
    sub: ParseTree
    marker: str
    position: Position
    source_id: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.source_id,
            "marker": self.marker,
            "position": self.position.value,
            "main_tree": serialize(self.main),
            "sub_tree": serialize(self.sub),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClausePair":
        try:
            return cls(
                main=parse_tree(obj["main_tree"]),
                sub=parse_tree(obj["sub_tree"]),
                marker=obj["marker"],
                position=Position(obj["position"]),
                source_id=str(obj["id"]),
            )
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad instance record {obj.get('id', '?')!r}: {e}") from e


def _nearest_s(tree: ParseTree, path: tuple[int, ...]) -> Optional[tuple[int, ...]]:
    """Path of the lowest S ancestor of ``path``; None if noun-attached or absent."""
    for k in range(len(path) - 1, -1, -1):
        anc = tree.at(path[:k])
        cat = anc.category
        if cat == "S":
            return path[:k]
        if cat in _NOMINAL:
            return None
    return None


def extract_pairs(
    tree: ParseTree,
    markers: Sequence[str] = DEFAULT_MARKERS,
    lenient: bool = False,
    source_id: str = "",
) -> list[ClausePair]:
    """Find temporal SBARs under an S node and split off the clause pair.

    An SBAR qualifies when it carries a ``TMP`` function tag (or, with
    ``lenient``, merely starts with a marker word) and its first word is in
    ``markers``.  The subordinate clause is the S inside the SBAR; the main
    clause is the lowest S dominating the SBAR, copied with the SBAR cut out.
    SBARs attached below a noun phrase are skipped.
    """
    markers = set(MarkerSet(markers))
    leaf_paths = [p for p, n in tree.walk() if n.is_leaf]
    pairs = []
    for path, sbar in tree.walk():
        if sbar.is_leaf or sbar.category != "SBAR":
            continue
        first = sbar.leaves()[0].token.lower()
        if first not in markers:
            continue
        if "TMP" not in sbar.functions and not lenient:
            continue
        s_idx = next((i for i, c in enumerate(sbar.children) if not c.is_leaf and c.category == "S"), None)
        if s_idx is None:
            continue
        main_path = _nearest_s(tree, path)
        if main_path is None:
            continue
        main = tree.at(main_path).without(path[len(main_path):])
        if main is None:
            continue
        sub = sbar.children[s_idx]
        sub_leaves = sub.leaves()
        if sub_leaves[0].token.lower() == first:
            # marker parsed inside the clause itself
            cut = next(p for p, n in sub.walk() if n is sub_leaves[0])
            sub = sub.without(cut)
            if sub is None:
                continue
        sub_path = path + (s_idx,)
        sub_start = next(i for i, p in enumerate(leaf_paths) if p[: len(sub_path)] == sub_path)
        main_start = next(
            i for i, p in enumerate(leaf_paths)
            if p[: len(main_path)] == main_path and p[: len(path)] != path
        )
        position = Position.SUB_FIRST if sub_start < main_start else Position.SUB_SECOND
        sid = f"{source_id}:{len(pairs)}" if source_id else str(len(pairs))
        pairs.append(ClausePair(main, sub, first, position, sid))
    return pairs


@dataclass(frozen=True)
class TestInstance:
    """A pair with its answer hidden.

    Interpretation: ``fragment_a`` is the main clause, ``fragment_b`` the
    subordinate, ``position`` is known and ``gold`` is the marker.
    Fusion: the fragments come in random order, ``marker`` is visible,
    ``position`` is withheld and ``gold`` is ``"a_is_main"`` or ``"b_is_main"``.
    """

    __test__ = False  # keep pytest from collecting this class

    id: str
    task: Task
    fragment_a: ParseTree
    fragment_b: ParseTree
    gold: str
    marker: Optional[str] = None
    position: Optional[Position] = None


def make_test_instance(pair: ClausePair, task: Task, seed: int = 0) -> TestInstance:
    task = Task(task)
    if task is Task.INTERPRETATION:
        return TestInstance(pair.source_id, task, pair.main, pair.sub, gold=pair.marker, position=pair.position)
    rng = random.Random(f"{seed}:{pair.source_id}")
    if rng.random() < 0.5:
        return TestInstance(pair.source_id, task, pair.sub, pair.main, gold="b_is_main", marker=pair.marker)
    return TestInstance(pair.source_id, task, pair.main, pair.sub, gold="a_is_main", marker=pair.marker)


def write_instances(pairs: Iterable[ClausePair], path) -> None:
    dump_jsonl((p.to_json() for p in pairs), path)


def iter_instances(path) -> Iterator[ClausePair]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}:{lineno}: not JSON: {e}") from e
            yield ClausePair.from_json(obj)


def read_instances(path) -> list[ClausePair]:
    return list(iter_instances(path))
