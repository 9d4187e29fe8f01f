"""Penn-Treebank style bracketed parse trees.

Trees are immutable: a node is a label plus a tuple of children, or a label
plus a token when it is a preterminal.  Function tags (``SBAR-TMP``,
``NP-SBJ-1``) are kept verbatim in the label; use :attr:`ParseTree.category`
and :attr:`ParseTree.functions` to split them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

__all__ = [
    "ParseTree",
    "TreebankParseError",
    "node",
    "parse_tree",
    "serialize",
    "find_nodes",
    "read_corpus",
    "iter_corpus",
    "lemmatize",
    "split_label",
]

VERBAL_TAGS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "MD", "AUX", "AUXG"})
NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})
ADJ_TAGS = frozenset({"JJ", "JJR", "JJS"})
PUNCT_TAGS = frozenset({",", ".", ":", "``", "''", "-LRB-", "-RRB-", "#", "$", "-NONE-"})


class TreebankParseError(ValueError):
    """Malformed bracketed input.  ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def split_label(label: str) -> tuple[str, tuple[str, ...]]:
    """Split ``NP-SBJ-1`` into ``("NP", ("SBJ", "1"))``.

    Labels that start with ``-`` (``-NONE-``, ``-LRB-``) are returned whole.
    ``=`` coindexation (``NP=2``) is stripped from the category.
    """
    if label.startswith("-") or "-" not in label[1:]:
        return label.split("=")[0] or label, ()
    head, *rest = label.split("-")
    return head.split("=")[0], tuple(r for r in rest if r)


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: tuple["ParseTree", ...] = ()
    token: Optional[str] = None
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.label:
            raise ValueError("empty label")
        if (self.token is None) == (len(self.children) == 0):
            raise ValueError(f"node {self.label!r} must have either a token or children, not both")
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "_hash", hash((self.label, self.children, self.token)))

    def __hash__(self):
        return self._hash

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def category(self) -> str:
        return split_label(self.label)[0]

    @property
    def functions(self) -> tuple[str, ...]:
        return split_label(self.label)[1]

    def leaves(self) -> list["ParseTree"]:
        """Preterminal nodes, left to right."""
        return [n for n in self.preorder() if n.is_leaf]

    def tokens(self) -> list[str]:
        return [n.token for n in self.leaves()]

    def tagged(self) -> list[tuple[str, str]]:
        return [(n.token, n.label) for n in self.leaves()]

    def preorder(self) -> Iterator["ParseTree"]:
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))

    def walk(self, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "ParseTree"]]:
        """Pre-order ``(path, node)`` pairs; a path is a tuple of child indices."""
        yield path, self
        for i, child in enumerate(self.children):
            yield from child.walk(path + (i,))

    def at(self, path: Sequence[int]) -> "ParseTree":
        n = self
        for i in path:
            n = n.children[i]
        return n

    def without(self, path: Sequence[int]) -> "ParseTree":
        """Copy of the tree with the subtree at ``path`` removed.

        Ancestors left with no children are removed as well.
        """
        if not path:
            raise ValueError("cannot remove the root")
        i, rest = path[0], path[1:]
        if rest:
            child = self.children[i].without(rest)
            kids = self.children[:i] + ((child,) if child is not None else ()) + self.children[i + 1:]
        else:
            kids = self.children[:i] + self.children[i + 1:]
        if not kids:
            return None
        return ParseTree(self.label, kids)

    def __str__(self):
        return serialize(self)


def node(label: str, *children: Union[ParseTree, str]) -> ParseTree:
    """Convenience constructor: ``node("NN", "dog")`` or ``node("NP", a, b)``."""
    if len(children) == 1 and isinstance(children[0], str):
        return ParseTree(label, (), children[0])
    return ParseTree(label, tuple(children))


_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def parse_tree(text: str) -> ParseTree:
    """Parse one bracketed tree.

    Raises TreebankParseError with the byte offset of the problem for empty
    input, unbalanced brackets, a ``(`` without a label, or trailing material.
    """
    data = text.encode("utf-8")
    toks = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]

    def boff(char_off: int) -> int:
        return len(text[:char_off].encode("utf-8"))

    if not toks:
        raise TreebankParseError("empty input", len(data))
    if toks[0][0] != "(":
        raise TreebankParseError("expected '('", boff(toks[0][1]))

    stack: list[tuple[str, list]] = []
    root = None
    i = 0
    n = len(toks)
    while i < n:
        tok, off = toks[i]
        if tok == "(":
            if root is not None:
                raise TreebankParseError("material after complete tree", boff(off))
            if i + 1 >= n:
                raise TreebankParseError("unexpected end of input", len(data))
            label, loff = toks[i + 1]
            if label in "()":
                raise TreebankParseError("expected label after '('", boff(loff))
            # preterminal: ( LABEL token )
            if i + 2 < n and toks[i + 2][0] not in "()":
                if i + 3 >= n:
                    raise TreebankParseError("unexpected end of input", len(data))
                if toks[i + 3][0] != ")":
                    raise TreebankParseError("expected ')' after token", boff(toks[i + 3][1]))
                leaf = ParseTree(label, (), toks[i + 2][0])
                if stack:
                    stack[-1][1].append(leaf)
                else:
                    root = leaf
                i += 4
                continue
            stack.append((label, []))
            i += 2
        elif tok == ")":
            if not stack:
                raise TreebankParseError("unbalanced ')'", boff(off))
            label, kids = stack.pop()
            if not kids:
                raise TreebankParseError(f"node {label!r} has no children or token", boff(off))
            done = ParseTree(label, tuple(kids))
            if stack:
                stack[-1][1].append(done)
            else:
                root = done
            i += 1
        else:
            raise TreebankParseError(f"unexpected token {tok!r}", boff(off))
    if stack:
        raise TreebankParseError("unbalanced '(': unexpected end of input", len(data))
    return root


def serialize(tree: ParseTree) -> str:
    """Canonical single-space bracketing."""
    if tree.is_leaf:
        return f"({tree.label} {tree.token})"
    return "(" + tree.label + " " + " ".join(serialize(c) for c in tree.children) + ")"


def find_nodes(tree: ParseTree, predicate: Union[str, Callable[[ParseTree], bool]]) -> list[ParseTree]:
    """All nodes satisfying ``predicate`` in pre-order.

    A string predicate matches the full label exactly.
    """
    if isinstance(predicate, str):
        wanted = predicate
        predicate = lambda n: n.label == wanted  # noqa: E731
    return [n for n in tree.preorder() if predicate(n)]


def iter_corpus(lines: Iterable[str], multiline: bool = False) -> Iterator[ParseTree]:
    """Yield trees from corpus lines.

    By default every non-blank line holds one tree.  With ``multiline`` lines
    are joined until brackets balance.
    """
    buf: list[str] = []
    depth = 0
    for line in lines:
        if not line.strip():
            continue
        if not multiline:
            yield parse_tree(line)
            continue
        buf.append(line)
        depth += line.count("(") - line.count(")")
        if depth <= 0:
            yield parse_tree(" ".join(buf))
            buf, depth = [], 0
    if buf:
        parse_tree(" ".join(buf))  # raises with an informative offset


def read_corpus(path, multiline: bool = False) -> list[ParseTree]:
    with open(path, encoding="utf-8") as f:
        return list(iter_corpus(f, multiline=multiline))


# -- lemmatizer --------------------------------------------------------------

@lru_cache(maxsize=1)
def _exceptions() -> dict[tuple[str, str], str]:
    table = {}
    text = resources.files("tempmark.data").joinpath("lemma_exceptions.tsv").read_text("utf-8")
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        word, cls, lemma = line.split("\t")
        table[(word, cls)] = lemma
    return table


def _pos_class(pos: str) -> Optional[str]:
    if pos in ("NNS", "NNPS", "NN", "NNP"):
        return "n"
    if pos in VERBAL_TAGS:
        return "v"
    if pos in ADJ_TAGS or pos in ("RBR", "RBS"):
        return "a"
    return None


# stems that want their final e back once -ed/-ing/-er is removed:
# complet(e), creat(e), vot(e), announc(e), charg(e), solv(e), realiz(e),
# acquir(e), declar(e), settl(e), lik(e), clos(e)
_NEEDS_E = re.compile(
    r"(?:[^aeiou][aeou]t"
    r"|[a-z](?<!n)[cgvz]"
    r"|[^aeiou][aiou]r"
    r"|[bcdfgkpstz]l"
    r"|[^aeiou][aeiou]k"
    r"|[^aeiou][aeio]s)$"
)


def _restore_e(stem: str) -> str:
    if len(stem) < 2:
        return stem
    if stem[-1] == stem[-2] and stem[-1] not in "aeiouslz":
        return stem[:-1]  # stopped -> stop, bigger -> big
    if stem.endswith("i"):
        return stem[:-1] + "y"  # earlier -> early
    if _NEEDS_E.search(stem):
        return stem + "e"
    return stem


def _strip_s(w: str) -> str:
    if len(w) <= 3 or w.endswith(("ss", "us", "is")) or not w.endswith("s"):
        return w
    if w.endswith("ies"):
        return w[:-3] + "y"
    if w.endswith(("sses", "shes", "ches", "xes", "zes")):
        return w[:-2]
    return w[:-1]


def lemmatize(token: str, pos: str) -> str:
    """Lowercased lemma of ``token`` given its Treebank POS tag.

    Looks up the bundled exceptions table first, then applies suffix rules
    keyed on the tag.  Unknown words fall through lowercased.
    """
    w = token.lower()
    cls = _pos_class(pos)
    if cls is None:
        return w
    hit = _exceptions().get((w, cls))
    if hit is not None:
        return hit
    if pos in ("NNS", "NNPS", "VBZ"):
        return _strip_s(w)
    if pos in ("VBD", "VBN") and w.endswith("ed") and len(w) > 4:
        if w.endswith("ied"):
            return w[:-3] + "y"
        if w.endswith("eed"):
            return w[:-1]
        return _restore_e(w[:-2])
    if pos in ("VBG", "AUXG") and w.endswith("ing") and len(w) > 5:
        return _restore_e(w[:-3])
    if pos in ("JJR", "RBR") and w.endswith("er") and len(w) > 4:
        return _restore_e(w[:-2])
    if pos in ("JJS", "RBS") and w.endswith("est") and len(w) > 5:
        return _restore_e(w[:-3])
    return w
