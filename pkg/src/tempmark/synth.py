"""Deterministic synthetic data: marker draws, planted corpora and the mini treebank."""

from __future__ import annotations

import random
from collections import Counter
from importlib import resources
from typing import Mapping, Optional, Sequence

from .features import FeatureBundle
from .models import Example

# marker frequencies of the large parsed news corpus the models were built for
BLLIP_MARKER_COUNTS = {
    "when": 35895,
    "as": 15904,
    "after": 13228,
    "before": 6572,
    "until": 5307,
    "while": 3524,
    "since": 2742,
    "once": 638,
}

MINI_CORPUS_COUNTS = {
    "when": 240,
    "as": 110,
    "after": 100,
    "before": 70,
    "until": 60,
    "while": 50,
    "since": 40,
    "once": 30,
}
MINI_CORPUS_SEED = 20040101
MINI_CORPUS_DISTRACTORS = 60


def draw_markers(n: int, seed: int = 0, counts: Mapping[str, int] = BLLIP_MARKER_COUNTS) -> list[str]:
    rng = random.Random(seed)
    labels = sorted(counts)
    return rng.choices(labels, weights=[counts[m] for m in labels], k=n)


def _bundle(values, side):
    return FeatureBundle({k: tuple(v) for k, v in values.items()}, side)


def planted_examples(
    n: int,
    seed: int = 0,
    signal: str = "A",
    noise: Sequence[str] = ("N", "S", "T", "V"),
    counts: Mapping[str, int] = BLLIP_MARKER_COUNTS,
    noise_values: int = 6,
) -> list[Example]:
    """Examples whose subordinate-clause ``signal`` value names the marker.

    Every other class carries values drawn independently of the marker.
    """
    rng = random.Random(f"planted:{seed}")
    markers = draw_markers(n, seed, counts)
    out = []
    for i, t in enumerate(markers):
        main, sub = {}, {}
        for c in noise:
            main[c] = [f"{c}{rng.randrange(noise_values)}" for _ in range(rng.randint(1, 2))]
            sub[c] = [f"{c}{rng.randrange(noise_values)}" for _ in range(rng.randint(1, 2))]
        main[signal] = [f"{signal}{rng.randrange(3)}"]
        sub[signal] = [f"{signal}:{t}"]
        out.append(Example(_bundle(main, "M"), _bundle(sub, "S"), t, f"planted:{i}"))
    return out


def complementarity_examples(n: int, seed: int = 0, x: str = "S", y: str = "V",
                             counts: Mapping[str, int] = BLLIP_MARKER_COUNTS) -> list[Example]:
    """Two views that each carry the marker for a different half of the data.

    Even-indexed examples reveal the marker through class ``x`` and show a
    constant filler for ``y``; odd-indexed ones the reverse.  A model on one
    view falls back to the most frequent marker for the half it cannot see.
    Markers follow ``counts``, which should have a clear majority so that the
    fallback does not change when the model is refit on more data.
    """
    out = []
    for i, t in enumerate(draw_markers(n, seed, counts)):
        first = i % 2 == 0
        sub = {x: [f"x:{t}" if first else "x:filler"], y: ["y:filler" if first else f"y:{t}"]}
        main = {x: ["x:main"], y: ["y:main"]}
        out.append(Example(_bundle(main, "M"), _bundle(sub, "S"), t, f"comp:{i}"))
    return out


# -- mini treebank ---------------------------------------------------------------

# base, 3sg, past, participle, gerund
_VERBS = {
    "arrive": ("arrive", "arrives", "arrived", "arrived", "arriving"),
    "return": ("return", "returns", "returned", "returned", "returning"),
    "rise": ("rise", "rises", "rose", "risen", "rising"),
    "grow": ("grow", "grows", "grew", "grown", "growing"),
    "complete": ("complete", "completes", "completed", "completed", "completing"),
    "finish": ("finish", "finishes", "finished", "finished", "finishing"),
    "leave": ("leave", "leaves", "left", "left", "leaving"),
    "close": ("close", "closes", "closed", "closed", "closing"),
    "end": ("end", "ends", "ended", "ended", "ending"),
    "expire": ("expire", "expires", "expired", "expired", "expiring"),
    "work": ("work", "works", "worked", "worked", "working"),
    "wait": ("wait", "waits", "waited", "waited", "waiting"),
    "join": ("join", "joins", "joined", "joined", "joining"),
    "start": ("start", "starts", "started", "started", "starting"),
    "approve": ("approve", "approves", "approved", "approved", "approving"),
    "sign": ("sign", "signs", "signed", "signed", "signing"),
    "lose": ("lose", "loses", "lost", "lost", "losing"),
    "fall": ("fall", "falls", "fell", "fallen", "falling"),
    "sell": ("sell", "sells", "sold", "sold", "selling"),
    "buy": ("buy", "buys", "bought", "bought", "buying"),
    "announce": ("announce", "announces", "announced", "announced", "announcing"),
    "report": ("report", "reports", "reported", "reported", "reporting"),
    "agree": ("agree", "agrees", "agreed", "agreed", "agreeing"),
    "remain": ("remain", "remains", "remained", "remained", "remaining"),
    "decline": ("decline", "declines", "declined", "declined", "declining"),
    "drop": ("drop", "drops", "dropped", "dropped", "dropping"),
    "trade": ("trade", "trades", "traded", "traded", "trading"),
    "raise": ("raise", "raises", "raised", "raised", "raising"),
}
_TRANSITIVE = {"complete", "finish", "leave", "close", "end", "join", "start", "approve", "sign",
               "lose", "sell", "buy", "announce", "report", "raise"}

# subordinate-clause verbs that lean towards one marker, and the clause shapes it favours
_SUB_VERBS = {
    "when": ("arrive", "return"),
    "as": ("rise", "grow"),
    "after": ("complete", "finish"),
    "before": ("leave", "close"),
    "until": ("end", "expire"),
    "while": ("work", "wait"),
    "since": ("join", "start"),
    "once": ("approve", "sign"),
}
_SUB_SHAPES = {
    "when": ("past", "past", "present"),
    "as": ("progressive", "past", "present"),
    "after": ("passive", "past", "perfect"),
    "before": ("past", "present", "past"),
    "until": ("present", "past", "present"),
    "while": ("progressive", "progressive", "past"),
    "since": ("past", "past", "perfect"),
    "once": ("passive", "present", "present"),
}
_MAIN_SHAPES = {
    "when": ("past", "past", "modal"),
    "as": ("past", "progressive", "past"),
    "after": ("modal", "past", "past"),
    "before": ("past", "past", "perfect"),
    "until": ("negated", "modal", "past"),
    "while": ("past", "progressive", "past"),
    "since": ("perfect", "perfect", "past"),
    "once": ("modal", "modal", "present"),
}
_MAIN_VERBS = ("lose", "fall", "sell", "buy", "announce", "report", "agree", "remain", "decline",
               "drop", "trade", "raise", "rise", "close")
_OTHER_VERBS = tuple(sorted(_VERBS))

# (noun, tag, plural)
_NOUNS = (
    ("company", "NN", False), ("shares", "NNS", True), ("price", "NN", False), ("prices", "NNS", True),
    ("market", "NN", False), ("deal", "NN", False), ("sale", "NN", False), ("plant", "NN", False),
    ("board", "NN", False), ("talks", "NNS", True), ("contract", "NN", False), ("investors", "NNS", True),
    ("stock", "NN", False), ("bank", "NN", False), ("offer", "NN", False), ("strike", "NN", False),
    ("workers", "NNS", True), ("officials", "NNS", True), ("employees", "NNS", True), ("jobs", "NNS", True),
    ("analysts", "NNS", True), ("economy", "NN", False), ("rates", "NNS", True), ("unit", "NN", False),
    ("merger", "NN", False), ("dollar", "NN", False), ("year", "NN", False), ("agreement", "NN", False),
)
_NAMES = (
    ("NNP", "Acme"), ("NNP", "Corp."),
    ("NNP", "Mr."), ("NNP", "Smith"),
    ("NNP", "Tokyo"),
    ("NNP", "General"), ("NNP", "Motors"),
    ("NNP", "Mary"), ("NNP", "Jones"),
)
_NAME_PHRASES = ((0, 2), (2, 4), (4, 5), (5, 7), (7, 9))
_ADJECTIVES = (("big", "JJ"), ("new", "JJ"), ("strong", "JJ"), ("weak", "JJ"), ("major", "JJ"),
               ("higher", "JJR"), ("lower", "JJR"), ("early", "JJ"))
_ADVERBS = ("sharply", "quickly", "slightly", "again")
_PLACES = ("Tokyo", "London", "Texas", "Chicago")


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def pick(self, seq):
        return seq[self.rng.randrange(len(seq))]

    def np(self, func: str = "", adjective_p: float = 0.25, name_p: float = 0.15) -> tuple[str, bool]:
        label = f"NP-{func}" if func else "NP"
        if name_p and self.rng.random() < name_p:
            a, b = self.pick(_NAME_PHRASES)
            words = " ".join(f"({t} {w})" for t, w in _NAMES[a:b])
            return f"({label} {words})", False
        word, tag, plural = self.pick(_NOUNS)
        det = "" if plural and self.rng.random() < 0.5 else "(DT the) "
        adj = ""
        if self.rng.random() < adjective_p:
            aw, at = self.pick(_ADJECTIVES)
            adj = f"({at} {aw}) "
        return f"({label} {det}{adj}({tag} {word}))", plural

    def tail(self, verb: str, passive: bool = False) -> str:
        parts = []
        if verb in _TRANSITIVE and not passive:
            parts.append(self.np(adjective_p=0.3, name_p=0.05)[0])
        r = self.rng.random()
        if r < 0.15:
            parts.append(f"(PP-LOC (IN in) (NP (NNP {self.pick(_PLACES)})))")
        elif r < 0.25:
            parts.append(f"(ADVP (RB {self.pick(_ADVERBS)}))")
        return "".join(" " + p for p in parts)

    def vp(self, verb: str, shape: str, plural: bool) -> str:
        base, s3, past, part, ing = _VERBS[verb]
        be_past, be_pres = ("were", "are") if plural else ("was", "is")
        have = "have" if plural else "has"
        if shape == "past":
            return f"(VP (VBD {past}){self.tail(verb)})"
        if shape == "present":
            return f"(VP (VBP {base}){self.tail(verb)})" if plural else f"(VP (VBZ {s3}){self.tail(verb)})"
        if shape == "progressive":
            return f"(VP (AUX {be_past}) (VP (VBG {ing}){self.tail(verb)}))"
        if shape == "perfect":
            return f"(VP (AUX {have}) (VP (VBN {part}){self.tail(verb)}))"
        if shape == "passive":
            if verb not in _TRANSITIVE:
                return self.vp(verb, "past", plural)
            aux = self.pick((be_past, be_pres))
            return f"(VP (AUX {aux}) (VP (VBN {part}){self.tail(verb, passive=True)}))"
        if shape == "modal":
            md = self.pick(("will", "would", "could", "may"))
            return f"(VP (MD {md}) (VP (VB {base}){self.tail(verb)}))"
        if shape == "negated":
            return f"(VP (AUX did) (RB n't) (VP (VB {base}){self.tail(verb)}))"
        raise ValueError(shape)

    def clause(self, verb: str, shape: str, func: str = "SBJ") -> str:
        subj, plural = self.np(func)
        return f"(S {subj} {self.vp(verb, shape, plural)})"

    def sub_verb(self, marker: str) -> str:
        return self.pick(_SUB_VERBS[marker]) if self.rng.random() < 0.7 else self.pick(_OTHER_VERBS)

    def main_verb(self) -> str:
        return self.pick(_MAIN_VERBS)

    def pair_sentence(self, marker: str) -> str:
        sub = self.clause(self.sub_verb(marker), self.pick(_SUB_SHAPES[marker]))
        sbar = f"(SBAR-TMP (IN {marker}) {sub})"
        verb = self.main_verb()
        shape = self.pick(_MAIN_SHAPES[marker])
        subj, plural = self.np("SBJ")
        if self.rng.random() < 0.25:
            body = f"(S {sbar} (, ,) {subj} {self.vp(verb, shape, plural)} (. .))"
        else:
            vp = self.vp(verb, shape, plural)
            # attach the SBAR as the last child of the innermost VP
            body = f"(S {subj} {_append_to_innermost_vp(vp, sbar)} (. .))"
        if self.rng.random() < 0.15:
            who, _ = self.np("SBJ", name_p=0.5)
            inner = body[len("(S "):-len(" (. .))")]
            body = f"(S {who} (VP (VBD said) (S {inner})) (. .))"
        return f"(S1 {body})"

    def distractor(self) -> str:
        """A sentence with no extractable pair."""
        kind = self.rng.randrange(4)
        subj, plural = self.np("SBJ")
        if kind == 0:
            return f"(S1 (S {subj} {self.vp(self.main_verb(), 'past', plural)} (. .)))"
        if kind == 1:
            m = self.pick(("after", "before", "since", "until"))
            return (f"(S1 (S {subj} (VP (VBD {_VERBS[self.main_verb()][2]}) "
                    f"(PP-TMP (IN {m}) (NP (DT the) (NN meeting)))) (. .)))")
        if kind == 2:
            inner = self.clause(self.sub_verb("when"), "past")
            return (f"(S1 (S {subj} (VP (VBD remembered) (NP (NP (DT the) (NN day)) "
                    f"(SBAR-TMP (IN when) {inner}))) (. .)))")
        inner = self.clause(self.main_verb(), "past")
        return f"(S1 (S {subj} (VP (VBD said) (SBAR (IN that) {inner})) (. .)))"


def _append_to_innermost_vp(vp: str, extra: str) -> str:
    """Insert ``extra`` before the closing bracket of the last-opened VP."""
    stack, close_of = [], {}
    for i, ch in enumerate(vp):
        if ch == "(":
            stack.append(i)
        elif ch == ")":
            close_of[stack.pop()] = i
    end = close_of[max(i for i in close_of if vp.startswith("(VP ", i))]
    return vp[:end] + " " + extra + vp[end:]


def mini_corpus_lines(seed: int = MINI_CORPUS_SEED, counts: Mapping[str, int] = MINI_CORPUS_COUNTS,
                      distractors: int = MINI_CORPUS_DISTRACTORS) -> list[str]:
    rng = random.Random(seed)
    slots = [m for m in sorted(counts) for _ in range(counts[m])] + [None] * distractors
    rng.shuffle(slots)
    gen = _Gen(rng)
    return [gen.distractor() if m is None else gen.pair_sentence(m) for m in slots]


def mini_corpus_text(**kw) -> str:
    return "".join(line + "\n" for line in mini_corpus_lines(**kw))


def bundled_mini_corpus():
    """Traversable for the mini treebank shipped with the package."""
    return resources.files("tempmark.data").joinpath("mini_corpus.mrg")


def marker_distribution(markers: Sequence[str]) -> dict[str, float]:
    c = Counter(markers)
    n = sum(c.values())
    return {m: c[m] / n for m in sorted(c)}


def write_mini_corpus(path: Optional[str] = None) -> str:
    path = path or str(bundled_mini_corpus())
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(mini_corpus_text())
    return path
