"""Feature classes read off main and subordinate clause trees.

Class codes (compact config strings use these, e.g. ``"NPRSTV"``):

==== ==========================================================
T    temporal signature of each verbal complex
V    main verb lemmas
VW   WordNet-style verb class (first listed sense)
VL   Levin-style verb class (first listed class)
N    head noun lemmas, proper names collapsed to person/organisation/location
NW   WordNet-style noun class
A    adjective lemmas
S    syntactic signature (phrase counts)
R    argument signature
P    clause order (sub_first / sub_second)
==== ==========================================================

``W`` (lowercased words) is accepted only on its own and drives the
word-based baseline.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import ConfigError
from .extraction import ClausePair
from .treebank import ADJ_TAGS, NOUN_TAGS, PUNCT_TAGS, VERBAL_TAGS, ParseTree, lemmatize

FEATURE_CLASSES = ("A", "N", "NW", "P", "R", "S", "T", "V", "VL", "VW")
WORD_CLASS = "W"

LEXICON_DIR_ENV = "TEMPMARK_LEXICON_DIR"

NEGATORS = frozenset({"not", "n't", "never"})
BE_FORMS = frozenset({"be", "is", "am", "are", "was", "were", "been", "being", "'s", "'re", "'m"})
HAVE_FORMS = frozenset({"have", "has", "had", "having", "'ve"})
GET_FORMS = frozenset({"get", "gets", "got", "gotten", "getting"})
DO_FORMS = frozenset({"do", "does", "did"})

MODALITY = {
    "will": "future", "shall": "future", "'ll": "future", "would": "future", "'d": "future", "wo": "future",
    "can": "ability", "could": "ability", "ca": "ability",
    "may": "possibility", "might": "possibility",
    "must": "obligation", "should": "obligation", "ought": "obligation",
}
_PAST_MODALS = frozenset({"would", "'d", "could", "might"})
_PAST_AUX = frozenset({"was", "were", "had", "did"})

SIGNATURE_PHRASES = ("NP", "VP", "ADJP", "ADVP", "PP")
ARGUMENT_SLOTS = ("SUBJ", "OBJ", "PP", "ADVP")


# -- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class FeatureConfig:
    """A non-empty selection of feature classes, kept in canonical order."""

    classes: tuple[str, ...]

    def __post_init__(self):
        classes = tuple(sorted(set(self.classes)))
        if not classes:
            raise ConfigError("empty feature configuration")
        for c in classes:
            if c not in FEATURE_CLASSES and c != WORD_CLASS:
                raise ConfigError(f"unknown feature class {c!r}")
        if WORD_CLASS in classes and len(classes) > 1:
            raise ConfigError("word features (W) cannot be combined with other classes")
        object.__setattr__(self, "classes", classes)

    @classmethod
    def parse(cls, text: str) -> "FeatureConfig":
        """Parse a compact string such as ``"SV"``, ``"PSVVWVL"`` or ``"V_W,S"``."""
        s = re.sub(r"[\s,_+]", "", str(text)).upper()
        if s == WORD_CLASS:
            return cls((WORD_CLASS,))
        out = []
        i = 0
        while i < len(s):
            two = s[i:i + 2]
            if two in ("VW", "VL", "NW"):
                out.append(two)
                i += 2
            elif s[i] in FEATURE_CLASSES:
                out.append(s[i])
                i += 1
            else:
                raise ConfigError(f"unknown feature class at {s[i:]!r} in {text!r}")
        return cls(tuple(out))

    def __str__(self):
        return "".join(self.classes)

    def __contains__(self, c):
        return c in self.classes

    def __iter__(self):
        return iter(self.classes)

    def __len__(self):
        return len(self.classes)

    def without(self, c: str) -> Optional["FeatureConfig"]:
        rest = tuple(x for x in self.classes if x != c)
        return FeatureConfig(rest) if rest else None


def as_config(config) -> FeatureConfig:
    if isinstance(config, FeatureConfig):
        return config
    if isinstance(config, str):
        return FeatureConfig.parse(config)
    return FeatureConfig(tuple(config))


@dataclass(frozen=True)
class FeatureBundle:
    """Per-clause bags of feature values keyed by class code."""

    values: Mapping[str, tuple[str, ...]]
    side: Optional[str] = None  # "M", "S" or None for an unassigned fragment

    def __post_init__(self):
        object.__setattr__(self, "values", {k: tuple(v) for k, v in sorted(self.values.items())})

    def get(self, cls: str) -> tuple[str, ...]:
        return self.values.get(cls, ())

    def project(self, config) -> "FeatureBundle":
        config = as_config(config)
        return FeatureBundle({c: self.values.get(c, ()) for c in config}, self.side)

    def with_side(self, side: Optional[str]) -> "FeatureBundle":
        return FeatureBundle(self.values, side)

    def to_json(self) -> dict:
        return {"side": self.side, "values": {k: list(v) for k, v in self.values.items()}}


# -- lexicons ------------------------------------------------------------------

@dataclass(frozen=True)
class Lexicon:
    """Lemma -> ordered class list.  The first class is the prime sense."""

    name: str = ""
    entries: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def lookup(self, lemma: str) -> str:
        classes = self.entries.get(lemma.lower())
        return classes[0] if classes else lemma

    def __len__(self):
        return len(self.entries)


def load_lexicon(path, name: Optional[str] = None) -> Lexicon:
    """Read a ``lemma<TAB>class[,class...]`` file.  ``#`` starts a comment line."""
    entries = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                lemma, classes = line.split("\t")
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: expected 'lemma<TAB>classes'") from None
            cl = tuple(c.strip() for c in classes.split(",") if c.strip())
            if not cl:
                raise ConfigError(f"{path}:{lineno}: no classes for {lemma!r}")
            entries.setdefault(lemma.strip().lower(), cl)
    return Lexicon(name or Path(path).stem, entries)


@dataclass(frozen=True)
class RuleSet:
    """Surface rules that collapse proper-name sequences into coarse types."""

    org_suffixes: frozenset = frozenset()
    person_titles: frozenset = frozenset()
    first_names: frozenset = frozenset()
    locations: frozenset = frozenset()

    @classmethod
    def from_json(cls, obj: dict) -> "RuleSet":
        low = lambda key: frozenset(s.lower() for s in obj.get(key, ()))  # noqa: E731
        return cls(low("org_suffixes"), low("person_titles"), low("first_names"), low("locations"))

    def classify(self, words: list[str]) -> Optional[str]:
        if not words:
            return None
        low = [w.lower() for w in words]
        if low[-1].rstrip(".") in self.org_suffixes or low[-1] in self.org_suffixes:
            return "organisation"
        if " ".join(low) in self.locations or (len(low) == 1 and low[0] in self.locations):
            return "location"
        if low[0] in self.person_titles or low[0].rstrip(".") in self.person_titles:
            return "person"
        if len(words) > 1 and low[0] in self.first_names:
            return "person"
        # Jose Y. Campos
        if len(words) >= 3 and any(re.fullmatch(r"[A-Z]\.", w) for w in words[1:-1]):
            return "person"
        return None


def load_rules(path) -> RuleSet:
    with open(path, encoding="utf-8") as f:
        return RuleSet.from_json(json.load(f))


@dataclass(frozen=True)
class Lexicons:
    wordnet_verbs: Lexicon = Lexicon("wordnet_verbs")
    levin: Lexicon = Lexicon("levin")
    wordnet_nouns: Lexicon = Lexicon("wordnet_nouns")
    ner_rules: RuleSet = RuleSet()


def load_lexicons(directory=None) -> Lexicons:
    """Load the three lexicons and the name rules from ``directory``.

    Falls back to ``$TEMPMARK_LEXICON_DIR``, then to the small bundled
    fixtures.  Missing files yield empty lexicons.
    """
    directory = directory or os.environ.get(LEXICON_DIR_ENV)
    if directory:
        base = Path(directory)
        if not base.is_dir():
            raise ConfigError(f"lexicon directory not found: {base}")
    else:
        base = Path(str(resources.files("tempmark.data").joinpath("lexicons")))

    def lex(name):
        p = base / f"{name}.tsv"
        return load_lexicon(p, name) if p.exists() else Lexicon(name)

    rules = base / "ner_rules.json"
    return Lexicons(
        wordnet_verbs=lex("wordnet_verbs"),
        levin=lex("levin"),
        wordnet_nouns=lex("wordnet_nouns"),
        ner_rules=load_rules(rules) if rules.exists() else RuleSet(),
    )


# -- temporal signature ---------------------------------------------------------

FINITENESS = ("past", "present", "infinitive", "ing_form", "en_form")
MODALITIES = ("none", "future", "ability", "possibility", "obligation")
ASPECTS = ("imperfective", "perfective", "progressive")
VOICES = ("active", "passive")
POLARITIES = ("affirmative", "negative")


@dataclass(frozen=True)
class TemporalSignature:
    finiteness: str
    modality: str
    aspect: str
    voice: str
    polarity: str

    def __post_init__(self):
        for value, allowed in zip(self.astuple(), (FINITENESS, MODALITIES, ASPECTS, VOICES, POLARITIES)):
            if value not in allowed:
                raise ValueError(f"{value!r} not one of {allowed}")

    def astuple(self):
        return (self.finiteness, self.modality, self.aspect, self.voice, self.polarity)

    def __str__(self):
        return "{" + ",".join(self.astuple()) + "}"

    @classmethod
    def parse(cls, text: str) -> "TemporalSignature":
        m = re.fullmatch(r"\{([^{}]*)\}", text.strip())
        if not m:
            raise ValueError(f"not a temporal signature: {text!r}")
        parts = [p.strip() for p in m.group(1).split(",")]
        if len(parts) != 5:
            raise ValueError(f"expected 5 fields in {text!r}")
        return cls(*parts)


def _children_verbal(vp: ParseTree) -> list[ParseTree]:
    return [
        c for c in vp.children
        if c.is_leaf and (
            c.label in VERBAL_TAGS or c.label == "TO" or (c.label == "RB" and c.token.lower() in NEGATORS)
        )
    ]


def verb_complexes(clause: ParseTree) -> list[list[ParseTree]]:
    """Auxiliary/verb sequences, one per chain of nested VPs.

    A chain starts at a VP whose parent is not a VP and follows VP children
    downward; coordinated VP children each continue the chain separately.
    Chains without any verb (a lone ``to``) are dropped.
    """
    out = []

    def descend(vp, prefix):
        own = prefix + _children_verbal(vp)
        kids = [c for c in vp.children if not c.is_leaf and c.category == "VP"]
        if kids:
            for k in kids:
                descend(k, own)
        elif any(leaf.label in VERBAL_TAGS for leaf in own):
            out.append(own)

    def visit(n, parent_is_vp):
        if n.is_leaf:
            return
        is_vp = n.category == "VP"
        if is_vp and not parent_is_vp:
            descend(n, [])
        for c in n.children:
            visit(c, is_vp)

    visit(clause, False)
    return out


def _head(chain: list[ParseTree]) -> Optional[int]:
    """Index of the main verb: the last verb that is not a modal or ``to``."""
    for i in range(len(chain) - 1, -1, -1):
        if chain[i].label in VERBAL_TAGS and chain[i].label != "MD":
            return i
    return None


def _finiteness(first: ParseTree) -> str:
    tok, tag = first.token.lower(), first.label
    if tag == "MD":
        return "past" if tok in _PAST_MODALS else "present"
    if tag == "TO":
        return "infinitive"
    if tag == "AUX":
        if tok in _PAST_AUX:
            return "past"
        if tok == "be":
            return "infinitive"
        if tok == "been":
            return "en_form"
        if tok == "being":
            return "ing_form"
        return "present"
    return {
        "VBD": "past", "VBZ": "present", "VBP": "present", "VB": "infinitive",
        "VBG": "ing_form", "AUXG": "ing_form", "VBN": "en_form",
    }.get(tag, "present")


def _signature(chain: list[ParseTree]) -> Optional[TemporalSignature]:
    verbs = [leaf for leaf in chain if leaf.label != "RB"]
    if _head(verbs) is None:
        return None
    h = _head(verbs)
    head = verbs[h]
    prev = verbs[h - 1].token.lower() if h > 0 else None
    modal = next((leaf.token.lower() for leaf in verbs if leaf.label == "MD"), None)
    words = [leaf.token.lower() for leaf in verbs]

    passive = head.label == "VBN" and prev is not None and (prev in BE_FORMS or prev in GET_FORMS)
    progressive = head.label in ("VBG", "AUXG") and prev is not None and prev in BE_FORMS
    perfective = any(
        w in HAVE_FORMS and (verbs[i + 1].label == "VBN" or verbs[i + 1].token.lower() == "been")
        for i, w in enumerate(words[:-1])
    )
    return TemporalSignature(
        finiteness=_finiteness(verbs[0]),
        modality=MODALITY.get(modal, "none") if modal else "none",
        aspect="progressive" if progressive else "perfective" if perfective else "imperfective",
        voice="passive" if passive else "active",
        polarity="negative" if any(leaf.token.lower() in NEGATORS for leaf in chain if leaf.label == "RB") else "affirmative",
    )


def temporal_signature(clause: ParseTree) -> list[TemporalSignature]:
    """One signature per verbal complex in the clause."""
    return [s for s in map(_signature, verb_complexes(clause)) if s is not None]


# -- lexical features ------------------------------------------------------------

def main_verbs(clause: ParseTree) -> list[str]:
    lemmas = []
    for chain in verb_complexes(clause):
        verbs = [leaf for leaf in chain if leaf.label != "RB"]
        h = _head(verbs)
        if h is not None:
            lemmas.append(lemmatize(verbs[h].token, verbs[h].label))
    return lemmas


def verb_features(clause: ParseTree, wordnet: Lexicon, levin: Lexicon) -> tuple[list[str], list[str], list[str]]:
    """``(V, VW, VL)`` bags; lexicon misses fall back to the lemma."""
    v = main_verbs(clause)
    return v, [wordnet.lookup(x) for x in v], [levin.lookup(x) for x in v]


def noun_features(clause: ParseTree, wordnet_nouns: Lexicon, ner_rules: RuleSet) -> tuple[list[str], list[str]]:
    """``(N, NW)`` bags from the rightmost noun of every NP.

    Only an NP's own preterminal children are considered, so nested NPs each
    contribute their own head.  A proper-name run ending in the head is
    replaced by person/organisation/location when a rule fires.
    """
    nouns = []
    for n in clause.preorder():
        if n.is_leaf or n.category != "NP":
            continue
        kids = list(n.children)
        idx = [i for i, c in enumerate(kids) if c.is_leaf and c.label in NOUN_TAGS]
        if not idx:
            continue
        h = idx[-1]
        head = kids[h]
        value = None
        if head.label in ("NNP", "NNPS"):
            start = h
            while start > 0 and kids[start - 1].is_leaf and kids[start - 1].label in ("NNP", "NNPS"):
                start -= 1
            value = ner_rules.classify([c.token for c in kids[start:h + 1]])
        nouns.append(value or lemmatize(head.token, head.label))
    return nouns, [wordnet_nouns.lookup(x) for x in nouns]


def adjective_features(clause: ParseTree) -> list[str]:
    return [lemmatize(leaf.token, leaf.label) for leaf in clause.leaves() if leaf.label in ADJ_TAGS]


def word_features(clause: ParseTree) -> list[str]:
    return [leaf.token.lower() for leaf in clause.leaves() if leaf.label not in PUNCT_TAGS]


# -- structural signatures --------------------------------------------------------

def _is_aux_shell(vp: ParseTree) -> bool:
    """VP layer that only hosts a be/have/do auxiliary above another VP."""
    lead = next((c for c in vp.children if c.is_leaf and c.label in VERBAL_TAGS), None)
    if lead is None or lead.label == "MD":
        return False
    if not any(not c.is_leaf and c.category == "VP" for c in vp.children):
        return False  # copular or main-verb use
    tok = lead.token.lower()
    return lead.label in ("AUX", "AUXG") or tok in BE_FORMS or tok in HAVE_FORMS or tok in DO_FORMS


def syntactic_signature(clause: ParseTree) -> str:
    """Phrase counts below the clause root, e.g. ``"NP:2 VP:2 ADJP:0 ADVP:0 PP:0"``.

    Function tags are ignored.  Auxiliary VP shells (``(VP (AUX is) (VP ...))``)
    are not counted as separate VPs.
    """
    counts = dict.fromkeys(SIGNATURE_PHRASES, 0)
    nodes = clause.preorder()
    next(nodes)  # root excluded
    for n in nodes:
        if n.is_leaf:
            continue
        cat = n.category
        if cat in counts and not (cat == "VP" and _is_aux_shell(n)):
            counts[cat] += 1
    return " ".join(f"{k}:{counts[k]}" for k in SIGNATURE_PHRASES)


def parse_syntactic_signature(text: str) -> dict[str, int]:
    out = {}
    for part in text.split():
        k, _, v = part.partition(":")
        if k not in SIGNATURE_PHRASES or not v.isdigit():
            raise ValueError(f"bad syntactic signature {text!r}")
        out[k] = int(v)
    if tuple(out) != SIGNATURE_PHRASES:
        raise ValueError(f"bad syntactic signature {text!r}")
    return out


_NON_ARGUMENT_FUNCTIONS = frozenset({"TMP", "ADV", "LOC", "EXT", "VOC"})


def argument_signature(clause: ParseTree) -> str:
    """Which of SUBJ, OBJ, PP, ADVP the clause shows, e.g. ``"[SUBJ,OBJ]"``.

    SUBJ: an NP child of the clause root (or any ``-SBJ`` child).  OBJ: an NP
    whose nearest non-NP ancestor is a VP.  PP/ADVP: such a phrase directly
    under a VP.  In a passive clause the surface subject is the logical
    object, so SUBJ is reported as OBJ.
    """
    found = set()
    if not clause.is_leaf:
        for c in clause.children:
            if not c.is_leaf and (c.category == "NP" or "SBJ" in c.functions):
                found.add("SUBJ")

    def visit(n, ancestors):
        if n.is_leaf:
            return
        cat = n.category
        if ancestors:
            parent = ancestors[-1]
            if cat in ("PP", "ADVP") and parent.category == "VP":
                found.add(cat)
            if cat == "NP" and not (set(n.functions) & _NON_ARGUMENT_FUNCTIONS):
                up = next((a for a in reversed(ancestors) if a.category != "NP"), None)
                if up is not None and up.category == "VP":
                    found.add("OBJ")
        for c in n.children:
            visit(c, ancestors + [n])

    visit(clause, [])

    if "SUBJ" in found and _clause_is_passive(clause):
        found.discard("SUBJ")
        found.add("OBJ")
    return "[" + ",".join(s for s in ARGUMENT_SLOTS if s in found) + "]"


def _clause_is_passive(clause: ParseTree) -> bool:
    if clause.is_leaf:
        return False
    for c in clause.children:
        if not c.is_leaf and c.category == "VP":
            sigs = temporal_signature(c)
            if sigs and sigs[0].voice == "passive":
                return True
    return False


def parse_argument_signature(text: str) -> frozenset:
    m = re.fullmatch(r"\[([A-Z,]*)\]", text.strip())
    if not m:
        raise ValueError(f"bad argument signature {text!r}")
    parts = [p for p in m.group(1).split(",") if p]
    if any(p not in ARGUMENT_SLOTS for p in parts):
        raise ValueError(f"bad argument signature {text!r}")
    return frozenset(parts)


# -- bundles --------------------------------------------------------------------

def clause_features(clause: ParseTree, classes: Iterable[str], lexicons: Lexicons) -> dict[str, list[str]]:
    """Bags for every requested class except P, which depends on the pair."""
    classes = set(classes)
    out: dict[str, list[str]] = {}
    if classes & {"V", "VW", "VL"}:
        v, vw, vl = verb_features(clause, lexicons.wordnet_verbs, lexicons.levin)
        out.update(V=v, VW=vw, VL=vl)
    if classes & {"N", "NW"}:
        n, nw = noun_features(clause, lexicons.wordnet_nouns, lexicons.ner_rules)
        out.update(N=n, NW=nw)
    if "T" in classes:
        out["T"] = [str(s) for s in temporal_signature(clause)]
    if "A" in classes:
        out["A"] = adjective_features(clause)
    if "S" in classes:
        out["S"] = [syntactic_signature(clause)]
    if "R" in classes:
        out["R"] = [argument_signature(clause)]
    if WORD_CLASS in classes:
        out[WORD_CLASS] = word_features(clause)
    return {k: v for k, v in out.items() if k in classes}


def clause_bundle(clause: ParseTree, config, lexicons: Lexicons, side: Optional[str] = None,
                  position: Optional[str] = None) -> FeatureBundle:
    config = as_config(config)
    values = clause_features(clause, config, lexicons)
    if "P" in config:
        if position is None:
            raise ConfigError("position feature requested but clause order is unknown")
        values["P"] = [getattr(position, "value", position)]
    return FeatureBundle(values, side)


def extract_bundle(pair: ClausePair, config, lexicons: Optional[Lexicons] = None) -> tuple[FeatureBundle, FeatureBundle]:
    """Main- and subordinate-clause bundles for the selected classes."""
    config = as_config(config)
    lexicons = lexicons or Lexicons()
    m = clause_bundle(pair.main, config, lexicons, "M", pair.position)
    s = clause_bundle(pair.sub, config, lexicons, "S", pair.position)
    return m, s
