import itertools

import pytest
from hypothesis import given, strategies as st

from tempmark.errors import ConfigError
from tempmark.extraction import Position, extract_pairs
from tempmark.features import (
    FEATURE_CLASSES,
    FeatureBundle,
    FeatureConfig,
    Lexicon,
    TemporalSignature,
    argument_signature,
    clause_bundle,
    clause_features,
    extract_bundle,
    load_lexicon,
    load_lexicons,
    noun_features,
    parse_argument_signature,
    parse_syntactic_signature,
    syntactic_signature,
    temporal_signature,
    word_features,
)
from tempmark.synth import mini_corpus_lines
from tempmark.treebank import parse_tree


def test_example_golden(example_tree, lexicons):
    (pair,) = extract_pairs(example_tree)
    m, s = extract_bundle(pair, "ANNWPRSTVVLVW", lexicons)
    assert m.get("S") == ("NP:2 VP:2 ADJP:0 ADVP:0 PP:0",)
    assert s.get("S") == ("NP:1 VP:1 ADJP:0 ADVP:0 PP:0",)
    assert m.get("R") == ("[SUBJ,OBJ]",)
    assert s.get("R") == ("[OBJ]",)
    assert m.get("T") == ("{present,future,imperfective,active,affirmative}",)
    assert s.get("T") == ("{present,none,imperfective,passive,affirmative}",)
    assert m.get("V") == ("lose",) and s.get("V") == ("complete",)
    assert m.get("N") == ("employee", "job") and s.get("N") == ("sale",)
    assert m.get("P") == s.get("P") == ("sub_second",)
    assert m.get("VW") == ("verb.possession",) and s.get("VW") == ("verb.change",)
    assert m.get("VL") == ("13.2",) and s.get("VL") == ("55.2",)
    assert m.get("NW") == ("noun.person", "noun.act") and s.get("NW") == ("noun.act",)
    assert m.get("A") == () and s.get("A") == ()


def _sig(text):
    return [str(x) for x in temporal_signature(parse_tree(text))]


@pytest.mark.parametrize("text,expected", [
    ("(S (NP (PRP he)) (VP (AUX did) (RB n't) (VP (VB leave))))",
     "{past,none,imperfective,active,negative}"),
    ("(S (NP (PRP they)) (VP (AUX were) (VP (VBG working))))",
     "{past,none,progressive,active,affirmative}"),
    ("(S (NP (PRP it)) (VP (AUX has) (VP (VBN grown))))",
     "{present,none,perfective,active,affirmative}"),
    ("(S (NP (PRP it)) (VP (MD could) (VP (AUX have) (VP (AUX been) (VP (VBN approved))))))",
     "{past,ability,perfective,passive,affirmative}"),
    ("(S (NP (PRP she)) (VP (VBZ works)))", "{present,none,imperfective,active,affirmative}"),
    ("(S (VP (TO to) (VP (VB leave))))", "{infinitive,none,imperfective,active,affirmative}"),
    ("(S (NP (PRP it)) (VP (MD will) (AUX be) (VBG rising)))", "{present,future,progressive,active,affirmative}"),
    ("(S (NP (PRP it)) (VP (MD must) (RB not) (VP (VB fail))))", "{present,obligation,imperfective,active,negative}"),
    ("(S (NP (PRP it)) (VP (VBD got) (VP (VBN sold))))", "{past,none,imperfective,passive,affirmative}"),
    ("(S (NP (PRP it)) (VP (MD might) (VP (VB rain))))", "{past,possibility,imperfective,active,affirmative}"),
])
def test_temporal_signature(text, expected):
    assert _sig(text) == [expected]


def test_no_verb_no_signature():
    assert _sig("(S (NP (NN nothing)) (ADJP (JJ here)))") == []


def test_coordinated_verbs(lexicons):
    t = parse_tree("(S (NP (PRP he)) (VP (VP (VBD came)) (CC and) (VP (VBD left))))")
    assert clause_features(t, ["V"], lexicons)["V"] == ["come", "leave"]
    assert len(temporal_signature(t)) == 2


def test_temporal_signature_text_roundtrip():
    s = TemporalSignature("past", "none", "progressive", "active", "negative")
    assert TemporalSignature.parse(str(s)) == s
    with pytest.raises(ValueError):
        TemporalSignature("past", "sometimes", "progressive", "active", "negative")
    with pytest.raises(ValueError):
        TemporalSignature.parse("{past,none}")


# -- syntactic signature: independent brute-force count ---------------------------

_AUX_WORDS = {"be", "is", "am", "are", "was", "were", "been", "being", "'s", "'re", "'m",
              "have", "has", "had", "having", "'ve", "do", "does", "did"}


def _oracle_shell(vp):
    kids = vp.children
    has_vp = any(not k.is_leaf and k.label.split("-")[0] == "VP" for k in kids)
    verbal = [k for k in kids if k.is_leaf and (k.label.startswith("VB") or k.label in ("MD", "AUX", "AUXG"))]
    if not verbal or verbal[0].label == "MD" or not has_vp:
        return False
    return verbal[0].label in ("AUX", "AUXG") or verbal[0].token.lower() in _AUX_WORDS


def _oracle_counts(tree):
    counts = {"NP": 0, "VP": 0, "ADJP": 0, "ADVP": 0, "PP": 0}

    def rec(n, is_root):
        if n.is_leaf:
            return
        cat = n.label.split("-")[0].split("=")[0]
        if not is_root and cat in counts and not (cat == "VP" and _oracle_shell(n)):
            counts[cat] += 1
        for c in n.children:
            rec(c, False)

    rec(tree, True)
    return counts


def test_syntactic_signature_matches_enumeration():
    for line in mini_corpus_lines()[:200]:
        tree = parse_tree(line)
        for p in extract_pairs(tree):
            for clause in (p.main, p.sub):
                assert parse_syntactic_signature(syntactic_signature(clause)) == _oracle_counts(clause)


def test_copular_vp_is_counted():
    t = parse_tree("(S (NP (DT the) (NN sale)) (VP (AUX is) (ADJP (JJ complete))))")
    assert syntactic_signature(t) == "NP:1 VP:1 ADJP:1 ADVP:0 PP:0"


def test_syntactic_signature_format():
    with pytest.raises(ValueError):
        parse_syntactic_signature("NP:1 VP:x")
    with pytest.raises(ValueError):
        parse_syntactic_signature("VP:1 NP:1 ADJP:0 ADVP:0 PP:0")


@pytest.mark.parametrize("text,expected", [
    ("(S (NP-SBJ (PRP he)) (VP (VBD put) (NP (DT the) (NN box)) (PP (IN on) (NP (DT the) (NN table)))))",
     "[SUBJ,OBJ,PP]"),
    ("(S (NP (PRP he)) (VP (VBD left) (ADVP (RB quickly))))", "[SUBJ,ADVP]"),
    ("(S (NP (PRP he)) (VP (VBD left) (NP-TMP (NN yesterday))))", "[SUBJ]"),
    ("(S (VP (VB go)))", "[]"),
    ("(S (NP (DT the) (NN deal)) (VP (AUX was) (VP (VBN signed) (PP (IN by) (NP (NNS officials))))))",
     "[OBJ,PP]"),
])
def test_argument_signature(text, expected):
    assert argument_signature(parse_tree(text)) == expected
    assert parse_argument_signature(expected) <= {"SUBJ", "OBJ", "PP", "ADVP"}


def test_argument_signature_parse_rejects():
    with pytest.raises(ValueError):
        parse_argument_signature("[SUBJ,IOBJ]")


# -- nouns, adjectives, words ------------------------------------------------------

@pytest.mark.parametrize("np,value,wn", [
    ("(NP (NNP Acme) (NNP Corp.))", "organisation", "noun.group"),
    ("(NP (NNP Mr.) (NNP Smith))", "person", "noun.person"),
    ("(NP (NNP Tokyo))", "location", "noun.location"),
    ("(NP (NNP Jose) (NNP Y.) (NNP Campos))", "person", "noun.person"),
    ("(NP (NNP Zorbix))", "zorbix", "zorbix"),
    ("(NP (DT the) (JJ big) (NNS deals))", "deal", "noun.act"),
])
def test_noun_features(np, value, wn, lexicons):
    t = parse_tree(f"(S {np} (VP (VBD left)))")
    assert noun_features(t, lexicons.wordnet_nouns, lexicons.ner_rules) == ([value], [wn])


def test_nested_np_heads(lexicons):
    t = parse_tree("(S (NP (NP (DT the) (NN price)) (PP (IN of) (NP (NNS shares)))) (VP (VBD fell)))")
    assert noun_features(t, lexicons.wordnet_nouns, lexicons.ner_rules)[0] == ["price", "share"]


def test_adjectives_and_words(lexicons):
    t = parse_tree("(S (NP (DT The) (JJR bigger) (NN deal)) (VP (VBD closed)) (. .))")
    assert clause_features(t, ["A"], lexicons) == {"A": ["big"]}
    assert word_features(t) == ["the", "bigger", "deal", "closed"]


# -- configuration -------------------------------------------------------------------

def test_config_parse_and_canonical_order():
    assert str(FeatureConfig.parse("VS")) == "SV"
    assert str(FeatureConfig.parse("PSVV_WN_WV_L")) == "NWPSVVLVW"
    assert str(FeatureConfig.parse("v_w, s")) == "SVW"
    assert FeatureConfig.parse("W").classes == ("W",)
    assert str(FeatureConfig.parse("SS_")) == "S"
    for bad in ("", "X", "WV"):
        with pytest.raises(ConfigError):
            FeatureConfig.parse(bad)


def test_every_config_string_roundtrips():
    n = 0
    for r in range(1, len(FEATURE_CLASSES) + 1):
        for combo in itertools.combinations(FEATURE_CLASSES, r):
            cfg = FeatureConfig(combo)
            assert FeatureConfig.parse(str(cfg)) == cfg
            n += 1
    assert n == 1023


@given(st.lists(st.sampled_from(FEATURE_CLASSES), min_size=1))
def test_config_is_a_set(classes):
    cfg = FeatureConfig(tuple(classes))
    assert set(cfg) == set(classes)
    assert list(cfg) == sorted(set(classes))


def test_bundle_projection():
    b = FeatureBundle({"V": ["lose"], "S": ["x"]}, "M")
    p = b.project("NV")
    assert p.values == {"N": (), "V": ("lose",)} and p.side == "M"
    assert b.with_side(None).side is None


def test_position_needs_pair(example_tree, lexicons):
    (pair,) = extract_pairs(example_tree)
    with pytest.raises(ConfigError):
        clause_bundle(pair.main, "PV", lexicons, "M")
    b = clause_bundle(pair.main, "PV", lexicons, "M", Position.SUB_FIRST)
    assert b.get("P") == ("sub_first",)


# -- lexicons ------------------------------------------------------------------------

def test_lexicon_lookup_falls_back_to_lemma():
    lex = Lexicon("x", {"lose": ("13.2", "10.5")})
    assert lex.lookup("lose") == "13.2"
    assert lex.lookup("zap") == "zap"


def test_lexicon_file_errors(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("lose 13.2\n")
    with pytest.raises(ConfigError):
        load_lexicon(p)
    p.write_text("# comment\nlose\t\n")
    with pytest.raises(ConfigError):
        load_lexicon(p)


def test_lexicon_directory_from_env(tmp_path, monkeypatch):
    (tmp_path / "levin.tsv").write_text("lose\t99.9\n")
    monkeypatch.setenv("TEMPMARK_LEXICON_DIR", str(tmp_path))
    lex = load_lexicons()
    assert lex.levin.lookup("lose") == "99.9"
    assert len(lex.wordnet_verbs) == 0
    monkeypatch.setenv("TEMPMARK_LEXICON_DIR", str(tmp_path / "missing"))
    with pytest.raises(ConfigError):
        load_lexicons()


def test_bundled_lexicons_used_by_default(monkeypatch):
    monkeypatch.delenv("TEMPMARK_LEXICON_DIR", raising=False)
    lex = load_lexicons()
    assert lex.wordnet_verbs.lookup("lose") == "verb.possession"
