"""Acceptance suite: one PASS/FAIL line per criterion, each under its time budget.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""

import math
import random
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from cli_pipeline import run_pipeline  # noqa: E402
from conftest import EXAMPLE_TREE  # noqa: E402
from oracles import exact_argmax, exact_joint, log_fraction, random_toy  # noqa: E402
from tempmark.ensemble import feature_search, train_ensemble  # noqa: E402
from tempmark.evaluation import chi_square_counts, kappa, learning_curve, partition, score  # noqa: E402
from tempmark.extraction import Position, extract_pairs  # noqa: E402
from tempmark.features import FEATURE_CLASSES, extract_bundle, load_lexicons  # noqa: E402
from tempmark.models import majority_baseline, predict_fusion, predict_marker, train  # noqa: E402
from tempmark.pipeline import evaluate_model  # noqa: E402
from tempmark.synth import complementarity_examples, draw_markers, planted_examples  # noqa: E402
from tempmark.treebank import parse_tree  # noqa: E402


RESULTS: list[str] = []  # shown again in the pytest terminal summary


def _report(name: str, budget: float, check) -> None:
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    passed = ok and elapsed < budget
    line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail} [{elapsed:.2f}s / {budget:.0f}s]"
    RESULTS.append(line)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    assert ok, detail
    assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"


# -- 1 ---------------------------------------------------------------------------

def _example():
    (pair,) = extract_pairs(parse_tree(EXAMPLE_TREE))
    m, s = extract_bundle(pair, "RSTV", load_lexicons())
    got = {
        "S": (m.get("S"), s.get("S")),
        "R": (m.get("R"), s.get("R")),
        "T": (m.get("T"), s.get("T")),
        "V": (m.get("V"), s.get("V")),
        "marker": pair.marker,
        "position": pair.position,
    }
    want = {
        "S": (("NP:2 VP:2 ADJP:0 ADVP:0 PP:0",), ("NP:1 VP:1 ADJP:0 ADVP:0 PP:0",)),
        "R": (("[SUBJ,OBJ]",), ("[OBJ]",)),
        "T": (("{present,future,imperfective,active,affirmative}",),
              ("{present,none,imperfective,passive,affirmative}",)),
        "V": (("lose",), ("complete",)),
        "marker": "after",
        "position": Position.SUB_SECOND,
    }
    bad = [k for k in want if got[k] != want[k]]
    return not bad, "all feature values match" if not bad else f"mismatch in {bad}: {[got[k] for k in bad]}"


def test_example_golden():
    _report("Worked example golden", 1, _example)


# -- 2 ---------------------------------------------------------------------------

def _smoothing():
    worst, tables = 0.0, 0
    for seed in range(1000):
        rng = random.Random(seed)
        classes, markers, data, _, _ = random_toy(rng)
        model = train(data, "conj" if seed % 2 else "disj", classes, markers)
        for name, tbl in model.tables.items():
            if not tbl:
                continue
            for t in markers:
                total = math.fsum(model.prob(name, key, t) for key in tbl)
                worst = max(worst, abs(total - 1.0))
            tables += 1
    return worst < 1e-9 and tables >= 1000, f"{tables} tables, max |sum - 1| = {worst:.1e}"


def test_smoothing_normalization():
    _report("Smoothing normalization", 5, _smoothing)


# -- 3 ---------------------------------------------------------------------------

def _posterior():
    argmax_bad, worst = 0, 0.0
    for seed in range(500):
        rng = random.Random(10_000 + seed)
        kind = "conj" if seed % 2 else "disj"
        classes, markers, data, m, s = random_toy(rng)
        assert len(classes) <= 3 and len(markers) <= 4
        model = train(data, kind, classes, markers)
        pred = predict_marker(model, m.project(classes), s.project(classes))
        joint, priors = exact_joint(data, kind, classes, m, s)
        argmax_bad += pred.chosen != exact_argmax(joint, priors)
        for t, sc in pred.ranked:
            ref = log_fraction(joint[t])
            worst = max(worst, abs(sc - ref) / max(1.0, abs(ref)))
    ok = argmax_bad == 0 and worst < 1e-12
    return ok, f"500 cases, {argmax_bad} argmax mismatches, max relative error {worst:.1e}"


def test_posterior_oracle():
    _report("Posterior oracle", 10, _posterior)


# -- 4 ---------------------------------------------------------------------------

def _majority():
    base = majority_baseline(draw_markers(5000, seed=1))
    gold = draw_markers(50_000, seed=2)
    acc = 100 * score(gold, [base.predict().chosen] * len(gold)).overall_accuracy
    ok = base.label == "when" and abs(acc - 42.83) <= 0.5
    return ok, f"majority label {base.label!r}, accuracy {acc:.2f}% (target 42.83 +/- 0.5)"


def test_majority_baseline():
    _report("Majority baseline", 10, _majority)


# -- 5 ---------------------------------------------------------------------------

def _fusion():
    flips, missing_ties = 0, 0
    for seed in range(1000):
        rng = random.Random(20_000 + seed)
        classes, markers, data, a, b = random_toy(rng)
        model = train(data, "conj" if seed % 2 else "disj", classes, markers)
        a, b = a.project(classes).with_side(None), b.project(classes).with_side(None)
        t = rng.choice(markers)
        fwd, rev = predict_fusion(model, a, b, t), predict_fusion(model, b, a, t)
        main_fwd = None if fwd.tie else (a if fwd.chosen == "a_is_main" else b)
        main_rev = None if rev.tie else (b if rev.chosen == "a_is_main" else a)
        flips += fwd.tie != rev.tie or main_fwd != main_rev
        missing_ties += not predict_fusion(model, a, a, t).tie
    return flips == 0 and missing_ties == 0, f"1000 instances, {flips} role flips, {missing_ties} unrecorded ties"


def test_fusion_symmetry():
    _report("Fusion symmetry", 5, _fusion)


# -- 6 ---------------------------------------------------------------------------

def _planted():
    data = planted_examples(5000, seed=7)
    split = partition([ex.id for ex in data], seed=7)
    by_id = {ex.id: ex for ex in data}
    tr = [by_id[i] for i in split.train_ids]
    dev = [by_id[i] for i in split.dev_ids]
    test = [by_id[i] for i in split.test_ids]
    notes, ok = [], True
    for kind in ("conj", "disj"):
        results = feature_search(tr, dev, kind, FEATURE_CLASSES)
        top = results[0]
        curve = dict(learning_curve(tr, test, kind, "A", sizes=[10, 100, 500, 1000, len(tr)], seed=7))
        ok &= str(top.config) == "A" and top.accuracy >= 0.99 and curve[1000] >= 0.99
        notes.append(f"{kind}: top {top.config} of {len(results)} at {top.accuracy:.3f}, curve@1000 {curve[1000]:.3f}")
    return ok, "; ".join(notes)


def test_planted_signal_recovery():
    _report("Planted-signal recovery", 60, _planted)


# -- 7 ---------------------------------------------------------------------------

def _complementarity():
    data = complementarity_examples(3000, seed=4)
    primary, secondary, test = data[:1000], data[1000:2000], data[2000:]
    ens = train_ensemble(["disj:S", "disj:V"], primary, secondary, folds=10, seed=4)
    gold = [ex.marker for ex in test]
    ens_acc = sum(p == g for p, g in zip(ens.predict_all(test), gold)) / len(gold)
    singles = {str(spec): evaluate_model(m, test) for spec, m in ens.components}
    best = max(singles.values())
    gain = 100 * (ens_acc - best)
    return gain >= 10, f"ensemble {100 * ens_acc:.1f}% vs best component {100 * best:.1f}% (+{gain:.1f} points)"


def test_ensemble_complementarity():
    _report("Ensemble complementarity", 60, _complementarity)


# -- 8 ---------------------------------------------------------------------------

def _statistics():
    chi2 = chi_square_counts(90, 10, 50, 50)
    k = kappa(list("xxyy"), list("xyyy"))
    k_same = kappa(list("xxyy"), list("xxyy"))
    chi_ok = abs(chi2 - 38.6) <= 0.1 and chi2 > 3.841
    ok = chi_ok and k == 0.5 and k_same == 1.0
    return ok, f"chi2 = {chi2:.3f} (target 38.6 +/- 0.1), kappa = {k}, kappa(a, a) = {k_same}"


def test_statistics_oracles():
    _report("Statistics oracles", 1, _statistics)


# -- 9 ---------------------------------------------------------------------------

def _determinism():
    with tempfile.TemporaryDirectory() as d:
        first = run_pipeline(Path(d) / "run1", seed=0)
        second = run_pipeline(Path(d) / "run2", seed=0)
    diff = sorted(k for k in first if first[k] != second.get(k))
    ok = first.keys() == second.keys() and not diff
    return ok, f"{len(first)} JSON artifacts, {len(diff)} differ"


def test_determinism():
    _report("Determinism", 120, _determinism)


if __name__ == "__main__":
    tests = [v for k, v in list(globals().items()) if k.startswith("test_")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    print(f"{len(tests) - failed}/{len(tests)} criteria passed")
    sys.exit(1 if failed else 0)
