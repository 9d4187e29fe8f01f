"""Command-line entry point: ``tempmark <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .ensemble import (
    ComponentSpec,
    StackedEnsemble,
    feature_search,
    list_presets,
    load_ensemble,
    load_preset,
    save_ensemble,
    train_ensemble,
)
from .errors import ConfigError, InvariantError
from .evaluation import (
    chi_square,
    kappa,
    learning_curve,
    pairwise_mean_agreement,
    pairwise_mean_kappa,
    partition,
    render_table,
    score,
)
from .extraction import MarkerSet, Task, extract_pairs, read_instances, write_instances
from .features import FEATURE_CLASSES, LEXICON_DIR_ENV, load_lexicons
from .io import atomic_write_text, dump_json, dump_jsonl
from .models import (
    MajorityBaseline,
    MarkerModel,
    ModelKind,
    RandomBaseline,
    majority_baseline,
    random_baseline,
    save_model,
    train,
)
from .pipeline import examples_from_pairs, fusion_cases, gold_labels, predict_case, predict_example, strip_position
from .synth import MINI_CORPUS_SEED, mini_corpus_text
from .treebank import TreebankParseError, iter_corpus

PARTS = ("train", "dev", "test", "all")
BASELINES = ("majority", "random")


# -- shared plumbing ---------------------------------------------------------------

def _load_examples(args, part: str):
    pairs = read_instances(args.instances)
    if not pairs:
        raise ConfigError(f"{args.instances}: no instances")
    lex = load_lexicons(args.lexicon_dir)
    examples = examples_from_pairs(pairs, lex)
    return _select(examples, part, args.seed)


def _select(examples, part: str, seed: int):
    if part == "all":
        return list(examples)
    split = partition([ex.id for ex in examples], seed)
    keep = set(getattr(split, f"{part}_ids"))
    return [ex for ex in examples if ex.id in keep]


def _items(examples, task: Task, seed: int):
    return fusion_cases(examples, seed) if task is Task.FUSION else list(examples)


def _emit(args, payload: dict, table: str) -> None:
    """Write the JSON result and print the human summary."""
    dump_json(payload, args.out)
    if args.format == "json":
        sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(table)


def _features_of(args, kind: ModelKind, task: Task):
    config = "W" if kind is ModelKind.WORD_BASED else args.features
    return strip_position(config) if task is Task.FUSION else config


def _load_predictor(path):
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    if "components" in obj:
        return load_ensemble(path)
    return MarkerModel.from_json(obj)


def _posterior(ranked) -> dict:
    top = ranked[0][1]
    weights = {label: math.exp(s - top) for label, s in ranked}
    z = math.fsum(weights.values())
    return {label: w / z for label, w in weights.items()}


# -- commands --------------------------------------------------------------------

def cmd_extract(args) -> int:
    markers = MarkerSet.parse(args.markers)
    path = Path(args.corpus)
    try:
        f = open(path, encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read corpus {path}: {e.strerror}") from e
    pairs = []
    with f:
        for i, tree in enumerate(iter_corpus(f, multiline=args.multiline)):
            pairs.extend(extract_pairs(tree, markers, args.lenient, f"{path.stem}:{i}"))
    if not pairs:
        raise ConfigError(f"{path}: no main/subordinate clause pairs found")
    write_instances(pairs, args.instances_out)
    counts = Counter(p.marker for p in pairs)
    rows = {m: {"count": counts[m], "percent": 100 * counts[m] / len(pairs)} for m in markers}
    payload = {"corpus": path.name, "instances": len(pairs), "markers": rows}
    order = sorted(markers, key=lambda m: (-counts[m], m))
    table = render_table(
        ("Marker", "Frequency", "Distribution (%)"),
        [(m, counts[m], f"{rows[m]['percent']:.2f}") for m in order] + [("Total", len(pairs), "100.00")],
    )
    _emit(args, payload, table)
    return 0


def cmd_synth(args) -> int:
    atomic_write_text(args.corpus_out, mini_corpus_text(seed=args.seed))
    print(f"wrote {args.corpus_out}")
    return 0


def cmd_train(args) -> int:
    kind = ModelKind.parse(args.kind)
    task = Task(args.task)
    examples = _load_examples(args, args.part)
    model = train(examples, kind, _features_of(args, kind, task), MarkerSet.parse(args.markers))
    save_model(model, args.out)
    print(f"trained {kind.value}:{model.config} on {len(examples)} instances -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    predictor = _load_predictor(args.model)
    task = predictor.task if isinstance(predictor, StackedEnsemble) else Task(args.task)
    examples = _load_examples(args, args.part)
    rows = []
    for it in _items(examples, task, args.seed):
        gold = it.gold if task is Task.FUSION else it.marker
        if isinstance(predictor, StackedEnsemble):
            rows.append({"id": it.id, "gold": gold, "chosen": predictor.predict(it)})
            continue
        pred = predict_case(predictor, it) if task is Task.FUSION else predict_example(predictor, it)
        rows.append({
            "id": it.id,
            "gold": gold,
            "chosen": pred.chosen,
            "tie": pred.tie,
            "ranked": [[label, s] for label, s in pred.ranked],
            "posterior": _posterior(pred.ranked),
        })
    dump_jsonl(rows, args.out)
    hits = sum(r["gold"] == r["chosen"] for r in rows)
    print(f"{len(rows)} predictions -> {args.out} ({hits} match gold)")
    return 0


def _predictions(predictor, items, task: Task) -> list[str]:
    if isinstance(predictor, MajorityBaseline):
        return [predictor.predict().chosen for _ in items]
    if isinstance(predictor, RandomBaseline):
        return [predictor.predict_fusion().chosen for _ in items]
    if isinstance(predictor, StackedEnsemble):
        return predictor.predict_all(items)
    if task is Task.FUSION:
        return [predict_case(predictor, c).chosen for c in items]
    return [predict_example(predictor, ex).chosen for ex in items]


def cmd_eval(args) -> int:
    task = Task(args.task)
    examples = _load_examples(args, "all")
    train_part = _select(examples, "train", args.seed)
    test_part = _select(examples, args.part, args.seed)
    items = _items(test_part, task, args.seed)
    gold = gold_labels(items, task)

    systems = []
    for name in args.baseline or ():
        if name == "majority" and task is Task.FUSION:
            raise ConfigError("the majority baseline is for interpretation; use --baseline random for fusion")
        if name == "random" and task is Task.INTERPRETATION:
            raise ConfigError("the random baseline is for fusion; use --baseline majority for interpretation")
        systems.append((name, majority_baseline(train_part) if name == "majority" else random_baseline(args.seed)))
    for path in args.model or ():
        p = _load_predictor(path)
        if isinstance(p, StackedEnsemble) and p.task is not task:
            raise ConfigError(f"{path} is a {p.task.value} ensemble but --task is {task.value}")
        systems.append((Path(path).stem, p))
    if not systems:
        raise ConfigError("nothing to evaluate: pass --model and/or --baseline")

    preds = {name: _predictions(p, items, task) for name, p in systems}
    reports = {name: score(gold, pr) for name, pr in preds.items()}
    names = [n for n, _ in systems]
    comparisons = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            stat, sig = chi_square(gold, preds[a], preds[b])
            comparisons.append({"a": a, "b": b, "chi2": stat, "significant_05": sig})

    payload = {
        "task": task.value,
        "part": args.part,
        "n": len(gold),
        "systems": {n: r.to_json() for n, r in reports.items()},
        "comparisons": comparisons,
    }
    if task is Task.FUSION:
        for r in payload["systems"].values():
            r.pop("f_score_weighted")
    lines = [render_table(
        ("System", "Accuracy (%)", "F-score (%)"),
        [(n, f"{100 * reports[n].overall_accuracy:.2f}",
          "-" if task is Task.FUSION else f"{100 * reports[n].overall_f:.2f}") for n in names],
    )]
    if task is Task.INTERPRETATION and len(names) == 1:
        lines.append("\n" + reports[names[0]].to_table())
    for c in comparisons:
        star = "*" if c["significant_05"] else ""
        lines.append(f"chi2({c['a']} vs {c['b']}) = {c['chi2']:.3f}{star}\n")
    _emit(args, payload, "".join(lines))
    return 0


def cmd_search(args) -> int:
    task = Task(args.task)
    examples = _load_examples(args, "all")
    train_part = _select(examples, "train", args.seed)
    dev_part = _select(examples, "dev", args.seed)
    classes = args.classes if args.classes else FEATURE_CLASSES
    results = feature_search(train_part, dev_part, args.kind, classes, task,
                             MarkerSet.parse(args.markers), args.seed)
    payload = {
        "task": task.value,
        "kind": ModelKind.parse(args.kind).value,
        "configs": len(results),
        "results": [r.to_json() for r in results],
    }
    shown = results[: args.top]
    table = render_table(("Config", "Dev accuracy (%)"), [(str(r.config), f"{100 * r.accuracy:.2f}") for r in shown])
    _emit(args, payload, f"{len(results)} configurations searched\n" + table)
    return 0


def cmd_ensemble(args) -> int:
    task = Task(args.task)
    if args.preset:
        specs = load_preset(args.preset)
    elif args.component:
        specs = [ComponentSpec.parse(c) for c in args.component]
    else:
        raise ConfigError("pass --preset or at least one --component")
    examples = _load_examples(args, "all")
    primary = _select(examples, "train", args.seed)
    secondary = _select(examples, "dev", args.seed)
    ens = train_ensemble(specs, primary, secondary, task, args.folds, args.seed,
                         marker_set=MarkerSet.parse(args.markers))
    save_ensemble(ens, args.out)
    print(f"{len(specs)} components, cv accuracy {100 * ens.cv_accuracy:.2f}% -> {args.out}")
    return 0


def cmd_curve(args) -> int:
    from .plotting import plot_learning_curves

    task = Task(args.task)
    examples = _load_examples(args, "all")
    train_part = _select(examples, "train", args.seed)
    eval_part = _items(_select(examples, args.part, args.seed), task, args.seed)
    if args.sizes:
        sizes = [int(s) for s in args.sizes.split(",")]
    else:
        step = max(1, len(train_part) // 10)
        sizes = list(range(step, len(train_part) + 1, step))
    curves = {}
    for k in args.kinds.split(","):
        kind = ModelKind.parse(k)
        cfg = _features_of(args, kind, task)
        curves[kind.value] = learning_curve(train_part, eval_part, kind, cfg, sizes, args.seed, task,
                                            MarkerSet.parse(args.markers))
    payload = {"task": task.value, "sizes": sizes, "curves": {k: [a for _, a in v] for k, v in curves.items()}}
    if args.figure:
        plot_learning_curves(curves, args.figure)
        payload["figure"] = Path(args.figure).name
    header = ("Size",) + tuple(curves)
    rows = [(n,) + tuple(f"{100 * curves[k][i][1]:.2f}" for k in curves) for i, n in enumerate(sizes)]
    _emit(args, payload, render_table(header, rows))
    return 0


def _read_labels(path) -> list[str]:
    labels = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                labels.append(str(json.loads(line)["chosen"]))
            else:
                labels.append(line)
    return labels


def cmd_kappa(args) -> int:
    if len(args.files) < 2:
        raise ConfigError("kappa needs at least two label files")
    raters = [_read_labels(p) for p in args.files]
    if len({len(r) for r in raters}) != 1:
        raise ConfigError("label files have different lengths")
    payload = {
        "raters": [Path(p).name for p in args.files],
        "n": len(raters[0]),
        "kappa": pairwise_mean_kappa(raters),
        "percent_agreement": pairwise_mean_agreement(raters),
    }
    if len(raters) == 2:
        payload["kappa"] = kappa(*raters)
    table = render_table(("Statistic", "Value"),
                         [("K", f"{payload['kappa']:.3f}"), ("%", f"{100 * payload['percent_agreement']:.1f}")])
    _emit(args, payload, table)
    return 0


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempmark", description="Temporal marker interpretation and fusion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="single source of randomness (default 0)")
    common.add_argument("--markers", default=",".join(MarkerSet()), help="comma-separated marker set")
    common.add_argument("--lexicon-dir", default=None, help=f"lexicon directory (default ${LEXICON_DIR_ENV} or bundled)")
    common.add_argument("--format", choices=("table", "json"), default="table", help="stdout format")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("instances", help="JSON-lines instance file from 'extract'")
    data.add_argument("--task", choices=[t.value for t in Task], default=Task.INTERPRETATION.value)

    model_opts = argparse.ArgumentParser(add_help=False)
    model_opts.add_argument("--kind", default="disj", help="conj, disj or word")
    model_opts.add_argument("--features", default="SV", type=_config_arg, help="feature classes, e.g. NPRSTV")

    p = sub.add_parser("extract", parents=[common], help="extract clause pairs from a treebank")
    p.add_argument("corpus")
    p.add_argument("--instances-out", default="instances.jsonl")
    p.add_argument("-o", "--out", default="extract_summary.json")
    p.add_argument("--lenient", action="store_true", help="accept SBARs without a TMP tag")
    p.add_argument("--multiline", action="store_true", help="trees may span several lines")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="write the bundled mini treebank")
    p.add_argument("--seed", type=int, default=MINI_CORPUS_SEED)
    p.add_argument("--corpus-out", default="mini_corpus.mrg")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[common, data, model_opts], help="train a marker model")
    p.add_argument("--part", choices=PARTS, default="train")
    p.add_argument("-o", "--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common, data], help="predict with a model or ensemble")
    p.add_argument("--model", required=True)
    p.add_argument("--part", choices=PARTS, default="test")
    p.add_argument("-o", "--out", default="predictions.jsonl")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", parents=[common, data], help="score models and baselines")
    p.add_argument("--model", action="append", help="model or ensemble file (repeatable)")
    p.add_argument("--baseline", action="append", choices=BASELINES)
    p.add_argument("--part", choices=("dev", "test"), default="test")
    p.add_argument("-o", "--out", default="eval.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("search", parents=[common, data], help="score every feature combination on dev")
    p.add_argument("--kind", default="disj")
    p.add_argument("--classes", default=None, type=lambda s: list(_config_arg(s)), help="restrict classes")
    p.add_argument("--top", type=int, default=20)
    p.add_argument("-o", "--out", default="search.json")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("ensemble", parents=[common, data], help="train a stacked ensemble")
    p.add_argument("--preset", choices=list_presets())
    p.add_argument("--component", action="append", help="component spec such as disj:SV (repeatable)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("-o", "--out", default="ensemble.json")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("curve", parents=[common, data], help="learning curves")
    p.add_argument("--kinds", default="conj,disj,word")
    p.add_argument("--features", default="SV", type=_config_arg)
    p.add_argument("--sizes", default=None, help="comma-separated ascending training sizes")
    p.add_argument("--part", choices=("dev", "test"), default="test")
    p.add_argument("--figure", default=None, help="PNG path for the plot")
    p.add_argument("-o", "--out", default="curve.json")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("kappa", parents=[common], help="agreement between label files")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--out", default="kappa.json")
    p.set_defaults(func=cmd_kappa)
    return parser


def _config_arg(text: str):
    from .features import FeatureConfig

    try:
        return FeatureConfig.parse(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantError as e:
        print(f"tempmark: internal error: {e}", file=sys.stderr)
        return 3
    except (ConfigError, TreebankParseError) as e:
        print(f"tempmark: error: {_one_line(e)}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"tempmark: error: file not found: {e.filename}", file=sys.stderr)
        return 2


def _one_line(e: Exception) -> str:
    return " ".join(str(e).split())


if __name__ == "__main__":
    sys.exit(main())
