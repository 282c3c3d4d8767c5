"""Command-line entry point: ``bidscreen <subcommand> [options]``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error. Errors
are written to stderr as one JSON object. Every output file starts with (CSV)
or contains (JSON) the resolved run configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .describe import DESCRIBE_ROWS, describe_table
from .errors import BidScreenError, DataError, EmptyAfterFilter, NumericError
from .evaluation import evaluate, ladder_report, ladder_table
from .learners import make_learner
from .learners.forest import Forest
from .learners.lasso import LassoModel
from .learners.tree import Tree
from .nonparam import SUITE_HEADER, screen_distribution_suite, suite_table
from .screens import KURTOSIS_MODES, RATIO_SCREENS, VALUE_SCREENS, screen_vector
from .simulate import build_ladder
from .subgroups import MODEL_SPECS, FeatureTable, MedianImputer, build_features, feature_table, model_spec
from .synthetic import two_period_market
from .tender import (ColumnMap, Label, filter_cartel_members, filter_contract_type, filter_min_bids,
                     ingest_csv, write_csv)

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4
MODEL_FORMAT = "bidscreen-model"
MODEL_FORMAT_VERSION = 1

CONVENTIONS = {
    "kurtosis_default": "standard",
    "std": "sample (n-1)",
    "vote_tie": "Competitive",
    "leaf_tie": "Competitive",
    "split_tie": "lower predictor index, then lower threshold",
    "lasso_cv": "Brier score, ties to larger penalty",
    "imputation": "training-split median",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- formatting

def fmt6(v) -> str:
    """Six significant digits; Undefined becomes an empty cell."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    f = float(v)
    return "" if math.isnan(f) else f"{f:.6g}"


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return None if math.isnan(f) else f
    return o


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n", encoding="utf-8")


def write_table(path, header: Sequence[str], rows, config: dict) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt6(v) for v in r])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise DataError(f"{path}: empty table")
    return [h.strip() for h in rows[0]], rows[1:]


def _float(cell: str) -> float:
    cell = cell.strip()
    return math.nan if cell == "" else float(cell)


def read_feature_csv(path) -> FeatureTable:
    header, rows = read_table(path)
    if not header or header[0] != "tender_id":
        raise DataError(f"{path}: feature CSV must start with a tender_id column")
    has_label = len(header) > 1 and header[1] == "label"
    start = 2 if has_label else 1
    ids = tuple(r[0] for r in rows)
    y = np.array([int(float(r[1])) if has_label and r[1].strip() else int(Label.UNLABELED) for r in rows])
    try:
        X = np.array([[_float(c) for c in r[start:]] for r in rows], dtype=float).reshape(len(rows), -1)
    except ValueError as e:
        raise DataError(f"{path}: non-numeric feature cell ({e})") from None
    return FeatureTable(ids, y, X, tuple(header[start:]))


# ---------------------------------------------------------------- shared setup

COLUMN_KEYS = ("tender", "bid", "label", "contract_type", "anon_year", "anon_date", "bidder",
               "cartel_member", "simulated")


def _schema(args) -> ColumnMap:
    cm = ColumnMap()
    for key in COLUMN_KEYS:
        v = getattr(args, f"col_{key}", None)
        if v:
            setattr(cm, key, v)
    return cm


def _load(path, args):
    return ingest_csv(path, _schema(args))


def _config(args) -> dict:
    skip = {"func", "config"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["version"] = __version__
    return cfg


def _threads(args):
    return None if args.threads in (None, 0) else args.threads


def _learner_params(args) -> dict:
    if args.learner == "forest":
        p = {"n_trees": args.trees, "threads": _threads(args)}
        if args.mtry:
            p["mtry"] = args.mtry
        return p
    return {}


def _labelled(ds, what: str):
    if np.any(ds.labels == Label.UNLABELED):
        raise DataError(f"{what} needs a label on every tender")
    return ds


# ---------------------------------------------------------------- subcommands

def cmd_screens(args) -> dict:
    ds = _load(args.input, args)
    names = RATIO_SCREENS + VALUE_SCREENS
    rows = []
    for t in ds:
        sv = screen_vector(t, kurtosis=args.kurtosis).as_dict()
        label = "" if t.label == Label.UNLABELED else int(t.label)
        rows.append([t.tender_id, label] + [sv[n] for n in names])
    cfg = _config(args)
    if args.format == "json":
        write_json(args.out, {"config": cfg, "columns": ["tender_id", "label", *names], "rows": rows})
    else:
        write_table(args.out, ("tender_id", "label") + names, rows, cfg)
    return {"tenders": len(ds)}


def cmd_features(args) -> dict:
    ds = filter_min_bids(_load(args.input, args), 4) if args.drop_small else _load(args.input, args)
    spec = model_spec(args.model)
    ft = build_features(ds, spec, impute=args.impute, kurtosis=args.kurtosis)
    rows = []
    for tid, lab, x in zip(ft.tender_ids, ft.y, ft.X):
        rows.append([tid, "" if lab == Label.UNLABELED else int(lab)] + list(x))
    cfg = _config(args)
    if args.format == "json":
        write_json(args.out, {"config": cfg, "columns": ["tender_id", "label", *ft.names], "rows": rows})
    else:
        write_table(args.out, ("tender_id", "label") + ft.names, rows, cfg)
    if args.describe:
        desc = describe_table(ft)
        write_table(args.describe, ("Predictor",) + DESCRIBE_ROWS, [(d.name,) + d.row() for d in desc], cfg)
    return {"tenders": len(ds), "predictors": spec.p}


def cmd_simulate(args) -> dict:
    coll = _labelled(_load(args.collusive, args), "simulate").collusive()
    comp = _labelled(_load(args.competitive, args), "simulate").competitive()
    ladder = build_ladder(coll, comp, seed=args.seed, max_bids=args.max_bids)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for m in range(len(ladder)):
        path = out / f"rung_{m}.csv"
        write_csv(ladder.evaluation(m), path)
        files.append(str(path))
    write_json(out / "simulate_config.json", {"config": _config(args), "files": files,
                                               "pool_size": len(ladder.pool)})
    return {"rungs": len(ladder), "pool_size": len(ladder.pool)}


def _fitted_payload(learner, kind: str) -> dict:
    if kind == "forest":
        return learner.forest_.to_dict()
    if kind == "tree":
        return learner.tree_.to_dict()
    if kind == "lasso":
        return learner.model_.to_dict()
    return {"cv_threshold": learner.cv_threshold, "rd_threshold": learner.rd_threshold,
            "cols": list(learner.cols_)}


def _restore(kind: str, payload: dict):
    if kind == "forest":
        return Forest.from_dict(payload).predict
    if kind == "tree":
        return Tree.from_dict(payload).predict
    if kind == "lasso":
        return LassoModel.from_dict(payload).predict
    if kind == "benchmark":
        rule = make_learner("benchmark", cv_threshold=payload["cv_threshold"],
                            rd_threshold=payload["rd_threshold"])
        rule.cols_ = tuple(payload["cols"])
        return rule.predict
    raise DataError(f"unknown learner {kind!r} in model file")


def _training_table(args, spec) -> FeatureTable:
    if args.features:
        ft = read_feature_csv(args.features).select(spec)
    else:
        ds = _labelled(_load(args.input, args), "train")
        ft = feature_table(ds, kurtosis=args.kurtosis).select(spec)
    if np.any(ft.y == Label.UNLABELED):
        raise DataError("train needs a label on every row")
    return ft


def cmd_train(args) -> dict:
    spec = model_spec(args.model)
    ft = _training_table(args, spec)
    imp = MedianImputer().fit(ft.X)
    learner = make_learner(args.learner, seed=args.seed, **_learner_params(args))
    learner.fit(imp.transform(ft.X), ft.y, names=ft.names)
    payload = {
        "format": MODEL_FORMAT, "format_version": MODEL_FORMAT_VERSION, "learner": args.learner,
        "spec": spec.id, "predictors": list(ft.names), "imputation_medians": imp.medians_,
        "model": _fitted_payload(learner, args.learner), "config": _config(args),
    }
    write_json(args.out, payload)
    return {"rows": len(ft), "predictors": len(ft.names)}


def cmd_predict(args) -> dict:
    payload = json.loads(Path(args.model_file).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise DataError(f"{args.model_file}: not a {MODEL_FORMAT} file")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{args.model_file}: unsupported format version {payload.get('format_version')}")
    names = payload["predictors"]
    if args.features:
        ft = read_feature_csv(args.features).select(names)
    else:
        ft = feature_table(_load(args.input, args), kurtosis=args.kurtosis).select(names)
    imp = MedianImputer()
    imp.medians_ = np.array([math.nan if v is None else v for v in payload["imputation_medians"]], dtype=float)
    predict = _restore(payload["learner"], payload["model"])
    pred = predict(imp.transform(ft.X))
    rows = [(tid, "Collusive" if p == Label.COLLUSIVE else "Competitive", int(p))
            for tid, p in zip(ft.tender_ids, pred)]
    write_table(args.out, ("tender_id", "prediction", "collusive"), rows, _config(args))
    return {"rows": len(rows), "flagged": int(np.sum(pred))}


def _eval_dataset(args):
    ds = _labelled(_load(args.input, args), "evaluate")
    if args.contract_type is not None:
        ds = filter_contract_type(ds, args.contract_type)
    if args.cartel_more_than is not None:
        ds = filter_cartel_members(ds, args.cartel_more_than)
    if len(ds) == 0:
        raise EmptyAfterFilter("no tenders left after filtering")
    return ds


def cmd_evaluate(args) -> dict:
    ds = _eval_dataset(args)
    rep = evaluate(ds, args.model, args.learner, repetitions=args.repetitions, train_frac=args.train_frac,
                   seed=args.seed, stratify=args.stratify, learner_params=_learner_params(args),
                   kurtosis=args.kurtosis)
    cfg = _config(args)
    d = rep.to_dict()
    d["config"] = {**cfg, "evaluation": rep.config_echo}
    write_json(args.out_json, d)
    if args.out_csv:
        rows = [("All", rep.ccr_all), ("Comp.", rep.ccr_comp), ("Coll.", rep.ccr_coll)]
        write_table(args.out_csv, ("Tenders", model_spec(args.model).id), rows, cfg)
    return {"ccr_all": rep.ccr_all, "ccr_comp": rep.ccr_comp, "ccr_coll": rep.ccr_coll}


def cmd_importance(args) -> dict:
    ds = _eval_dataset(args)
    rep = evaluate(ds, args.model, args.learner, repetitions=args.repetitions, train_frac=args.train_frac,
                   seed=args.seed, learner_params=_learner_params(args), kurtosis=args.kurtosis)
    if not rep.importance:
        raise DataError(f"learner {args.learner!r} reports no importances")
    top = rep.importance if args.top is None else rep.importance[: args.top]
    rows = [(i + 1, name, value) for i, (name, value) in enumerate(top)]
    write_table(args.out, ("Rank", "IV", "MDG"), rows, _config(args))
    return {"top": top[0][0]}


def _screen_columns(path) -> dict[str, np.ndarray]:
    header, rows = read_table(path)
    cols = {}
    for name in RATIO_SCREENS:
        if name not in header:
            raise DataError(f"{path}: screen column {name!r} missing")
        j = header.index(name)
        cols[name] = np.array([_float(r[j]) for r in rows], dtype=float)
    return cols


def cmd_test(args) -> dict:
    rows = suite_table(screen_distribution_suite(_screen_columns(args.sim), _screen_columns(args.real)))
    write_table(args.out, SUITE_HEADER, rows, _config(args))
    return {"mw_rejections": sum(1 for r in rows if r[2] < args.alpha),
            "ks_rejections": sum(1 for r in rows if r[4] < args.alpha)}


def cmd_benchmark(args) -> dict:
    ds = _load(args.input, args)
    rows = []
    flagged = 0
    for t in ds:
        sv = screen_vector(t, kurtosis=args.kurtosis)
        if math.isnan(sv.cv) or math.isnan(sv.rd):
            verdict = ""
        else:
            hit = 100.0 * sv.cv < args.cv_threshold and sv.rd > args.rd_threshold
            flagged += hit
            verdict = "Collusive" if hit else "Competitive"
        rows.append((t.tender_id, 100.0 * sv.cv, sv.rd, verdict))
    write_table(args.out, ("tender_id", "CV", "RD", "prediction"), rows, _config(args))
    return {"tenders": len(rows), "flagged": flagged}


def cmd_reproduce(args) -> dict:
    coll, comp = two_period_market(args.seed, args.collusive, args.competitive)
    ladder = build_ladder(coll, comp, seed=args.seed, max_bids=args.max_bids)
    columns = {"Rule": ladder_report(ladder, "M1", "benchmark", seed=args.seed, repetitions=args.repetitions)}
    params = {"n_trees": args.trees, "threads": _threads(args)}
    for spec in args.models:
        columns[spec] = ladder_report(ladder, spec, "forest", seed=args.seed, repetitions=args.repetitions,
                                      learner_params=params, kurtosis=args.kurtosis)
    header, rows = ladder_table(columns)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _config(args)
    write_table(out / "ladder.csv", header, rows, cfg)
    write_json(out / "ladder.json", {"config": cfg, "columns": {
        k: [r.to_dict() for r in v] for k, v in columns.items()}})
    return {"rows": len(rows), "out": str(out / "ladder.csv")}


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    g.add_argument("--threads", type=int, default=None, help="cap on worker threads (default: all cores)")
    g.add_argument("--kurtosis", choices=KURTOSIS_MODES, default="standard",
                   help="kurtosis bias term: standard (n-1)^2 or the (n-1)^3 variant")
    g.add_argument("--config", help="key=value file; explicit flags take precedence")
    c = p.add_argument_group("column mapping")
    for key in COLUMN_KEYS:
        c.add_argument(f"--col-{key.replace('_', '-')}", dest=f"col_{key}", default=None,
                       help=f"CSV header for the {key} field")


def _learner_opts(p, default_learner="forest") -> None:
    p.add_argument("--learner", choices=("forest", "tree", "lasso", "benchmark"), default=default_learner)
    p.add_argument("--model", choices=tuple(MODEL_SPECS), default="M4")
    p.add_argument("--trees", type=int, default=1000, help="forest size")
    p.add_argument("--mtry", type=int, default=None, help="predictors tried per split (default floor(sqrt(p)))")


def _eval_opts(p) -> None:
    p.add_argument("--in", dest="input", required=True, help="labelled bid-level CSV")
    p.add_argument("--repetitions", type=int, default=100)
    p.add_argument("--train-frac", type=float, default=0.75)
    p.add_argument("--contract-type", type=int, default=None, help="keep one contract type (1, 2 or 3)")
    p.add_argument("--cartel-more-than", type=int, default=None,
                   help="keep collusive tenders with more than this many cartel bids")


def build_parser() -> argparse.ArgumentParser:
    version = f"bidscreen {__version__} " + json.dumps(CONVENTIONS, sort_keys=True)
    parser = _Parser(prog="bidscreen", description="Screen tender bids for signs of bid rigging.")
    parser.add_argument("--version", action="version", version=version)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("screens", help="per-tender screen table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _common(p)
    p.set_defaults(func=cmd_screens)

    p = sub.add_parser("features", help="predictor table for a model specification")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=tuple(MODEL_SPECS), default="M4")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--impute", action="store_true", help="fill Undefined cells with column medians")
    p.add_argument("--drop-small", action="store_true", help="drop tenders with fewer than 4 bids")
    p.add_argument("--describe", default=None, help="also write descriptive statistics to this CSV")
    _common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("simulate", help="inject simulated competitive bids into collusive tenders")
    p.add_argument("--competitive", required=True, help="bid CSV; its competitive tenders form the pool")
    p.add_argument("--collusive", required=True, help="bid CSV; its collusive tenders receive bids")
    p.add_argument("--max-bids", type=int, default=5)
    p.add_argument("--out-dir", required=True)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit a learner and save it as JSON")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", help="labelled bid-level CSV")
    src.add_argument("--features", help="labelled feature CSV")
    p.add_argument("--out", required=True)
    _learner_opts(p)
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score tenders with a saved model")
    p.add_argument("--model-file", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", help="bid-level CSV")
    src.add_argument("--features", help="feature CSV")
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="repeated 75/25 evaluation")
    _eval_opts(p)
    _learner_opts(p)
    p.add_argument("--stratify", action="store_true", help="split within each class")
    p.add_argument("--out-json", required=True)
    p.add_argument("--out-csv", default=None)
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="predictors ranked by mean decrease in Gini")
    _eval_opts(p)
    _learner_opts(p)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("test", help="Mann-Whitney and KS tests between two screen tables")
    p.add_argument("--sim", required=True, help="screen CSV of simulated tenders")
    p.add_argument("--real", required=True, help="screen CSV of real competitive tenders")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("benchmark", help="fixed CV/RD threshold rule")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cv-threshold", type=float, default=6.0, help="in percent")
    p.add_argument("--rd-threshold", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("reproduce-synthetic", help="synthetic cartel data through the full ladder")
    p.add_argument("--out-dir", default="reproduce_out")
    p.add_argument("--collusive", type=int, default=149)
    p.add_argument("--competitive", type=int, default=150)
    p.add_argument("--max-bids", type=int, default=5)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--trees", type=int, default=1000)
    p.add_argument("--models", nargs="+", choices=tuple(MODEL_SPECS), default=["M1", "M2", "M3", "M4"])
    _common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def read_config(path) -> dict[str, str]:
    out = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return out


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        # string defaults pass through each option's type conversion; explicit flags still win
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as e:
        return _fail(e, EXIT_USAGE)
    except SystemExit as e:  # --help and --version
        return int(e.code or 0)
    try:
        summary = args.func(args)
    except UsageError as e:
        return _fail(e, EXIT_USAGE)
    except NumericError as e:
        return _fail(e, EXIT_NUMERIC)
    except (DataError, OSError, KeyError, ValueError) as e:
        return _fail(e, EXIT_DATA)
    except BidScreenError as e:
        return _fail(e, EXIT_DATA)
    sys.stdout.write(json.dumps(_jsonable({"command": args.command, "result": summary,
                                            "config": _config(args)}), sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
