"""Operator CLI: each subcommand is one pipeline stage communicating via files.

Exit codes: 0 ok, 2 validation, 3 IO, 4 downstream service, 5 internal.
Every file-producing command writes a run manifest (inputs, seed, durations,
version) next to its primary output; inputs are never mutated.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import requests

from . import __version__
from .corpus import (
    CorpusError,
    IngestError,
    duplicate_clusters,
    filter_invalid,
    ingest_rest,
    load_jsonl,
    save_jsonl,
)
from .embedding import VecFormatError, load_vec_file
from .evaluation import EvalError, evaluate_model, featurize_pairs, rank_candidates
from .features import FEATURE_SCHEMA, FeatureError, save_feature_csv
from .gbdt import (
    GBDTError,
    Hyperparams,
    feature_importance,
    load_model,
    save_model,
    train,
)
from .pairs import (
    PairsError,
    build_training_pairs,
    load_pairs_csv,
    save_pairs_csv,
    train_test_split,
)
from .preprocess import CleanConfig, default_config, load_stopwords, load_synonyms

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DOWNSTREAM = 4
EXIT_INTERNAL = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _write_manifest(
    out_path: Path, command: str, inputs: dict, seed: int | None, t0: float, **extra
) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "inputs": inputs,
        "seed": seed,
        "duration_s": round(time.time() - t0, 3),
    }
    manifest.update(extra)
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _clean_config(args: argparse.Namespace) -> CleanConfig:
    stopwords = (
        load_stopwords(args.stopwords)
        if getattr(args, "stopwords", None)
        else default_config().stopwords
    )
    synonyms = (
        load_synonyms(args.synonyms) if getattr(args, "synonyms", None) else {}
    )
    return CleanConfig(stopwords=stopwords, synonyms=synonyms)


def cmd_ingest(args: argparse.Namespace) -> int:
    t0 = time.time()
    out = Path(args.out)
    if args.source == "rest":
        if not args.url:
            raise CliError(EXIT_VALIDATION, "--url is required for rest ingestion")
        query = dict(item.split("=", 1) for item in args.query or [])
        result = ingest_rest(
            args.url,
            query=query,
            page_size=args.page_size,
            max_bugs=args.max_bugs,
            token=args.token,
        )
    else:
        if not args.infile:
            raise CliError(EXIT_VALIDATION, "--in is required for file ingestion")
        result = load_jsonl(args.infile)
    save_jsonl(result.corpus, out)
    _write_manifest(
        out,
        "ingest",
        {"source": args.source, "url": args.url, "in": args.infile},
        None,
        t0,
        bugs=len(result.corpus),
        skipped=result.skip_report.skipped,
        skip_reasons=result.skip_report.reasons or {},
    )
    print(f"ingested {len(result.corpus)} bugs -> {out}")
    return EXIT_OK


def cmd_clean(args: argparse.Namespace) -> int:
    t0 = time.time()
    out = Path(args.out)
    loaded = load_jsonl(args.infile)
    filtered = filter_invalid(loaded.corpus)
    save_jsonl(filtered.corpus, out)
    _write_manifest(
        out,
        "clean",
        {"in": args.infile},
        None,
        t0,
        loaded=len(loaded.corpus),
        load_skipped=loaded.skip_report.skipped,
        removed_empty=filtered.removed_empty,
        removed_short=filtered.removed_short,
        kept=len(filtered.corpus),
    )
    print(
        f"cleaned: kept {len(filtered.corpus)}, removed "
        f"{filtered.removed} -> {out}"
    )
    return EXIT_OK


def cmd_pairs(args: argparse.Namespace) -> int:
    t0 = time.time()
    out = Path(args.out)
    corpus = load_jsonl(args.corpus).corpus
    clusters = duplicate_clusters(corpus)
    pairs = build_training_pairs(
        corpus, clusters, neg_per_pos=args.neg_per_pos, seed=args.seed
    )
    save_pairs_csv(pairs, out)
    extra = {
        "pairs": len(pairs),
        "positives": sum(p.label for p in pairs),
        "clusters": len(clusters.clusters),
    }
    if args.test_fraction is not None:
        split = train_test_split(pairs, args.test_fraction, seed=args.seed)
        train_path = out.with_suffix(".train.csv")
        test_path = out.with_suffix(".test.csv")
        save_pairs_csv(split.train, train_path)
        save_pairs_csv(split.test, test_path)
        extra["split"] = split.report.as_dict()
        print(
            f"pairs: {len(pairs)} -> {out}; train {len(split.train)} -> "
            f"{train_path}; test {len(split.test)} -> {test_path}"
        )
    else:
        print(f"pairs: {len(pairs)} -> {out}")
    _write_manifest(out, "pairs", {"corpus": args.corpus}, args.seed, t0, **extra)
    return EXIT_OK


def _hyperparams(args: argparse.Namespace) -> Hyperparams:
    hp = Hyperparams(seed=args.seed)
    overrides = {}
    for name in (
        "subsample",
        "n_estimators",
        "min_child_weight",
        "max_depth",
        "gamma",
        "colsample_bytree",
        "learning_rate",
        "reg_lambda",
    ):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    return replace(hp, **overrides)


def cmd_train(args: argparse.Namespace) -> int:
    t0 = time.time()
    out = Path(args.out)
    corpus = load_jsonl(args.corpus).corpus
    pairs = load_pairs_csv(args.pairs)
    store = load_vec_file(args.vectors).store
    cfg = _clean_config(args)
    hp = _hyperparams(args)
    X, y = featurize_pairs(pairs, corpus, store, cfg)
    if args.export_features:
        save_feature_csv(X, y, args.export_features)
    model = train(X, y, hp)
    save_model(model, out)
    log_path = out.with_name(out.stem + ".trainlog.json")
    log_path.write_text(
        json.dumps({"round_logloss": model.train_logloss}) + "\n",
        encoding="utf-8",
    )
    _write_manifest(
        out,
        "train",
        {"corpus": args.corpus, "pairs": args.pairs, "vectors": args.vectors},
        args.seed,
        t0,
        rows=int(X.shape[0]),
        features=int(X.shape[1]),
        trees=len(model.trees),
        final_logloss=model.train_logloss[-1] if model.train_logloss else None,
        train_log=str(log_path),
    )
    print(f"trained {len(model.trees)} trees -> {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    t0 = time.time()
    out = Path(args.out)
    model = load_model(args.model)
    corpus = load_jsonl(args.corpus).corpus
    pairs = load_pairs_csv(args.pairs)
    store = load_vec_file(args.vectors).store
    cfg = _clean_config(args)
    report = evaluate_model(
        model, pairs, corpus, store, cfg, threshold=args.threshold
    )
    out.write_text(report.to_json(), encoding="utf-8")
    _write_manifest(
        out,
        "eval",
        {
            "model": args.model,
            "corpus": args.corpus,
            "pairs": args.pairs,
            "vectors": args.vectors,
        },
        None,
        t0,
        threshold=args.threshold,
        pairs=len(pairs),
    )
    if args.json:
        print(report.to_json(), end="")
    else:
        print(report.to_table())
    return EXIT_OK


def cmd_importance(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    importance = feature_importance(model, FEATURE_SCHEMA)
    ranked = sorted(importance.items(), key=lambda kv: (-kv[1], kv[0]))
    if args.json:
        print(json.dumps(dict(ranked), indent=2))
    else:
        width = max(len(name) for name in importance)
        for name, value in ranked:
            print(f"{name:<{width}}  {value:.6f}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    corpus = load_jsonl(args.corpus).corpus
    store = load_vec_file(args.vectors).store
    cfg = _clean_config(args)
    from .corpus import BugReport

    new_bug = BugReport(
        id="__query__",
        headline=args.headline or "",
        description=args.description or "",
        project=args.project or "",
        product=args.product,
        component=args.component,
    )
    ranked = rank_candidates(
        new_bug, corpus, model, store, cfg, top_k=args.top_k
    )
    for cand in ranked:
        print(
            json.dumps(
                {
                    "bug_id": cand.bug_id,
                    "probability": cand.probability,
                    "headline": cand.headline,
                }
            )
        )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .serve import load_config, run_servers

    config = load_config(args.config)
    run_servers(args.role, config)
    return EXIT_OK


def _add_text_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stopwords", help="stopword file (one token per line)")
    parser.add_argument("--synonyms", help="synonym file (from<TAB>to per line)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bugdedup", description="Duplicate bug-report detection pipeline"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch bugs from REST or a JSONL file")
    p.add_argument("--source", choices=("rest", "file"), required=True)
    p.add_argument("--url", help="REST endpoint returning {bugs: [...]}")
    p.add_argument("--query", action="append", help="extra key=value query params")
    p.add_argument("--page-size", type=int, default=500, dest="page_size")
    p.add_argument("--max-bugs", type=int, default=10000, dest="max_bugs")
    p.add_argument("--token", help="static bearer token")
    p.add_argument("--in", dest="infile", help="input JSONL (file source)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("clean", help="drop invalid bugs from a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("pairs", help="build labeled pairs from duplicate clusters")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--neg-per-pos", type=float, default=1.0, dest="neg_per_pos")
    p.add_argument(
        "--test-fraction",
        type=float,
        default=None,
        dest="test_fraction",
        help="also write grouped train/test splits",
    )
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("train", help="train the boosted-tree classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    for name in ("subsample", "min-child-weight", "gamma", "colsample-bytree",
                 "learning-rate", "reg-lambda"):
        p.add_argument(f"--{name}", type=float, default=None,
                       dest=name.replace("-", "_"))
    p.add_argument("--n-estimators", type=int, default=None, dest="n_estimators")
    p.add_argument("--max-depth", type=int, default=None, dest="max_depth")
    p.add_argument(
        "--export-features",
        default=None,
        dest="export_features",
        help="also write the training feature matrix as CSV (schema + label)",
    )
    _add_text_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model over labeled pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--json", action="store_true")
    _add_text_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("importance", help="print gain-based feature importance")
    p.add_argument("--model", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("predict", help="rank duplicate candidates for one bug")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--headline", default="")
    p.add_argument("--description", default="")
    p.add_argument("--project", default="")
    p.add_argument("--product", required=True)
    p.add_argument("--component", required=True)
    p.add_argument("--top-k", type=int, default=10, dest="top_k")
    _add_text_options(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the serving tier")
    p.add_argument("--role", choices=("app", "model", "embed", "all"), required=True)
    p.add_argument("--config", required=True, help="TOML config file")
    p.set_defaults(func=cmd_serve)

    return parser


_ERROR_CODES: tuple[tuple[type, int], ...] = (
    (IngestError, EXIT_DOWNSTREAM),
    (requests.RequestException, EXIT_DOWNSTREAM),
    (OSError, EXIT_IO),
    (CorpusError, EXIT_VALIDATION),
    (PairsError, EXIT_VALIDATION),
    (GBDTError, EXIT_VALIDATION),
    (EvalError, EXIT_VALIDATION),
    (FeatureError, EXIT_VALIDATION),
    (VecFormatError, EXIT_VALIDATION),
    (ValueError, EXIT_VALIDATION),
)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (CorpusError, VecFormatError)) and isinstance(
        exc.__cause__, OSError
    ):
        return EXIT_IO
    for exc_type, code in _ERROR_CODES:
        if isinstance(exc, exc_type):
            return code
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # single-line machine-parseable error report
        code = _exit_code(exc)
        msg = str(exc).replace("\n", " ")
        print(
            f'bugdedup-error code={code} kind={type(exc).__name__} msg="{msg}"',
            file=sys.stderr,
        )
        return code


if __name__ == "__main__":
    sys.exit(main())
