"""Command-line front end: the pipeline as subcommands.

Every run writes a manifest (version, argv, seeds, input hashes,
timestamps) next to its outputs, and all outputs land under --out.
Randomness flows from the single --seed flag; purpose-derived sub-seeds
keep stages independent.  An optional key=value config file supplies
flag defaults; explicit flags win.

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import mgtd
from mgtd import assets, reports
from mgtd.corpus import (
    CleaningConfig,
    Corpus,
    Document,
    clean,
    load_corpus,
    load_pair,
    load_paired_columns,
    make_split,
)
from mgtd.errors import ToolkitError
from mgtd.evaluation import DEFAULT_MODEL_KINDS, characteristic_report, cross_validate
from mgtd.models import KINDS, save_model, train_model
from mgtd.rephrase import (
    CompletionEndpointConfig,
    rephrase_corpus,
    robustness_eval,
)
from mgtd.utils import sha256_file
from mgtd.vectorize import TfidfConfig, fit_tfidf, transform_matrix

DATASET_FAMILIES = ("wiki", "pubmed", "openai", "twitter", "unknown")
CHARACTERISTIC_FAMILIES = ("readability", "bias", "moral", "sentiment")


# ---------------------------------------------------------------------------
# canonical corpus files


def write_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(
                json.dumps(
                    {"id": doc.id, "text": doc.text, "label": doc.label,
                     "source": doc.source},
                    sort_keys=True,
                )
                + "\n"
            )


def read_corpus_jsonl(path: str | Path) -> Corpus:
    documents = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            documents.append(
                Document(
                    id=str(row["id"]),
                    text=str(row["text"]),
                    label=int(row["label"]),
                    source=str(row.get("source", "")),
                )
            )
    return Corpus(documents=tuple(documents), report={})


# ---------------------------------------------------------------------------
# manifest and config plumbing


def _read_config(path: str | Path) -> dict[str, str]:
    """key=value lines; '#' starts a comment; values may be quoted."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, _, value = line.partition("=")
        value = value.strip().strip("'\"")
        values[key.strip().replace("-", "_")] = value
    return values


class _Run:
    """Collects manifest fields while a subcommand executes."""

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest: dict = {
            "toolkit_version": mgtd.__version__,
            "command": argv,
            "subcommand": args.subcommand,
            "seeds": {"master": getattr(args, "seed", None)},
            "config_file_sha256": (
                sha256_file(args.config) if args.config else None
            ),
            "input_sha256": {},
            "outputs": [],
            "started_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }

    def add_input(self, path: str | Path) -> None:
        self.manifest["input_sha256"][str(path)] = sha256_file(path)

    def write_text(self, name: str, content: str) -> Path:
        path = self.out / name
        path.write_text(content, encoding="utf-8")
        self.manifest["outputs"].append(name)
        return path

    def track(self, name: str) -> Path:
        self.manifest["outputs"].append(name)
        return self.out / name

    def finish(self) -> None:
        self.manifest["finished_at"] = time.strftime(
            "%Y-%m-%dT%H:%M:%SZ", time.gmtime()
        )
        reports.write_run_manifest(self.out / "run_manifest.json", self.manifest)


def _vectorizer_config(args: argparse.Namespace) -> TfidfConfig:
    return TfidfConfig(
        min_df=args.min_df,
        max_features=args.max_features if args.max_features > 0 else None,
        sublinear_tf=args.sublinear_tf,
        norm=args.norm,
        ngram_range=(1, args.ngram_max),
    )


def _model_menu(parser: argparse.ArgumentParser, spec: str) -> list[str]:
    if spec.strip() == "all":
        return list(DEFAULT_MODEL_KINDS)
    kinds = [k.strip() for k in spec.split(",") if k.strip()]
    unknown = [k for k in kinds if k not in KINDS]
    if unknown or not kinds:
        parser.error(
            f"unknown model kinds {unknown}; choose from {', '.join(KINDS)} or 'all'"
        )
    return kinds


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(parser, args, argv) -> int:
    run = _Run(args, argv)
    input_path = Path(args.input)
    if not input_path.is_file():
        print(f"file not found: {input_path}", file=sys.stderr)
        return 1
    run.add_input(input_path)
    schema = dict(
        part.split("=", 1) for part in args.schema.split(",") if "=" in part
    )
    family = args.dataset_family
    if args.machine_input:
        machine_path = Path(args.machine_input)
        if not machine_path.is_file():
            print(f"file not found: {machine_path}", file=sys.stderr)
            return 1
        run.add_input(machine_path)
        corpus = load_pair(
            input_path, machine_path, format=args.format,
            text_col=schema.get("text", "text"), source=family,
        )
    elif args.human_col and args.machine_col:
        corpus = load_paired_columns(
            input_path, args.human_col, args.machine_col,
            format=args.format, source=family,
        )
    else:
        corpus = load_corpus(input_path, args.format, schema, source=family)

    cfg = CleaningConfig.for_source(family)
    if args.stopwords != "auto":
        cfg = dataclasses.replace(cfg, remove_stopwords=args.stopwords == "remove")
    cleaned = clean(corpus, cfg)

    out_corpus = run.track("corpus.jsonl")
    write_corpus_jsonl(cleaned, out_corpus)
    report = {
        "documents": len(cleaned),
        "class_counts": {str(k): v for k, v in sorted(cleaned.class_counts().items())},
        "cleaning": cleaned.report,
        "dataset_family": family,
    }
    run.write_text("ingest_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    run.finish()
    print(f"ingested {len(cleaned)} documents -> {out_corpus}")
    return 0


def _cmd_profile(parser, args, argv) -> int:
    run = _Run(args, argv)
    corpus_path = Path(args.corpus)
    if not corpus_path.is_file():
        print(f"file not found: {corpus_path}", file=sys.stderr)
        return 1
    run.add_input(corpus_path)
    corpus = read_corpus_jsonl(corpus_path)
    families = tuple(f.strip() for f in args.families.split(",") if f.strip())
    rows = characteristic_report(corpus, families)
    run.write_text("characteristics.csv", reports.characteristic_csv(rows))
    run.write_text("characteristics.md", reports.characteristic_markdown(rows))
    run.finish()
    significant = sum(1 for r in rows if r["significant"])
    print(f"profiled {len(rows)} metrics ({significant} significant at 0.05)")
    return 0


def _split_for(args, corpus: Corpus):
    return make_split(corpus, args.test_fraction, args.folds, args.seed)


def _cmd_train(parser, args, argv) -> int:
    kinds = _model_menu(parser, args.models)
    run = _Run(args, argv)
    corpus_path = Path(args.corpus)
    if not corpus_path.is_file():
        print(f"file not found: {corpus_path}", file=sys.stderr)
        return 1
    run.add_input(corpus_path)
    corpus = read_corpus_jsonl(corpus_path)
    split = _split_for(args, corpus)
    lookup = corpus.by_id()
    pool = [lookup[i] for i in split.train_pool_ids()]
    tfidf = fit_tfidf([d.text for d in pool], _vectorizer_config(args))
    X = transform_matrix(tfidf, [d.text for d in pool])
    y = [d.label for d in pool]

    failures = {}
    for kind in kinds:
        try:
            model = train_model(kind, X, y, seed=args.seed)
            model = dataclasses.replace(model, tfidf=tfidf)
            path = run.track(f"model_{kind}.json")
            save_model(model, path)
            print(f"trained {kind} on {len(pool)} documents -> {path}")
        except ToolkitError as err:
            failures[kind] = f"{type(err).__name__}: {err}"
            print(f"model {kind} failed: {failures[kind]}", file=sys.stderr)
    run.manifest["failures"] = failures
    run.finish()
    return 1 if len(failures) == len(kinds) else 0


def _cmd_eval(parser, args, argv) -> int:
    kinds = _model_menu(parser, args.models)
    run = _Run(args, argv)
    corpus_path = Path(args.corpus)
    if not corpus_path.is_file():
        print(f"file not found: {corpus_path}", file=sys.stderr)
        return 1
    run.add_input(corpus_path)
    corpus = read_corpus_jsonl(corpus_path)
    split = _split_for(args, corpus)
    results = cross_validate(
        corpus,
        split,
        {k: {} for k in kinds},
        _vectorizer_config(args),
        seed=args.seed,
        dataset=corpus_path.stem,
    )
    run.write_text("results.csv", reports.eval_reports_csv(results))
    run.write_text("results.md", reports.eval_reports_markdown(results, mode=args.mode))
    run.finish()
    for report in results:
        if report.error:
            print(f"{report.model_kind}: failed ({report.error})", file=sys.stderr)
        else:
            acc = getattr(report.test, args.mode)["accuracy"]
            print(f"{report.model_kind}: test accuracy {reports.pct(acc)}")
    return 1 if all(r.error for r in results) else 0


def _cmd_rephrase(parser, args, argv) -> int:
    if not 0.0 <= args.threshold <= 1.0:
        parser.error(f"--threshold must be in [0, 1], got {args.threshold}")
    run = _Run(args, argv)
    corpus_path = Path(args.corpus)
    if not corpus_path.is_file():
        print(f"file not found: {corpus_path}", file=sys.stderr)
        return 1
    run.add_input(corpus_path)
    corpus = read_corpus_jsonl(corpus_path)
    endpoint = CompletionEndpointConfig(
        base_url=args.base_url,
        model_name=args.model_name,
        api_key_env=args.api_key_env,
        timeout=args.timeout,
        temperature=args.temperature,
    )
    audit_path = run.track("audit.jsonl")
    rephrased, provenance = rephrase_corpus(
        corpus,
        endpoint,
        template_id=args.template,
        overlap_threshold=args.threshold,
        max_attempts=args.max_attempts,
        char_limit=args.char_limit,
        audit_path=audit_path,
        max_in_flight=args.max_in_flight,
        on_error="collect",
    )
    out_corpus = run.track("rephrased.jsonl")
    write_corpus_jsonl(rephrased, out_corpus)
    run.write_text(
        "provenance.json", json.dumps(provenance, indent=2, sort_keys=True) + "\n"
    )
    accepted = sum(1 for p in provenance if p.get("accepted"))
    rejected = sum(1 for p in provenance if p.get("accepted") is False)
    failed = [p for p in provenance if "error" in p]
    for p in failed:
        print(f"{p['source_doc_id']}: {p['error']}", file=sys.stderr)
    run.finish()
    print(
        f"rephrased {len(provenance)} documents: {accepted} accepted, "
        f"{rejected} rejected, {len(failed)} failed -> {out_corpus}"
    )
    return 1 if provenance and len(failed) == len(provenance) else 0


def _cmd_robustness(parser, args, argv) -> int:
    kinds = _model_menu(parser, args.models)
    run = _Run(args, argv)
    for path in (args.original, args.rephrased):
        if not Path(path).is_file():
            print(f"file not found: {path}", file=sys.stderr)
            return 1
        run.add_input(path)
    original = read_corpus_jsonl(args.original)
    rephrased = read_corpus_jsonl(args.rephrased)
    result = robustness_eval(
        original,
        rephrased,
        model_cfgs={k: {} for k in kinds},
        vectorizer_cfg=_vectorizer_config(args),
        seed=args.seed,
        test_fraction=args.test_fraction,
        n_folds=args.folds,
        topic_kind=args.topic_model,
    )
    run.write_text("paired.csv", reports.paired_csv(result.before, result.after, mode=args.mode))
    run.write_text(
        "paired.md", reports.paired_markdown(result.before, result.after, mode=args.mode)
    )
    if result.per_topic:
        for part in ("train", "test"):
            rows = result.per_topic[part]
            run.write_text(f"per_topic_{part}.csv", reports.per_topic_csv(rows))
            run.write_text(f"per_topic_{part}.md", reports.per_topic_markdown(rows))
    run.finish()
    all_failed = all(r.error for r in result.before) and all(
        r.error for r in result.after
    )
    for side, side_reports in (("original", result.before), ("rephrased", result.after)):
        for report in side_reports:
            if report.error:
                print(f"{side}/{report.model_kind}: {report.error}", file=sys.stderr)
    print(f"robustness reports written to {run.out}")
    return 1 if all_failed else 0


def _cmd_verify_assets(parser, args, argv) -> int:
    run = _Run(args, argv)
    try:
        rows = assets.verify_assets()
    except ToolkitError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1
    for row in rows:
        print(f"{row['asset']}: ok ({row['records']} records)")
    run.write_text(
        "asset_verification.json", json.dumps(rows, indent=2, sort_keys=True) + "\n"
    )
    run.finish()
    return 0


def _cmd_fetch_data(parser, args, argv) -> int:
    run = _Run(args, argv)
    variants = tuple(
        v.strip() for v in args.variants.split(",") if v.strip()
    ) if args.variants != "all" else assets.GPT2_VARIANTS
    unknown = [v for v in variants if v not in assets.GPT2_VARIANTS]
    if unknown:
        parser.error(f"unknown variants {unknown}; choose from {', '.join(assets.GPT2_VARIANTS)}")
    splits = tuple(s.strip() for s in args.splits.split(",") if s.strip())
    catalog = assets.fetch_public_datasets(
        args.target, variants=variants, splits=splits,
        include_wiki=not args.no_wiki, retries=args.retries,
    )
    for name, entry in sorted(catalog.items()):
        detail = entry.get("note") or entry.get("sha256", "")
        print(f"{name}: {entry['status']}" + (f" ({detail})" if detail else ""))
    run.finish()
    failed = [n for n, e in catalog.items() if e["status"] == "failed"]
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default="mgtd_out", help="output directory")
    sub.add_argument("--seed", type=int, default=42, help="master seed")


def _add_vectorizer(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--min-df", type=int, default=1)
    sub.add_argument("--max-features", type=int, default=50_000,
                     help="vocabulary cap; 0 disables the cap")
    sub.add_argument("--sublinear-tf", action="store_true")
    sub.add_argument("--norm", choices=("l2", "none"), default="l2")
    sub.add_argument("--ngram-max", type=int, choices=(1, 2), default=1)


def _add_split(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--test-fraction", type=float, default=0.10)
    sub.add_argument("--folds", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgtd",
        description="Stylometric machine-generated-text detection pipeline.",
    )
    parser.add_argument("--config", default=None,
                        help="key=value file of flag defaults; flags win")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("ingest", help="load, clean, and canonicalize a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"), default="jsonl")
    p.add_argument("--schema", default="id=id,text=text,label=label",
                   help="column mapping, e.g. id=doc_id,text=body,label=gold")
    p.add_argument("--dataset-family", choices=DATASET_FAMILIES, default="unknown")
    p.add_argument("--machine-input", default=None,
                   help="second single-column file; --input becomes the human side")
    p.add_argument("--human-col", default=None,
                   help="paired-column mode: human text column in --input")
    p.add_argument("--machine-col", default=None,
                   help="paired-column mode: machine text column in --input")
    p.add_argument("--stopwords", choices=("auto", "keep", "remove"), default="auto")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = subs.add_parser("profile", help="characteristic comparison with t-tests")
    p.add_argument("--corpus", required=True)
    p.add_argument("--families", default=",".join(CHARACTERISTIC_FAMILIES))
    _add_common(p)
    p.set_defaults(func=_cmd_profile)

    p = subs.add_parser("train", help="fit models on the training pool and save them")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", default="all")
    _add_common(p)
    _add_split(p)
    _add_vectorizer(p)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("eval", help="cross-validate and report blind-test metrics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", default="all")
    p.add_argument("--mode", choices=("weighted", "positive"), default="weighted")
    _add_common(p)
    _add_split(p)
    _add_vectorizer(p)
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("rephrase", help="regenerate the machine class via an endpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--base-url", default=None)
    p.add_argument("--model-name", default="gpt-3.5-turbo")
    p.add_argument("--api-key-env", default="MGTD_API_KEY")
    p.add_argument("--template",
                   choices=("tweet_generic", "tweet_mimic", "abstract_from_title"),
                   default="tweet_mimic")
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--max-attempts", type=int, default=5)
    p.add_argument("--char-limit", type=int, default=280)
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--timeout", type=float, default=30.0)
    _add_common(p)
    p.set_defaults(func=_cmd_rephrase)

    p = subs.add_parser("robustness", help="paired original-vs-rephrased evaluation")
    p.add_argument("--original", required=True)
    p.add_argument("--rephrased", required=True)
    p.add_argument("--models", default="all")
    p.add_argument("--topic-model", choices=KINDS, default="lr")
    p.add_argument("--mode", choices=("weighted", "positive"), default="weighted")
    _add_common(p)
    _add_split(p)
    _add_vectorizer(p)
    p.set_defaults(func=_cmd_robustness)

    p = subs.add_parser("verify-assets", help="checksum and count bundled assets")
    _add_common(p)
    p.set_defaults(func=_cmd_verify_assets)

    p = subs.add_parser("fetch-data", help="download the public source datasets")
    p.add_argument("--target", default="data")
    p.add_argument("--variants", default="all")
    p.add_argument("--splits", default="train,valid,test")
    p.add_argument("--no-wiki", action="store_true")
    p.add_argument("--retries", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=_cmd_fetch_data)

    parser.subcommand_parsers = subs.choices  # type: ignore[attr-defined]
    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """Lower config values onto subcommand defaults; explicit flags win.

    Subparsers parse into a fresh namespace, so parent-level defaults
    would be overwritten; the values must land on each subparser's own
    actions.  String defaults get the action's normal type conversion.
    """
    matched = set()
    for sub in parser.subcommand_parsers.values():  # type: ignore[attr-defined]
        updates = {}
        for action in sub._actions:
            if action.dest not in config:
                continue
            matched.add(action.dest)
            raw = config[action.dest]
            if isinstance(action.const, bool):
                updates[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            else:
                updates[action.dest] = raw
        if updates:
            sub.set_defaults(**updates)
    for key in sorted(set(config) - matched):
        print(f"config key matches no flag, ignored: {key}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    # pre-scan for --config so its values become subcommand defaults
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            _apply_config_defaults(parser, _read_config(known.config))
        except (OSError, ValueError) as err:
            print(f"bad config file: {err}", file=sys.stderr)
            return 2

    args = parser.parse_args(argv)
    if getattr(args, "subcommand", None) == "rephrase" and not args.base_url:
        args.base_url = os.environ.get("MGTD_BASE_URL", "")
        if not args.base_url:
            parser.error("--base-url required (or set MGTD_BASE_URL)")
    try:
        return args.func(parser, args, argv)
    except ToolkitError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(str(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
