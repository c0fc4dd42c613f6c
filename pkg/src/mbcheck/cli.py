"""Command-line front end tying the corpus, drafting, and scoring together.

Every subcommand resolves one RunConfig (environment, then config file,
then flags), writes its outputs into a run directory, and stamps each
output record with the config hash and the prompt-asset checksum so runs
can be told apart later.  The corpus itself is never modified.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import corpus
from .assets import asset_fingerprint
from .cache import ResponseCache
from .config import (
    BATCH_MODES,
    CHAT_KINDS,
    EXTRACTION_KINDS,
    JUDGE_KINDS,
    SEARCH_KINDS,
    RunConfig,
    build_chat_provider,
    build_extract_client,
    build_judge,
    build_search_client,
    load_config,
)
from .errors import ConfigurationError, MalformedInputError, MbcError
from .evaluation import aggregate, instantiate_templates, report_to_record, score_pair
from .lexmetrics import meteor, rouge_l
from .qa_downstream import (
    EvidenceCase,
    answer_to_record,
    answer_with_evidence,
    build_comparison,
    case_from_record,
    comparison_to_record,
)
from .synthesis import PipelineConfig, draft_to_record, run_pipeline
from .textutil import canonical_json, content_id, dump_jsonl, load_jsonl

_METRICS = {"meteor": meteor, "rouge-l": rouge_l}


def _run_meta(config: RunConfig) -> dict:
    return {"config": config.config_hash(), "assets": content_id(asset_fingerprint())}


def _prepare_out_dir(args, config: RunConfig, command: str) -> Path:
    out_dir = Path(args.out_dir or f"runs/{command}")
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "config": config.canonical(),
        "config_hash": config.config_hash(),
        "assets": dict(asset_fingerprint()),
    }
    (out_dir / "run.json").write_text(canonical_json(payload) + "\n", encoding="utf-8")
    return out_dir


def _merge_summary(out_dir: Path, updates: dict) -> None:
    path = out_dir / "summary.json"
    data = json.loads(path.read_text("utf-8")) if path.exists() else {}
    for key, value in updates.items():
        if key == "metrics" and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    path.write_text(canonical_json(data) + "\n", encoding="utf-8")


def _pmap(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _named_bodies(records: list[dict]) -> list[tuple[str, str]]:
    pairs = []
    for record in records:
        try:
            pairs.append((record["source_name"], record["body"]))
        except (KeyError, TypeError) as exc:
            raise MalformedInputError(f"prediction record missing key: {exc}") from exc
    return pairs


def _cmd_ingest(args, config: RunConfig) -> int:
    records = corpus.load_dataset(args.root)
    stats = corpus.corpus_stats(records)
    by_split = {s.split: s for s in stats}
    counts = tuple(by_split[n].count if n in by_split else 0 for n in corpus.SPLITS)
    print(f"{len(records)} checks; splits {counts[0]}/{counts[1]}/{counts[2]}")
    for entry in stats:
        print(
            f"  {entry.split}: {entry.count} checks, "
            f"{entry.avg_lines:.1f} lines, {entry.avg_tokens:.1f} tokens (avg)"
        )

    out_dir = _prepare_out_dir(args, config, "ingest")
    meta = _run_meta(config)
    written = dump_jsonl(
        ({**corpus.to_record(r), "run": meta} for r in records),
        out_dir / "corpus.jsonl",
    )
    _merge_summary(
        out_dir,
        {
            "command": "ingest",
            "n_records": written,
            "splits": {s.split: s.count for s in stats},
            "avg_lines": {s.split: s.avg_lines for s in stats},
            "avg_tokens": {s.split: s.avg_tokens for s in stats},
        },
    )
    print(f"wrote {written} records to {out_dir / 'corpus.jsonl'}")
    return 0


def _cmd_generate(args, config: RunConfig) -> int:
    if bool(args.source) == bool(args.split):
        raise ConfigurationError("give exactly one of <source> or --split")
    if args.split:
        if not args.corpus:
            raise ConfigurationError("--split requires --corpus ROOT")
        records = corpus.load_dataset(args.corpus)
        names = [r.source_name for r in records if r.split == args.split]
        if args.limit is not None:
            names = names[: args.limit]
        if not names:
            raise MalformedInputError(f"no sources in split {args.split!r}")
    else:
        names = [args.source]

    cache = ResponseCache(config.cache_dir)
    chat = build_chat_provider(config, cache)
    search_client = extract_client = None
    if config.retrieval:
        search_client = build_search_client(config, cache)
        extract_client = build_extract_client(config, cache)
    pipeline_config = PipelineConfig(
        retrieval_enabled=config.retrieval,
        result_depth=config.result_depth,
        per_pair_expansion=(config.batch_mode == "per-pair"),
    )

    def one(name: str):
        return run_pipeline(
            name,
            chat,
            search_client=search_client,
            extract_client=extract_client,
            config=pipeline_config,
        )

    drafts = _pmap(one, names, config.workers)

    out_dir = _prepare_out_dir(args, config, "generate")
    meta = _run_meta(config)
    written = dump_jsonl(
        ({**draft_to_record(d), "run": meta} for d in drafts), out_dir / "drafts.jsonl"
    )
    revisions = sorted(d.revision for d in drafts)
    _merge_summary(
        out_dir,
        {
            "command": "generate",
            "n_drafts": written,
            "retrieval": config.retrieval,
            "revisions": {"min": revisions[0], "max": revisions[-1]},
        },
    )
    print(f"wrote {written} drafts to {out_dir / 'drafts.jsonl'}")
    return 0


def _cmd_evaluate(args, config: RunConfig) -> int:
    gold = {r.source_name: r for r in corpus.read_jsonl(args.gold)}
    pairs = _named_bodies(load_jsonl(args.pred))
    missing = [name for name, _ in pairs if name not in gold]
    if missing:
        raise MalformedInputError(f"no gold record for source {missing[0]!r}")
    if not pairs:
        raise MalformedInputError("no prediction records")

    cache = ResponseCache(config.cache_dir)
    chat = build_chat_provider(config, cache)
    judge = build_judge(config, cache)

    def one(pair):
        name, body = pair
        facts = instantiate_templates(gold[name], chat, judge=judge)
        return score_pair(
            name, facts, body, judge, recall_gold_true_only=args.recall_gold_true_only
        )

    reports = _pmap(one, pairs, config.workers)
    summary = aggregate(reports)

    out_dir = _prepare_out_dir(args, config, "evaluate")
    meta = _run_meta(config)
    dump_jsonl(
        ({**report_to_record(r), "run": meta} for r in reports),
        out_dir / "evaluation.jsonl",
    )
    _merge_summary(
        out_dir,
        {
            "command": "evaluate",
            "n_sources": summary.n_sources,
            "n_degenerate": summary.n_degenerate,
            "fact_recall": summary.fact_recall,
            "error_rate": summary.error_rate,
        },
    )
    if summary.fact_recall is None:
        print(f"no scorable facts; sources {summary.n_sources} (all degenerate)")
    else:
        print(
            f"fact recall {summary.fact_recall:.3f}; error rate {summary.error_rate:.3f}; "
            f"sources {summary.n_sources} ({summary.n_degenerate} degenerate)"
        )
    return 0


def _cmd_score(args, config: RunConfig) -> int:
    gold = {r.source_name: r.full_text for r in corpus.read_jsonl(args.gold)}
    pairs = _named_bodies(load_jsonl(args.pred))
    if not pairs:
        raise MalformedInputError("no prediction records")
    missing = [name for name, _ in pairs if name not in gold]
    if missing:
        raise MalformedInputError(f"no gold record for source {missing[0]!r}")

    metric_fn = _METRICS[args.metric]
    meta = _run_meta(config)
    rows = [
        {
            "source_name": name,
            "metric": args.metric,
            "value": metric_fn(body, gold[name]),
            "run": meta,
        }
        for name, body in pairs
    ]
    mean = sum(row["value"] for row in rows) / len(rows)

    out_dir = _prepare_out_dir(args, config, "score")
    dump_jsonl(rows, out_dir / f"scores-{args.metric}.jsonl")
    _merge_summary(out_dir, {"metrics": {args.metric: mean}})
    print(f"{args.metric} {mean:.4f} over {len(rows)} sources")
    return 0


def _cmd_qa(args, config: RunConfig) -> int:
    cases = [case_from_record(r) for r in load_jsonl(args.cases)]
    if not cases:
        raise MalformedInputError("no cases in file")

    cache = ResponseCache(config.cache_dir)
    chat = build_chat_provider(config, cache)
    meta = _run_meta(config)
    model = config.chat.model or None

    def one(indexed):
        index, case = indexed
        if case.mbc is None:
            answer = answer_with_evidence(case, chat)
            record = answer_to_record(case, answer, model=model)
        else:
            base = EvidenceCase(
                question=case.question, document=case.document, domain=case.domain
            )
            seed = random.Random(f"{config.seed}:{index}").randrange(2**32)
            comparison = build_comparison(base, case.mbc, chat, order_seed=seed)
            record = comparison_to_record(case, comparison, model=model)
        return {**record, "run": meta}

    records = _pmap(one, list(enumerate(cases)), config.workers)

    out_dir = _prepare_out_dir(args, config, "qa")
    written = dump_jsonl(records, out_dir / "qa.jsonl")
    paired = sum(1 for case in cases if case.mbc is not None)
    _merge_summary(
        out_dir, {"command": "qa", "n_cases": written, "n_comparisons": paired}
    )
    print(f"answered {written} cases ({paired} paired) -> {out_dir / 'qa.jsonl'}")
    return 0


def _cmd_report(args, config: RunConfig) -> int:
    rows = []
    for run in args.runs:
        path = Path(run) / "summary.json"
        if not path.is_file():
            raise MalformedInputError(f"no summary.json under {run}")
        data = json.loads(path.read_text("utf-8"))
        metrics = data.get("metrics", {})
        rows.append(
            (
                Path(run).name,
                data.get("fact_recall"),
                data.get("error_rate"),
                metrics.get("meteor"),
                metrics.get("rouge-l"),
            )
        )

    def fmt(value, places):
        return "-" if value is None else f"{value:.{places}f}"

    headers = ("Run", "Fact Recall", "Error Rate", "METEOR", "ROUGE-L")
    cells = [
        (name, fmt(recall, 3), fmt(error, 3), fmt(met, 4), fmt(rouge, 4))
        for name, recall, error, met, rouge in rows
    ]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in cells)) if cells else len(headers[i])
        for i in range(len(headers))
    ]

    def line(row):
        first = row[0].ljust(widths[0])
        rest = "  ".join(row[i].rjust(widths[i]) for i in range(1, len(row)))
        return f"{first}  {rest}"

    print(line(headers))
    for row in cells:
        print(line(row))
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "score": _cmd_score,
    "qa": _cmd_qa,
    "report": _cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbcheck",
        description="Draft and score background checks for news sources.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out-dir", help="run directory for outputs")
        p.add_argument("--cache-dir", help="response cache directory")
        p.add_argument("--workers", type=int, help="parallel sources")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("ingest", help="load, validate, and export a corpus")
    p.add_argument("root", help="corpus root holding splits.tsv and checks/")
    add_common(p)

    p = sub.add_parser("generate", help="draft background checks")
    p.add_argument("source", nargs="?", help="single source name")
    p.add_argument("--split", choices=corpus.SPLITS, help="draft a whole split")
    p.add_argument("--corpus", help="corpus root (required with --split)")
    p.add_argument("--limit", type=int, help="cap the number of sources")
    p.add_argument("--no-retrieval", action="store_true")
    p.add_argument("--depth", type=int, help="search results per query")
    p.add_argument("--threshold", type=float, help="extraction score cutoff")
    p.add_argument("--per-query-cap", type=int)
    p.add_argument("--batch-mode", choices=BATCH_MODES)
    p.add_argument("--chat", choices=CHAT_KINDS)
    p.add_argument("--search", choices=SEARCH_KINDS)
    p.add_argument("--extraction", choices=EXTRACTION_KINDS)
    add_common(p)

    p = sub.add_parser("evaluate", help="score drafts against gold checks")
    p.add_argument("--gold", required=True, help="corpus JSON-lines export")
    p.add_argument("--pred", required=True, help="drafts JSON-lines")
    p.add_argument("--judge", choices=JUDGE_KINDS)
    p.add_argument("--chat", choices=CHAT_KINDS)
    p.add_argument("--recall-gold-true-only", action="store_true")
    add_common(p)

    p = sub.add_parser("score", help="lexical overlap between drafts and gold")
    p.add_argument("--metric", choices=sorted(_METRICS), required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    add_common(p)

    p = sub.add_parser("qa", help="answer curated evidence questions")
    p.add_argument("--cases", required=True, help="evidence cases JSON-lines")
    p.add_argument("--chat", choices=CHAT_KINDS)
    add_common(p)

    p = sub.add_parser("report", help="summarize runs as an aligned table")
    p.add_argument("--runs", nargs="+", required=True, help="run directories")
    add_common(p)

    return parser


def _config_overrides(args) -> dict:
    overrides = {
        "cache_dir": getattr(args, "cache_dir", None),
        "workers": getattr(args, "workers", None),
        "seed": getattr(args, "seed", None),
        "result_depth": getattr(args, "depth", None),
        "threshold": getattr(args, "threshold", None),
        "per_query_cap": getattr(args, "per_query_cap", None),
        "batch_mode": getattr(args, "batch_mode", None),
        "chat.kind": getattr(args, "chat", None),
        "search.kind": getattr(args, "search", None),
        "extraction.kind": getattr(args, "extraction", None),
        "judge.kind": getattr(args, "judge", None),
    }
    if getattr(args, "no_retrieval", False):
        overrides["retrieval"] = False
    return overrides


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        # argparse already printed usage (unknown flag -> 2, --help -> 0).
        return int(exc.code or 0)
    try:
        config = load_config(args.config, overrides=_config_overrides(args))
        return _HANDLERS[args.command](args, config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MbcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
