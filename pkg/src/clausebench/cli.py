"""Command-line surface: split, validate, run, score, report, cost, forge.

Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import econ, labelforge, modelgate, reporting, scoring
from .corpus import load_corpus, read_splits, split_dataset, write_splits
from .matchers import load_rules
from .modelgate import AdapterError
from .schema import (
    check_gold,
    load_field_catalog,
    read_gold,
    read_predictions,
    write_predictions,
)
from .validation import validate_extraction


def _parse_fractions(raw: str) -> dict[str, float]:
    fractions = {}
    for part in raw.split(","):
        name, _, value = part.partition("=")
        if not value:
            raise ValueError(f"bad fraction {part!r}; expected name=weight")
        fractions[name.strip()] = float(value)
    return fractions


def cmd_split(args: argparse.Namespace) -> int:
    docs = load_corpus(args.manifest)
    assignments = split_dataset(docs, _parse_fractions(args.fractions), args.seed)
    write_splits(assignments, args.out)
    counts: dict[str, int] = {}
    for assignment in assignments:
        counts[assignment.split] = counts.get(assignment.split, 0) + 1
    print(f"split {len(docs)} documents: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    docs = {d.doc_id: d for d in load_corpus(args.manifest)}
    catalog = load_field_catalog(args.catalog)
    rules = load_rules(args.rules)
    report: dict[str, object] = {}
    if args.gold:
        golds = read_gold(args.gold, strict=False)
        problems = check_gold(golds, texts={k: d.text for k, d in docs.items()}, catalog=catalog)
        report["gold"] = {"annotations": len(golds), "problems": problems}
    if args.pred:
        records = read_predictions(args.pred)
        cell_reports = []
        for record in records:
            doc = docs.get(record.doc_id)
            if doc is None:
                cell_reports.append(
                    {"doc_id": record.doc_id, "model_id": record.model_id,
                     "violations": ["document not in corpus"], "span_checks": []}
                )
                continue
            cell_reports.append(validate_extraction(record, catalog, doc, rules=rules).to_dict())
        report["predictions"] = cell_reports
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = modelgate.load_run_config(args.config)
    docs = load_corpus(args.manifest)
    catalog = load_field_catalog(args.catalog)
    result = modelgate.run_matrix(
        docs,
        config.adapters,
        catalog,
        concurrency_limit=config.concurrency_limit,
        template=config.template,
        model_params=config.model_params,
    )
    modelgate.write_run_records(result.records, args.out_records)
    parsed, issues = modelgate.parse_records(result.records, catalog)
    write_predictions(parsed, args.out_predictions)
    summary = {
        "n_documents": len(docs),
        "n_models": len(config.adapters),
        "n_records": len(result.records),
        "batch_wall_clock_s": result.batch_wall_clock_s,
        "cells_with_issues": len(issues),
        "failed_cells": sum(1 for r in result.records if r.error is not None),
    }
    summary_path = args.out_summary or f"{args.out_records}.summary.json"
    Path(summary_path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    catalog = load_field_catalog(args.catalog)
    rules = load_rules(args.rules)
    golds = read_gold(args.gold, catalog=catalog)
    records = read_predictions(args.pred)
    if args.manifest:
        docs = {d.doc_id: d for d in load_corpus(args.manifest)}
        anchored = []
        violations = 0
        for record in records:
            doc = docs.get(record.doc_id)
            if doc is None:
                anchored.append(record)
                continue
            report = validate_extraction(record, catalog, doc, rules=rules)
            violations += len(report.violations)
            anchored.append(report.anchored_record)
        records = anchored
        print(f"validation violations: {violations}", file=sys.stderr)
    by_model: dict[str, list] = {}
    for record in records:
        by_model.setdefault(record.model_id, []).append(record)
    boards = [
        scoring.build_scoreboard(model_records, golds, catalog, rules, model_id=model_id)
        for model_id, model_records in sorted(by_model.items())
    ]
    for board in boards:
        if args.format == "json":
            print(json.dumps(scoring.scoreboard_to_dict(board), indent=2, sort_keys=True))
        else:
            micro, macro = board.micro, board.macro
            print(
                f"{board.model_id}: micro P/R/F1 = {micro.precision:.3f}/{micro.recall:.3f}/{micro.f1:.3f}  "
                f"macro P/R/F1 = {macro.precision:.3f}/{macro.recall:.3f}/{macro.f1:.3f}"
            )
    if args.out:
        if len(boards) == 1:
            scoring.write_scoreboard(boards[0], args.out)
        else:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            for board in boards:
                safe = board.model_id.replace("/", "_").replace(" ", "_")
                scoring.write_scoreboard(board, out_dir / f"scoreboard_{safe}.json")
    return 0


def _bundle_from_args(args: argparse.Namespace) -> reporting.ReportBundle:
    catalog = load_field_catalog(args.catalog)
    manifest = None
    if getattr(args, "manifest_file", None):
        with open(args.manifest_file, encoding="utf-8") as handle:
            manifest = reporting.manifest_from_dict(json.load(handle))
    if args.scoreboards:
        boards = [scoring.read_scoreboard(path) for path in args.scoreboards]
        return reporting.ReportBundle.from_scoreboards(boards, catalog, manifest=manifest)
    if args.grid:
        aggregates = reporting.read_aggregates(args.aggregates) if args.aggregates else None
        return reporting.ReportBundle.from_grid(
            reporting.read_grid(args.grid), aggregates=aggregates, catalog=catalog, manifest=manifest
        )
    raise ValueError("report needs --scoreboards or --grid")


def cmd_report(args: argparse.Namespace) -> int:
    bundle = _bundle_from_args(args)
    if args.costs:
        with open(args.costs, encoding="utf-8") as handle:
            bundle.cost_reports = [econ.cost_report_from_dict(d) for d in json.load(handle)]
    text = reporting.render_report(
        bundle, subject_model=args.subject, margin=args.margin, fmt=args.format
    )
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    reports: list[econ.CostReport] = []
    if args.mode == "batched":
        pricing = econ.GpuPricing(args.rate, args.rate_basis)
        cost = econ.batched_gpu_cost(args.wall_clock, pricing, args.docs)
        reports.append(
            econ.CostReport(
                model_id=args.model,
                mode="batched_gpu",
                per_doc_cost=cost,
                batch_wall_clock_s=args.wall_clock,
                inputs_echo={"hourly_rate": args.rate, "rate_basis": args.rate_basis,
                             "batch_wall_clock_s": args.wall_clock, "n_docs": args.docs},
            )
        )
    elif args.mode == "serial":
        pricing = econ.GpuPricing(args.rate, args.rate_basis)
        latencies = _latencies_from_args(args)
        avg, _ = econ.latency_summary(latencies)
        reports.append(
            econ.CostReport(
                model_id=args.model,
                mode="serial_gpu",
                per_doc_cost=econ.serial_gpu_cost(latencies, pricing),
                avg_latency_s=avg,
                inputs_echo={"hourly_rate": args.rate, "rate_basis": args.rate_basis,
                             "sum_latencies_s": sum(latencies), "n_docs": len(latencies)},
            )
        )
    else:  # api
        records = modelgate.read_run_records(args.records)
        sheet = econ.load_price_sheet(args.prices)
        by_model: dict[str, list[modelgate.RunRecord]] = {}
        for record in records:
            by_model.setdefault(record.model_id, []).append(record)
        for model_id, model_records in sorted(by_model.items()):
            pricing = sheet.get(model_id)
            if not isinstance(pricing, econ.ApiPricing):
                continue
            reports.append(
                econ.api_cost_report(
                    model_id,
                    [(r.usage.prompt_tokens, r.usage.completion_tokens) for r in model_records],
                    pricing,
                    latencies=[r.usage.latency_s for r in model_records],
                )
            )
        if not reports:
            raise ValueError("no models in the records have API pricing")
    print(reporting.render_cost_table(reports, fmt=args.format))
    if args.out:
        Path(args.out).write_text(
            json.dumps([econ.cost_report_to_dict(r) for r in reports], indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def _latencies_from_args(args: argparse.Namespace) -> list[float]:
    if args.latencies:
        return [float(x) for x in args.latencies.split(",")]
    if args.records:
        return [r.usage.latency_s for r in modelgate.read_run_records(args.records)]
    raise ValueError("serial mode needs --latencies or --records")


def cmd_forge(args: argparse.Namespace) -> int:
    config = labelforge.load_forge_config(args.config)
    docs = load_corpus(args.manifest)
    catalog = load_field_catalog(args.catalog)
    splits = read_splits(args.splits)
    all_accepted: list[labelforge.AcceptedLabel] = []
    rejected = 0
    for doc in docs:
        result = labelforge.run_pipeline(
            doc,
            catalog,
            config.generator,
            config.panel,
            thresholds=config.thresholds,
            quorum=config.quorum,
            min_similarity=config.min_similarity,
            context_chars=config.context_chars,
        )
        all_accepted.extend(result.accepted)
        rejected += len(result.rejected)
    export = labelforge.export_corpus(all_accepted, splits, args.out_dir, {d.doc_id: d for d in docs})
    print(
        json.dumps(
            {"accepted": len(all_accepted), "rejected": rejected,
             "manifest": str(export.manifest_path)},
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clausebench",
        description="Span-grounded contract field extraction: run, validate, score, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="stratified leak-free corpus split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fractions", default="train=0.8,validation=0.1,holdout=0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("validate", help="check gold and prediction files against the corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gold")
    p.add_argument("--pred")
    p.add_argument("--catalog")
    p.add_argument("--rules")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run the (documents x models) matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--catalog")
    p.add_argument("--out-records", required=True)
    p.add_argument("--out-predictions", required=True)
    p.add_argument("--out-summary")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score prediction files against gold annotations")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--manifest", help="corpus manifest; enables span anchoring")
    p.add_argument("--catalog")
    p.add_argument("--rules")
    p.add_argument("--out")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="render leaderboards, field grids, and leader margins")
    p.add_argument("--scoreboards", nargs="*", default=[])
    p.add_argument("--grid", help="JSON file mapping model -> field -> F1")
    p.add_argument("--aggregates", help="JSON file mapping model -> micro/macro -> P/R/F1")
    p.add_argument("--catalog")
    p.add_argument("--subject", help="model for the leader-margin analysis")
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--costs", help="JSON list of cost reports to append")
    p.add_argument("--manifest-file", dest="manifest_file")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("cost", help="per-document cost accounting")
    p.add_argument("--mode", choices=("batched", "serial", "api"), required=True)
    p.add_argument("--model", default="self-hosted")
    p.add_argument("--wall-clock", type=float, help="batch wall clock in seconds")
    p.add_argument("--rate", type=float, help="GPU hourly rate")
    p.add_argument("--rate-basis", default="whole serving configuration")
    p.add_argument("--docs", type=int, help="documents in the batch")
    p.add_argument("--latencies", help="comma-separated per-document latencies in seconds")
    p.add_argument("--records", help="run records JSONL (for serial/api modes)")
    p.add_argument("--prices", help="price sheet JSON (for api mode)")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("forge", help="synthetic label pipeline: generate, anchor, judge, export")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--splits", required=True)
    p.add_argument("--catalog")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_forge)

    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, AdapterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
