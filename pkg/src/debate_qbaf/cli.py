"""Command-line entry point.

Exit codes: 0 success, 1 semantic failure (invalid graph, strict-mode
problems), 2 I/O, parse or configuration failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from debate_qbaf import io as qio
from debate_qbaf.alignment import AlignmentError, MatcherConfig, SimilarityServiceError
from debate_qbaf.extraction import (
    ClassificationError,
    ConfigurationError,
    RelationVerdict,
    TranscriptError,
    arc_eval,
    build_qbaf,
    candidate_pairs,
    classify,
    load_gold_csv,
    load_transcript,
    make_classifier,
)
from debate_qbaf.graph import DEFAULT_SPEECH_BASE_SCORE, validate
from debate_qbaf.properties import DEFAULT_EPSILON, EvalContext, ReportOptions, full_report
from debate_qbaf.report import render_markdown, render_text, report_to_dict
from debate_qbaf.semantics import SemanticsConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger("debate_qbaf")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
FORMATS = ("json", "markdown", "text")
_SUFFIX = {"json": ".json", "markdown": ".md", "text": ".txt"}


class UsageError(Exception):
    pass


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _pick(cli_value, section: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    return section.get(key, default)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be among {', '.join(FORMATS)}")
    return fmts


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def cmd_validate(args: argparse.Namespace) -> int:
    qbaf = qio.load_qbaf(args.path, strict=args.strict)
    report = validate(qbaf, enforce_temporal=not args.no_temporal)
    if args.format == "json":
        doc = {"valid": report.ok, "violations": [v.__dict__ for v in report]}
        sys.stdout.write(qio.dumps(doc))
    else:
        if report.ok:
            print(f"{args.path}: valid")
        for v in report:
            print(f"{args.path}: {v}")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_extract(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    settings = dict(config.get("classifier", {}))
    if args.classifier:
        settings["kind"] = args.classifier
    run_opts = config.get("extract", {})
    classifier = make_classifier(settings)
    transcript = load_transcript(args.transcript)
    temporal = not args.summary
    window = _pick(args.window, run_opts, "window", None)
    pairs = candidate_pairs(transcript, temporal=temporal, window=window)
    run = classify(
        transcript,
        pairs,
        classifier,
        cache_dir=_pick(args.cache_dir, run_opts, "cache_dir", None),
        batch_size=int(_pick(args.batch_size, settings, "batch_size", 8)),
        concurrency=int(_pick(args.concurrency, settings, "concurrency", 4)),
        retries=int(_pick(args.retries, settings, "retries", 2)),
        backoff_seconds=float(settings.get("backoff_seconds", 0.5)),
        strict=args.strict,
    )
    speech_base = _pick(args.speech_base, config.get("semantics", {}), "speech_base",
                        DEFAULT_SPEECH_BASE_SCORE)
    qbaf = build_qbaf(transcript, run.verdicts, speech_base=float(speech_base), temporal=temporal)
    _write(Path(args.output) if args.output else None, qio.dumps(qio.qbaf_to_dict(qbaf)))
    if args.verdicts_out:
        doc = {"verdicts": [v.to_dict() for v in run.verdicts]}
        _write(Path(args.verdicts_out), qio.dumps(doc))
    print(json.dumps({"classifier": classifier.identity, **run.stats()}, sort_keys=True),
          file=sys.stderr)
    if run.failures and args.strict:
        return EXIT_INVALID
    return EXIT_OK


def _matcher_config(args: argparse.Namespace, section: dict) -> MatcherConfig | None:
    method = _pick(args.matcher, section, "method", None)
    if method is None or method == "none":
        return None
    fields = {k: v for k, v in section.items() if k != "method"}
    if args.match_threshold is not None:
        fields["threshold"] = args.match_threshold
    return MatcherConfig(method=method, **fields)


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    sem = config.get("semantics", {})
    ev = config.get("evaluate", {})
    source = qio.load_qbaf(args.source)
    summary = qio.load_qbaf(args.summary)
    for label, g in (("source", source), ("summary", summary)):
        report = validate(g, enforce_temporal=True)
        if not report.ok:
            for v in report:
                print(f"{label}: {v}", file=sys.stderr)
            return EXIT_INVALID

    epsilon = float(_pick(args.epsilon, ev, "epsilon", DEFAULT_EPSILON))
    if epsilon < 0:
        raise UsageError("epsilon must be >= 0")
    speech_base = _pick(args.speech_base, sem, "speech_base", None)
    semantics = SemanticsConfig(
        None if speech_base is None else float(speech_base),
        float(sem.get("tolerance", 1e-9)),
        int(sem.get("max_iterations", 10_000)),
        float(sem.get("damping", 0.5)),
    )
    ctx = EvalContext(
        source, summary, semantics, epsilon,
        float(_pick(args.budget_seconds, ev, "budget_seconds", 30.0)),
    )
    matcher = _matcher_config(args, config.get("matcher", {}))
    sweep = args.sweep if args.sweep is not None else tuple(ev.get("sweep", ()))
    options = ReportOptions(
        sweep=tuple(sweep),
        supplementary=matcher is not None,
        matcher=matcher,
        strength_threshold=float(_pick(args.strength_c, ev, "strength_c", 0.5)),
        influencer_threshold=int(_pick(args.influencer_n, ev, "influencer_n", 1)),
        rouge_n=int(_pick(args.rouge_n, ev, "rouge_n", 2)),
        source_text=Path(args.source_text).read_text("utf-8") if args.source_text else None,
        summary_text=Path(args.summary_text).read_text("utf-8") if args.summary_text else None,
    )
    report = full_report(ctx, options)
    doc = report_to_dict(report)
    rendered = {"json": qio.dumps(doc), "markdown": render_markdown(doc), "text": render_text(doc)}
    formats = args.format or ("json",)
    if args.output:
        for f in formats:
            _write(Path(args.output + _SUFFIX[f]), rendered[f])
    else:
        for f in formats:
            _write(None, rendered[f])
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    if args.strict and report.warnings:
        return EXIT_INVALID
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace) -> int:
    with open(args.verdicts, encoding="utf-8") as fh:
        doc = json.load(fh)
    verdicts = [RelationVerdict.from_dict(v) for v in doc["verdicts"]]
    gold = load_gold_csv(args.gold)
    metrics = arc_eval(verdicts, gold)
    _write(Path(args.output) if args.output else None, qio.dumps(metrics.to_dict()))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    with open(args.report, encoding="utf-8") as fh:
        doc = json.load(fh)
    text = render_markdown(doc) if args.format == "markdown" else render_text(doc)
    _write(Path(args.output) if args.output else None, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="debate-qbaf",
        description="Argumentation-based faithfulness evaluation of debate summaries.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a QBAF file")
    p.add_argument("path")
    p.add_argument("--strict", action="store_true", help="reject unknown JSON fields")
    p.add_argument("--no-temporal", action="store_true", help="skip the temporal-order check")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("extract", help="build a QBAF from a transcript")
    p.add_argument("transcript")
    p.add_argument("-o", "--output")
    p.add_argument("--config")
    p.add_argument("--classifier", choices=("keyword", "constant", "chat"))
    p.add_argument("--summary", action="store_true",
                   help="input is a summary: no temporal constraint, cycles allowed")
    p.add_argument("--speech-base", type=float)
    p.add_argument("--cache-dir")
    p.add_argument("--window", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--concurrency", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--verdicts-out")
    p.add_argument("--strict", action="store_true", help="abort on classifier failures")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score a summary QBAF against its source")
    p.add_argument("source")
    p.add_argument("summary")
    p.add_argument("-o", "--output", help="output path prefix (suffix added per format)")
    p.add_argument("--config")
    p.add_argument("--format", type=_formats, help="comma-separated: json,markdown,text")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--speech-base", type=float)
    p.add_argument("--sweep", type=_floats, help="speech base scores, e.g. 0.15,0.2,0.25")
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--matcher", choices=("none", "exact", "normalized", "external"))
    p.add_argument("--match-threshold", type=float)
    p.add_argument("--strength-c", type=float)
    p.add_argument("--influencer-n", type=int)
    p.add_argument("--rouge-n", type=int)
    p.add_argument("--source-text")
    p.add_argument("--summary-text")
    p.add_argument("--strict", action="store_true", help="fail when a property is unavailable")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="score relation verdicts against gold labels")
    p.add_argument("verdicts")
    p.add_argument("gold")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="render a saved JSON report")
    p.add_argument("report")
    p.add_argument("--format", choices=("markdown", "text"), default="markdown")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, qio.QbafFormatError, TranscriptError,
            ConfigurationError, tomllib.TOMLDecodeError, UsageError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AlignmentError, ClassificationError, SimilarityServiceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
