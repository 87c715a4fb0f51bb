"""Serialisation and rendering of faithfulness reports.

JSON keeps full-precision numbers; a parallel `display` block and the
markdown/text renderers show two decimals.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Any

from debate_qbaf.properties import FaithfulnessReport, PropertyReport

DASH = "---"


def fmt(value: float | None) -> str:
    """Two decimals, halves rounded up (0.625 -> 0.63)."""
    if value is None:
        return DASH
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _sweep_key(base: float) -> str:
    return format(base, "g")


def report_to_dict(report: FaithfulnessReport) -> dict[str, Any]:
    p1_src, p1_summ = report.p1
    p2_src, p2_summ = report.p2
    doc: dict[str, Any] = {
        "meta": report.meta,
        "p1": {"source": p1_src.value, "summary": p1_summ.value},
        "p2_mean": {
            "source": p2_src.value,
            "summary": p2_summ.value,
            "excluded": {"source": p2_src.excluded, "summary": p2_summ.excluded},
        },
        "p3": report.p3.value,
        "p4": report.p4.value,
        "p5": {"epsilon": report.epsilon, "theta": report.p5.value},
        "status": {"p3": report.p3.status, "p4": report.p4.status, "p5": report.p5.status},
        "notes": report.warnings,
        "alignment": {
            "pairs": len(report.alignment.pairs),
            "source_only": list(report.alignment.source_only),
            "summary_only": list(report.alignment.summary_only),
        },
        "per_proposal": report.per_proposal,
    }
    if report.supplementary is not None:
        doc["supplementary"] = {
            "properties": {r.property_id: _supp(r) for r in report.supplementary},
            "match": report.match.to_dict() if report.match else None,
        }
    if report.sweep is not None:
        doc["sweep"] = {
            _sweep_key(b): {"p4": rs["p4"].value, "p5": rs["p5"].value}
            for b, rs in sorted(report.sweep.items())
        }
    if report.rouge is not None:
        doc["rouge"] = report.rouge
    doc["display"] = _display(doc)
    return doc


def _supp(r: PropertyReport) -> dict[str, Any]:
    out: dict[str, Any] = {"holds": r.holds}
    if r.details:
        out["details"] = r.details
    if r.note:
        out["note"] = r.note
    return out


def _display(doc: dict[str, Any]) -> dict[str, Any]:
    disp: dict[str, Any] = {
        "p1": {k: fmt(doc["p1"][k]) for k in ("source", "summary")},
        "p2_mean": {k: fmt(doc["p2_mean"][k]) for k in ("source", "summary")},
        "p3": fmt(doc["p3"]),
        "p4": fmt(doc["p4"]),
        "p5": fmt(doc["p5"]["theta"]),
    }
    if "sweep" in doc:
        disp["sweep"] = {
            b: {k: fmt(v) for k, v in row.items()} for b, row in doc["sweep"].items()
        }
    if "rouge" in doc:
        disp["rouge_f1"] = fmt(doc["rouge"]["f1"])
    return disp


def _table(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def render_markdown(doc: dict[str, Any]) -> str:
    meta = doc.get("meta", {})
    rouge = fmt(doc["rouge"]["f1"]) if "rouge" in doc else DASH
    rouge_head = f"R-{doc['rouge']['n']}" if "rouge" in doc else "R-2"
    out = [f"# Summary faithfulness: {meta.get('source_debate', '')}", ""]
    out += _table(
        ["", rouge_head, "P1", "P2", "P3", "P4", "P5"],
        [
            ["Q", DASH, fmt(doc["p1"]["source"]), fmt(doc["p2_mean"]["source"]), DASH, DASH, DASH],
            ["Q*", rouge, fmt(doc["p1"]["summary"]), fmt(doc["p2_mean"]["summary"]),
             fmt(doc["p3"]), fmt(doc["p4"]), fmt(doc["p5"]["theta"])],
        ],
    )
    out += ["", f"P2 is the mean over provisions; P5 uses epsilon = {doc['p5']['epsilon']}."]
    excluded = doc["p2_mean"]["excluded"]
    if excluded["source"] or excluded["summary"]:
        out.append(
            f"P2 excludes provisions with no pro or con arguments "
            f"(source: {excluded['source']}, summary: {excluded['summary']})."
        )
    for note in doc.get("notes", []):
        out.append(f"Warning: {note}.")

    rows = doc.get("per_proposal", [])
    if rows:
        out += ["", "## Proposal strengths", ""]
        out += _table(
            [""] + [f"x{r['provision']}" for r in rows],
            [
                ["sigma(Q)"] + [fmt(r["sigma_source"]) for r in rows],
                ["sigma(Q*)"] + [fmt(r["sigma_summary"]) for r in rows],
            ],
        )
    if "sweep" in doc:
        out += ["", "## Speech base-score sweep", ""]
        out += _table(
            ["base", "P4", "P5"],
            [[b, fmt(r["p4"]), fmt(r["p5"])] for b, r in doc["sweep"].items()],
        )
    if "supplementary" in doc:
        supp = doc["supplementary"]
        method = (supp.get("match") or {}).get("method", "?")
        out += ["", f"## Speech-argument properties (matcher: {method})", ""]
        out += _table(
            ["property", "holds"],
            [[k, "yes" if v["holds"] else "no"] for k, v in sorted(supp["properties"].items())],
        )
    orphans = doc.get("alignment", {})
    if orphans.get("source_only") or orphans.get("summary_only"):
        out += ["", f"Unaligned provisions: source only {orphans['source_only']}, "
                    f"summary only {orphans['summary_only']}."]
    return "\n".join(out) + "\n"


def render_text(doc: dict[str, Any]) -> str:
    lines = [
        f"debate: {doc.get('meta', {}).get('source_debate', '')}",
        f"P1 relevance      source {fmt(doc['p1']['source'])}  summary {fmt(doc['p1']['summary'])}",
        f"P2 pro-con mean   source {fmt(doc['p2_mean']['source'])}  "
        f"summary {fmt(doc['p2_mean']['summary'])}",
        f"P3 preferability  theta {fmt(doc['p3'])}",
        f"P4 balance        theta {fmt(doc['p4'])}",
        f"P5 eps-accuracy   theta {fmt(doc['p5']['theta'])} (epsilon {doc['p5']['epsilon']})",
    ]
    if "rouge" in doc:
        lines.append(f"ROUGE-{doc['rouge']['n']} F1      {fmt(doc['rouge']['f1'])}")
    for b, r in doc.get("sweep", {}).items():
        lines.append(f"sweep base {b}: P4 {fmt(r['p4'])}  P5 {fmt(r['p5'])}")
    for k, v in sorted(doc.get("supplementary", {}).get("properties", {}).items()):
        lines.append(f"{k}: {'holds' if v['holds'] else 'fails'}")
    for note in doc.get("notes", []):
        lines.append(f"warning: {note}")
    return "\n".join(lines) + "\n"
