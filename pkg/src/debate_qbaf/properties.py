"""Faithfulness properties of a summary QBAF relative to its source debate.

Single-graph measures: speech-argument relevance (P1) and per-proposal
pro-con ratio (P2). Pairwise measures over aligned proposals, each reported
as the largest degree theta = |S| / |summary proposals| at which the
property holds: agreement of credulous d-preferred acceptance (P3), of the
sign of net support (P4), and of strengths within epsilon (P5). The
speech-argument properties (A1-A5) need a `MatchMap` between the graphs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any

from debate_qbaf.alignment import (
    MatchMap,
    MatcherConfig,
    ProposalAlignment,
    align_proposals,
    match_speech,
)
from debate_qbaf.baselines import rouge_n
from debate_qbaf.extensions import (
    DEFAULT_BUDGET_SECONDS,
    BudgetExceeded,
    compile_derived_af,
    credulously_accepted,
)
from debate_qbaf.graph import Qbaf, direct_relations, pro_con, provision_index, reaches_any
from debate_qbaf.semantics import SemanticsConfig, StrengthMap, evaluate

DEFAULT_EPSILON = 0.1
NEUTRAL = 0.5
# absorbs float noise at the closed ends of the epsilon interval
_EPS_SLACK = 1e-12

OK, UNDEFINED, UNAVAILABLE = "ok", "undefined", "unavailable"


@dataclass
class PropertyReport:
    property_id: str
    scope: str
    value: float | None
    status: str = OK
    passed: int | None = None
    total: int | None = None
    excluded: int = 0
    details: list[dict[str, Any]] = field(default_factory=list)
    note: str = ""

    @property
    def theta(self) -> float | None:
        return self.value

    @property
    def fraction(self) -> Fraction | None:
        if self.passed is None or not self.total:
            return None
        return Fraction(self.passed, self.total)

    @property
    def holds(self) -> bool:
        return self.value == 1.0

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "id": self.property_id,
            "scope": self.scope,
            "value": self.value,
            "status": self.status,
        }
        if self.passed is not None:
            doc["passed"] = self.passed
            doc["total"] = self.total
        if self.excluded:
            doc["excluded"] = self.excluded
        if self.details:
            doc["details"] = self.details
        if self.note:
            doc["note"] = self.note
        return doc


def _theta_report(pid: str, flags: list[bool], details: list[dict]) -> PropertyReport:
    total = len(flags)
    passed = sum(flags)
    if total == 0:
        return PropertyReport(pid, "pairwise", None, UNDEFINED, 0, 0, details=details,
                              note="summary has no proposal arguments")
    return PropertyReport(pid, "pairwise", passed / total, OK, passed, total, details=details)


# single-graph properties

def p1_relevance(qbaf: Qbaf) -> PropertyReport:
    speech = [a.id for a in qbaf.speeches]
    if not speech:
        return PropertyReport("P1", "graph", None, UNDEFINED, 0, 0, note="no speech arguments")
    relevant = reaches_any(qbaf, (p.id for p in qbaf.proposals))
    passed = sum(1 for s in speech if s in relevant)
    return PropertyReport("P1", "graph", passed / len(speech), OK, passed, len(speech))


def p2_pro_con_ratio(qbaf: Qbaf, proposal: str) -> float | None:
    """|pro| / |pro u con| over speech arguments; None when both are empty."""
    if not qbaf.argument(proposal).is_proposal:
        raise ValueError(f"{proposal!r} is not a proposal argument")
    pro, con = pro_con(qbaf, proposal)
    speech = {a.id for a in qbaf.speeches}
    pro, con = pro & speech, con & speech
    either = pro | con
    if not either:
        return None
    return len(pro) / len(either)


def p2_mean(qbaf: Qbaf) -> PropertyReport:
    """Mean pro-con ratio over provisions, skipping undefined ratios."""
    details = []
    defined = []
    for p in _sorted_proposals(qbaf):
        ratio = p2_pro_con_ratio(qbaf, p)
        details.append({"proposal": p, "ratio": ratio})
        if ratio is not None:
            defined.append(ratio)
    excluded = len(details) - len(defined)
    if not defined:
        return PropertyReport("P2", "per-proposal", None, UNDEFINED, excluded=excluded,
                              details=details, note="no proposal has pro or con arguments")
    return PropertyReport("P2", "per-proposal", sum(defined) / len(defined), OK,
                          excluded=excluded, details=details)


def _sorted_proposals(qbaf: Qbaf) -> list[str]:
    return sorted((a.id for a in qbaf.proposals), key=lambda i: (provision_index(i) or 0, i))


# pairwise membership tests on raw strengths

def balance_consistent(sigma: float, sigma_star: float) -> bool:
    """Same side of 0.5 (or both exactly 0.5), on unrounded values."""
    return (sigma_star > NEUTRAL) == (sigma > NEUTRAL) and (sigma_star < NEUTRAL) == (sigma < NEUTRAL)


def epsilon_accurate(sigma: float, sigma_star: float, epsilon: float) -> bool:
    return abs(sigma_star - sigma) <= epsilon + _EPS_SLACK


def balance_theta(rows: list[tuple[float | None, float]]) -> PropertyReport:
    """P4 over (source strength or None for an unaligned proposal, summary strength) rows."""
    flags = [s is not None and balance_consistent(s, s_star) for s, s_star in rows]
    return _theta_report("P4", flags, [])


def epsilon_theta(rows: list[tuple[float | None, float]], epsilon: float) -> PropertyReport:
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    flags = [s is not None and epsilon_accurate(s, s_star, epsilon) for s, s_star in rows]
    return _theta_report("P5", flags, [])


def proposal_acceptance(
    qbaf: Qbaf, budget_seconds: float | None = DEFAULT_BUDGET_SECONDS
) -> dict[str, bool]:
    """Credulous d-preferred acceptance of every proposal; one budget for the graph."""
    af = compile_derived_af(qbaf)
    deadline = None if budget_seconds is None else time.monotonic() + budget_seconds
    out = {}
    for p in _sorted_proposals(qbaf):
        remaining = None if deadline is None else deadline - time.monotonic()
        if remaining is not None and remaining <= 0:
            raise BudgetExceeded("extension search exceeded its time budget")
        out[p] = credulously_accepted(af, p, remaining)
    return out


@dataclass
class EvalContext:
    source: Qbaf
    summary: Qbaf
    config: SemanticsConfig = field(default_factory=SemanticsConfig)
    epsilon: float = DEFAULT_EPSILON
    budget_seconds: float | None = DEFAULT_BUDGET_SECONDS

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    @cached_property
    def alignment(self) -> ProposalAlignment:
        return align_proposals(self.source, self.summary)

    @cached_property
    def source_strengths(self) -> StrengthMap:
        return evaluate(self.source, self.config)

    @cached_property
    def summary_strengths(self) -> StrengthMap:
        return evaluate(self.summary, self.config)

    @cached_property
    def _acceptance(self) -> tuple[dict[str, bool] | None, dict[str, bool] | None, str]:
        try:
            src = proposal_acceptance(self.source, self.budget_seconds)
        except BudgetExceeded:
            return None, None, "extension budget exhausted on source graph"
        try:
            summ = proposal_acceptance(self.summary, self.budget_seconds)
        except BudgetExceeded:
            return src, None, "extension budget exhausted on summary graph"
        return src, summ, ""

    def summary_rows(self) -> list[tuple[int, str | None, str]]:
        """(provision, source id or None, summary id) for every summary proposal."""
        to_source = self.alignment.summary_to_source
        return [
            (provision_index(p) or 0, to_source.get(p), p)
            for p in _sorted_proposals(self.summary)
        ]

    def with_speech_base(self, base: float) -> EvalContext:
        cfg = SemanticsConfig(base, self.config.tolerance, self.config.max_iterations,
                              self.config.damping)
        return EvalContext(self.source, self.summary, cfg, self.epsilon, self.budget_seconds)


def p3_preferability_theta(ctx: EvalContext) -> PropertyReport:
    src, summ, problem = ctx._acceptance
    if problem:
        return PropertyReport("P3", "pairwise", None, UNAVAILABLE, note=problem)
    flags, details = [], []
    for idx, s, s_star in ctx.summary_rows():
        a = None if s is None else src[s]
        a_star = summ[s_star]
        ok = a is not None and a == a_star
        flags.append(ok)
        details.append({"provision": idx, "source": a, "summary": a_star, "pass": ok})
    return _theta_report("P3", flags, details)


def _strength_rows(ctx: EvalContext) -> tuple[list, str]:
    sig, sig_star = ctx.source_strengths, ctx.summary_strengths
    if not (sig.converged and sig_star.converged):
        which = "source" if not sig.converged else "summary"
        return [], f"strengths did not converge on {which} graph"
    rows = [
        (idx, None if s is None else sig[s], sig_star[s_star])
        for idx, s, s_star in ctx.summary_rows()
    ]
    return rows, ""


def p4_balance_theta(ctx: EvalContext) -> PropertyReport:
    rows, problem = _strength_rows(ctx)
    if problem:
        return PropertyReport("P4", "pairwise", None, UNAVAILABLE, note=problem)
    report = balance_theta([(s, s_star) for _, s, s_star in rows])
    report.details = [
        {"provision": i, "source": s, "summary": s_star,
         "pass": s is not None and balance_consistent(s, s_star)}
        for i, s, s_star in rows
    ]
    return report


def p5_epsilon_theta(ctx: EvalContext, epsilon: float | None = None) -> PropertyReport:
    eps = ctx.epsilon if epsilon is None else epsilon
    rows, problem = _strength_rows(ctx)
    if problem:
        return PropertyReport("P5", "pairwise", None, UNAVAILABLE, note=problem)
    report = epsilon_theta([(s, s_star) for _, s, s_star in rows], eps)
    report.details = [
        {"provision": i, "source": s, "summary": s_star,
         "pass": s is not None and epsilon_accurate(s, s_star, eps)}
        for i, s, s_star in rows
    ]
    report.note = f"epsilon={eps}"
    return report


def _bool_report(pid: str, holds: bool, details: list[dict], note: str = "") -> PropertyReport:
    return PropertyReport(pid, "graph", 1.0 if holds else 0.0, OK, details=details, note=note)


def supplementary_properties(
    ctx: EvalContext, match: MatchMap, c: float = 0.5, n: int = 1
) -> list[PropertyReport]:
    """Speech-argument properties A1-A5 under a source/summary matching."""
    if match is None:
        raise ValueError("supplementary properties need a MatchMap")
    src_speech = sorted(a.id for a in ctx.source.speeches)
    summ_speech = sorted(a.id for a in ctx.summary.speeches)
    matched_src, matched_summ = match.matched_source, match.matched_summary

    unmatched_summ = [x for x in summ_speech if x not in matched_summ]
    unmatched_src = [x for x in src_speech if x not in matched_src]
    a1 = bool(summ_speech) and not unmatched_summ
    a2 = not unmatched_src and not unmatched_summ

    sig = ctx.source_strengths
    strong_missing = [x for x in src_speech if sig[x] > c and x not in matched_src]
    influencers_missing = [
        x for x in src_speech
        if len(set().union(*direct_relations(ctx.source, x))) > n and x not in matched_src
    ]

    conflicts = []
    for _, p, p_star in ctx.alignment.pairs:
        pro, con = pro_con(ctx.source, p)
        pro_s, con_s = pro_con(ctx.summary, p_star)
        for x, x_star in match.pairs:
            if (x in pro) != (x_star in pro_s) or (x in con) != (x_star in con_s):
                conflicts.append({"source": x, "summary": x_star, "proposal": p})

    return [
        _bool_report("A1", a1, [{"unmatched_summary": unmatched_summ}] if unmatched_summ else [],
                     "" if summ_speech else "summary has no speech arguments"),
        _bool_report("A2", a2, [{"unmatched_source": unmatched_src,
                                 "unmatched_summary": unmatched_summ}] if not a2 else []),
        _bool_report("A3", not strong_missing,
                     [{"missing": strong_missing}] if strong_missing else [], f"c={c}"),
        _bool_report("A4", not influencers_missing,
                     [{"missing": influencers_missing}] if influencers_missing else [], f"n={n}"),
        _bool_report("A5", not conflicts, conflicts),
    ]


@dataclass(frozen=True)
class ReportOptions:
    sweep: tuple[float, ...] = ()
    supplementary: bool = False
    match: MatchMap | None = None
    matcher: MatcherConfig | None = None
    strength_threshold: float = 0.5
    influencer_threshold: int = 1
    rouge_n: int = 2
    source_text: str | None = None
    summary_text: str | None = None


@dataclass
class FaithfulnessReport:
    p1: tuple[PropertyReport, PropertyReport]
    p2: tuple[PropertyReport, PropertyReport]
    p3: PropertyReport
    p4: PropertyReport
    p5: PropertyReport
    epsilon: float
    per_proposal: list[dict[str, Any]]
    meta: dict[str, Any]
    alignment: ProposalAlignment
    supplementary: list[PropertyReport] | None = None
    match: MatchMap | None = None
    sweep: dict[float, dict[str, PropertyReport]] | None = None
    rouge: dict[str, float] | None = None

    @property
    def warnings(self) -> list[str]:
        return [r.note for r in (self.p3, self.p4, self.p5) if r.status == UNAVAILABLE]


def full_report(ctx: EvalContext, options: ReportOptions | None = None) -> FaithfulnessReport:
    options = options or ReportOptions()
    p3, p4, p5 = p3_preferability_theta(ctx), p4_balance_theta(ctx), p5_epsilon_theta(ctx)
    p2_src, p2_summ = p2_mean(ctx.source), p2_mean(ctx.summary)
    ratio_src = {d["proposal"]: d["ratio"] for d in p2_src.details}
    ratio_summ = {d["proposal"]: d["ratio"] for d in p2_summ.details}

    per_proposal = []
    p3_rows = {d["provision"]: d for d in p3.details}
    p4_rows = {d["provision"]: d for d in p4.details}
    p5_rows = {d["provision"]: d for d in p5.details}
    for idx, s, s_star in ctx.summary_rows():
        per_proposal.append({
            "provision": idx,
            "source_id": s,
            "summary_id": s_star,
            "sigma_source": p4_rows.get(idx, {}).get("source"),
            "sigma_summary": p4_rows.get(idx, {}).get("summary"),
            "accepted_source": p3_rows.get(idx, {}).get("source"),
            "accepted_summary": p3_rows.get(idx, {}).get("summary"),
            "p2_source": None if s is None else ratio_src.get(s),
            "p2_summary": ratio_summ.get(s_star),
            "p3_pass": p3_rows.get(idx, {}).get("pass"),
            "p4_pass": p4_rows.get(idx, {}).get("pass"),
            "p5_pass": p5_rows.get(idx, {}).get("pass"),
        })

    report = FaithfulnessReport(
        p1=(p1_relevance(ctx.source), p1_relevance(ctx.summary)),
        p2=(p2_src, p2_summ),
        p3=p3,
        p4=p4,
        p5=p5,
        epsilon=ctx.epsilon,
        per_proposal=per_proposal,
        alignment=ctx.alignment,
        meta={
            "source_debate": ctx.source.meta.debate_id,
            "summary_debate": ctx.summary.meta.debate_id,
            "speech_base": ctx.config.speech_base_score,
            "source_speech_arguments": len(ctx.source.speeches),
            "summary_speech_arguments": len(ctx.summary.speeches),
        },
    )
    if options.supplementary:
        match = options.match or match_speech(ctx.source, ctx.summary, options.matcher)
        report.match = match
        report.supplementary = supplementary_properties(
            ctx, match, options.strength_threshold, options.influencer_threshold
        )
    if options.sweep:
        report.sweep = {}
        for base in options.sweep:
            swept = ctx.with_speech_base(base)
            report.sweep[base] = {"p4": p4_balance_theta(swept), "p5": p5_epsilon_theta(swept)}
    if options.source_text is not None and options.summary_text is not None:
        score = rouge_n(options.summary_text, options.source_text, options.rouge_n)
        report.rouge = score.to_dict()
    return report
