import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from debate_qbaf.alignment import identity_match
from debate_qbaf.graph import Argument, ArgumentKind, Qbaf, QbafMeta
from debate_qbaf.properties import (
    UNAVAILABLE,
    EvalContext,
    ReportOptions,
    balance_consistent,
    balance_theta,
    epsilon_theta,
    full_report,
    p1_relevance,
    p2_mean,
    p2_pro_con_ratio,
    p3_preferability_theta,
    p4_balance_theta,
    p5_epsilon_theta,
    supplementary_properties,
)
from debate_qbaf.semantics import SemanticsConfig
from debate_qbaf.synthetic import random_qbaf

from conftest import make_qbaf

# proposal strengths for seven provisions: a source debate and two summaries
SOURCE_ROW = (0.53, 0.50, 0.50, 0.50, 0.50, 0.47, 0.60)
SUMMARY_A = (0.54, 0.52, 0.78, 0.78, 0.82, 0.54, 0.90)
SUMMARY_B = (1.00, 0.90, 0.90, 0.90, 0.90, 0.89, 0.82)


class TestRelevance:
    def test_all_direct(self):
        assert p1_relevance(make_qbaf([("a", "p:1", "+"), ("b", "p:1", "-")])).value == 1.0

    def test_one_isolated(self):
        q = make_qbaf([("a", "p:1", "+"), ("b", "a", "-")], extra=("c",))
        r = p1_relevance(q)
        assert r.fraction == Fraction(2, 3)

    def test_five_of_six(self):
        q = make_qbaf(
            [("a", "p:1", "+"), ("b", "a", "-"), ("c", "b", "+"), ("d", "p:1", "-"),
             ("e", "d", "-")],
            extra=("f",),
        )
        assert round(p1_relevance(q).value, 2) == 0.83

    def test_direction_matters(self):
        # a proposal pointing nowhere does not make its neighbours relevant;
        # only speech -> ... -> proposal paths count
        q = make_qbaf([("a", "b", "+")], extra=("p:1",))
        assert p1_relevance(q).value == 0.0

    def test_no_speech_undefined(self):
        r = p1_relevance(make_qbaf([], extra=("p:1",)))
        assert r.value is None and r.status == "undefined"


class TestProConRatio:
    def test_one_pro_three_con(self):
        q = make_qbaf([("a", "p:1", "+"), ("b", "p:1", "-"), ("c", "p:1", "-"),
                       ("d", "p:1", "-")])
        assert p2_pro_con_ratio(q, "p:1") == 0.25

    def test_supporters_only(self):
        assert p2_pro_con_ratio(make_qbaf([("a", "p:1", "+"), ("b", "a", "+")]), "p:1") == 1.0

    def test_attackers_only(self):
        assert p2_pro_con_ratio(make_qbaf([("a", "p:1", "-")]), "p:1") == 0.0

    def test_undefined_excluded_from_mean(self):
        q = make_qbaf([("a", "p:1", "+"), ("b", "p:1", "-")], extra=("p:2",))
        assert p2_pro_con_ratio(q, "p:2") is None
        r = p2_mean(q)
        assert r.value == 0.5 and r.excluded == 1

    def test_argument_both_pro_and_con(self):
        # b reaches p:1 directly (one attack) and through a (two attacks)
        q = make_qbaf([("b", "p:1", "-"), ("b", "a", "-"), ("a", "p:1", "-")])
        assert p2_pro_con_ratio(q, "p:1") == pytest.approx(1 / 2)

    def test_not_a_proposal(self):
        with pytest.raises(ValueError):
            p2_pro_con_ratio(make_qbaf([("a", "p:1", "+")]), "a")

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_mean_within_defined_range(self, seed):
        q = random_qbaf(random.Random(seed), 6, n_proposals=3, edge_prob=0.3)
        r = p2_mean(q)
        defined = [d["ratio"] for d in r.details if d["ratio"] is not None]
        if defined:
            assert min(defined) - 1e-12 <= r.value <= max(defined) + 1e-12
        else:
            assert r.value is None


class TestTableRows:
    def rows(self, summary):
        return list(zip(SOURCE_ROW, summary))

    def test_balance(self):
        assert balance_theta(self.rows(SUMMARY_A)).fraction == Fraction(2, 7)
        assert balance_theta(self.rows(SUMMARY_B)).fraction == Fraction(2, 7)

    def test_epsilon(self):
        assert epsilon_theta(self.rows(SUMMARY_A), 0.1).fraction == Fraction(3, 7)
        assert epsilon_theta(self.rows(SUMMARY_B), 0.1).fraction == Fraction(0, 7)

    def test_neutral_only_matches_neutral(self):
        assert balance_consistent(0.5, 0.5)
        assert not balance_consistent(0.5, 0.5000001)
        assert not balance_consistent(0.4999999, 0.5)

    def test_epsilon_closed_interval(self):
        assert epsilon_theta([(0.3, 0.4)], 0.1).value == 1.0

    def test_epsilon_one_covers_all(self):
        assert epsilon_theta(self.rows(SUMMARY_B), 1.0).value == 1.0

    def test_unaligned_row_fails(self):
        assert balance_theta([(None, 0.6), (0.6, 0.6)]).fraction == Fraction(1, 2)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=8),
        st.floats(0, 1),
        st.floats(0, 1),
    )
    def test_epsilon_monotone(self, rows, e1, e2):
        lo, hi = sorted((e1, e2))
        assert epsilon_theta(rows, lo).value <= epsilon_theta(rows, hi).value


def ctx(source, summary, **kw):
    return EvalContext(source, summary, **kw)


def two_provisions(extra_edges):
    return make_qbaf([("a", "p:1", "-"), ("b", "p:2", "-")] + extra_edges, source="original")


class TestPreferability:
    def test_nothing_accepted_anywhere(self):
        src = two_provisions([])
        summ = make_qbaf([("x", "p:1", "-"), ("y", "p:2", "+"), ("z", "p:2", "-")])
        r = p3_preferability_theta(ctx(src, summ))
        assert [d["source"] for d in r.details] == [False, False]
        assert [d["summary"] for d in r.details] == [False, False]
        assert r.value == 1.0

    def test_agree_on_one_of_two(self):
        src = two_provisions([])
        summ = make_qbaf([("x", "p:1", "-"), ("y", "p:2", "+")])
        r = p3_preferability_theta(ctx(src, summ))
        assert r.fraction == Fraction(1, 2)

    def test_identity(self):
        q = two_provisions([("c", "a", "-")])
        assert p3_preferability_theta(ctx(q, q)).value == 1.0

    def test_budget_exhaustion_unavailable(self):
        q = two_provisions([])
        r = p3_preferability_theta(ctx(q, q, budget_seconds=0.0))
        assert r.status == UNAVAILABLE and r.value is None


class TestStrengthProperties:
    def test_p4_p5_on_graphs(self):
        src = make_qbaf([("a", "p:1", "+"), ("b", "p:2", "-")], source="original")
        summ = make_qbaf([("a", "p:1", "+"), ("b", "p:2", "+")])
        c = ctx(src, summ)
        # p:1 0.6 vs 0.6; p:2 0.4 vs 0.6
        assert p4_balance_theta(c).fraction == Fraction(1, 2)
        assert p5_epsilon_theta(c).fraction == Fraction(1, 2)
        assert p5_epsilon_theta(c, epsilon=0.2).value == 1.0

    def test_pass_flags_sum_to_theta(self):
        rng = random.Random(3)
        src = random_qbaf(rng, 8, n_proposals=4)
        summ = random_qbaf(rng, 5, n_proposals=4, acyclic=False)
        c = ctx(src, summ)
        for r in (p3_preferability_theta(c), p4_balance_theta(c), p5_epsilon_theta(c)):
            assert sum(d["pass"] for d in r.details) == r.passed
            assert r.value == r.passed / 4

    def test_non_convergence_unavailable(self):
        q = make_qbaf([("a", "b", "-"), ("b", "a", "-"), ("a", "p:1", "+")])
        cfg = SemanticsConfig(max_iterations=1, damping=1.0)
        c = ctx(q, q, config=cfg)
        assert p4_balance_theta(c).status == UNAVAILABLE
        assert p5_epsilon_theta(c).status == UNAVAILABLE


class TestSupplementary:
    def test_identity_all_hold(self):
        q = make_qbaf([("a", "p:1", "+"), ("b", "a", "-")])
        reports = supplementary_properties(ctx(q, q), identity_match(q, q))
        assert [r.property_id for r in reports] == ["A1", "A2", "A3", "A4", "A5"]
        assert all(r.holds for r in reports)

    def test_dropped_weak_leaf(self):
        src = make_qbaf([("a", "p:1", "+"), ("b", "p:1", "-")], source="original")
        summ = make_qbaf([("a", "p:1", "+")])
        a1, a2, a3, a4, a5 = supplementary_properties(ctx(src, summ), identity_match(src, summ),
                                                      c=0.5)
        assert a3.holds and not a2.holds and a1.holds

    def test_flipped_supporter(self):
        src = make_qbaf([("a", "p:1", "+"), ("b", "p:1", "-")], source="original")
        summ = make_qbaf([("a", "p:1", "-"), ("b", "p:1", "-")])
        reports = supplementary_properties(ctx(src, summ), identity_match(src, summ))
        a5 = reports[4]
        assert not a5.holds
        assert a5.details == [{"source": "a", "summary": "a", "proposal": "p:1"}]

    def test_influencer_missing(self):
        src = make_qbaf([("a", "p:1", "+"), ("b", "a", "-"), ("c", "a", "+")], source="original")
        summ = make_qbaf([("b", "p:1", "-")])
        reports = supplementary_properties(ctx(src, summ), identity_match(src, summ), n=1)
        assert not reports[3].holds
        assert reports[3].details == [{"missing": ["a"]}]

    def test_requires_match(self):
        q = make_qbaf([("a", "p:1", "+")])
        with pytest.raises(ValueError):
            supplementary_properties(ctx(q, q), None)


class TestFullReport:
    def test_identical(self):
        q = make_qbaf([("a", "p:1", "+"), ("b", "a", "-"), ("c", "p:2", "-")], source="original")
        rep = full_report(ctx(q, q), ReportOptions(supplementary=True, match=identity_match(q, q),
                                                   sweep=(0.1, 0.3)))
        assert rep.p1[0].value == rep.p1[1].value
        assert rep.p2[0].value == rep.p2[1].value
        assert rep.p3.value == rep.p4.value == rep.p5.value == 1.0
        assert all(r.holds for r in rep.supplementary)
        assert all(v["p4"].value == v["p5"].value == 1.0 for v in rep.sweep.values())

    def test_empty_summary_speech(self):
        src = make_qbaf([("a", "p:1", "+")], source="original")
        summ = make_qbaf([], extra=("p:1",))
        rep = full_report(ctx(src, summ), ReportOptions(supplementary=True,
                                                        match=identity_match(src, summ)))
        assert not rep.supplementary[0].holds
        assert rep.p1[1].value is None
        # p:1 is 0.6 in the source and 0.5 in the summary
        assert rep.p3.value == 1.0
        assert rep.p4.value == 0.0
        assert rep.p5.value == 1.0

    def test_rouge_when_texts_given(self):
        q = make_qbaf([("a", "p:1", "+")])
        rep = full_report(ctx(q, q), ReportOptions(source_text="the cat sat",
                                                   summary_text="the cat sat"))
        assert rep.rouge["f1"] == 1.0

    def test_summary_only_proposal_counts_against(self):
        src = make_qbaf([("a", "p:1", "+")], source="original")
        summ = make_qbaf([("a", "p:1", "+")], extra=("p:2",))
        rep = full_report(ctx(src, summ))
        assert rep.p4.fraction == Fraction(1, 2)
        assert rep.alignment.summary_only == (2,)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_reflexive(seed, acyclic):
    q = random_qbaf(random.Random(seed), 7, n_proposals=2, acyclic=acyclic)
    c = ctx(q, q)
    if not c.source_strengths.converged:
        return
    assert p3_preferability_theta(c).value == 1.0
    assert p4_balance_theta(c).value == 1.0
    assert p5_epsilon_theta(c).value == 1.0
