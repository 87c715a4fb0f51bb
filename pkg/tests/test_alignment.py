import itertools
import json

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from debate_qbaf.alignment import (
    AlignmentError,
    ExternalSimilarity,
    MatcherConfig,
    MatchMethod,
    SimilarityServiceError,
    align_proposals,
    greedy_match,
    identity_match,
    match_speech,
    normalize_text,
)
from debate_qbaf.graph import Argument, ArgumentKind, Qbaf, QbafMeta


def graph(provisions=(1,), speeches: dict[str, str] | None = None, extra_ids=()) -> Qbaf:
    args = [Argument(f"p:{i}", ArgumentKind.PROPOSAL, f"provision {i}", 0.5) for i in provisions]
    args += [Argument(i, ArgumentKind.PROPOSAL, "", 0.5) for i in extra_ids]
    for sid, text in (speeches or {}).items():
        args.append(Argument(sid, ArgumentKind.SPEECH, text, 0.2))
    return Qbaf(tuple(args), (), QbafMeta("m", "summary"))


class TestAlignProposals:
    def test_same_provisions(self):
        al = align_proposals(graph((1, 2)), graph((1, 2)))
        assert al.pairs == ((1, "p:1", "p:1"), (2, "p:2", "p:2"))
        assert al.source_only == () and al.summary_only == ()

    def test_orphan_flagged(self):
        al = align_proposals(graph((1, 2, 3)), graph((1, 3)))
        assert [i for i, _, _ in al.pairs] == [1, 3]
        assert al.source_only == (2,)

    def test_summary_to_source(self):
        al = align_proposals(graph((1, 2)), graph((2,)))
        assert al.summary_to_source == {"p:2": "p:2"}

    def test_duplicate_provision_rejected(self):
        # "p:01" and "p:1" name the same provision
        with pytest.raises(AlignmentError):
            align_proposals(graph((1,)), graph((1,), extra_ids=("p:01",)))

    def test_unindexed_proposal_rejected(self):
        with pytest.raises(AlignmentError):
            align_proposals(graph((1,)), graph((), extra_ids=("motion",)))


class TestTextMatchers:
    def test_identical_exact(self):
        texts = {"s:1": "We agree.", "s:2": "Costs   rise"}
        m = match_speech(graph(speeches=texts), graph(speeches={"s:1": "We agree.",
                                                                "s:2": "Costs rise"}),
                         MatcherConfig(MatchMethod.EXACT))
        assert m.pairs == (("s:1", "s:1"), ("s:2", "s:2"))

    def test_case_differs(self):
        q = graph(speeches={"s:1": "The Agency is needed."})
        q_star = graph(speeches={"s:9": "the agency is needed"})
        assert match_speech(q, q_star, MatcherConfig(MatchMethod.EXACT)).pairs == ()
        assert match_speech(q, q_star, MatcherConfig(MatchMethod.NORMALIZED)).pairs == (
            ("s:1", "s:9"),
        )

    def test_normalize(self):
        assert normalize_text("  Hello,\tWORLD!! ") == "hello world"

    def test_identity_match(self):
        q = graph(speeches={"s:1": "a", "s:2": "b"})
        q_star = graph(speeches={"s:2": "zz", "s:3": "c"})
        assert identity_match(q, q_star).pairs == (("s:2", "s:2"),)


def brute_best(scores, threshold):
    """Maximum total-score injective matching (exhaustive)."""
    edges = [k for k, v in scores.items() if v >= threshold and v > 0]
    best, best_total = [], -1.0
    for r in range(len(edges) + 1):
        for subset in itertools.combinations(edges, r):
            if len({a for a, _ in subset}) < r or len({b for _, b in subset}) < r:
                continue
            total = sum(scores[e] for e in subset)
            if total > best_total + 1e-12:
                best, best_total = list(subset), total
    return sorted(best), best_total


class TestGreedy:
    def test_competing_sources(self):
        scores = {("s:1", "t:1"): 0.9, ("s:2", "t:1"): 0.7}
        assert greedy_match(scores, 0.5) == [("s:1", "t:1")]
        assert brute_best(scores, 0.5)[0] == [("s:1", "t:1")]

    def test_tie_broken_by_id(self):
        scores = {("s:2", "t:1"): 0.8, ("s:1", "t:1"): 0.8}
        assert greedy_match(scores, 0.0) == [("s:1", "t:1")]

    def test_zero_scores_never_match(self):
        assert greedy_match({("a", "b"): 0.0}, 0.0) == []

    @pytest.mark.parametrize(
        "scores",
        [
            {("a", "x"): 0.9, ("b", "x"): 0.6, ("b", "y"): 0.5},
            {("a", "x"): 1.0, ("a", "y"): 0.4, ("b", "y"): 0.8, ("c", "z"): 0.3},
            {("a", "x"): 0.7, ("b", "y"): 0.7, ("c", "x"): 0.2},
        ],
    )
    def test_agrees_with_brute_force_on_fixtures(self, scores):
        greedy = greedy_match(scores, 0.1)
        assert greedy == brute_best(scores, 0.1)[0]

    @settings(max_examples=100, deadline=None)
    @given(
        st.dictionaries(
            st.tuples(st.sampled_from("abcd"), st.sampled_from("wxyz")),
            st.floats(0, 1),
            max_size=10,
        ),
        st.floats(0, 1),
    )
    def test_injective(self, scores, threshold):
        pairs = greedy_match(scores, threshold)
        assert len({a for a, _ in pairs}) == len(pairs) == len({b for _, b in pairs})
        assert all(scores[p] >= threshold for p in pairs)


texts = st.lists(st.sampled_from(["Yes.", "yes", "No!", "maybe so", "Maybe  so", "no"]),
                 max_size=4)


class TestMatcherInvariants:
    @settings(max_examples=100, deadline=None)
    @given(texts, texts)
    def test_exact_symmetric(self, a, b):
        q = graph(speeches={f"s:{i}": t for i, t in enumerate(a, 1)})
        q_star = graph(speeches={f"s:{i}": t for i, t in enumerate(b, 1)})
        cfg = MatcherConfig(MatchMethod.EXACT)
        forward = set(match_speech(q, q_star, cfg).pairs)
        backward = {(y, x) for x, y in match_speech(q_star, q, cfg).pairs}
        assert forward == backward

    @settings(max_examples=100, deadline=None)
    @given(
        st.dictionaries(
            st.tuples(st.sampled_from(["s:1", "s:2", "s:3"]), st.sampled_from(["t:1", "t:2"])),
            st.floats(0, 1),
            max_size=6,
        ),
        st.floats(0, 1),
        st.floats(0, 1),
    )
    def test_threshold_monotone(self, scores, t1, t2):
        lo, hi = sorted((t1, t2))
        src = sorted({a for a, _ in scores} | {"s:1"})
        summ = sorted({b for _, b in scores} | {"t:1"})
        q = graph(speeches={s: s for s in src})
        q_star = graph(speeches={t: t for t in summ})

        def scorer(pairs):
            return [scores.get((a, b), 0.0) for a, b in pairs]

        def run(th):
            return match_speech(q, q_star, MatcherConfig(MatchMethod.EXTERNAL, th),
                                scorer=scorer)

        assert len(run(hi).pairs) <= len(run(lo).pairs)


def service(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


class TestExternalSimilarity:
    def test_scores_and_cache(self):
        seen = []

        def handler(request: httpx.Request) -> httpx.Response:
            body = json.loads(request.content)
            seen.append(body)
            assert request.headers["authorization"] == "Bearer tok"
            return httpx.Response(
                200, json={"scores": [1.0 if p["a"] == p["b"] else 0.1 for p in body["pairs"]]}
            )

        sim = ExternalSimilarity("http://sim/score", token="tok", batch_size=2,
                                 client=service(handler))
        pairs = [("x", "x"), ("x", "y"), ("y", "y")]
        assert sim(pairs) == [1.0, 0.1, 1.0]
        calls = sim.calls
        assert calls == 2
        assert sim(pairs) == [1.0, 0.1, 1.0]
        assert sim.calls == calls

    def test_match_speech_via_service(self, monkeypatch):
        monkeypatch.setenv("DEBATE_QBAF_SIMILARITY_TOKEN", "tok")

        def handler(request):
            pairs = json.loads(request.content)["pairs"]
            return httpx.Response(200, json={"scores": [0.9 if p["a"][0] == p["b"][0] else 0.2
                                                        for p in pairs]})

        q = graph(speeches={"s:1": "alpha", "s:2": "beta"})
        q_star = graph(speeches={"s:7": "apple", "s:8": "banana"})
        cfg = MatcherConfig(MatchMethod.EXTERNAL, 0.5, endpoint="http://sim/score")
        sim = ExternalSimilarity.from_config(cfg, client=service(handler))
        m = match_speech(q, q_star, cfg, scorer=sim)
        assert m.pairs == (("s:1", "s:7"), ("s:2", "s:8"))
        assert m.scores[("s:1", "s:7")] == pytest.approx(0.9)

    def test_retry_then_success(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            if len(attempts) == 1:
                return httpx.Response(503)
            return httpx.Response(200, json={"scores": [0.5]})

        sim = ExternalSimilarity("http://sim", retries=2, backoff_seconds=0,
                                 client=service(handler))
        assert sim([("a", "b")]) == [0.5]
        assert len(attempts) == 2

    def test_failure_reports_progress(self):
        def handler(request):
            return httpx.Response(500)

        sim = ExternalSimilarity("http://sim", retries=1, backoff_seconds=0,
                                 client=service(handler))
        with pytest.raises(SimilarityServiceError) as info:
            sim([("a", "b"), ("c", "d")])
        assert info.value.completed == 0 and info.value.total == 1
        assert sim.cache == {}

    def test_missing_endpoint(self):
        with pytest.raises(AlignmentError):
            ExternalSimilarity.from_config(MatcherConfig(MatchMethod.EXTERNAL))

    def test_threshold_range(self):
        with pytest.raises(ValueError):
            MatcherConfig(threshold=1.5)
