"""Cross-graph alignment: proposals by provision number, speech arguments by text similarity."""

from __future__ import annotations

import logging
import os
import re
import string
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import httpx

from debate_qbaf.graph import Qbaf, provision_index

logger = logging.getLogger(__name__)

Scorer = Callable[[Sequence[tuple[str, str]]], list[float]]


class AlignmentError(ValueError):
    pass


class SimilarityServiceError(RuntimeError):
    """Remote scoring failed; `completed` batches had been scored before the failure."""

    def __init__(self, message: str, completed: int, total: int):
        super().__init__(f"{message} (completed {completed}/{total} batches)")
        self.completed = completed
        self.total = total


@dataclass(frozen=True)
class ProposalAlignment:
    pairs: tuple[tuple[int, str, str], ...]
    source_only: tuple[int, ...] = ()
    summary_only: tuple[int, ...] = ()

    @property
    def summary_to_source(self) -> dict[str, str]:
        return {s_star: s for _, s, s_star in self.pairs}


def _provisions(q: Qbaf, label: str) -> dict[int, str]:
    out: dict[int, str] = {}
    for arg in q.arguments:
        if not arg.is_proposal:
            continue
        idx = provision_index(arg.id)
        if idx is None:
            raise AlignmentError(f"{label}: proposal {arg.id!r} has no provision index")
        if idx in out:
            raise AlignmentError(f"{label}: duplicate provision index {idx}")
        out[idx] = arg.id
    return out


def align_proposals(q: Qbaf, q_star: Qbaf) -> ProposalAlignment:
    src = _provisions(q, "source")
    summ = _provisions(q_star, "summary")
    shared = sorted(src.keys() & summ.keys())
    return ProposalAlignment(
        pairs=tuple((i, src[i], summ[i]) for i in shared),
        source_only=tuple(sorted(src.keys() - summ.keys())),
        summary_only=tuple(sorted(summ.keys() - src.keys())),
    )


class MatchMethod(str, Enum):
    EXACT = "exact"
    NORMALIZED = "normalized"
    EXTERNAL = "external"


@dataclass(frozen=True)
class MatcherConfig:
    method: MatchMethod = MatchMethod.NORMALIZED
    threshold: float = 1.0
    endpoint: str | None = None
    token_env: str = "DEBATE_QBAF_SIMILARITY_TOKEN"
    max_in_flight: int = 4
    batch_size: int = 32
    retries: int = 3
    backoff_seconds: float = 0.5
    timeout_seconds: float = 30.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0,1]")
        object.__setattr__(self, "method", MatchMethod(self.method))


@dataclass(frozen=True)
class MatchMap:
    pairs: tuple[tuple[str, str], ...]
    method: str
    scores: Mapping[tuple[str, str], float] = field(default_factory=dict)

    @property
    def matched_source(self) -> set[str]:
        return {a for a, _ in self.pairs}

    @property
    def matched_summary(self) -> set[str]:
        return {b for _, b in self.pairs}

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "pairs": [
                {"source": a, "summary": b, "score": self.scores.get((a, b), 1.0)}
                for a, b in self.pairs
            ],
        }


_WS = re.compile(r"\s+")
_PUNCT = str.maketrans("", "", string.punctuation)


def collapse_whitespace(text: str) -> str:
    return _WS.sub(" ", text).strip()


def normalize_text(text: str) -> str:
    return collapse_whitespace(text.lower().translate(_PUNCT))


def greedy_match(
    scores: Mapping[tuple[str, str], float], threshold: float
) -> list[tuple[str, str]]:
    """Injective matching taking pairs by descending score, ties by id order."""
    ranked = sorted(
        ((s, a, b) for (a, b), s in scores.items() if s >= threshold and s > 0),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used_a: set[str] = set()
    used_b: set[str] = set()
    pairs = []
    for _, a, b in ranked:
        if a in used_a or b in used_b:
            continue
        used_a.add(a)
        used_b.add(b)
        pairs.append((a, b))
    return sorted(pairs)


class ExternalSimilarity:
    """Client for a remote pairwise similarity service.

    POSTs `{"pairs": [{"a": ..., "b": ...}]}` and expects `{"scores": [...]}`.
    Results are cached per text pair for the lifetime of the client.
    """

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        max_in_flight: int = 4,
        batch_size: int = 32,
        retries: int = 3,
        backoff_seconds: float = 0.5,
        timeout_seconds: float = 30.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.max_in_flight = max_in_flight
        self.batch_size = batch_size
        self.retries = retries
        self.backoff_seconds = backoff_seconds
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self.client = client or httpx.Client(timeout=timeout_seconds)
        self.headers = headers
        self.cache: dict[tuple[str, str], float] = {}
        self.calls = 0

    @classmethod
    def from_config(cls, config: MatcherConfig, client: httpx.Client | None = None):
        if not config.endpoint:
            raise AlignmentError("external matcher requires an endpoint")
        return cls(
            config.endpoint,
            os.environ.get(config.token_env),
            config.max_in_flight,
            config.batch_size,
            config.retries,
            config.backoff_seconds,
            config.timeout_seconds,
            client,
        )

    def _post(self, batch: list[tuple[str, str]]) -> list[float]:
        body = {"pairs": [{"a": a, "b": b} for a, b in batch]}
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_seconds * 2 ** (attempt - 1))
            try:
                self.calls += 1
                resp = self.client.post(self.endpoint, json=body, headers=self.headers)
                resp.raise_for_status()
                scores = [float(s) for s in resp.json()["scores"]]
                if len(scores) != len(batch):
                    raise ValueError("score count does not match pair count")
                return [min(1.0, max(0.0, s)) for s in scores]
            except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
                last = exc
                logger.warning("similarity request failed (attempt %d): %s", attempt + 1, exc)
        raise RuntimeError(str(last))

    def __call__(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        todo = sorted({p for p in pairs if p not in self.cache})
        batches = [todo[i : i + self.batch_size] for i in range(0, len(todo), self.batch_size)]
        completed = 0
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            futures = [pool.submit(self._post, b) for b in batches]
            results: dict[tuple[str, str], float] = {}
            for batch, fut in zip(batches, futures):
                try:
                    results.update(zip(batch, fut.result()))
                except RuntimeError as exc:
                    for f in futures:
                        f.cancel()
                    raise SimilarityServiceError(str(exc), completed, len(batches)) from exc
                completed += 1
        self.cache.update(results)
        return [self.cache[p] for p in pairs]


def match_speech(
    q: Qbaf,
    q_star: Qbaf,
    config: MatcherConfig | None = None,
    scorer: Scorer | None = None,
) -> MatchMap:
    """Match source speech arguments to summary speech arguments (injective)."""
    config = config or MatcherConfig()
    src = sorted(q.speeches, key=lambda a: a.id)
    summ = sorted(q_star.speeches, key=lambda a: a.id)
    scores: dict[tuple[str, str], float] = {}
    if config.method is MatchMethod.EXTERNAL:
        scorer = scorer or ExternalSimilarity.from_config(config)
        keys = [(a.id, b.id) for a in src for b in summ]
        values = scorer([(a.text, b.text) for a in src for b in summ]) if keys else []
        scores = dict(zip(keys, values))
    else:
        norm = collapse_whitespace if config.method is MatchMethod.EXACT else normalize_text
        for a in src:
            na = norm(a.text)
            for b in summ:
                scores[(a.id, b.id)] = 1.0 if na == norm(b.text) else 0.0
    pairs = greedy_match(scores, config.threshold)
    return MatchMap(tuple(pairs), config.method.value, {p: scores[p] for p in pairs})


def identity_match(q: Qbaf, q_star: Qbaf) -> MatchMap:
    """Match speech arguments that share an id across the two graphs."""
    shared = sorted({a.id for a in q.speeches} & {a.id for a in q_star.speeches})
    return MatchMap(tuple((i, i) for i in shared), "identity", {(i, i): 1.0 for i in shared})
