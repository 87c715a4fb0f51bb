"""Relation-based argument mining: transcripts in, debate QBAFs out.

Every temporally admissible (later -> earlier) pair of segments, and every
segment -> provision pair, is labelled attack / support / neither by a
pluggable classifier. Attack and support verdicts become edges.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

import httpx

from debate_qbaf.graph import (
    DEFAULT_SPEECH_BASE_SCORE,
    PROPOSAL_BASE_SCORE,
    Argument,
    ArgumentKind,
    Edge,
    Polarity,
    Qbaf,
    QbafMeta,
    proposal_id,
)

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "DEBATE_QBAF_API_KEY"


class TranscriptError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


class ClassificationError(RuntimeError):
    pass


class Relation(str, Enum):
    ATTACK = "attack"
    SUPPORT = "support"
    NEITHER = "neither"


RELATIONS = (Relation.ATTACK, Relation.SUPPORT, Relation.NEITHER)


@dataclass(frozen=True)
class SpeechSegment:
    order: int
    speaker: str
    text: str


@dataclass(frozen=True)
class Transcript:
    debate_id: str
    provisions: tuple[tuple[int, str], ...]
    segments: tuple[SpeechSegment, ...]

    def __post_init__(self) -> None:
        indices = [i for i, _ in self.provisions]
        if len(set(indices)) != len(indices) or any(i < 1 for i in indices):
            raise TranscriptError("provision indices must be unique and >= 1")
        orders = [s.order for s in self.segments]
        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise TranscriptError("segment orders must be strictly increasing")
        if any(o < 0 for o in orders):
            raise TranscriptError("segment orders must be non-negative")
        for s in self.segments:
            if not s.text.strip():
                raise TranscriptError(f"segment {s.order} has empty text")

    def text_of(self, arg_id: str) -> str:
        return self._texts[arg_id]

    @cached_property
    def _texts(self) -> dict[str, str]:
        texts = {proposal_id(i): t for i, t in self.provisions}
        texts.update({segment_id(s): s.text for s in self.segments})
        return texts


def segment_id(segment: SpeechSegment) -> str:
    return f"s:{segment.order}"


def transcript_from_dict(doc: Any) -> Transcript:
    try:
        return Transcript(
            debate_id=str(doc["debate_id"]),
            provisions=tuple((int(p["index"]), str(p["text"])) for p in doc["provisions"]),
            segments=tuple(
                SpeechSegment(int(s["order"]), str(s.get("speaker", "")), str(s["text"]))
                for s in doc["segments"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TranscriptError):
            raise
        raise TranscriptError(f"malformed transcript: {exc}") from exc


def load_transcript(path: str | Path) -> Transcript:
    with open(path, encoding="utf-8") as fh:
        return transcript_from_dict(json.load(fh))


def candidate_pairs(
    transcript: Transcript, temporal: bool = True, window: int | None = None
) -> list[tuple[str, str]]:
    """Ordered (source, target) pairs to classify.

    With `temporal`, a segment may only relate to earlier segments (and to any
    provision); without it every ordered segment pair is a candidate. `window`
    keeps only the last k earlier segments.
    """
    segs = transcript.segments
    provisions = [proposal_id(i) for i, _ in transcript.provisions]
    pairs = []
    for i, seg in enumerate(segs):
        sid = segment_id(seg)
        earlier = segs[:i]
        if window is not None:
            earlier = earlier[max(0, len(earlier) - window):]
        for prev in reversed(earlier):
            pairs.append((sid, segment_id(prev)))
        if not temporal:
            for later in segs[i + 1:]:
                pairs.append((sid, segment_id(later)))
        for p in provisions:
            pairs.append((sid, p))
    return pairs


@dataclass(frozen=True)
class Judgement:
    label: Relation
    confidence: float | None = None
    raw: str = ""


@dataclass(frozen=True)
class RelationVerdict:
    source: str
    target: str
    label: Relation | None  # None: the classifier failed on this pair
    confidence: float | None = None
    classifier: str = ""
    digest: str = ""

    @property
    def pair(self) -> tuple[str, str]:
        return (self.source, self.target)

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "target": self.target,
            "label": None if self.label is None else self.label.value,
            "confidence": self.confidence,
            "classifier": self.classifier,
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> RelationVerdict:
        label = doc.get("label")
        return cls(
            str(doc["source"]),
            str(doc["target"]),
            None if label is None else Relation(label),
            doc.get("confidence"),
            doc.get("classifier", ""),
            doc.get("digest", ""),
        )


class RelationClassifier(Protocol):
    identity: str
    prompt_digest: str

    def classify_batch(self, pairs: Sequence[tuple[str, str]]) -> list[Judgement]: ...


class ConstantClassifier:
    """Labels every pair the same way."""

    prompt_digest = ""

    def __init__(self, label: Relation = Relation.NEITHER):
        self.label = Relation(label)
        self.identity = f"constant:{self.label.value}"

    def classify_batch(self, pairs):
        return [Judgement(self.label, 1.0) for _ in pairs]


_WORD = re.compile(r"[^\W_]+")


class KeywordClassifier:
    """Deterministic rule-based stand-in for a model.

    The first rule whose keyword starts a word in the later text decides the
    label. With `min_shared_words` > 0 the two texts must also share that many
    content words (5+ letters, keywords excluded), otherwise the pair is
    `neither`.
    """

    prompt_digest = ""

    def __init__(
        self,
        rules: Sequence[tuple[str, Relation]] = (
            ("disagree", Relation.ATTACK),
            ("agree", Relation.SUPPORT),
        ),
        min_shared_words: int = 1,
    ):
        self.rules = [(re.compile(rf"\b{re.escape(k.lower())}"), Relation(r)) for k, r in rules]
        self.keywords = {k.lower() for k, _ in rules}
        self.min_shared_words = min_shared_words
        rules_text = ",".join(f"{k}={Relation(r).value}" for k, r in rules)
        self.identity = f"keyword:{rules_text}:overlap={min_shared_words}"

    def _content(self, text: str) -> set[str]:
        words = {w for w in _WORD.findall(text.lower()) if len(w) >= 5}
        return {w for w in words if not any(w.startswith(k) for k in self.keywords)}

    def _one(self, source: str, target: str) -> Judgement:
        if self.min_shared_words:
            shared = self._content(source) & self._content(target)
            if len(shared) < self.min_shared_words:
                return Judgement(Relation.NEITHER, 1.0)
        lowered = source.lower()
        for pattern, label in self.rules:
            if pattern.search(lowered):
                return Judgement(label, 1.0)
        return Judgement(Relation.NEITHER, 1.0)

    def classify_batch(self, pairs):
        return [self._one(s, t) for s, t in pairs]


def load_prompt(path: str | Path | None = None) -> str:
    if path is None:
        return resources.files("debate_qbaf").joinpath("prompts/arc_v1.txt").read_text("utf-8")
    return Path(path).read_text(encoding="utf-8")


def parse_label(content: str) -> Relation:
    words = _WORD.findall(content.lower())
    for w in words:
        for rel in RELATIONS:
            if w.startswith(rel.value):
                return rel
    raise ValueError(f"no relation label in response: {content[:80]!r}")


class ChatCompletionsClassifier:
    """Remote classifier speaking the chat-completions JSON protocol.

    The API key is read from the environment at construction time, so a
    missing key fails before any request is made.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        prompt: str | None = None,
        timeout_seconds: float = 60.0,
        client: httpx.Client | None = None,
    ):
        key = os.environ.get(api_key_env)
        if not key:
            raise ConfigurationError(f"environment variable {api_key_env} is not set")
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.model = model
        self.prompt = prompt if prompt is not None else load_prompt()
        self.prompt_digest = hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()[:16]
        self.identity = f"chat:{model}"
        self.headers = {"Authorization": f"Bearer {key}"}
        self.client = client or httpx.Client(timeout=timeout_seconds)

    def _one(self, source: str, target: str) -> Judgement:
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": self.prompt.format(source=source, target=target)}],
        }
        resp = self.client.post(self.url, json=body, headers=self.headers)
        resp.raise_for_status()
        content = resp.json()["choices"][0]["message"]["content"]
        return Judgement(parse_label(content), None, content)

    def classify_batch(self, pairs):
        return [self._one(s, t) for s, t in pairs]


def make_classifier(settings: dict[str, Any] | None) -> RelationClassifier:
    """Build a classifier from a config table (`kind` = constant | keyword | chat)."""
    settings = dict(settings or {})
    kind = settings.pop("kind", "keyword")
    if kind == "constant":
        return ConstantClassifier(Relation(settings.get("label", "neither")))
    if kind == "keyword":
        rules = settings.get("rules")
        kwargs: dict[str, Any] = {}
        if rules:
            kwargs["rules"] = [(k, Relation(v)) for k, v in rules]
        if "min_shared_words" in settings:
            kwargs["min_shared_words"] = int(settings["min_shared_words"])
        return KeywordClassifier(**kwargs)
    if kind == "chat":
        for key in ("base_url", "model"):
            if not settings.get(key):
                raise ConfigurationError(f"chat classifier needs '{key}'")
        prompt = load_prompt(settings.get("prompt_file"))
        return ChatCompletionsClassifier(
            settings["base_url"],
            settings["model"],
            settings.get("api_key_env", DEFAULT_API_KEY_ENV),
            prompt,
            float(settings.get("timeout_seconds", 60.0)),
        )
    raise ConfigurationError(f"unknown classifier kind {kind!r}")


class ResponseCache:
    """One JSON file per request digest."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> Judgement | None:
        path = self._path(digest)
        if not path.exists():
            return None
        doc = json.loads(path.read_text(encoding="utf-8"))
        return Judgement(Relation(doc["label"]), doc.get("confidence"), doc.get("raw", ""))

    def put(self, digest: str, judgement: Judgement) -> None:
        doc = {"label": judgement.label.value, "confidence": judgement.confidence,
               "raw": judgement.raw}
        tmp = self._path(digest).with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        tmp.replace(self._path(digest))


def request_digest(classifier: RelationClassifier, source: str, target: str) -> str:
    key = json.dumps(
        {"classifier": classifier.identity, "prompt": classifier.prompt_digest,
         "source": source, "target": target},
        sort_keys=True,
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


@dataclass
class ClassificationRun:
    verdicts: list[RelationVerdict]
    cache_hits: int = 0
    classifier_calls: int = 0
    failures: int = 0

    def stats(self) -> dict[str, int]:
        return {
            "pairs": len(self.verdicts),
            "cache_hits": self.cache_hits,
            "classifier_calls": self.classifier_calls,
            "failures": self.failures,
        }


def classify(
    transcript: Transcript,
    pairs: Sequence[tuple[str, str]],
    classifier: RelationClassifier,
    cache_dir: str | Path | None = None,
    batch_size: int = 8,
    concurrency: int = 4,
    retries: int = 2,
    backoff_seconds: float = 0.5,
    strict: bool = False,
) -> ClassificationRun:
    """One verdict per pair, in pair order."""
    cache = ResponseCache(cache_dir) if cache_dir is not None else None
    texts = [(transcript.text_of(s), transcript.text_of(t)) for s, t in pairs]
    digests = [request_digest(classifier, s, t) for s, t in texts]
    results: list[Judgement | None] = [None] * len(pairs)
    run = ClassificationRun([])
    lock = threading.Lock()

    todo = []
    for i, d in enumerate(digests):
        hit = cache.get(d) if cache else None
        if hit is not None:
            results[i] = hit
            run.cache_hits += 1
        else:
            todo.append(i)

    def attempt(batch: list[int]) -> list[Judgement] | None:
        for n in range(retries + 1):
            if n:
                time.sleep(backoff_seconds * 2 ** (n - 1))
            try:
                with lock:
                    run.classifier_calls += 1
                out = classifier.classify_batch([texts[i] for i in batch])
                if len(out) != len(batch):
                    raise ClassificationError("classifier returned wrong number of labels")
                return out
            except Exception as exc:  # noqa: BLE001 - any adapter failure is retried
                logger.warning("classification batch failed (attempt %d): %s", n + 1, exc)
        return None

    batches = [todo[i : i + batch_size] for i in range(0, len(todo), batch_size)]
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        for batch, out in zip(batches, pool.map(attempt, batches)):
            if out is None:
                if strict:
                    raise ClassificationError(f"classification failed for {len(batch)} pairs")
                run.failures += len(batch)
                continue
            for i, judgement in zip(batch, out):
                results[i] = judgement
                if cache:
                    cache.put(digests[i], judgement)

    for (s, t), d, j in zip(pairs, digests, results):
        run.verdicts.append(
            RelationVerdict(s, t, None if j is None else j.label,
                            None if j is None else j.confidence, classifier.identity, d[:16])
        )
    if run.failures:
        logger.warning("%d of %d pairs left unclassified", run.failures, len(pairs))
    return run


def build_qbaf(
    transcript: Transcript,
    verdicts: Iterable[RelationVerdict],
    speech_base: float = DEFAULT_SPEECH_BASE_SCORE,
    temporal: bool = True,
) -> Qbaf:
    """Assemble the debate QBAF; isolated segments are kept."""
    allowed = set(candidate_pairs(transcript, temporal=temporal))
    edges = []
    unclassified = 0
    for v in verdicts:
        if v.pair not in allowed:
            raise ValueError(f"verdict on non-candidate pair {v.source} -> {v.target}")
        if v.label is None:
            unclassified += 1
        elif v.label is Relation.ATTACK:
            edges.append(Edge(v.source, v.target, Polarity.ATTACK))
        elif v.label is Relation.SUPPORT:
            edges.append(Edge(v.source, v.target, Polarity.SUPPORT))
    if unclassified:
        logger.warning("%d unclassified pairs treated as 'neither'", unclassified)
    args = [
        Argument(proposal_id(i), ArgumentKind.PROPOSAL, text, PROPOSAL_BASE_SCORE)
        for i, text in transcript.provisions
    ]
    args += [
        Argument(segment_id(s), ArgumentKind.SPEECH, s.text, speech_base,
                 s.order if temporal else None)
        for s in transcript.segments
    ]
    meta = QbafMeta(transcript.debate_id, "original" if temporal else "summary")
    return Qbaf.build(args, edges, meta)


# benchmarking

@dataclass(frozen=True)
class GoldPair:
    source: str
    target: str
    label: Relation
    annotators: tuple[Relation | None, ...] = ()


def load_gold_csv(path: str | Path) -> list[GoldPair]:
    """Rows `source_id,target_id,label[,annotator1,annotator2,annotator3]`; header optional."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip() == "source_id":
                continue
            if len(row) < 3 or not row[2].strip():
                raise ValueError(f"gold row without label: {row}")
            annot = tuple(Relation(c.strip().lower()) if c.strip() else None for c in row[3:])
            out.append(GoldPair(row[0].strip(), row[1].strip(), Relation(row[2].strip().lower()), annot))
    return out


def cohen_kappa(a: Sequence[Any], b: Sequence[Any]) -> float:
    """Cohen's kappa between two equally long label sequences."""
    if len(a) != len(b) or not a:
        raise ValueError("kappa needs two non-empty sequences of equal length")
    n = len(a)
    observed = sum(x == y for x, y in zip(a, b)) / n
    labels = set(a) | set(b)
    expected = sum((list(a).count(k) / n) * (list(b).count(k) / n) for k in labels)
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


def f1_scores(gold: Sequence[Any], pred: Sequence[Any], classes: Sequence[Any]) -> dict[Any, float]:
    scores = {}
    for c in classes:
        tp = sum(g == c and p == c for g, p in zip(gold, pred))
        fp = sum(g != c and p == c for g, p in zip(gold, pred))
        fn = sum(g == c and p != c for g, p in zip(gold, pred))
        denom = 2 * tp + fp + fn
        scores[c] = 2 * tp / denom if denom else 0.0
    return scores


@dataclass
class ArcMetrics:
    n: int
    accuracy: float
    macro_f1: float
    per_class_f1: dict[str, float]
    kappa: dict[str, float] = field(default_factory=dict)
    missing_verdicts: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class_f1": self.per_class_f1,
            "kappa": self.kappa,
            "missing_verdicts": self.missing_verdicts,
        }


def arc_eval(verdicts: Iterable[RelationVerdict], gold: Sequence[GoldPair]) -> ArcMetrics:
    """Accuracy, macro-F1 over the three relations and Cohen's kappa."""
    if not gold:
        raise ValueError("empty gold set")
    by_pair = {v.pair: v.label for v in verdicts}
    scored = [(g, by_pair[(g.source, g.target)]) for g in gold if (g.source, g.target) in by_pair]
    if not scored:
        raise ValueError("no verdict matches a gold pair")
    gold_labels = [g.label for g, _ in scored]
    pred = [p for _, p in scored]
    f1 = f1_scores(gold_labels, pred, RELATIONS)
    kappa: dict[str, float] = {}
    width = max(len(g.annotators) for g in gold)
    for i, j in combinations(range(width), 2):
        both = [
            (g.annotators[i], g.annotators[j]) for g in gold
            if len(g.annotators) > j and g.annotators[i] and g.annotators[j]
        ]
        if both:
            kappa[f"annotator{i + 1}~annotator{j + 1}"] = cohen_kappa(*zip(*both))
    kappa["model~gold"] = cohen_kappa(pred, gold_labels)
    return ArcMetrics(
        n=len(scored),
        accuracy=sum(g == p for g, p in zip(gold_labels, pred)) / len(scored),
        macro_f1=sum(f1.values()) / len(RELATIONS),
        per_class_f1={c.value: f1[c] for c in RELATIONS},
        kappa=kappa,
        missing_verdicts=len(gold) - len(scored),
    )
