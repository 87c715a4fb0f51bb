"""ROUGE-N lexical overlap baseline."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

_TOKEN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class RougeScore:
    n: int
    precision: float
    recall: float
    f1: float
    too_short: bool = False

    def to_dict(self) -> dict:
        return {"n": self.n, "precision": self.precision, "recall": self.recall, "f1": self.f1}


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; no stemming, no stopword removal."""
    return _TOKEN.findall(text.lower())


def ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int = 2) -> RougeScore:
    if n < 1:
        raise ValueError("n must be >= 1")
    cand, ref = tokenize(candidate), tokenize(reference)
    if len(cand) < n or len(ref) < n:
        return RougeScore(n, 0.0, 0.0, 0.0, too_short=True)
    c_grams, r_grams = ngrams(cand, n), ngrams(ref, n)
    overlap = sum((c_grams & r_grams).values())
    precision = overlap / sum(c_grams.values())
    recall = overlap / sum(r_grams.values())
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RougeScore(n, precision, recall, f1)
