"""Random debate graphs for property tests and performance runs."""

from __future__ import annotations

import random

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


def _polarity(rng: random.Random, attack_prob: float) -> Polarity:
    return Polarity.ATTACK if rng.random() < attack_prob else Polarity.SUPPORT


def random_qbaf(
    rng: random.Random,
    n_speech: int,
    n_proposals: int = 1,
    edge_prob: float = 0.3,
    attack_prob: float = 0.5,
    acyclic: bool = True,
    speech_base: float | None = DEFAULT_SPEECH_BASE_SCORE,
    debate_id: str = "random",
) -> Qbaf:
    """Valid debate QBAF with random edges.

    With `acyclic` the speech arguments respect temporal order (later ones
    point at earlier ones); otherwise any speech-to-speech edge may appear.
    A `speech_base` of None draws each speech base score uniformly.
    """
    args = [
        Argument(proposal_id(i), ArgumentKind.PROPOSAL, "", PROPOSAL_BASE_SCORE)
        for i in range(1, n_proposals + 1)
    ]
    speech_ids = [f"s:{i}" for i in range(n_speech)]
    for i, sid in enumerate(speech_ids):
        base = rng.random() if speech_base is None else speech_base
        args.append(Argument(sid, ArgumentKind.SPEECH, "", base, i if acyclic else None))
    edges = []
    for i, sid in enumerate(speech_ids):
        targets = [a.id for a in args if a.is_proposal]
        if acyclic:
            targets += speech_ids[:i]
        else:
            targets += [t for t in speech_ids if t != sid]
        for t in targets:
            if rng.random() < edge_prob:
                edges.append(Edge(sid, t, _polarity(rng, attack_prob)))
    source = "original" if acyclic else "summary"
    return Qbaf(tuple(args), tuple(edges), QbafMeta(debate_id, source))


def synthetic_debate(
    n_provisions: int = 3,
    n_speech: int = 170,
    seed: int = 0,
    attack_prob: float = 0.45,
    speech_base: float = DEFAULT_SPEECH_BASE_SCORE,
) -> Qbaf:
    """Paper-scale debate: each speech argument replies to one or two earlier nodes."""
    rng = random.Random(seed)
    args = [
        Argument(proposal_id(i), ArgumentKind.PROPOSAL, f"provision {i}", PROPOSAL_BASE_SCORE)
        for i in range(1, n_provisions + 1)
    ]
    edges: list[Edge] = []
    for i in range(n_speech):
        sid = f"s:{i}"
        args.append(Argument(sid, ArgumentKind.SPEECH, f"speech {i}", speech_base, i))
        if rng.random() < 0.05:
            continue  # irrelevant sentence
        pool = [a.id for a in args[:-1]]
        for t in rng.sample(pool, k=min(len(pool), rng.choice((1, 1, 2)))):
            edges.append(Edge(sid, t, _polarity(rng, attack_prob)))
    return Qbaf(tuple(args), tuple(edges), QbafMeta(f"synthetic-{seed}", "original"))


def synthetic_summary(
    source: Qbaf, keep: float = 0.2, extra_edges: int = 6, seed: int = 1
) -> Qbaf:
    """Summary-like graph: a sample of the source plus a few free edges (cycles allowed)."""
    rng = random.Random(seed)
    kept = {a.id for a in source.proposals}
    kept |= {a.id for a in source.speeches if rng.random() < keep}
    args = tuple(
        Argument(a.id, a.kind, a.text, a.base_score, None)
        for a in source.arguments
        if a.id in kept
    )
    edges = {e for e in source.edges if e.source in kept and e.target in kept}
    speech = sorted(a.id for a in args if a.is_speech)
    pairs = {(e.source, e.target) for e in edges}
    for _ in range(extra_edges):
        if len(speech) < 2:
            break
        s, t = rng.sample(speech, 2)
        if (s, t) not in pairs:
            pairs.add((s, t))
            edges.add(Edge(s, t, _polarity(rng, 0.5)))
    ordered = tuple(sorted(edges, key=lambda e: (e.source, e.target)))
    return Qbaf(args, ordered, QbafMeta(source.meta.debate_id, "summary"))
