"""DF-QuAD gradual semantics.

Acyclic graphs are evaluated exactly in one pass over a topological order.
Cyclic graphs (possible in summary QBAFs) are split into strongly connected
components: acyclic parts stay exact, and each cycle is solved by damped
fixed-point iteration started from the base scores. Failure to converge is
reported on the result rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Literal, Mapping, Sequence

import networkx as nx

from debate_qbaf.graph import Qbaf

Method = Literal["auto", "topological", "iterative", "components"]


@dataclass(frozen=True)
class SemanticsConfig:
    # None keeps the base scores stored in the graph.
    speech_base_score: float | None = None
    tolerance: float = 1e-9
    max_iterations: int = 10_000
    damping: float = 0.5

    def __post_init__(self) -> None:
        if self.speech_base_score is not None and not 0.0 <= self.speech_base_score <= 1.0:
            raise ValueError("speech_base_score must lie in [0,1]")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0,1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class StrengthMap:
    strengths: Mapping[str, float]
    converged: bool = True
    iterations: int = 1
    method: str = field(default="topological", compare=False)

    def __getitem__(self, arg_id: str) -> float:
        return self.strengths[arg_id]

    def to_dict(self) -> dict:
        return {
            "strengths": dict(sorted(self.strengths.items())),
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _check_unit(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0,1], got {value!r}")


def aggregate(values: Iterable[float]) -> float:
    """Probabilistic sum 1 - prod(1 - v); 0 for no inputs."""
    values = list(values)
    for v in values:
        _check_unit(v, "aggregated value")
    return 1.0 - prod(1.0 - v for v in values)


def combine(base: float, va: float, vs: float) -> float:
    """Move the base score down (attack-dominated) or up (support-dominated)."""
    _check_unit(base, "base")
    _check_unit(va, "attack aggregate")
    _check_unit(vs, "support aggregate")
    if va >= vs:
        return base - base * (va - vs)
    return base + (1.0 - base) * (vs - va)


def _bases(qbaf: Qbaf, config: SemanticsConfig) -> dict[str, float]:
    override = config.speech_base_score
    return {
        a.id: (override if override is not None and a.is_speech else a.base_score)
        for a in qbaf.by_id.values()
    }


def _parents(qbaf: Qbaf) -> dict[str, tuple[list[str], list[str]]]:
    parents = {}
    for arg_id in qbaf.by_id:
        att, sup = [], []
        for e in qbaf.incoming(arg_id):
            (att if e.is_attack else sup).append(e.source)
        parents[arg_id] = (att, sup)
    return parents


def _topological(qbaf: Qbaf, config: SemanticsConfig) -> StrengthMap:
    order = qbaf.topological_order
    if order is None:
        raise ValueError("topological evaluation requires an acyclic graph")
    base = _bases(qbaf, config)
    parents = _parents(qbaf)
    sigma: dict[str, float] = {}
    for arg_id in order:
        att, sup = parents[arg_id]
        sigma[arg_id] = combine(
            base[arg_id],
            aggregate(sigma[a] for a in att),
            aggregate(sigma[s] for s in sup),
        )
    return StrengthMap(sigma, converged=True, iterations=1, method="topological")


def _jacobi(
    ids: Sequence[str],
    base: Mapping[str, float],
    parents: Mapping[str, tuple[list[str], list[str]]],
    sigma: dict[str, float],
    config: SemanticsConfig,
) -> tuple[bool, int]:
    """Damped iteration over `ids` in place; other entries of `sigma` stay fixed."""
    d = config.damping
    for it in range(1, config.max_iterations + 1):
        nxt = {}
        delta = 0.0
        for arg_id in ids:
            att, sup = parents[arg_id]
            target = combine(
                base[arg_id],
                aggregate(sigma[a] for a in att),
                aggregate(sigma[s] for s in sup),
            )
            value = min(1.0, max(0.0, (1.0 - d) * sigma[arg_id] + d * target))
            delta = max(delta, abs(value - sigma[arg_id]))
            nxt[arg_id] = value
        sigma.update(nxt)
        if delta < config.tolerance:
            return True, it
    return False, config.max_iterations


def _iterative(qbaf: Qbaf, config: SemanticsConfig) -> StrengthMap:
    base = _bases(qbaf, config)
    sigma = dict(base)
    converged, iterations = _jacobi(sorted(base), base, _parents(qbaf), sigma, config)
    return StrengthMap(sigma, converged, iterations, method="iterative")


def strongly_connected_components(qbaf: Qbaf) -> list[list[str]]:
    """Components in dependency order: every edge goes to the same or a later one."""
    g = nx.DiGraph()
    g.add_nodes_from(qbaf.by_id)
    g.add_edges_from((e.source, e.target) for e in qbaf.edges)
    dag = nx.condensation(g)
    members = {c: sorted(dag.nodes[c]["members"]) for c in dag}
    order = nx.lexicographical_topological_sort(dag, key=lambda c: members[c][0])
    return [members[c] for c in order]


def _by_components(qbaf: Qbaf, config: SemanticsConfig) -> StrengthMap:
    base = _bases(qbaf, config)
    parents = _parents(qbaf)
    sigma = dict(base)
    converged, iterations = True, 1
    for comp in strongly_connected_components(qbaf):
        node = comp[0]
        if len(comp) == 1 and not any(e.target == node for e in qbaf.outgoing(node)):
            att, sup = parents[node]
            sigma[node] = combine(
                base[node],
                aggregate(sigma[a] for a in att),
                aggregate(sigma[s] for s in sup),
            )
            continue
        ok, its = _jacobi(comp, base, parents, sigma, config)
        converged = converged and ok
        iterations = max(iterations, its)
    return StrengthMap(sigma, converged, iterations, method="components")


def evaluate(
    qbaf: Qbaf, config: SemanticsConfig | None = None, method: Method = "auto"
) -> StrengthMap:
    """DF-QuAD strengths of every argument in `qbaf`."""
    config = config or SemanticsConfig()
    if method == "topological" or (method == "auto" and qbaf.is_acyclic):
        return _topological(qbaf, config)
    if method == "iterative":
        return _iterative(qbaf, config)
    return _by_components(qbaf, config)


def evaluate_with_base_sweep(
    qbaf: Qbaf,
    speech_bases: Sequence[float],
    config: SemanticsConfig | None = None,
) -> dict[float, StrengthMap]:
    config = config or SemanticsConfig()
    out = {}
    for b in speech_bases:
        _check_unit(b, "speech base score")
        cfg = SemanticsConfig(b, config.tolerance, config.max_iterations, config.damping)
        out[b] = evaluate(qbaf, cfg)
    return out
