"""Debate QBAF data model, structural validation and path queries."""

from __future__ import annotations

import logging
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

PROPOSAL_BASE_SCORE = 0.5
DEFAULT_SPEECH_BASE_SCORE = 0.2

_PROPOSAL_ID = re.compile(r"^p:(\d+)$")


class ArgumentKind(str, Enum):
    PROPOSAL = "proposal"
    SPEECH = "speech"


class Polarity(str, Enum):
    ATTACK = "attack"
    SUPPORT = "support"


class UnknownArgumentError(KeyError):
    """Raised when a query names an argument id that is not in the graph."""


def proposal_id(index: int) -> str:
    return f"p:{index}"


def provision_index(arg_id: str) -> int | None:
    """Return the provision number encoded in a proposal id, or None."""
    m = _PROPOSAL_ID.match(arg_id)
    if m is None:
        return None
    index = int(m.group(1))
    return index if index >= 1 else None


@dataclass(frozen=True)
class Argument:
    id: str
    kind: ArgumentKind
    text: str = ""
    base_score: float = PROPOSAL_BASE_SCORE
    order: int | None = None

    @property
    def is_proposal(self) -> bool:
        return self.kind is ArgumentKind.PROPOSAL

    @property
    def is_speech(self) -> bool:
        return self.kind is ArgumentKind.SPEECH


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    polarity: Polarity

    @property
    def is_attack(self) -> bool:
        return self.polarity is Polarity.ATTACK


@dataclass(frozen=True)
class QbafMeta:
    debate_id: str = ""
    source: str = "original"


@dataclass(frozen=True)
class Qbaf:
    """A QBAF representing a debate (or a summary of one).

    The container itself accepts malformed content so that `validate` can
    report it; queries assume a valid graph.
    """

    arguments: tuple[Argument, ...]
    edges: tuple[Edge, ...] = ()
    meta: QbafMeta = field(default_factory=QbafMeta)

    @classmethod
    def build(
        cls,
        arguments: Iterable[Argument],
        edges: Iterable[Edge] = (),
        meta: QbafMeta | None = None,
    ) -> Qbaf:
        """Build a graph, collapsing repeated edges of the same polarity."""
        seen: set[Edge] = set()
        unique: list[Edge] = []
        for edge in edges:
            if edge in seen:
                logger.warning(
                    "collapsing duplicate %s edge %s -> %s",
                    edge.polarity.value, edge.source, edge.target,
                )
                continue
            seen.add(edge)
            unique.append(edge)
        return cls(tuple(arguments), tuple(unique), meta or QbafMeta())

    @cached_property
    def by_id(self) -> dict[str, Argument]:
        index: dict[str, Argument] = {}
        for arg in self.arguments:
            index.setdefault(arg.id, arg)
        return index

    @cached_property
    def _incoming(self) -> dict[str, tuple[Edge, ...]]:
        incoming: dict[str, list[Edge]] = defaultdict(list)
        for edge in self.edges:
            incoming[edge.target].append(edge)
        return {k: tuple(v) for k, v in incoming.items()}

    @cached_property
    def _outgoing(self) -> dict[str, tuple[Edge, ...]]:
        outgoing: dict[str, list[Edge]] = defaultdict(list)
        for edge in self.edges:
            outgoing[edge.source].append(edge)
        return {k: tuple(v) for k, v in outgoing.items()}

    @property
    def ids(self) -> list[str]:
        return list(self.by_id)

    @property
    def proposals(self) -> list[Argument]:
        return [a for a in self.by_id.values() if a.is_proposal]

    @property
    def speeches(self) -> list[Argument]:
        return [a for a in self.by_id.values() if a.is_speech]

    def __contains__(self, arg_id: object) -> bool:
        return arg_id in self.by_id

    def __len__(self) -> int:
        return len(self.by_id)

    def argument(self, arg_id: str) -> Argument:
        try:
            return self.by_id[arg_id]
        except KeyError:
            raise UnknownArgumentError(arg_id) from None

    def incoming(self, arg_id: str) -> tuple[Edge, ...]:
        return self._incoming.get(arg_id, ())

    def outgoing(self, arg_id: str) -> tuple[Edge, ...]:
        return self._outgoing.get(arg_id, ())

    @cached_property
    def topological_order(self) -> list[str] | None:
        """Ids ordered so every edge source precedes its target; None if cyclic."""
        sorter: TopologicalSorter[str] = TopologicalSorter()
        for arg_id in self.by_id:
            sorter.add(arg_id, *(e.source for e in self.incoming(arg_id)))
        try:
            return list(sorter.static_order())
        except CycleError:
            return None

    @property
    def is_acyclic(self) -> bool:
        return self.topological_order is not None

    def with_speech_base(self, base_score: float) -> Qbaf:
        """Copy of the graph with every speech argument's base score replaced."""
        args = tuple(
            Argument(a.id, a.kind, a.text, base_score, a.order) if a.is_speech else a
            for a in self.arguments
        )
        return Qbaf(args, self.edges, self.meta)


@dataclass(frozen=True)
class Path:
    edges: tuple[Edge, ...]

    @property
    def attack_count(self) -> int:
        return sum(1 for e in self.edges if e.is_attack)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.edges[0].source,) + tuple(e.target for e in self.edges)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    element: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}: {self.element}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def validate(qbaf: Qbaf, enforce_temporal: bool = True) -> ValidationReport:
    """Check every structural clause of a debate QBAF, reporting all breaches."""
    out: list[Violation] = []

    def flag(code: str, message: str, element: str) -> None:
        out.append(Violation(code, message, element))

    seen: set[str] = set()
    for arg in qbaf.arguments:
        if not arg.id:
            flag("empty-id", "argument id must be non-empty", repr(arg.text[:40]))
        if arg.id in seen:
            flag("duplicate-id", "argument ids must be unique", arg.id)
        seen.add(arg.id)
        if not 0.0 <= arg.base_score <= 1.0:
            flag("base-score-range", "base score must lie in [0,1]", arg.id)
        if arg.is_proposal:
            if arg.base_score != PROPOSAL_BASE_SCORE:
                flag("proposal-base", "proposal base score must be 0.5", arg.id)
            if provision_index(arg.id) is None:
                flag("proposal-id", "proposal id must encode a provision index >= 1", arg.id)
        if arg.order is not None and arg.order < 0:
            flag("order-range", "order must be non-negative", arg.id)

    if not any(a.is_proposal for a in qbaf.arguments):
        flag("no-proposal", "graph needs at least one proposal argument", qbaf.meta.debate_id)

    by_id = qbaf.by_id
    polarities: dict[tuple[str, str], set[Polarity]] = defaultdict(set)
    for edge in qbaf.edges:
        label = f"{edge.source} -{edge.polarity.value}-> {edge.target}"
        polarities[(edge.source, edge.target)].add(edge.polarity)
        missing = [n for n in (edge.source, edge.target) if n not in by_id]
        if missing:
            flag("dangling-edge", "edge endpoint does not exist", label)
            continue
        if edge.source == edge.target:
            flag("self-edge", "self-edges are not allowed", label)
        if not by_id[edge.source].is_speech:
            flag("edge-source", "edges originate from speech arguments", label)
        if (
            enforce_temporal
            and qbaf.meta.source == "original"
            and by_id[edge.source].is_speech
            and by_id[edge.target].is_speech
        ):
            s_order, t_order = by_id[edge.source].order, by_id[edge.target].order
            if s_order is not None and t_order is not None and not s_order > t_order:
                flag("temporal", "speech edges must point to earlier speech arguments", label)
    for (src, tgt), pols in polarities.items():
        if len(pols) > 1:
            flag("attack-support-overlap", "attack and support disjoint", f"{src} -> {tgt}")
    return ValidationReport(tuple(out))


def direct_relations(qbaf: Qbaf, x: str) -> tuple[frozenset[str], frozenset[str]]:
    """Return (attackers, supporters) of `x`."""
    qbaf.argument(x)
    incoming = qbaf.incoming(x)
    return (
        frozenset(e.source for e in incoming if e.is_attack),
        frozenset(e.source for e in incoming if not e.is_attack),
    )


def enumerate_paths(qbaf: Qbaf, start: str, end: str) -> set[Path]:
    """All simple directed paths from `start` to `end`.

    When start == end the result holds the simple cycles through that node.
    """
    qbaf.argument(start)
    qbaf.argument(end)
    found: set[Path] = set()
    stack: list[Edge] = []
    on_path = {start}

    def extend(node: str) -> None:
        for edge in qbaf.outgoing(node):
            nxt = edge.target
            if nxt == end:
                found.add(Path(tuple(stack) + (edge,)))
                continue
            if nxt in on_path:
                continue
            on_path.add(nxt)
            stack.append(edge)
            extend(nxt)
            stack.pop()
            on_path.discard(nxt)

    extend(start)
    return found


def _walk_parities(qbaf: Qbaf, x: str) -> dict[str, set[int]]:
    """Parities of all (possibly non-simple) walks into `x`, by source node."""
    reached: dict[str, set[int]] = defaultdict(set)
    queue: deque[tuple[str, int]] = deque()

    def push(node: str, parity: int) -> None:
        if parity not in reached[node]:
            reached[node].add(parity)
            queue.append((node, parity))

    for edge in qbaf.incoming(x):
        push(edge.source, int(edge.is_attack))
    while queue:
        node, parity = queue.popleft()
        for edge in qbaf.incoming(node):
            push(edge.source, parity ^ int(edge.is_attack))
    return reached


def _simple_path_parities(
    qbaf: Qbaf, x: str, bound: dict[str, set[int]]
) -> dict[str, set[int]]:
    # Backward DFS over simple paths; stops once every walk parity is witnessed.
    target_total = sum(len(v) for v in bound.values())
    found: dict[str, set[int]] = defaultdict(set)
    total = 0
    on_path = {x}

    class _Done(Exception):
        pass

    def record(node: str, parity: int) -> None:
        nonlocal total
        if parity not in found[node]:
            found[node].add(parity)
            total += 1
            if total == target_total:
                raise _Done

    def visit(node: str, parity: int) -> None:
        for edge in qbaf.incoming(node):
            src, p = edge.source, parity ^ int(edge.is_attack)
            if src == x:
                record(src, p)
                continue
            if src in on_path:
                continue
            record(src, p)
            on_path.add(src)
            visit(src, p)
            on_path.discard(src)

    try:
        visit(x, 0)
    except _Done:
        pass
    return found


def path_parities(qbaf: Qbaf, x: str) -> dict[str, set[int]]:
    """Map each argument with a simple path to `x` onto the attack parities seen."""
    qbaf.argument(x)
    walks = _walk_parities(qbaf, x)
    if qbaf.is_acyclic:
        return walks
    return _simple_path_parities(qbaf, x, walks)


def pro_con(qbaf: Qbaf, x: str) -> tuple[frozenset[str], frozenset[str]]:
    """Pro (even attack parity) and con (odd) arguments of `x`."""
    parities = path_parities(qbaf, x)
    pro = frozenset(n for n, ps in parities.items() if 0 in ps)
    con = frozenset(n for n, ps in parities.items() if 1 in ps)
    return pro, con


def reaches_any(qbaf: Qbaf, targets: Iterable[str]) -> set[str]:
    """Arguments with a directed path (>= 1 edge) into some target."""
    seen: set[str] = set()
    queue = deque(targets)
    while queue:
        node = queue.popleft()
        for edge in qbaf.incoming(node):
            if edge.source not in seen:
                seen.add(edge.source)
                queue.append(edge.source)
    return seen
