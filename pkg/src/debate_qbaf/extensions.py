"""Bipolar set-attacks, d-admissibility and d-preferred extensions.

Defence and conflict-freeness only ever look at singleton set-attacks, so the
bipolar framework is compiled once into a Dung-style attack relation
(`DerivedAf`) holding every direct, indirect and supported attack. Preferred
extensions of that relation are enumerated with a labelling search.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from debate_qbaf.graph import Polarity, Qbaf

DEFAULT_BUDGET_SECONDS = 30.0
BRUTE_FORCE_LIMIT = 20


class BudgetExceeded(RuntimeError):
    """The extension search ran out of its time budget."""


@dataclass(frozen=True)
class DerivedAf:
    nodes: tuple[str, ...]
    attacks: frozenset[tuple[str, str]]

    def attackers_of(self, x: str) -> set[str]:
        return {a for a, b in self.attacks if b == x}

    def to_apx(self) -> str:
        """ASPARTIX text (`arg(a).` / `att(a,b).`) for third-party solvers."""
        lines = [f"arg({n})." for n in sorted(self.nodes)]
        lines += [f"att({a},{b})." for a, b in sorted(self.attacks)]
        return "\n".join(lines) + "\n"


Extension = frozenset


def _support_successors(qbaf: Qbaf, node: str) -> list[str]:
    return [e.target for e in qbaf.outgoing(node) if e.polarity is Polarity.SUPPORT]


def _support_predecessors(qbaf: Qbaf, node: str) -> list[str]:
    return [e.source for e in qbaf.incoming(node) if e.polarity is Polarity.SUPPORT]


def _bfs(start: str, step, blocked: str) -> set[str]:
    # Nodes reachable from `start` in >= 1 step; `blocked` may be reached but not expanded.
    seen: set[str] = set()
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in step(node):
            if nxt in seen or nxt == start:
                continue
            seen.add(nxt)
            if nxt != blocked:
                queue.append(nxt)
    return seen


def _supported_attackers(qbaf: Qbaf, y: str, b: str) -> set[str]:
    """Sources of simple support chains into `y` (>= 1 edge) that can be followed by y -> b."""
    # b may start the chain (closing a cycle) but never sit inside it.
    return _bfs(y, lambda n: _support_predecessors(qbaf, n), blocked=b)


def _indirect_targets(qbaf: Qbaf, a: str, z: str) -> set[str]:
    """Ends of simple support chains out of `z` (>= 1 edge), entered by the attack a -> z."""
    return _bfs(z, lambda n: _support_successors(qbaf, n), blocked=a)


def supported_attack_exists(qbaf: Qbaf, a: str, b: str) -> bool:
    qbaf.argument(a)
    qbaf.argument(b)
    for edge in qbaf.incoming(b):
        if edge.is_attack and a in _supported_attackers(qbaf, edge.source, b):
            return True
    return False


def indirect_attack_exists(qbaf: Qbaf, a: str, b: str) -> bool:
    qbaf.argument(a)
    qbaf.argument(b)
    for edge in qbaf.outgoing(a):
        if edge.is_attack and edge.target != b and b in _indirect_targets(qbaf, a, edge.target):
            return True
    return False


def indirect_support_exists(qbaf: Qbaf, a: str, b: str) -> bool:
    """A simple chain of >= 2 supports from a to b."""
    qbaf.argument(a)
    qbaf.argument(b)
    for mid in _support_successors(qbaf, a):
        if mid != b and b in _bfs(mid, lambda n: _support_successors(qbaf, n), blocked=a):
            return True
    return False


def compile_derived_af(qbaf: Qbaf) -> DerivedAf:
    """Singleton set-attack relation: direct, indirect and supported attacks."""
    attacks: set[tuple[str, str]] = set()
    for edge in qbaf.edges:
        if not edge.is_attack:
            continue
        y, b = edge.source, edge.target
        attacks.add((y, b))
        for a in _supported_attackers(qbaf, y, b):
            attacks.add((a, b))
        for t in _indirect_targets(qbaf, y, b):
            attacks.add((y, t))
    return DerivedAf(tuple(qbaf.ids), frozenset(attacks))


# Labels for the search.
_BLANK, _IN, _OUT, _MUST_OUT, _UNDEC = range(5)


class _Search:
    def __init__(self, af: DerivedAf, budget_seconds: float | None):
        self.names = sorted(af.nodes)
        index = {n: i for i, n in enumerate(self.names)}
        n = len(self.names)
        self.attackers: list[list[int]] = [[] for _ in range(n)]
        self.targets: list[list[int]] = [[] for _ in range(n)]
        self.self_attacking = [False] * n
        for a, b in sorted(af.attacks):
            ia, ib = index[a], index[b]
            self.targets[ia].append(ib)
            self.attackers[ib].append(ia)
            if ia == ib:
                self.self_attacking[ia] = True
        self.index = index
        self.degree = [len(self.attackers[i]) + len(self.targets[i]) for i in range(n)]
        self.deadline = None if budget_seconds is None else time.monotonic() + budget_seconds
        self.found: list[int] = []

    def check_budget(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExceeded("extension search exceeded its time budget")

    def initial(self) -> list[int]:
        return [_UNDEC if s else _BLANK for s in self.self_attacking]

    def make_in(self, labels: list[int], x: int) -> None:
        labels[x] = _IN
        for t in self.targets[x]:
            labels[t] = _OUT
        for a in self.attackers[x]:
            if labels[a] != _OUT:
                labels[a] = _MUST_OUT

    def dead(self, labels: list[int]) -> bool:
        # A MUST_OUT node that can no longer be attacked by any IN node.
        for i, lab in enumerate(labels):
            if lab == _MUST_OUT and not any(labels[a] == _BLANK for a in self.attackers[i]):
                return True
        return False

    def propagate(self, labels: list[int]) -> bool:
        """Force IN every BLANK node whose attackers are all (to be) OUT."""
        changed = True
        while changed:
            changed = False
            for i, lab in enumerate(labels):
                if lab == _BLANK and all(
                    labels[a] in (_OUT, _MUST_OUT) for a in self.attackers[i]
                ):
                    self.make_in(labels, i)
                    changed = True
            if self.dead(labels):
                return False
        return True

    def choose(self, labels: list[int]) -> int | None:
        best, best_deg = None, -1
        for i, lab in enumerate(labels):
            if lab == _BLANK and self.degree[i] > best_deg:
                best, best_deg = i, self.degree[i]
        return best

    def mask(self, labels: list[int], *wanted: int) -> int:
        m = 0
        for i, lab in enumerate(labels):
            if lab in wanted:
                m |= 1 << i
        return m

    def enumerate(self, labels: list[int]) -> None:
        self.check_budget()
        if not self.propagate(labels):
            return
        reachable = self.mask(labels, _IN, _BLANK)
        # Every leaf below is a subset of IN u BLANK; skip if already covered.
        if any(reachable & f == reachable for f in self.found):
            return
        y = self.choose(labels)
        if y is None:
            if _MUST_OUT not in labels:
                self.found.append(self.mask(labels, _IN))
            return
        branch = labels.copy()
        self.make_in(branch, y)
        self.enumerate(branch)
        labels = labels.copy()
        labels[y] = _UNDEC
        self.enumerate(labels)

    def witness(self, labels: list[int]) -> bool:
        self.check_budget()
        if not self.propagate(labels):
            return False
        y = self.choose(labels)
        if y is None:
            return _MUST_OUT not in labels
        branch = labels.copy()
        self.make_in(branch, y)
        if self.witness(branch):
            return True
        labels = labels.copy()
        labels[y] = _UNDEC
        return self.witness(labels)

    def decode(self, m: int) -> Extension:
        return frozenset(self.names[i] for i in range(len(self.names)) if m >> i & 1)


def _maximal(masks: Iterable[int]) -> list[int]:
    masks = sorted(set(masks), key=lambda m: -bin(m).count("1"))
    kept: list[int] = []
    for m in masks:
        if not any(m & k == m for k in kept):
            kept.append(m)
    return kept


def _sorted_extensions(exts: Iterable[Extension]) -> list[Extension]:
    return sorted(exts, key=lambda e: sorted(e))


def preferred_extensions(
    af: DerivedAf, budget_seconds: float | None = DEFAULT_BUDGET_SECONDS
) -> list[Extension]:
    """All d-preferred extensions, sorted. Raises BudgetExceeded on timeout."""
    search = _Search(af, budget_seconds)
    search.enumerate(search.initial())
    return _sorted_extensions(search.decode(m) for m in _maximal(search.found))


def credulously_accepted(
    af: DerivedAf, x: str, budget_seconds: float | None = DEFAULT_BUDGET_SECONDS
) -> bool:
    """True iff some admissible set (hence some preferred extension) contains x."""
    search = _Search(af, budget_seconds)
    if x not in search.index:
        raise KeyError(x)
    i = search.index[x]
    labels = search.initial()
    if labels[i] != _BLANK:
        return False
    search.make_in(labels, i)
    return search.witness(labels)


def is_conflict_free(af: DerivedAf, members: Iterable[str]) -> bool:
    members = set(members)
    return not any(a in members and b in members for a, b in af.attacks)


def is_admissible(af: DerivedAf, members: Iterable[str]) -> bool:
    members = set(members)
    if not is_conflict_free(af, members):
        return False
    attacked = {b for a, b in af.attacks if a in members}
    return all(a in attacked for a, b in af.attacks if b in members)


def brute_force_preferred(af: DerivedAf) -> list[Extension]:
    """Reference enumeration of d-preferred extensions over every subset."""
    nodes = sorted(af.nodes)
    if len(nodes) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} arguments")
    admissible = [
        frozenset(subset)
        for k in range(len(nodes) + 1)
        for subset in combinations(nodes, k)
        if is_admissible(af, subset)
    ]
    preferred = [s for s in admissible if not any(s < t for t in admissible)]
    return _sorted_extensions(preferred)
