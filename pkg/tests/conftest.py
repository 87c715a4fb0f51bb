from __future__ import annotations

import sys
from pathlib import Path

import pytest

from debate_qbaf.graph import Argument, ArgumentKind, Edge, Polarity, Qbaf, QbafMeta

FIXTURES = Path(__file__).parent / "fixtures"

_POL = {"+": Polarity.SUPPORT, "-": Polarity.ATTACK}


def make_qbaf(
    edges: list[tuple[str, str, str]],
    extra: tuple[str, ...] = (),
    speech_base: float = 0.2,
    source: str = "summary",
) -> Qbaf:
    """Tiny DSL: ids starting with 'p:' are proposals, the rest speech.

    edges are (source, target, '+' | '-').
    """
    names: list[str] = []
    for s, t, _ in edges:
        for n in (s, t):
            if n not in names:
                names.append(n)
    for n in extra:
        if n not in names:
            names.append(n)
    args = [
        Argument(n, ArgumentKind.PROPOSAL, "", 0.5)
        if n.startswith("p:")
        else Argument(n, ArgumentKind.SPEECH, "", speech_base)
        for n in names
    ]
    return Qbaf(
        tuple(args),
        tuple(Edge(s, t, _POL[p]) for s, t, p in edges),
        QbafMeta("test", source),
    )


def oracle_simple_paths(qbaf: Qbaf, start: str, end: str) -> list[list[Edge]]:
    """Every edge sequence start -> end with no repeated node (start == end allowed).

    Iterative and independent of the package's own path code.
    """
    results = []
    stack: list[tuple[str, list[Edge]]] = [(start, [])]
    while stack:
        node, seq = stack.pop()
        visited = {start} | {e.target for e in seq}
        for e in qbaf.edges:
            if e.source != node:
                continue
            if e.target == end:
                results.append(seq + [e])
            elif e.target not in visited:
                stack.append((e.target, seq + [e]))
    return results


def oracle_pro_con(qbaf: Qbaf, x: str) -> tuple[set[str], set[str]]:
    pro, con = set(), set()
    for a in qbaf.by_id:
        for seq in oracle_simple_paths(qbaf, a, x):
            attacks = sum(1 for e in seq if e.polarity is Polarity.ATTACK)
            (con if attacks % 2 else pro).add(a)
    return pro, con


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


N_CRITERIA = 11


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in results:
            ok, detail = results[n]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}")
        else:
            terminalreporter.write_line(f"FAIL criterion {n:>2}: not run or crashed before reporting")
