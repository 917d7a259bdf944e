from __future__ import annotations

import pytest

from sbsttune.subject import BranchNode, Subject, SubjectParams, generate_subject


def chain_subject(depth: int, relop: str = "==", const: int = 3, outcome: bool = True, sid: str = "chain") -> Subject:
    """Nodes 0..depth-1, each nested under the previous one's ``outcome`` branch, all reading slot 0."""
    nodes = [BranchNode(0, 0, relop, const)]
    for i in range(1, depth):
        nodes.append(BranchNode(i, 0, relop, const, (i - 1, outcome)))
    return Subject(sid, tuple(nodes), params=SubjectParams(const_range=(0, 8)))


@pytest.fixture
def small_subjects() -> list[Subject]:
    return [generate_subject(seed, SubjectParams(roots=3, max_depth=3, slot_span=6, const_range=(-10, 10)), f"t{seed}")
            for seed in range(4)]


_REPORT: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Collects acceptance lines; they are printed in the terminal summary."""
    def add(criterion: str, ok: bool | None, detail: str) -> None:
        status = "PASS" if ok else "FAIL" if ok is not None else "INFO"
        line = f"[{criterion}] {status}: {detail}"
        _REPORT.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
