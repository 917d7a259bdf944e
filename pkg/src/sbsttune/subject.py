"""Synthetic subjects under test.

A subject is a forest of branch predicates. Each predicate compares one slot of
the executed test (the value produced by the statement at that position)
against a constant. A nested node is only reached when its parent is reached
and evaluates to the required outcome, which mirrors control dependence in
real code.

Goals are indexed densely: goal ``2*i`` is the true branch of node ``i`` and
goal ``2*i + 1`` its false branch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

from ._accel import CompiledSubject, branch_distances, run_statements
from .seeding import RandomSource

RELOPS = ("==", "!=", "<", "<=", ">", ">=")
INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

OP_CONST, OP_ADD, OP_SUB, OP_NEG = 0, 1, 2, 3
OP_NAMES = ("const", "add", "sub", "neg")


class Statement(NamedTuple):
    """One statement. ``Const`` stores its constant in ``a``; ``Neg`` uses ``a`` only."""

    op: int
    a: int
    b: int = 0

    def __repr__(self) -> str:
        if self.op == OP_CONST:
            return f"Const({self.a})"
        if self.op == OP_NEG:
            return f"Neg({self.a})"
        return f"{OP_NAMES[self.op].capitalize()}({self.a}, {self.b})"


def Const(k: int) -> Statement:
    return Statement(OP_CONST, k, 0)


def Add(i: int, j: int) -> Statement:
    return Statement(OP_ADD, i, j)


def Sub(i: int, j: int) -> Statement:
    return Statement(OP_SUB, i, j)


def Neg(i: int) -> Statement:
    return Statement(OP_NEG, i, 0)


TestCase = tuple  # tuple[Statement, ...]; hashable, compared by statement list


def validate_test(test: Sequence[Statement], max_len: int | None = None) -> None:
    if len(test) < 1:
        raise ValueError("a test case needs at least one statement")
    if max_len is not None and len(test) > max_len:
        raise ValueError(f"test length {len(test)} exceeds maximum {max_len}")
    for pos, (op, a, b) in enumerate(test):
        if op == OP_CONST:
            if not INT64_MIN <= a <= INT64_MAX:
                raise ValueError(f"statement {pos}: constant {a} is not a 64-bit integer")
        elif op in (OP_ADD, OP_SUB):
            if not (0 <= a < pos and 0 <= b < pos):
                raise ValueError(f"statement {pos}: operands ({a}, {b}) must reference earlier slots")
        elif op == OP_NEG:
            if not 0 <= a < pos:
                raise ValueError(f"statement {pos}: operand {a} must reference an earlier slot")
        else:
            raise ValueError(f"statement {pos}: unknown opcode {op}")


@dataclass(frozen=True)
class BranchNode:
    id: int
    slot: int
    relop: str
    const: int
    parent: tuple[int, bool] | None = None


@dataclass(frozen=True)
class Goal:
    node: int
    outcome: bool

    @property
    def index(self) -> int:
        return 2 * self.node + (0 if self.outcome else 1)

    @staticmethod
    def from_index(index: int) -> Goal:
        return Goal(index // 2, index % 2 == 0)


@dataclass(frozen=True)
class SubjectParams:
    roots: int = 5
    max_depth: int = 5
    child_prob: float = 0.5
    slot_span: int = 12
    const_range: tuple[int, int] = (-50, 50)

    def validate(self) -> None:
        if self.roots < 1:
            raise ValueError("roots must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 <= self.child_prob <= 1.0:
            raise ValueError("child_prob must lie in [0, 1]")
        if self.slot_span < 1:
            raise ValueError("slot_span must be >= 1")
        lo, hi = self.const_range
        if lo > hi or lo < INT64_MIN or hi > INT64_MAX:
            raise ValueError(f"invalid const_range {self.const_range}")

    def to_json(self) -> dict[str, Any]:
        return {
            "roots": self.roots,
            "max_depth": self.max_depth,
            "child_prob": self.child_prob,
            "slot_span": self.slot_span,
            "const_range": list(self.const_range),
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> SubjectParams:
        return cls(
            roots=int(doc["roots"]),
            max_depth=int(doc["max_depth"]),
            child_prob=float(doc["child_prob"]),
            slot_span=int(doc["slot_span"]),
            const_range=(int(doc["const_range"][0]), int(doc["const_range"][1])),
        )


@dataclass(frozen=True)
class Subject:
    id: str
    nodes: tuple[BranchNode, ...]
    seed: int = 0
    params: SubjectParams = field(default_factory=SubjectParams)

    def __post_init__(self) -> None:
        for pos, node in enumerate(self.nodes):
            if node.id != pos:
                raise ValueError(f"{self.id}: node ids must be 0..n-1 in order, found {node.id} at {pos}")
            if node.relop not in RELOPS:
                raise ValueError(f"{self.id}: node {node.id} has unknown relop {node.relop!r}")
            if node.slot < 0:
                raise ValueError(f"{self.id}: node {node.id} has negative slot")
            if node.parent is not None and not 0 <= node.parent[0] < node.id:
                raise ValueError(f"{self.id}: node {node.id} parent must be an earlier node")
        kernel = CompiledSubject(
            [n.slot for n in self.nodes],
            [RELOPS.index(n.relop) for n in self.nodes],
            [n.const for n in self.nodes],
            [-1 if n.parent is None else n.parent[0] for n in self.nodes],
            [0 if n.parent is None else int(n.parent[1]) for n in self.nodes],
        )
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "_children", _child_index(self.nodes))

    @property
    def n_goals(self) -> int:
        return 2 * len(self.nodes)

    @property
    def const_range(self) -> tuple[int, int]:
        return self.params.const_range

    def goals(self) -> list[Goal]:
        return [Goal.from_index(g) for g in range(self.n_goals)]

    def root_goals(self) -> list[int]:
        return [g for n in self.nodes if n.parent is None for g in (2 * n.id, 2 * n.id + 1)]

    def child_goal_indices(self, goal_index: int) -> list[int]:
        return self._children[goal_index]

    def parent_goal_index(self, goal_index: int) -> int | None:
        parent = self.nodes[goal_index // 2].parent
        return None if parent is None else Goal(*parent).index

    def fitness_vector(self, test: Sequence[Statement]) -> list[float]:
        """Fitness of every goal for one test (kernel fast path)."""
        return self.kernel.fitness(test)

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "seed": self.seed,
            "params": self.params.to_json(),
            "nodes": [
                {
                    "id": n.id,
                    "slot": n.slot,
                    "relop": n.relop,
                    "const": n.const,
                    "parent": None if n.parent is None else [n.parent[0], n.parent[1]],
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> Subject:
        nodes = tuple(
            BranchNode(
                id=int(n["id"]),
                slot=int(n["slot"]),
                relop=n["relop"],
                const=int(n["const"]),
                parent=None if n["parent"] is None else (int(n["parent"][0]), bool(n["parent"][1])),
            )
            for n in doc["nodes"]
        )
        return cls(id=str(doc["id"]), nodes=nodes, seed=int(doc.get("seed", 0)), params=SubjectParams.from_json(doc["params"]))


def _child_index(nodes: Sequence[BranchNode]) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(2 * len(nodes))]
    for n in nodes:
        if n.parent is not None:
            g = Goal(*n.parent).index
            out[g].extend((2 * n.id, 2 * n.id + 1))
    return out


def generate_subject(seed: int, params: SubjectParams | None = None, subject_id: str | None = None) -> Subject:
    params = params or SubjectParams()
    params.validate()
    rng = RandomSource(seed)
    lo, hi = params.const_range
    nodes: list[BranchNode] = []

    def spawn(depth: int, parent: tuple[int, bool] | None) -> None:
        node = BranchNode(
            id=len(nodes),
            slot=rng.randrange(params.slot_span),
            relop=RELOPS[rng.randrange(len(RELOPS))],
            const=rng.randint(lo, hi),
            parent=parent,
        )
        nodes.append(node)
        if depth < params.max_depth:
            for outcome in (True, False):
                if rng.random() < params.child_prob:
                    spawn(depth + 1, (node.id, outcome))

    for _ in range(params.roots):
        spawn(1, None)
    return Subject(id=subject_id or f"subject-{seed}", nodes=tuple(nodes), seed=seed, params=params)


# -- reference (trace-based) execution ----------------------------------------


@dataclass(frozen=True)
class NodeStatus:
    reached: bool
    evaluable: bool = False
    value: bool | None = None
    d_true: float = math.inf
    d_false: float = math.inf


@dataclass(frozen=True)
class ExecutionTrace:
    slot_values: tuple[int, ...]
    node_status: tuple[NodeStatus, ...]


def execute(subject: Subject, test: Sequence[Statement]) -> ExecutionTrace:
    values = run_statements(tuple(test))
    status: list[NodeStatus] = []
    for node in subject.nodes:
        if node.parent is not None:
            ps = status[node.parent[0]]
            if not (ps.reached and ps.evaluable and ps.value == node.parent[1]):
                status.append(NodeStatus(False))
                continue
        if node.slot >= len(values):
            status.append(NodeStatus(True))
            continue
        dt, df = branch_distances(RELOPS.index(node.relop), values[node.slot], node.const)
        status.append(NodeStatus(True, True, dt == 0.0, dt, df))
    return ExecutionTrace(tuple(values), tuple(status))


def normalise(d: float) -> float:
    return 1.0 if math.isinf(d) else d / (d + 1.0)


def goal_fitness(subject: Subject, trace: ExecutionTrace, goal: Goal | int) -> float:
    """Approach level plus normalised branch distance; 0 iff the goal is covered."""
    g = goal if isinstance(goal, Goal) else Goal.from_index(goal)
    if not 0 <= g.node < len(subject.nodes):
        raise KeyError(f"{subject.id} has no goal {g}")
    node_id, outcome = g.node, g.outcome
    level = 0
    while True:
        st = trace.node_status[node_id]
        if st.reached:
            d = st.d_true if outcome else st.d_false
            return level + normalise(d)
        node_id, outcome = subject.nodes[node_id].parent  # unreached nodes always have a parent
        level += 1


def covered_goals(subject: Subject, trace: ExecutionTrace) -> set[Goal]:
    return {g for g in subject.goals() if goal_fitness(subject, trace, g) == 0.0}


def children(subject: Subject, goal: Goal) -> list[Goal]:
    return [Goal.from_index(c) for c in subject.child_goal_indices(goal.index)]


def coverage(subject: Subject, goals: Iterable[Any]) -> float:
    return len(set(goals)) / subject.n_goals


# -- suite files ---------------------------------------------------------------


def dump_suite(subjects: Sequence[Subject]) -> str:
    return json.dumps([s.to_json() for s in subjects], indent=1, sort_keys=True) + "\n"


def load_suite(text: str) -> list[Subject]:
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise ValueError("a suite file is a JSON array of subjects")
    subjects = [Subject.from_json(d) for d in doc]
    ids = [s.id for s in subjects]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate subject ids in suite")
    return subjects
