"""Pure-Python implementations of the hot kernels.

Must stay bit-identical to ``_ckernels.pyx``: every floating-point expression
below is evaluated in the same order there.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_INF = float("inf")
_WRAP = 1 << 64
_HALF = 1 << 63

OP_CONST, OP_ADD, OP_SUB, OP_NEG = 0, 1, 2, 3
EQ, NE, LT, LE, GT, GE = 0, 1, 2, 3, 4, 5


def _wrap(x: int) -> int:
    return ((x + _HALF) % _WRAP) - _HALF


def run_statements(test) -> list[int]:
    values: list[int] = []
    append = values.append
    for op, a, b in test:
        if op == OP_CONST:
            append(a)
        elif op == OP_ADD:
            append(_wrap(values[a] + values[b]))
        elif op == OP_SUB:
            append(_wrap(values[a] - values[b]))
        else:
            append(_wrap(-values[a]))
    return values


def branch_distances(relop: int, v: int, k: int) -> tuple[float, float]:
    """Return ``(d_true, d_false)`` for the predicate ``v relop k``."""
    fv = float(v)
    fk = float(k)
    if relop == EQ:
        return (0.0, 1.0) if v == k else (abs(fv - fk), 0.0)
    if relop == NE:
        return (1.0, 0.0) if v == k else (0.0, abs(fv - fk))
    if relop == LT:
        return (0.0, fk - fv) if v < k else (fv - fk + 1.0, 0.0)
    if relop == LE:
        return (0.0, fk - fv + 1.0) if v <= k else (fv - fk, 0.0)
    if relop == GT:
        return (0.0, fv - fk) if v > k else (fk - fv + 1.0, 0.0)
    # GE
    return (0.0, fv - fk + 1.0) if v >= k else (fk - fv, 0.0)


class CompiledSubject:
    """Flat-array view of a subject; evaluates all goal fitnesses of one test.

    Goal ``2*i`` is the true branch of node ``i``, ``2*i + 1`` the false branch.
    Nodes are in topological order (parent index < child index).
    """

    def __init__(self, slots, relops, consts, parents, parent_outcomes) -> None:
        self.slots = [int(x) for x in slots]
        self.relops = [int(x) for x in relops]
        self.consts = [int(x) for x in consts]
        self.parents = [int(x) for x in parents]
        self.parent_outcomes = [int(x) for x in parent_outcomes]
        self.n_nodes = len(self.slots)
        self.n_goals = 2 * self.n_nodes
        for i, p in enumerate(self.parents):
            if p >= i:
                raise ValueError("nodes must be topologically ordered")

    def fitness(self, test) -> list[float]:
        values = run_statements(test)
        length = len(values)
        n = self.n_nodes
        out = [0.0] * (2 * n)
        # per node: 1 reached & evaluable, 2 reached & unevaluable, 0 unreached
        state = [0] * n
        outcome = [0] * n  # 1 if the predicate held
        d_true = [0.0] * n
        d_false = [0.0] * n
        level = [0] * n
        nu_dec = [0.0] * n
        slots, relops, consts = self.slots, self.relops, self.consts
        parents, pouts = self.parents, self.parent_outcomes
        for i in range(n):
            p = parents[i]
            if p < 0 or (state[p] == 1 and outcome[p] == pouts[i]):
                s = slots[i]
                if s < length:
                    dt, df = branch_distances(relops[i], values[s], consts[i])
                    state[i] = 1
                    outcome[i] = 1 if dt == 0.0 else 0
                    d_true[i] = dt
                    d_false[i] = df
                    out[2 * i] = dt / (dt + 1.0)
                    out[2 * i + 1] = df / (df + 1.0)
                else:
                    state[i] = 2
                    out[2 * i] = 1.0
                    out[2 * i + 1] = 1.0
            else:
                if state[p] == 0:
                    level[i] = level[p] + 1
                    nu_dec[i] = nu_dec[p]
                else:
                    level[i] = 1
                    if state[p] == 2:
                        nu_dec[i] = 1.0
                    else:
                        d = d_true[p] if pouts[i] == 1 else d_false[p]
                        nu_dec[i] = d / (d + 1.0)
                f = level[i] + nu_dec[i]
                out[2 * i] = f
                out[2 * i + 1] = f
        return out


def nondominated_ranks(matrix) -> np.ndarray:
    """Front index (0-based) of each row under Pareto minimisation."""
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    n = m.shape[0]
    ranks = np.zeros(n, dtype=np.int64)
    if n == 0:
        return ranks
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    rows = [tuple(r) for r in m.tolist()]
    for p in range(n):
        rp = rows[p]
        for q in range(p + 1, n):
            rq = rows[q]
            p_le = True
            q_le = True
            strict_p = False
            strict_q = False
            for a, b in zip(rp, rq):
                if a < b:
                    q_le = False
                    strict_p = True
                elif b < a:
                    p_le = False
                    strict_q = True
                if not p_le and not q_le:
                    break
            if p_le and strict_p:
                dominated_by[p].append(q)
                counts[q] += 1
            elif q_le and strict_q:
                dominated_by[q].append(p)
                counts[p] += 1
    front = [i for i in range(n) if counts[i] == 0]
    rank = 0
    while front:
        nxt = []
        for p in front:
            ranks[p] = rank
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    nxt.append(q)
        front = nxt
        rank += 1
    return ranks


def shift_refs(stmts: list, start: int, threshold: int, delta: int, make) -> None:
    """Add ``delta`` to every operand ``>= threshold`` of statements ``start..``; ``make`` builds a statement."""
    for q in range(start, len(stmts)):
        op, a, b = stmts[q]
        if op == OP_CONST:
            continue
        na = a + delta if a >= threshold else a
        nb = b + delta if op != OP_NEG and b >= threshold else b
        if na != a or nb != b:
            stmts[q] = make((op, na, nb))


def invalid_refs(stmts: list, start: int) -> list[int]:
    """Positions from ``start`` whose operands do not all reference an earlier slot."""
    out = []
    for q in range(max(start, 0), len(stmts)):
        op, a, b = stmts[q]
        if op == OP_CONST:
            continue
        if a >= q or a < 0 or (op != OP_NEG and (b >= q or b < 0)):
            out.append(q)
    return out
