"""Genetic operators shared by DynaMOSA and MIO.

All operators take an explicit :class:`~sbsttune.seeding.RandomSource`; none
keeps state between calls.
"""

from __future__ import annotations

import functools
import math
from typing import Sequence

from ._accel import invalid_refs, shift_refs
from .seeding import RandomSource
from .subject import OP_ADD, OP_CONST, OP_NEG, OP_SUB, Statement, Subject

_INSERT, _DELETE, _REPLACE = 0, 1, 2

# skips the generated NamedTuple __new__; measurably cheaper in the mutation loop
_stmt = functools.partial(tuple.__new__, Statement)


def random_statement(subject: Subject, position: int, rng: RandomSource) -> Statement:
    """A fresh statement valid at ``position`` (operands point to earlier slots)."""
    rand = rng.random
    op = OP_CONST if position == 0 else int(rand() * 4)
    if op == OP_CONST:
        lo, hi = subject.const_range
        return _stmt((OP_CONST, lo + int(rand() * (hi - lo + 1)), 0))
    if op == OP_NEG:
        return _stmt((OP_NEG, int(rand() * position), 0))
    return _stmt((op, int(rand() * position), int(rand() * position)))


def random_testcase(subject: Subject, max_len: int, rng: RandomSource) -> tuple:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    length = 1 + rng.below(max_len)
    return tuple(random_statement(subject, pos, rng) for pos in range(length))


def _fix_operands(stmts: list, start: int, rng: RandomSource) -> None:
    """Re-draw operands that do not reference an earlier slot."""
    rand = rng.random
    for pos in invalid_refs(stmts, start):
        op, a, b = stmts[pos]
        if pos == 0:
            stmts[pos] = _stmt((OP_CONST, 0, 0))
            continue
        bad_a = a >= pos or a < 0
        bad_b = op != OP_NEG and (b >= pos or b < 0)
        a = int(rand() * pos) if bad_a else a
        b = (int(rand() * pos) if bad_b else b) if op != OP_NEG else 0
        stmts[pos] = _stmt((op, a, b))


def _insert(stmts: list, subject: Subject, rng: RandomSource) -> None:
    pos = rng.below(len(stmts) + 1)
    stmts.insert(pos, random_statement(subject, pos, rng))
    # keep data flow of later statements: references at or after pos shift by one
    shift_refs(stmts, pos + 1, pos, 1, _stmt)


def _delete(stmts: list, rng: RandomSource) -> None:
    pos = rng.below(len(stmts))
    del stmts[pos]
    shift_refs(stmts, pos, pos + 1, -1, _stmt)
    # references to the removed statement now point at q itself or later
    _fix_operands(stmts, pos, rng)


def _replace(stmts: list, subject: Subject, rng: RandomSource) -> None:
    pos = rng.below(len(stmts))
    stmts[pos] = random_statement(subject, pos, rng)


def mutate_once(stmts: list, max_len: int, subject: Subject, rng: RandomSource) -> None:
    """One insert/delete/replace step in place; a rejected pick redraws among the rest."""
    kind = rng.below(3)
    if kind == _INSERT and len(stmts) >= max_len:
        kind = _DELETE if rng.below(2) == 0 else _REPLACE
    if kind == _DELETE and len(stmts) <= 1:
        kind = _INSERT if len(stmts) < max_len and rng.below(2) == 0 else _REPLACE
    if kind == _INSERT:
        _insert(stmts, subject, rng)
    elif kind == _DELETE:
        _delete(stmts, rng)
    else:
        _replace(stmts, subject, rng)


def apply_mutations(test: Sequence[Statement], n_m: int, max_len: int, subject: Subject, rng: RandomSource) -> tuple:
    if n_m < 0:
        raise ValueError("n_m must be >= 0")
    if n_m == 0:
        return tuple(test)
    stmts = list(test)
    if len(stmts) > max_len:
        del stmts[max_len:]
    for _ in range(n_m):
        mutate_once(stmts, max_len, subject, rng)
    return tuple(stmts)


def crossover(
    p1: Sequence[Statement], p2: Sequence[Statement], rng: RandomSource, max_len: int | None = None
) -> tuple[tuple, tuple]:
    """Single-point relative crossover.

    One uniform split fraction ``u`` gives cut points ``1 + floor(u*len)`` in
    each parent, so each cut is uniform over its parent and identical parents
    reproduce themselves.
    """
    u = rng.random()
    alpha = 1 + int(u * len(p1))
    beta = 1 + int(u * len(p2))
    c1 = list(p1[:alpha]) + list(p2[beta:])
    c2 = list(p2[:beta]) + list(p1[alpha:])
    _fix_operands(c1, alpha, rng)
    _fix_operands(c2, beta, rng)
    if max_len is not None:
        del c1[max_len:]
        del c2[max_len:]
    return tuple(c1), tuple(c2)


def rank_select(n: int, bias: float, rng: RandomSource) -> int:
    """Linear-ranking selection; index 0 is the best-ranked individual."""
    if not 1.0 < bias < 2.0:
        raise ValueError(f"rank bias must lie in (1, 2), got {bias}")
    if n < 1:
        raise ValueError("n must be >= 1")
    u = rng.random()
    r = int(n * (bias - math.sqrt(bias * bias - 4.0 * (bias - 1.0) * u)) / (2.0 * (bias - 1.0)))
    return min(max(r, 0), n - 1)


def tournament_select(n: int, size: int, rng: RandomSource) -> int:
    """Best of ``size`` uniform draws (with replacement) over ranks ``0..n-1``."""
    if size < 1:
        raise ValueError("tournament size must be >= 1")
    best = n
    for _ in range(size):
        i = rng.below(n)
        if i < best:
            best = i
    return best


class Archive:
    """Covered goal -> shortest covering test seen so far. Entries are never removed."""

    def __init__(self, subject: Subject) -> None:
        self.subject = subject
        self.witnesses: dict[int, tuple] = {}

    def __len__(self) -> int:
        return len(self.witnesses)

    def __contains__(self, goal: int) -> bool:
        return goal in self.witnesses

    @property
    def coverage(self) -> float:
        return len(self.witnesses) / self.subject.n_goals

    def covered(self) -> list[int]:
        return sorted(self.witnesses)

    def update(self, test: tuple, fitness: Sequence[float] | None = None) -> list[int]:
        """Record ``test`` for every goal it covers; return the newly covered goals."""
        if fitness is None:
            fitness = self.subject.fitness_vector(test)
        new: list[int] = []
        witnesses = self.witnesses
        for g in [g for g, f in enumerate(fitness) if f == 0.0]:
            old = witnesses.get(g)
            if old is None:
                witnesses[g] = test
                new.append(g)
            elif len(test) < len(old):
                witnesses[g] = test
        return new


def archive_update(archive: Archive, subject: Subject, test: tuple) -> list[int]:
    if archive.subject is not subject:
        raise ValueError("archive belongs to a different subject")
    return archive.update(test)
