import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbsttune.operators import (
    Archive,
    apply_mutations,
    archive_update,
    crossover,
    mutate_once,
    random_testcase,
    rank_select,
    tournament_select,
)
from sbsttune.seeding import RandomSource
from sbsttune.subject import Add, BranchNode, Const, Neg, Subject, SubjectParams, execute, generate_subject, goal_fitness, validate_test

from conftest import chain_subject

SUBJECT = generate_subject(1, SubjectParams(const_range=(-5, 5)))


def chi_square(observed: Counter, expected: dict) -> float:
    return sum((observed.get(k, 0) - e) ** 2 / e for k, e in expected.items())


def test_random_testcase_examples():
    rng = RandomSource(0)
    for _ in range(50):
        t = random_testcase(SUBJECT, 1, rng)
        assert len(t) == 1 and t[0].op == 0 and -5 <= t[0].a <= 5
    assert random_testcase(SUBJECT, 20, RandomSource(9)) == random_testcase(SUBJECT, 20, RandomSource(9))
    with pytest.raises(ValueError):
        random_testcase(SUBJECT, 0, rng)


def test_random_testcase_length_uniform():
    rng = RandomSource(1)
    n, max_len = 10_000, 10
    counts = Counter(len(random_testcase(SUBJECT, max_len, rng)) for _ in range(n))
    # chi-square with 9 degrees of freedom; 27.88 is the 0.999 quantile
    assert chi_square(counts, {k: n / max_len for k in range(1, max_len + 1)}) < 27.88


def test_zero_mutations_returns_input():
    t = random_testcase(SUBJECT, 10, RandomSource(2))
    assert apply_mutations(t, 0, 10, SUBJECT, RandomSource(3)) == t
    with pytest.raises(ValueError):
        apply_mutations(t, -1, 10, SUBJECT, RandomSource(3))


def test_length_one_delete_is_redrawn():
    # every step on a length-1 test must keep at least one statement
    rng = RandomSource(4)
    for _ in range(2000):
        stmts = [Const(1)]
        mutate_once(stmts, 1, SUBJECT, rng)
        assert len(stmts) == 1
        validate_test(stmts)


def test_mutation_fuzz_keeps_tests_valid():
    rng = RandomSource(5)
    t = random_testcase(SUBJECT, 12, rng)
    for i in range(100_000):
        max_len = 12
        t = apply_mutations(t, 1, max_len, SUBJECT, rng)
        assert 1 <= len(t) <= max_len
        if i % 97 == 0:
            validate_test(t, max_len)


def test_mutation_is_deterministic():
    t = random_testcase(SUBJECT, 30, RandomSource(6))
    assert apply_mutations(t, 25, 30, SUBJECT, RandomSource(7)) == apply_mutations(t, 25, 30, SUBJECT, RandomSource(7))


def test_insert_preserves_data_flow():
    # statement values after an insert are the old values with one new slot added
    subj = chain_subject(1)
    rng = RandomSource(8)
    for _ in range(500):
        t = random_testcase(subj, 8, rng)
        stmts = list(t)
        before = execute(subj, stmts).slot_values
        n = len(stmts)
        r = rng.getstate()
        mutate_once(stmts, 9, subj, rng)
        if len(stmts) == n + 1:
            after = list(execute(subj, stmts).slot_values)
            assert any(after[:p] + after[p + 1:] == list(before) for p in range(len(after)))
        rng.setstate(r)
        rng.random()


def test_crossover_identical_parents():
    rng = RandomSource(9)
    for _ in range(200):
        p = random_testcase(SUBJECT, 20, rng)
        c1, c2 = crossover(p, p, rng)
        assert c1 == p and c2 == p


def test_crossover_conservation_and_validity():
    rng = RandomSource(10)
    for i in range(100_000):
        p1 = random_testcase(SUBJECT, 15, rng) if i % 50 == 0 or i == 0 else c1
        p2 = random_testcase(SUBJECT, 15, rng)
        c1, c2 = crossover(p1, p2, rng)
        assert len(c1) + len(c2) == len(p1) + len(p2)
        if i % 101 == 0:
            validate_test(c1)
            validate_test(c2)
        c1 = c1[:15]
    c1, c2 = crossover(tuple([Const(1)] * 10), tuple([Const(2)] * 10), RandomSource(0), max_len=6)
    assert len(c1) <= 6 and len(c2) <= 6


def rank_probability(i: int, n: int, b: float) -> float:
    """P(index i): the selection value u maps to floor(n*q(u)); invert q."""
    def u_of(q: float) -> float:
        return b * q - (b - 1) * q * q
    return u_of((i + 1) / n) - u_of(i / n)


@pytest.mark.parametrize("bias", [1.01, 1.5, 1.99])
def test_rank_select_matches_closed_form(bias):
    n, draws = 10, 100_000
    rng = RandomSource(11)
    counts = Counter(rank_select(n, bias, rng) for _ in range(draws))
    for i in range(n):
        p = rank_probability(i, n, bias)
        sigma = math.sqrt(draws * p * (1 - p))
        assert abs(counts[i] - draws * p) <= 4 * sigma
    if bias == 1.99:
        assert counts.most_common(1)[0][0] == 0


def test_rank_select_edges():
    rng = RandomSource(12)
    assert all(rank_select(1, 1.5, rng) == 0 for _ in range(100))
    for bad in (1.0, 2.0, 0.5):
        with pytest.raises(ValueError):
            rank_select(5, bad, rng)


def tournament_probability(i: int, n: int, s: int) -> float:
    return ((n - i) / n) ** s - ((n - i - 1) / n) ** s


def test_tournament_exact_enumeration():
    # size 2, N = 4: 7 of the 16 equally likely draw pairs contain index 0
    pairs = [(a, b) for a in range(4) for b in range(4)]
    assert sum(min(p) == 0 for p in pairs) == 7
    assert tournament_probability(0, 4, 2) == 7 / 16


@pytest.mark.parametrize("size", [1, 2, 7])
def test_tournament_select_frequencies(size):
    n, draws = 4, 100_000
    rng = RandomSource(13)
    counts = Counter(tournament_select(n, size, rng) for _ in range(draws))
    for i in range(n):
        p = tournament_probability(i, n, size)
        sigma = math.sqrt(draws * p * (1 - p)) or 1.0
        assert abs(counts[i] - draws * p) <= 4 * sigma


def test_tournament_large_size_picks_best():
    rng = RandomSource(14)
    assert all(tournament_select(5, 500, rng) == 0 for _ in range(200))
    with pytest.raises(ValueError):
        tournament_select(5, 0, rng)


def test_archive_rules():
    subj = Subject("two", (BranchNode(0, 0, "==", 3), BranchNode(1, 1, "==", 5, (0, True))))
    archive = Archive(subj)
    long_cover = (Const(3), Const(0), Neg(1))
    assert archive_update(archive, subj, long_cover) == [0, 3]  # root true, child false
    assert archive.witnesses[0] == long_cover
    assert archive_update(archive, subj, (Const(3), Add(0, 0), Const(9), Const(9))) == []
    assert archive.witnesses[0] == long_cover  # longer witness ignored
    assert archive_update(archive, subj, (Const(3),)) == []  # child slot missing
    assert archive.witnesses[0] == (Const(3),)  # strictly shorter witness replaces
    assert archive_update(archive, subj, (Const(3), Const(5))) == [2]
    assert archive.covered() == [0, 2, 3] and archive.coverage == 3 / 4
    with pytest.raises(ValueError):
        archive_update(archive, chain_subject(2), (Const(1),))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 1000))
def test_archive_coverage_monotone_and_witnesses_valid(seed):
    rng = RandomSource(seed)
    archive = Archive(SUBJECT)
    last = 0.0
    for _ in range(60):
        archive.update(random_testcase(SUBJECT, 15, rng))
        assert archive.coverage >= last
        last = archive.coverage
    for g, t in archive.witnesses.items():
        assert goal_fitness(SUBJECT, execute(SUBJECT, t), g) == 0.0
