import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbsttune.subject import (
    RELOPS,
    Add,
    BranchNode,
    Const,
    Goal,
    Neg,
    Sub,
    Subject,
    SubjectParams,
    children,
    covered_goals,
    coverage,
    dump_suite,
    execute,
    generate_subject,
    goal_fitness,
    load_suite,
    validate_test,
)

from conftest import chain_subject


def nu(d: float) -> float:
    return 1.0 if math.isinf(d) else d / (d + 1)


def all_tests(max_len: int, consts: range) -> list[tuple]:
    """Every test of length <= max_len over the given constants (operands over all earlier slots)."""
    out = []
    per_pos = [[Const(k) for k in consts]]
    for pos in range(1, max_len):
        stmts = [Const(k) for k in consts]
        stmts += [Add(i, j) for i in range(pos) for j in range(pos)]
        stmts += [Sub(i, j) for i in range(pos) for j in range(pos)]
        stmts += [Neg(i) for i in range(pos)]
        per_pos.append(stmts)
    for n in range(1, max_len + 1):
        out.extend(itertools.product(*per_pos[:n]))
    return out


def test_execute_equality_examples():
    subj = Subject("eq", (BranchNode(0, 0, "==", 5),))
    st5 = execute(subj, [Const(5)]).node_status[0]
    assert (st5.value, st5.d_true, st5.d_false) == (True, 0.0, 1.0)
    st7 = execute(subj, [Const(7)]).node_status[0]
    assert (st7.value, st7.d_true, st7.d_false) == (False, 2.0, 0.0)


def test_missing_slot_is_unevaluable():
    subj = Subject("slot3", (BranchNode(0, 3, "<", 0),))
    trace = execute(subj, [Const(1), Const(2)])
    st0 = trace.node_status[0]
    assert st0.reached and not st0.evaluable and math.isinf(st0.d_true) and math.isinf(st0.d_false)
    assert covered_goals(subj, trace) == set()
    assert goal_fitness(subj, trace, 0) == goal_fitness(subj, trace, 1) == 1.0


def reference_distances(relop: str, v: int, k: int) -> tuple[float, float]:
    holds = {"==": v == k, "!=": v != k, "<": v < k, "<=": v <= k, ">": v > k, ">=": v >= k}[relop]
    gap = abs(v - k)
    # distance to flip the outcome, per the standard relational table
    to_true = {"==": gap, "!=": 1, "<": v - k + 1, "<=": v - k, ">": k - v + 1, ">=": k - v}[relop]
    to_false = {"==": 1, "!=": gap, "<": k - v, "<=": k - v + 1, ">": v - k, ">=": v - k + 1}[relop]
    return (0.0, float(to_false)) if holds else (float(to_true), 0.0)


@pytest.mark.parametrize("relop", RELOPS)
def test_branch_distance_table(relop):
    for v in range(-6, 7):
        subj = Subject("d", (BranchNode(0, 0, relop, 1),))
        s = execute(subj, [Const(v)]).node_status[0]
        assert (s.d_true, s.d_false) == reference_distances(relop, v, 1)
        assert min(s.d_true, s.d_false) == 0.0 and max(s.d_true, s.d_false) > 0.0


def test_approach_level_example_and_exhaustive_oracle():
    # root: slot0 == 3; child under root-true: slot1 == 5
    subj = Subject("two", (BranchNode(0, 0, "==", 3), BranchNode(1, 1, "==", 5, (0, True))))
    child_true = Goal(1, True)
    assert goal_fitness(subj, execute(subj, [Const(7)]), child_true) == pytest.approx(1.8, abs=0)
    assert goal_fitness(subj, execute(subj, [Const(7)]), child_true) == 1 + 4 / 5

    checked = 0
    for test in all_tests(2, range(0, 9)):
        vals = []
        for op in test:
            if op.op == 0:
                vals.append(op.a)
            elif op.op == 1:
                vals.append(vals[op.a] + vals[op.b])
            elif op.op == 2:
                vals.append(vals[op.a] - vals[op.b])
            else:
                vals.append(-vals[op.a])
        if vals[0] != 3:
            expected = 1 + nu(abs(vals[0] - 3))
        elif len(vals) < 2:
            expected = 1.0
        else:
            expected = nu(abs(vals[1] - 5))
        assert goal_fitness(subj, execute(subj, test), child_true) == expected
        checked += 1
    assert checked == 9 + 9 * (9 + 1 + 1 + 1)


def test_reached_node_distance_two():
    subj = Subject("lt", (BranchNode(0, 0, "==", 0),))
    assert goal_fitness(subj, execute(subj, [Const(2)]), Goal(0, True)) == 2 / 3


def test_fitness_zero_iff_covered(small_subjects):
    for subj in small_subjects:
        for seed in range(20):
            test = tuple(Const(seed * 3 - 10 + i) for i in range(1 + seed % 6))
            trace = execute(subj, test)
            cov = covered_goals(subj, trace)
            for g in subj.goals():
                assert (goal_fitness(subj, trace, g) == 0.0) == (g in cov)
            for g in cov:
                assert Goal(g.node, not g.outcome) not in cov


def test_unknown_goal_is_an_error():
    subj = chain_subject(2)
    with pytest.raises(KeyError):
        goal_fitness(subj, execute(subj, [Const(1)]), Goal(5, True))


def test_generate_subject_examples():
    p = SubjectParams(roots=3, child_prob=0.0)
    a = generate_subject(7, p)
    assert a == generate_subject(7, p) and len(a.nodes) == 3 and a.n_goals == 6
    flat = generate_subject(11, SubjectParams(roots=4, max_depth=1, child_prob=1.0))
    assert all(n.parent is None for n in flat.nodes)
    with pytest.raises(ValueError):
        generate_subject(1, SubjectParams(roots=0))
    with pytest.raises(ValueError):
        generate_subject(1, SubjectParams(child_prob=1.5))


def test_generated_subjects_respect_params():
    for seed in range(30):
        p = SubjectParams(roots=2, max_depth=4, child_prob=0.7, slot_span=5, const_range=(-3, 3))
        s = generate_subject(seed, p)
        assert sum(n.parent is None for n in s.nodes) == 2
        for n in s.nodes:
            assert 0 <= n.slot < 5 and -3 <= n.const <= 3 and n.relop in RELOPS
            depth, cur = 1, n
            while cur.parent is not None:
                cur = s.nodes[cur.parent[0]]
                depth += 1
            assert depth <= 4


def test_children_counting_oracle():
    for seed in range(25):
        s = generate_subject(seed)
        total = sum(len(children(s, g)) for g in s.goals())
        roots = sum(n.parent is None for n in s.nodes)
        assert total == 2 * (len(s.nodes) - roots)
    chain = chain_subject(2)
    assert children(chain, Goal(0, True)) == [Goal(1, True), Goal(1, False)]
    assert children(chain, Goal(0, False)) == [] and children(chain, Goal(1, True)) == []


def test_nesting_requires_parent_coverage():
    subj = chain_subject(3)
    trace = execute(subj, [Const(0)])
    assert covered_goals(subj, trace) == {Goal(0, False)}
    assert not trace.node_status[1].reached
    assert goal_fitness(subj, trace, Goal(2, True)) == 2 + nu(3)


def test_coverage_definition():
    subj = chain_subject(3)
    assert coverage(subj, [Goal(0, True), Goal(0, True), Goal(1, False)]) == 2 / 6


@settings(max_examples=100, deadline=None)
@given(st.integers(-30, 30), st.integers(-30, 30))
def test_fitness_monotone_in_distance(a, b):
    # closer constant never worsens fitness toward the true branch of "slot0 == 4"
    subj = Subject("m", (BranchNode(0, 0, "==", 4),))
    near, far = sorted((a, b), key=lambda v: abs(v - 4))
    f = lambda v: goal_fitness(subj, execute(subj, [Const(v)]), Goal(0, True))  # noqa: E731
    assert f(near) <= f(far)


def test_longer_tests_never_lower_best_fitness():
    p = SubjectParams(roots=2, max_depth=2, child_prob=0.8, slot_span=3, const_range=(0, 3))
    tests = all_tests(3, range(0, 4))
    for seed in range(3):
        subj = generate_subject(seed, p)
        best: dict[int, list[float]] = {}
        for t in tests:
            fit = subj.fitness_vector(t)
            row = best.setdefault(len(t), [math.inf] * subj.n_goals)
            best[len(t)] = [min(x, y) for x, y in zip(row, fit)]
        for n in (1, 2):
            assert all(b2 <= b1 for b1, b2 in zip(best[n], best[n + 1]))


def test_wrapping_arithmetic():
    big = (1 << 63) - 1
    trace = execute(chain_subject(1), [Const(big), Const(1), Add(0, 1), Neg(2), Sub(2, 1)])
    assert trace.slot_values == (big, 1, -(1 << 63), -(1 << 63), big)


def test_validate_test():
    validate_test([Const(1), Add(0, 0), Neg(1)])
    for bad in ([], [Add(0, 0)], [Const(1), Neg(1)], [Const(1 << 63)]):
        with pytest.raises(ValueError):
            validate_test(bad)
    with pytest.raises(ValueError):
        validate_test([Const(1), Const(2)], max_len=1)


def test_suite_json_round_trip(small_subjects):
    text = dump_suite(small_subjects)
    loaded = load_suite(text)
    assert loaded == small_subjects and dump_suite(loaded) == text
    doc = json.loads(text)[0]
    assert set(doc) == {"id", "seed", "params", "nodes"}
    assert set(doc["nodes"][0]) == {"id", "slot", "relop", "const", "parent"}
    with pytest.raises(ValueError):
        load_suite(dump_suite(small_subjects[:1] * 2))


def test_subject_rejects_bad_forest():
    with pytest.raises(ValueError):
        Subject("bad", (BranchNode(0, 0, "==", 1, (0, True)),))
    with pytest.raises(ValueError):
        Subject("bad", (BranchNode(1, 0, "==", 1),))
    with pytest.raises(ValueError):
        Subject("bad", (BranchNode(0, 0, "=~", 1),))
