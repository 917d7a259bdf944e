import math

import numpy as np
import pytest

from sbsttune.dynamosa import (
    DynaMosaConfig,
    crowding_distance,
    nondominated_sort,
    rank_population,
    run_dynamosa,
)
from sbsttune.operators import Archive, random_testcase
from sbsttune.param_space import preset
from sbsttune.seeding import RandomSource
from sbsttune.stats import mann_whitney_u
from sbsttune.subject import BranchNode, Subject, SubjectParams, execute, generate_subject, goal_fitness

from conftest import chain_subject

DEFAULT = dict(preset("dynamosa-default"))
SMALL = {**DEFAULT, "population_size": 10, "chromosome_length": 10}


def dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def brute_fronts(vectors) -> list[list[int]]:
    remaining = list(range(len(vectors)))
    fronts = []
    while remaining:
        front = [i for i in remaining if not any(dominates(vectors[j], vectors[i]) for j in remaining if j != i)]
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def textbook_crowding(points) -> list[float]:
    n, m = len(points), len(points[0])
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for j in range(m):
        order = sorted(range(n), key=lambda i: (points[i][j], i))
        lo, hi = points[order[0]][j], points[order[-1]][j]
        if hi == lo:
            continue
        dist[order[0]] = dist[order[-1]] = math.inf
        for k in range(1, n - 1):
            dist[order[k]] += (points[order[k + 1]][j] - points[order[k - 1]][j]) / (hi - lo)
    return dist


def test_nondominated_sort_examples():
    assert nondominated_sort([[3.0], [1.0], [2.0], [1.0]]) == [[1, 3], [2], [0]]
    assert nondominated_sort([[0.0, 1.0], [1.0, 0.0]]) == [[0, 1]]
    assert nondominated_sort([]) == []


def test_nondominated_sort_matches_oracle_and_targets_select_columns():
    gen = np.random.default_rng(0)
    for _ in range(100):
        vecs = gen.integers(0, 5, size=(20, 3)).astype(float)
        assert nondominated_sort(vecs) == brute_fronts(vecs.tolist())
        assert nondominated_sort(vecs, targets=[0, 2]) == brute_fronts(vecs[:, [0, 2]].tolist())


def test_crowding_distance_examples():
    assert np.all(np.isinf(crowding_distance([[1.0, 2.0], [2.0, 1.0]])))
    assert crowding_distance([[0.0], [1.0], [3.0]])[1] == 1.0
    d = crowding_distance([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    assert d[1] == 2.0
    # degenerate objective contributes nothing, not even infinite boundaries
    assert crowding_distance([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0]]).tolist() == [math.inf, 1.0, math.inf]
    assert crowding_distance([[5.0, 1.0, 9.0], [5.0, 1.0, 9.0], [5.0, 1.0, 9.0]], targets=[0]).tolist() == [0.0] * 3


def test_crowding_distance_matches_textbook():
    gen = np.random.default_rng(1)
    for _ in range(100):
        pts = gen.random((int(gen.integers(3, 12)), 3)).round(2)
        assert crowding_distance(pts).tolist() == pytest.approx(textbook_crowding(pts.tolist()))


def test_rank_population_preference_front():
    fits = np.array([[0.5, 0.9], [0.5, 0.1], [0.2, 0.8], [0.2, 0.8], [0.9, 0.9]])
    lengths = np.array([3, 1, 5, 2, 1])
    keep = rank_population(fits, lengths, 3)
    # column 0 best is 0.2: rows 2 and 3 tie, row 3 is shorter; column 1 best is row 1
    assert keep[:2] == [1, 3] or keep[:2] == [3, 1]
    assert len(keep) == 3 and len(set(keep)) == 3 and 4 not in keep


def test_budget_below_population_is_an_error():
    with pytest.raises(ValueError):
        run_dynamosa(chain_subject(2), DEFAULT, 49, 8, RandomSource(0))


def test_deterministic_runs():
    subj = generate_subject(3)
    a = run_dynamosa(subj, DEFAULT, 800, 16, RandomSource(9))
    b = run_dynamosa(subj, DEFAULT, 800, 16, RandomSource(9))
    assert a.to_json() == b.to_json() and a.archive.witnesses == b.archive.witnesses


def test_run_result_json_layout():
    r = run_dynamosa(generate_subject(2), SMALL, 200, 4, RandomSource(1))
    doc = r.to_json()
    assert set(doc) == {"algorithm", "config", "evaluations", "trace", "covered"}
    assert doc["algorithm"] == "dynamosa" and len(doc["trace"]) == 4 and doc["trace"][-1][0] == 1.0


@pytest.mark.parametrize("seed", range(15))
def test_run_invariants(seed):
    subj = generate_subject(seed)
    config = {**DEFAULT, "population_size": 20, "selection": "rank" if seed % 2 else "tournament"}
    log: list[tuple] = []
    r = run_dynamosa(subj, config, 600, 12, RandomSource(seed), log=log)
    assert r.trace.is_monotone() and r.trace.final_coverage == r.coverage
    assert r.evaluations_used <= 600
    for g, t in r.archive.witnesses.items():
        assert goal_fitness(subj, execute(subj, t), g) == 0.0
    archived: set[int] = set()
    for event in log:
        if event[0] == "archive":
            archived.add(event[2])
        elif event[0] == "activate":
            parent = subj.parent_goal_index(event[2])
            assert parent is None or parent in archived
        elif event[0] == "population":
            assert event[2] == 20


def test_chain_never_activates_early():
    subj = chain_subject(4, relop="<=", const=2)
    for seed in range(20):
        log: list[tuple] = []
        run_dynamosa(subj, SMALL, 300, 8, RandomSource(seed), log=log)
        archived = set()
        for kind, _, g in (e for e in log if e[0] != "population"):
            if kind == "archive":
                archived.add(g)
            elif g >= 2:
                assert (g // 2 - 1) * 2 in archived  # chain nests under the true branch


def test_coverable_subject_full_coverage():
    nodes = [BranchNode(0, 0, "<", 0), BranchNode(1, 1, ">=", 0, (0, True)), BranchNode(2, 0, ">", 2),
             BranchNode(3, 2, "<=", 0, (2, False))]
    subj = Subject("easy2", tuple(nodes), params=SubjectParams(const_range=(-5, 5)))
    rng = RandomSource(5)
    oracle = Archive(subj)
    for _ in range(2000):
        oracle.update(random_testcase(subj, 10, rng))
    assert oracle.coverage == 1.0
    r = run_dynamosa(subj, SMALL, 2000, 8, RandomSource(6))
    assert r.coverage == 1.0 and r.evaluations_used < 2000  # stops once everything is covered
    assert r.trace.points[-1] == (1.0, 1.0)


def test_no_variation_means_no_progress_after_initial_population():
    config = {**SMALL, "num_mutations": 0, "crossover_rate": 0.0}
    for seed in range(10):
        log: list[tuple] = []
        r = run_dynamosa(generate_subject(seed), config, 300, 6, RandomSource(seed), log=log)
        assert all(e[1] <= 10 for e in log if e[0] in ("archive", "activate"))
        assert r.evaluations_used == 300 or r.coverage == 1.0


def test_config_type_validation():
    cfg = DynaMosaConfig.from_configuration(DEFAULT)
    assert cfg.as_dict() == DEFAULT
    with pytest.raises(ValueError):
        DynaMosaConfig.from_configuration({**DEFAULT, "population_size": 2})


def test_tuned_preset_not_worse_than_default_on_average():
    # sanity check of the calibrated subject suite, not an acceptance gate
    tuned, default = [], []
    for seed in range(12):
        subj = generate_subject(100 + seed)
        tuned.append(run_dynamosa(subj, dict(preset("dynamosa-de-1+0")), 1000, 8, RandomSource(seed)).coverage)
        default.append(run_dynamosa(subj, DEFAULT, 1000, 8, RandomSource(seed)).coverage)
    report = mann_whitney_u(tuned, default)
    assert report.a12 >= 0.4
