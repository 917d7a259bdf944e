"""DynaMOSA: many-objective search with dynamic goal activation.

Only goals whose control-dependence parent goal is covered are targets. Each
generation ranks parents plus offspring by preference sorting (the best test
per uncovered target goes to front 0), then non-dominated sorting of the
rest, and fills the next population front by front, cutting the last front by
crowding distance.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from ._accel import nondominated_ranks as _nondominated_ranks
from .operators import Archive, apply_mutations, crossover, random_testcase, rank_select, tournament_select
from .param_space import build_dynamosa_space
from .seeding import RandomSource
from .subject import Subject
from .tracking import Progress, RunResult

ALGORITHM = "dynamosa"


@dataclass(frozen=True)
class DynaMosaConfig:
    chromosome_length: int
    crossover_rate: float
    num_mutations: int
    population_size: int
    selection: str
    rank_bias: float
    tournament_size: int

    @classmethod
    def from_configuration(cls, config: Mapping[str, Any]) -> DynaMosaConfig:
        build_dynamosa_space().validate(config)
        return cls(**{k: config[k] for k in cls.__dataclass_fields__})

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def _columns(rows: Any, targets: Sequence[int] | None) -> np.ndarray:
    m = np.asarray(rows, dtype=np.float64)
    if m.ndim != 2:
        m = m.reshape(len(rows), -1 if len(rows) else 0)
    return m if targets is None else m[:, list(targets)]


def nondominated_sort(vectors: Sequence[Sequence[float]], targets: Sequence[int] | None = None) -> list[list[int]]:
    """Pareto fronts (minimisation) as lists of row indices, best front first.

    ``targets`` restricts the comparison to those columns; all columns by default.
    """
    m = _columns(vectors, targets)
    ranks = _nondominated_ranks(m)
    if len(ranks) == 0:
        return []
    fronts: list[list[int]] = [[] for _ in range(int(ranks.max()) + 1)]
    for i, r in enumerate(ranks.tolist()):
        fronts[r].append(i)
    return fronts


def crowding_distance(front: Any, targets: Sequence[int] | None = None) -> np.ndarray:
    """Crowding distance of each row of ``front`` (rows = members, columns = objectives)."""
    front = _columns(front, targets)
    n = front.shape[0]
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for j in range(front.shape[1]):
        col = front[:, j]
        lo, hi = col.min(), col.max()
        if hi == lo:
            continue
        order = np.argsort(col, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        gaps = (col[order[2:]] - col[order[:-2]]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist


def _preference_front(f: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Rows that are best (then shortest, then first) for at least one column."""
    n = f.shape[0]
    key = lengths * n + np.arange(n)
    best = np.where(f == f.min(axis=0), key[:, None], np.iinfo(np.int64).max).argmin(axis=0)
    return np.unique(best)


def rank_population(fits: np.ndarray, lengths: np.ndarray, size: int) -> list[int]:
    """Indices of the ``size`` survivors, ordered best first.

    ``fits`` holds fitness values for the uncovered active targets only.
    """
    n = fits.shape[0]
    front0 = _preference_front(fits, lengths)
    in_front0 = np.zeros(n, dtype=bool)
    in_front0[front0] = True
    rest = np.flatnonzero(~in_front0)
    fronts = [front0]
    if len(front0) < size and len(rest):
        fronts.extend(rest[np.asarray(fr)] for fr in nondominated_sort(fits[rest]))
    chosen: list[int] = []
    for front in fronts:
        cd = crowding_distance(fits[front])
        # descending crowding distance, ties by index
        order = sorted(range(len(front)), key=lambda i: (-cd[i], front[i]))
        take = min(size - len(chosen), len(front))
        chosen.extend(int(front[i]) for i in order[:take])
        if len(chosen) >= size:
            break
    return chosen


def run_dynamosa(
    subject: Subject,
    config: DynaMosaConfig | Mapping[str, Any],
    budget: int,
    checkpoints: int,
    rng: RandomSource,
    wall_clock: float | None = None,
    log: list[tuple] | None = None,
) -> RunResult:
    """Run DynaMOSA until the budget is spent or every goal is covered.

    ``log`` (if given) receives ``("activate", consumed, goal)`` when a goal
    becomes a target, ``("archive", consumed, goal)`` when it is first covered
    and ``("population", consumed, size)`` after each survivor selection.
    """
    if not isinstance(config, DynaMosaConfig):
        config = DynaMosaConfig.from_configuration(config)
    n_pop = config.population_size
    if wall_clock is None and budget < n_pop:
        raise ValueError(f"budget {budget} cannot cover the initial population of {n_pop}")
    max_len = config.chromosome_length
    n_m = config.num_mutations
    p_c = config.crossover_rate
    use_rank = config.selection == "rank"

    archive = Archive(subject)
    progress = Progress(archive, budget, checkpoints, wall_clock)
    active: set[int] = set(subject.root_goals())
    if log is not None:
        log.extend(("activate", 0, g) for g in sorted(active))

    def evaluate(test: tuple) -> list[float]:
        fit = subject.fitness_vector(test)
        new = archive.update(test, fit)
        progress.tick()
        if new:
            for g in new:
                if log is not None:
                    log.append(("archive", progress.consumed, g))
                for c in subject.child_goal_indices(g):
                    if c not in active:
                        active.add(c)
                        if log is not None:
                            log.append(("activate", progress.consumed, c))
        return fit

    def select(n: int) -> int:
        if use_rank:
            return rank_select(n, config.rank_bias, rng)
        return tournament_select(n, config.tournament_size, rng)

    def survivors(tests: list[tuple], fits: list[list[float]], size: int) -> tuple[list[tuple], list[list[float]]]:
        targets = sorted(g for g in active if g not in archive)
        if not targets:
            return tests[:size], fits[:size]
        matrix = np.asarray(fits, dtype=np.float64)[:, targets]
        lengths = np.fromiter((len(t) for t in tests), dtype=np.int64, count=len(tests))
        keep = rank_population(matrix, lengths, size)
        return [tests[i] for i in keep], [fits[i] for i in keep]

    population: list[tuple] = []
    fits: list[list[float]] = []
    for _ in range(n_pop):
        if progress.exhausted():
            break
        t = random_testcase(subject, max_len, rng)
        population.append(t)
        fits.append(evaluate(t))
    population, fits = survivors(population, fits, n_pop)

    while not progress.exhausted() and len(archive) < subject.n_goals:
        offspring: list[tuple] = []
        off_fits: list[list[float]] = []
        size = len(population)
        while len(offspring) < n_pop and not progress.exhausted():
            p1 = population[select(size)]
            p2 = population[select(size)]
            if rng.random() < p_c:
                c1, c2 = crossover(p1, p2, rng, max_len)
            else:
                c1, c2 = p1, p2
            c1 = apply_mutations(c1, n_m, max_len, subject, rng)
            c2 = apply_mutations(c2, n_m, max_len, subject, rng)
            for child in (c1, c2):
                if len(offspring) < n_pop and not progress.exhausted():
                    offspring.append(child)
                    off_fits.append(evaluate(child))
        population, fits = survivors(population + offspring, fits + off_fits, n_pop)
        if log is not None:
            log.append(("population", progress.consumed, len(population)))

    return RunResult(
        algorithm=ALGORITHM,
        config=config.as_dict(),
        archive=archive,
        trace=progress.finish(),
        evaluations_used=progress.consumed,
        events=log,
    )
