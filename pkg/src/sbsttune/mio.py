"""MIO: per-goal test pools, feedback-directed sampling and a hard phase switch.

Before the budget fraction ``phase_switch`` the search explores (several tests
per goal, random sampling with probability ``explore_random_probability``);
from then on it exploits: every pool keeps its single best test and no fresh
random tests are sampled.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, NamedTuple

from .operators import Archive, apply_mutations, random_testcase
from .param_space import build_mio_space
from .seeding import RandomSource
from .subject import Subject
from .tracking import Progress, RunResult

ALGORITHM = "mio"

EXPLOIT_TESTS_PER_TARGET = 1
EXPLOIT_RANDOM_PROBABILITY = 0.0


@dataclass(frozen=True)
class MioConfig:
    chromosome_length: int
    phase_switch: float
    explore_tests_per_target: int
    explore_random_probability: float
    explore_mutations: int
    exploit_mutations: int

    @classmethod
    def from_configuration(cls, config: Mapping[str, Any]) -> MioConfig:
        build_mio_space().validate(config)
        return cls(**{k: config[k] for k in cls.__dataclass_fields__})

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


class PhaseParams(NamedTuple):
    tests_per_target: int
    random_probability: float
    mutations: int


def phase_params(config: MioConfig, consumed_fraction: float) -> PhaseParams:
    if consumed_fraction < config.phase_switch:
        return PhaseParams(config.explore_tests_per_target, config.explore_random_probability, config.explore_mutations)
    return PhaseParams(EXPLOIT_TESTS_PER_TARGET, EXPLOIT_RANDOM_PROBABILITY, config.exploit_mutations)


@dataclass
class GoalPool:
    """Best tests for one uncovered goal, sorted by descending heuristic ``h``."""

    entries: list[tuple[tuple, float]] = field(default_factory=list)
    sample_counter: int = 0

    def offer(self, test: tuple, h: float, cap: int) -> bool:
        entries = self.entries
        for i, (t, eh) in enumerate(entries):
            if t == test:
                return False
            if eh == h:
                # keep h strictly decreasing: the shorter of two equal-h tests wins
                if len(test) < len(t):
                    entries[i] = (test, h)
                    return True
                return False
        if len(entries) >= cap and h <= entries[-1][1]:
            return False
        pos = 0
        while pos < len(entries) and entries[pos][1] > h:
            pos += 1
        entries.insert(pos, (test, h))
        del entries[cap:]
        return True

    def shrink(self, cap: int) -> None:
        del self.entries[cap:]


def run_mio(
    subject: Subject,
    config: MioConfig | Mapping[str, Any],
    budget: int,
    checkpoints: int,
    rng: RandomSource,
    wall_clock: float | None = None,
    log: list[tuple] | None = None,
) -> RunResult:
    """Run MIO until the budget is spent or every goal is covered.

    ``log`` (if given) receives ``("sample", consumed, kind, exploiting)``
    before each evaluation, where ``kind`` is ``"bootstrap"`` (no pool has a
    test yet), ``"random"`` or ``"mutate"``, then ``("pools", consumed,
    largest_pool, exploiting)`` after it, and ``("switch", consumed)`` once.
    """
    if not isinstance(config, MioConfig):
        config = MioConfig.from_configuration(config)
    max_len = config.chromosome_length
    archive = Archive(subject)
    progress = Progress(archive, budget, checkpoints, wall_clock)
    pools: dict[int, GoalPool] = {g: GoalPool() for g in range(subject.n_goals)}
    exploiting = False

    while not progress.exhausted() and pools:
        fraction = progress.fraction()
        params = phase_params(config, fraction)
        if not exploiting and fraction >= config.phase_switch:
            exploiting = True
            for pool in pools.values():
                pool.shrink(EXPLOIT_TESTS_PER_TARGET)
            if log is not None:
                log.append(("switch", progress.consumed))

        target = None
        candidates = [g for g, pool in pools.items() if pool.entries]
        if not candidates:
            kind = "bootstrap"
            test = random_testcase(subject, max_len, rng)
        elif rng.random() < params.random_probability:
            kind = "random"
            test = random_testcase(subject, max_len, rng)
        else:
            kind = "mutate"
            fewest = min(pools[g].sample_counter for g in candidates)
            ties = [g for g in candidates if pools[g].sample_counter == fewest]
            target = ties[rng.below(len(ties))]
            entries = pools[target].entries
            parent = entries[rng.below(len(entries))][0]
            test = apply_mutations(parent, params.mutations, max_len, subject, rng)
        if log is not None:
            log.append(("sample", progress.consumed, kind, exploiting))

        fit = subject.fitness_vector(test)
        newly = archive.update(test, fit)
        progress.tick()
        improved = False
        for g in newly:
            del pools[g]
            if g == target:
                improved = True
        cap = params.tests_per_target
        for g, pool in pools.items():
            if pool.offer(test, 1.0 / (1.0 + fit[g]), cap) and g == target:
                improved = True
        if target is not None and target in pools:
            pool = pools[target]
            pool.sample_counter = 0 if improved else pool.sample_counter + 1
        if log is not None:
            largest = max((len(p.entries) for p in pools.values()), default=0)
            log.append(("pools", progress.consumed, largest, exploiting))

    return RunResult(
        algorithm=ALGORITHM,
        config=config.as_dict(),
        archive=archive,
        trace=progress.finish(),
        evaluations_used=progress.consumed,
        events=log,
    )
