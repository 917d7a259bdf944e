"""Search budgets, coverage-over-time traces and run results."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .operators import Archive


@dataclass(frozen=True)
class CoverageTrace:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        fractions = [f for f, _ in self.points]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValueError("budget fractions must be strictly increasing")
        if any(not 0.0 <= f <= 1.0 or not 0.0 <= c <= 1.0 for f, c in self.points):
            raise ValueError("trace points must lie in [0, 1] x [0, 1]")

    @property
    def final_coverage(self) -> float:
        return self.points[-1][1] if self.points else 0.0

    def is_monotone(self) -> bool:
        cov = [c for _, c in self.points]
        return all(b >= a for a, b in zip(cov, cov[1:]))


@dataclass
class RunResult:
    algorithm: str
    config: dict[str, Any]
    archive: Archive
    trace: CoverageTrace
    evaluations_used: int
    events: list[tuple] | None = field(default=None, repr=False)

    @property
    def coverage(self) -> float:
        return self.archive.coverage

    def to_json(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "evaluations": self.evaluations_used,
            "trace": [[f, c] for f, c in self.trace.points],
            "covered": self.archive.covered(),
        }


class Progress:
    """Counts evaluations against the budget and samples archive coverage.

    With an evaluation budget, checkpoint ``i`` of ``k`` is taken right after
    evaluation ``ceil(i * budget / k)``. With ``wall_clock`` seconds the budget
    fraction is elapsed time instead, which is not reproducible.
    """

    def __init__(self, archive: Archive, budget: int, checkpoints: int, wall_clock: float | None = None) -> None:
        if checkpoints < 2:
            raise ValueError("checkpoints must be >= 2")
        if wall_clock is None and budget < 1:
            raise ValueError("budget must be >= 1")
        self.archive = archive
        self.budget = budget
        self.checkpoints = checkpoints
        self.wall_clock = wall_clock
        self.consumed = 0
        self.points: list[tuple[float, float]] = []
        self._next = 1
        self._start = time.perf_counter()

    def fraction(self) -> float:
        if self.wall_clock is not None:
            return min((time.perf_counter() - self._start) / self.wall_clock, 1.0)
        return self.consumed / self.budget

    def exhausted(self) -> bool:
        if self.wall_clock is not None:
            return time.perf_counter() - self._start >= self.wall_clock
        return self.consumed >= self.budget

    def tick(self) -> None:
        """Account for one fitness evaluation."""
        self.consumed += 1
        k = self.checkpoints
        if self.wall_clock is None:
            while self._next <= k and self.consumed * k >= self._next * self.budget:
                self.points.append((self._next / k, self.archive.coverage))
                self._next += 1
        else:
            frac = self.fraction()
            while self._next <= k and frac * k >= self._next:
                self.points.append((self._next / k, self.archive.coverage))
                self._next += 1

    def finish(self) -> CoverageTrace:
        # early stop (everything covered): coverage stays constant to the end
        while self._next <= self.checkpoints:
            self.points.append((self._next / self.checkpoints, self.archive.coverage))
            self._next += 1
        return CoverageTrace(tuple(self.points))
