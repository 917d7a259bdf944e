"""Effect sizes and rank tests for comparing result sets.

The Mann-Whitney U test uses the normal approximation with tie-corrected
variance and a 0.5 continuity correction. An exact permutation version is
provided for checking the approximation on small samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence


@dataclass(frozen=True)
class SampleSet:
    label: str
    values: tuple[float, ...]

    def __init__(self, label: str, values: Sequence[float]) -> None:
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "values", tuple(float(v) for v in values))


def _values(xs: SampleSet | Sequence[float]) -> Sequence[float]:
    return xs.values if isinstance(xs, SampleSet) else xs


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties replaced by their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def u_statistic(xs: SampleSet | Sequence[float], ys: SampleSet | Sequence[float]) -> float:
    """U of the first sample from midrank sums: #{x > y} + 0.5 #{x = y}."""
    x, y = _values(xs), _values(ys)
    m = len(x)
    ranks = midranks(list(x) + list(y))
    return math.fsum(ranks[:m]) - m * (m + 1) / 2.0


def a12(xs: SampleSet | Sequence[float], ys: SampleSet | Sequence[float]) -> float:
    """Vargha-Delaney effect size: P(X > Y) + 0.5 P(X = Y)."""
    x, y = _values(xs), _values(ys)
    if not x or not y:
        raise ValueError("a12 needs two non-empty samples")
    return u_statistic(x, y) / (len(x) * len(y))


@dataclass(frozen=True)
class ComparisonReport:
    mean_a: float
    mean_b: float
    a12: float
    u_statistic: float
    p_value: float
    significant: bool
    alpha: float = 0.05
    degenerate: bool = False
    label_a: str = "a"
    label_b: str = "b"


def mann_whitney_u(xs: SampleSet | Sequence[float], ys: SampleSet | Sequence[float], alpha: float = 0.05) -> ComparisonReport:
    x, y = _values(xs), _values(ys)
    m, n = len(x), len(y)
    if m < 1 or n < 1:
        raise ValueError("Mann-Whitney U needs two non-empty samples")
    u = u_statistic(x, y)
    pooled = list(x) + list(y)
    total = m + n
    tie_term = 0.0
    for _, group in itertools.groupby(sorted(pooled)):
        t = len(list(group))
        tie_term += t**3 - t
    variance = m * n / 12.0 * ((total + 1) - tie_term / (total * (total - 1))) if total > 1 else 0.0
    degenerate = variance <= 0.0
    if degenerate:
        p = 1.0
    else:
        z = max(abs(u - m * n / 2.0) - 0.5, 0.0) / math.sqrt(variance)
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return ComparisonReport(
        mean_a=math.fsum(x) / m,
        mean_b=math.fsum(y) / n,
        a12=u / (m * n),
        u_statistic=u,
        p_value=p,
        significant=p < alpha,
        alpha=alpha,
        degenerate=degenerate,
        label_a=xs.label if isinstance(xs, SampleSet) else "a",
        label_b=ys.label if isinstance(ys, SampleSet) else "b",
    )


def exact_mann_whitney_p(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Two-sided permutation p over all C(m+n, m) relabelings (small samples only)."""
    pooled = list(xs) + list(ys)
    m, n = len(xs), len(ys)
    ranks = midranks(pooled)
    centre = m * n / 2.0
    observed = abs(u_statistic(xs, ys) - centre)
    hits = 0
    count = 0
    for chosen in itertools.combinations(range(m + n), m):
        u = math.fsum(ranks[i] for i in chosen) - m * (m + 1) / 2.0
        if abs(u - centre) >= observed - 1e-9:
            hits += 1
        count += 1
    return hits / count


def relative_coverage(matrix: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    """Per-subject min-max normalised coverage, averaged over subjects.

    ``matrix[config][subject]`` is the mean coverage of a configuration on a
    subject. A subject where every configuration scores the same yields 1.
    """
    if len(matrix) < 2:
        raise ValueError("relative coverage needs at least two configurations")
    configs = list(matrix)
    subjects = sorted(set.intersection(*(set(row) for row in matrix.values())))
    if not subjects:
        raise ValueError("configurations share no subject")
    out: dict[str, list[float]] = {c: [] for c in configs}
    for s in subjects:
        column = [matrix[c][s] for c in configs]
        lo, hi = min(column), max(column)
        for c, v in zip(configs, column):
            out[c].append(1.0 if hi == lo else (v - lo) / (hi - lo))
    return {c: math.fsum(v) / len(v) for c, v in out.items()}


@dataclass
class ComparisonRow:
    configuration: str
    coverage: ComparisonReport
    mean_relative: float
    relative: ComparisonReport

    def csv_row(self) -> list[Any]:
        return [
            self.configuration,
            repr(self.coverage.mean_a),
            repr(self.coverage.a12),
            repr(self.coverage.p_value),
            repr(self.mean_relative),
            repr(self.relative.a12),
            repr(self.relative.p_value),
        ]


CSV_HEADER = [
    "configuration",
    "mean_coverage",
    "a12_coverage",
    "p_coverage",
    "mean_relative_coverage",
    "a12_relative_coverage",
    "p_relative_coverage",
]


@dataclass
class ComparisonTable:
    baseline: str
    rows: list[ComparisonRow]
    alpha: float
    metadata: dict[str, Any] = field(default_factory=dict)
