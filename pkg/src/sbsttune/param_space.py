"""Hyperparameter spaces for DynaMOSA and MIO.

A :class:`ParamSpace` is an ordered list of :class:`ParamSpec` entries. The
order fixes the dimension index used when a configuration is encoded as a real
vector for differential evolution, and the lexicographic order of the grid.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence, Union

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContinuousInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, value: Any) -> bool:
        return isinstance(value, (int, float)) and not isinstance(value, bool) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class IntegerInterval:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, value: Any) -> bool:
        return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class Categorical:
    options: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.options) < 2 or len(set(self.options)) != len(self.options):
            raise ValueError(f"categorical domain needs >= 2 distinct options, got {self.options}")

    def contains(self, value: Any) -> bool:
        return value in self.options


ParamDomain = Union[ContinuousInterval, IntegerInterval, Categorical]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    domain: ParamDomain
    grid_levels: tuple[Any, ...]

    def __post_init__(self) -> None:
        if not self.grid_levels:
            raise ValueError(f"{self.name}: grid_levels must be non-empty")
        if len(set(self.grid_levels)) != len(self.grid_levels):
            raise ValueError(f"{self.name}: duplicate grid levels")
        for level in self.grid_levels:
            if not self.domain.contains(level):
                raise ValueError(f"{self.name}: grid level {level!r} outside domain")

    def bounds(self) -> tuple[float, float]:
        """Vector-coordinate bounds used by DE (categoricals span ``[0, k]``)."""
        if isinstance(self.domain, Categorical):
            return 0.0, float(len(self.domain.options))
        return float(self.domain.lo), float(self.domain.hi)


class Configuration(Mapping[str, Any]):
    """Immutable assignment of one value per parameter of a space."""

    __slots__ = ("space_id", "_values")

    def __init__(self, space_id: str, values: Mapping[str, Any]) -> None:
        self.space_id = space_id
        self._values = dict(values)

    def __getitem__(self, key: str) -> Any:
        return self._values[key]

    def __iter__(self):
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.space_id == other.space_id and self._values == other._values

    def __hash__(self) -> int:
        return hash((self.space_id, tuple(sorted(self._values.items()))))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._values.items())
        return f"Configuration({self.space_id}: {inner})"

    def replace(self, **changes: Any) -> Configuration:
        return Configuration(self.space_id, {**self._values, **changes})

    def to_json(self) -> dict[str, Any]:
        return {"space": self.space_id, "values": dict(self._values)}

    def dumps(self) -> str:
        """Canonical JSON text; also the input to configuration digests."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


Relevance = Callable[[Mapping[str, Any]], bool]


@dataclass(frozen=True)
class ParamSpace:
    id: str
    specs: tuple[ParamSpec, ...]
    relevance: Mapping[str, Relevance] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in space {self.id}")
        unknown = set(self.relevance) - set(names)
        if unknown:
            raise ValueError(f"relevance predicates for unknown parameters: {sorted(unknown)}")

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    @property
    def dimension(self) -> int:
        return len(self.specs)

    def spec(self, name: str) -> ParamSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise KeyError(name)

    def bounds(self) -> list[tuple[float, float]]:
        return [s.bounds() for s in self.specs]

    def is_relevant(self, name: str, config: Mapping[str, Any]) -> bool:
        predicate = self.relevance.get(name)
        return True if predicate is None else bool(predicate(config))

    def validate(self, config: Mapping[str, Any]) -> Configuration:
        """Return ``config`` as a Configuration of this space or raise ValueError."""
        if isinstance(config, Configuration) and config.space_id != self.id:
            raise ValueError(f"configuration belongs to space {config.space_id!r}, not {self.id!r}")
        missing = [n for n in self.names if n not in config]
        extra = [n for n in config if n not in self.names]
        if missing or extra:
            raise ValueError(f"{self.id}: missing parameters {missing}, unknown parameters {extra}")
        for s in self.specs:
            value = config[s.name]
            if not s.domain.contains(value):
                raise ValueError(f"{self.id}: {s.name}={value!r} outside {s.domain}")
        return config if isinstance(config, Configuration) else Configuration(self.id, {n: config[n] for n in self.names})

    def canonical(self, config: Mapping[str, Any]) -> Configuration:
        """Pin every irrelevant parameter to its first grid level."""
        values = {n: config[n] for n in self.names}
        for s in self.specs:
            if not self.is_relevant(s.name, config):
                values[s.name] = s.grid_levels[0]
        return Configuration(self.id, values)

    def equivalent(self, a: Mapping[str, Any], b: Mapping[str, Any]) -> bool:
        """Equality on relevant parameters only."""
        return self.canonical(a) == self.canonical(b)

    def config_from_json(self, doc: Mapping[str, Any]) -> Configuration:
        if doc.get("space") != self.id:
            raise ValueError(f"document is for space {doc.get('space')!r}, expected {self.id!r}")
        return self.validate(Configuration(self.id, doc["values"]))


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def decode_vector(space: ParamSpace, vector: Sequence[float], warnings: list[str] | None = None) -> Configuration:
    """Map a DE vector to a configuration.

    Integer coordinates are rounded half away from zero, categorical ones are
    floored to an option index. Coordinates outside the bounds are clamped and,
    when ``warnings`` is given, reported there.
    """
    if len(vector) != space.dimension:
        raise ValueError(f"vector has {len(vector)} coordinates, space {space.id} has {space.dimension}")
    values: dict[str, Any] = {}
    for s, x in zip(space.specs, vector):
        x = float(x)
        lo, hi = s.bounds()
        dom = s.domain
        upper_ok = x < hi if isinstance(dom, Categorical) else x <= hi
        if not (lo <= x and upper_ok) and warnings is not None:
            warnings.append(f"{s.name}: coordinate {x!r} outside [{lo}, {hi}] clamped")
        if isinstance(dom, ContinuousInterval):
            values[s.name] = min(max(x, dom.lo), dom.hi)
        elif isinstance(dom, IntegerInterval):
            values[s.name] = min(max(_round_half_away(x), dom.lo), dom.hi)
        else:
            index = min(max(math.floor(x), 0), len(dom.options) - 1)
            values[s.name] = dom.options[index]
    return Configuration(space.id, values)


def encode_config(space: ParamSpace, config: Mapping[str, Any]) -> list[float]:
    config = space.validate(config)
    vector = []
    for s in space.specs:
        value = config[s.name]
        if isinstance(s.domain, Categorical):
            vector.append(s.domain.options.index(value) + 0.5)
        else:
            vector.append(float(value))
    return vector


def grid_enumerate(space: ParamSpace) -> list[tuple[int, Configuration]]:
    """Deduplicated lexicographic grid; ``grid_id`` is the 1-based position."""
    seen: set[Configuration] = set()
    out: list[tuple[int, Configuration]] = []
    for combo in itertools.product(*(s.grid_levels for s in space.specs)):
        config = space.canonical(dict(zip(space.names, combo)))
        if config in seen:
            continue
        seen.add(config)
        out.append((len(out) + 1, config))
    return out


# -- concrete spaces ---------------------------------------------------------

DYNAMOSA_SPACE_ID = "dynamosa"
MIO_SPACE_ID = "mio"


def build_dynamosa_space() -> ParamSpace:
    return ParamSpace(
        DYNAMOSA_SPACE_ID,
        (
            ParamSpec("chromosome_length", IntegerInterval(5, 100), (5, 10, 25, 50, 100)),
            ParamSpec("num_mutations", IntegerInterval(0, 25), (0, 1, 5, 10, 25)),
            ParamSpec("population_size", IntegerInterval(4, 200), (4, 10, 50, 100, 200)),
            ParamSpec("crossover_rate", ContinuousInterval(0.0, 1.0), (0.0, 0.25, 0.5, 0.75, 1.0)),
            ParamSpec("selection", Categorical(("rank", "tournament")), ("rank", "tournament")),
            ParamSpec("rank_bias", ContinuousInterval(1.01, 1.99), (1.2, 1.7)),
            ParamSpec("tournament_size", IntegerInterval(1, 20), (2, 7)),
        ),
        {
            "rank_bias": lambda c: c["selection"] == "rank",
            "tournament_size": lambda c: c["selection"] == "tournament",
        },
    )


def build_mio_space() -> ParamSpace:
    return ParamSpace(
        MIO_SPACE_ID,
        (
            ParamSpec("chromosome_length", IntegerInterval(10, 50), (10, 25, 50)),
            ParamSpec("phase_switch", ContinuousInterval(0.0, 1.0), (0.0, 0.25, 0.5, 0.75, 1.0)),
            ParamSpec("explore_tests_per_target", IntegerInterval(1, 25), (1, 10, 25)),
            ParamSpec("explore_random_probability", ContinuousInterval(0.0, 1.0), (0.0, 1 / 3, 2 / 3, 1.0)),
            ParamSpec("explore_mutations", IntegerInterval(1, 25), (1, 10, 25)),
            ParamSpec("exploit_mutations", IntegerInterval(1, 25), (1, 10, 25)),
        ),
    )


SPACE_BUILDERS: dict[str, Callable[[], ParamSpace]] = {
    DYNAMOSA_SPACE_ID: build_dynamosa_space,
    MIO_SPACE_ID: build_mio_space,
}


def space_for(algorithm: str) -> ParamSpace:
    try:
        return SPACE_BUILDERS[algorithm]()
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {sorted(SPACE_BUILDERS)}") from None


# -- presets (best settings per tuning objective, plus the tool defaults) ----

_DYNAMOSA_COLUMNS = (
    "chromosome_length",
    "crossover_rate",
    "num_mutations",
    "population_size",
    "rank_bias",
    "selection",
    "tournament_size",
)
_DYNAMOSA_ROWS = {
    "dynamosa-de-1+1": (53, 0.7371902799042689, 3, 18, 1.3880136909602547, "rank", 4),
    "dynamosa-de-1+10": (39, 0.6761984293507988, 2, 18, 1.340019211181281, "rank", 12),
    "dynamosa-de-1+0": (48, 0.6480085675338735, 3, 10, 1.681839842637804, "rank", 4),
    "dynamosa-de-10+1": (45, 0.5725919133789719, 4, 8, 1.4399447184211887, "rank", 12),
    "dynamosa-de-0+1": (46, 0.5485404465990583, 3, 10, 1.3417410413300472, "rank", 3),
    "dynamosa-default": (40, 0.75, 1, 50, 1.7, "tournament", 5),
    "dynamosa-gs": (100, 0.75, 1, 4, 1.2, "rank", 5),
}

_MIO_COLUMNS = (
    "chromosome_length",
    "phase_switch",
    "explore_tests_per_target",
    "explore_random_probability",
    "explore_mutations",
    "exploit_mutations",
)
_MIO_ROWS = {
    "mio-de-1+1": (48, 0.761911379260028, 24, 0.6725632331222376, 1, 5),
    "mio-de-1+10": (12, 0.09257220676705963, 16, 0.7281693389867376, 6, 1),
    "mio-de-1+0": (28, 0.09293011967714027, 1, 0.02319032555223932, 6, 2),
    "mio-de-10+1": (17, 0.2952122304290511, 24, 0.31171486653710284, 7, 4),
    "mio-de-0+1": (35, 0.07844694968476967, 16, 0.3325342365940621, 1, 13),
    "mio-default": (40, 0.5, 10, 0.5, 1, 10),
    "mio-gs-114": (10, 0.0, 10, 0.666666666666666, 1, 10),
    "mio-gs-325": (10, 0.25, 1, 0.333333333333333, 1, 1),
}


def _load_presets() -> dict[str, Configuration]:
    registry: dict[str, Configuration] = {}
    for space, columns, rows in (
        (build_dynamosa_space(), _DYNAMOSA_COLUMNS, _DYNAMOSA_ROWS),
        (build_mio_space(), _MIO_COLUMNS, _MIO_ROWS),
    ):
        for name, row in rows.items():
            # a tabulated value outside the tuning bounds is a load-time error
            registry[name] = space.validate(Configuration(space.id, dict(zip(columns, row))))
    return registry


PRESETS: dict[str, Configuration] = _load_presets()

DEFAULT_PRESET = {DYNAMOSA_SPACE_ID: "dynamosa-default", MIO_SPACE_ID: "mio-default"}


def preset(name: str) -> Configuration:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def preset_names(algorithm: str | None = None) -> list[str]:
    return sorted(n for n, c in PRESETS.items() if algorithm is None or c.space_id == algorithm)

