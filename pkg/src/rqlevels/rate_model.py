"""Domain types for a continuous-review (r, q) lost-sales system.

The inventory level moves down one unit at a time. At level ``l`` the holding
time is exponential with rate ``lambda_l``; an order of ``q`` units is placed
each time the net inventory position drops from ``r + 1`` to ``r`` and arrives
after the constant lead time ``tau``. Below some floor level ``l_L`` every rate
is zero, which bounds the number of orders in flight by ``N_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    FloorAboveReorderPoint,
    IncompleteRange,
    InvalidRate,
    LevelOutOfRange,
    ModelError,
    NegativeRate,
    NoFloor,
    ZeroInteriorRate,
)


@dataclass(frozen=True)
class RateProfile:
    """Level-dependent rates on the contiguous range ``[floor_level, level_max]``.

    ``rates[i]`` is the rate at level ``floor_level + i``. The rate at the
    floor is exactly zero; all rates above it are strictly positive.
    """

    floor_level: int
    rates: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise IncompleteRange("rate profile is empty")
        for i, lam in enumerate(rates):
            level = self.floor_level + i
            if not math.isfinite(lam):
                raise InvalidRate(f"rate at level {level} is not finite: {lam!r}")
            if lam < 0:
                raise NegativeRate(f"rate at level {level} is negative: {lam!r}")
        if rates[0] != 0.0:
            raise NoFloor(f"rate at floor level {self.floor_level} must be 0, got {rates[0]!r}")
        for i, lam in enumerate(rates[1:], start=1):
            if lam == 0.0:
                raise ZeroInteriorRate(
                    f"rate at level {self.floor_level + i} is 0 but the floor is {self.floor_level}"
                )

    @property
    def level_max(self) -> int:
        return self.floor_level + len(self.rates) - 1

    @property
    def levels(self) -> range:
        return range(self.floor_level, self.level_max + 1)

    def rate(self, level: int) -> float:
        if not self.floor_level <= level <= self.level_max:
            raise LevelOutOfRange(
                f"level {level} outside profile range [{self.floor_level}, {self.level_max}]"
            )
        return self.rates[level - self.floor_level]

    def chain(self, low: int, high: int) -> tuple[float, ...]:
        """Rates of levels ``low..high`` inclusive, ordered from ``low`` upward."""
        if low > high:
            return ()
        if low < self.floor_level or high > self.level_max:
            raise LevelOutOfRange(
                f"levels [{low}, {high}] outside profile range [{self.floor_level}, {self.level_max}]"
            )
        return self.rates[low - self.floor_level : high - self.floor_level + 1]

    def as_dict(self) -> dict[int, float]:
        return {self.floor_level + i: lam for i, lam in enumerate(self.rates)}

    @classmethod
    def from_levels(cls, floor_level: int, rates: Sequence[float]) -> "RateProfile":
        return cls(floor_level, tuple(rates))


@dataclass(frozen=True)
class Policy:
    reorder_point: int
    order_quantity: int
    lead_time: float

    def __post_init__(self):
        if int(self.order_quantity) != self.order_quantity or self.order_quantity < 1:
            raise ModelError(f"order quantity must be a positive integer, got {self.order_quantity!r}")
        if int(self.reorder_point) != self.reorder_point:
            raise ModelError(f"reorder point must be an integer, got {self.reorder_point!r}")
        if not (math.isfinite(self.lead_time) and self.lead_time > 0):
            raise ModelError(f"lead time must be positive and finite, got {self.lead_time!r}")
        object.__setattr__(self, "reorder_point", int(self.reorder_point))
        object.__setattr__(self, "order_quantity", int(self.order_quantity))
        object.__setattr__(self, "lead_time", float(self.lead_time))

    @property
    def top_level(self) -> int:
        return self.reorder_point + self.order_quantity


def max_outstanding_orders(policy: Policy, floor_level: int) -> int:
    """Largest ``N_0`` with ``N_0 <= (r - l_L)/q + 1``."""
    return (policy.reorder_point - floor_level) // policy.order_quantity + 1


@dataclass(frozen=True)
class SystemSpec:
    policy: Policy
    profile: RateProfile
    max_outstanding: int = field(init=False)

    def __post_init__(self):
        r, top = self.policy.reorder_point, self.policy.top_level
        if self.profile.floor_level > r:
            raise FloorAboveReorderPoint(
                f"floor level {self.profile.floor_level} exceeds reorder point {r}"
            )
        if self.profile.level_max != top:
            raise IncompleteRange(
                f"profile must end at r+q={top}, but it ends at {self.profile.level_max}"
            )
        object.__setattr__(
            self, "max_outstanding", max_outstanding_orders(self.policy, self.profile.floor_level)
        )

    @property
    def floor_level(self) -> int:
        return self.profile.floor_level

    @property
    def top_level(self) -> int:
        return self.policy.top_level

    @property
    def levels(self) -> range:
        return self.profile.levels


@dataclass(frozen=True, eq=False)
class LevelDistribution:
    """Long-run fraction of time spent at each level, from ``floor_level`` upward."""

    floor_level: int
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ModelError("probabilities must be a non-empty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ModelError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ModelError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_weights(cls, floor_level: int, weights: Iterable[float]) -> "LevelDistribution":
        w = np.asarray(list(weights), dtype=float)
        p = w / w.sum()
        # renormalize once more so the sum is 1 to the last bit where possible
        return cls(floor_level, p / math.fsum(p))

    @property
    def levels(self) -> range:
        return range(self.floor_level, self.floor_level + len(self.probabilities))

    def __getitem__(self, level: int) -> float:
        i = level - self.floor_level
        if not 0 <= i < len(self.probabilities):
            return 0.0
        return float(self.probabilities[i])

    def __eq__(self, other):
        if not isinstance(other, LevelDistribution):
            return NotImplemented
        return self.floor_level == other.floor_level and np.array_equal(
            self.probabilities, other.probabilities
        )

    def as_dict(self) -> dict[int, float]:
        return {l: float(p) for l, p in zip(self.levels, self.probabilities)}

    def total_variation(self, other: "LevelDistribution") -> float:
        lo = min(self.floor_level, other.floor_level)
        hi = max(self.levels[-1], other.levels[-1])
        return 0.5 * sum(abs(self[l] - other[l]) for l in range(lo, hi + 1))


def validate_profile(policy: Policy, raw_rates: Mapping[int, float]) -> SystemSpec:
    """Bind a raw level->rate table to a policy.

    The floor is the highest level of the initial run of zero rates. Zero-rate
    levels below the floor are accepted and dropped; the remaining table must
    cover exactly ``[l_L, r + q]``.
    """
    if not raw_rates:
        raise IncompleteRange("rate table is empty")
    levels = sorted(int(l) for l in raw_rates)
    if levels != list(range(levels[0], levels[-1] + 1)):
        missing = sorted(set(range(levels[0], levels[-1] + 1)) - set(levels))
        raise IncompleteRange(f"rate table is not contiguous; missing levels {missing}")
    values = [float(raw_rates[l]) for l in levels]
    for level, lam in zip(levels, values):
        if not math.isfinite(lam):
            raise InvalidRate(f"rate at level {level} is not finite: {lam!r}")
        if lam < 0:
            raise NegativeRate(f"rate at level {level} is negative: {lam!r}")
    if values[0] != 0.0:
        raise NoFloor("no absorbing level: the lowest level has a positive rate")
    i = 0
    while i + 1 < len(values) and values[i + 1] == 0.0:
        i += 1
    floor = levels[i]
    top = policy.top_level
    if floor > policy.reorder_point:
        raise FloorAboveReorderPoint(
            f"floor level {floor} exceeds reorder point {policy.reorder_point}"
        )
    if levels[-1] < top:
        raise IncompleteRange(f"rate table stops at level {levels[-1]}; levels up to r+q={top} are required")
    if levels[-1] > top:
        raise IncompleteRange(f"rate table extends to level {levels[-1]} beyond r+q={top}")
    profile = RateProfile(floor, tuple(values[i:]))
    return SystemSpec(policy, profile)


def constant_profile(rate: float, floor_level: int, top_level: int) -> RateProfile:
    return RateProfile(floor_level, (0.0,) + (float(rate),) * (top_level - floor_level))


def backlog_transship_profile(
    demand_rate: float,
    transship_rate: float,
    transship_level: int,
    backlog_floor: int,
    top_level: int,
) -> RateProfile:
    """Rates for a store with overflow demand and partial backlogging.

    ``demand_rate + transship_rate`` at and above ``transship_level``,
    ``demand_rate`` on ``(0, transship_level)``, half the demand rate on
    ``(backlog_floor, 0]`` where half the customers accept a backorder, and 0 at
    ``backlog_floor``.
    """
    if not backlog_floor <= 0 < transship_level:
        raise ModelError("need backlog_floor <= 0 < transship_level")
    rates = []
    for level in range(backlog_floor, top_level + 1):
        if level == backlog_floor:
            rates.append(0.0)
        elif level >= transship_level:
            rates.append(demand_rate + transship_rate)
        elif level > 0:
            rates.append(demand_rate)
        else:
            rates.append(demand_rate / 2)
    return RateProfile(backlog_floor, tuple(rates))
