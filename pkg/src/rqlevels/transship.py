"""Two buy-as-sold stores sharing stock through lateral transshipments.

Each store sees its own Poisson customers. A customer finding their store empty
is served from the other store if that store holds at least its cutoff level.
Treating the overflow from store ``n`` as Poisson with rate ``beta_n gamma_n``
(``beta_n`` the fraction of time store ``n`` is empty) gives store ``m`` the
effective rates

    gamma_m + beta_n gamma_n   at levels >= c_m,
    gamma_m                    on 1 <= l < c_m,
    0                          at l = 0,

and ``beta_m`` is then the q = 1 stockout probability of store ``m``. The pair
``(beta_a, beta_b)`` is found by damped successive substitution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import ModelError, NoConvergence
from .q1 import solve_q1
from .rate_model import LevelDistribution, Policy, RateProfile, SystemSpec

Store = Literal["a", "b"]


@dataclass(frozen=True)
class StoreSpec:
    reorder_point: int
    transship_cutoff: int
    demand_rate: float

    def __post_init__(self):
        if int(self.reorder_point) != self.reorder_point or self.reorder_point < 0:
            raise ModelError(f"reorder point must be a non-negative integer, got {self.reorder_point!r}")
        if not 1 <= self.transship_cutoff <= self.reorder_point + 1:
            raise ModelError(
                f"cutoff must lie in [1, r+1] = [1, {self.reorder_point + 1}], got {self.transship_cutoff!r}"
            )
        if not (self.demand_rate > 0 and math.isfinite(self.demand_rate)):
            raise ModelError(f"demand rate must be positive, got {self.demand_rate!r}")


@dataclass(frozen=True)
class TransshipScenario:
    store_a: StoreSpec
    store_b: StoreSpec
    lead_time: float

    def __post_init__(self):
        if not (self.lead_time > 0 and math.isfinite(self.lead_time)):
            raise ModelError(f"lead time must be positive, got {self.lead_time!r}")

    def store(self, which: Store) -> StoreSpec:
        return {"a": self.store_a, "b": self.store_b}[which]

    def other(self, which: Store) -> StoreSpec:
        return {"a": self.store_b, "b": self.store_a}[which]


@dataclass(frozen=True)
class BetaPair:
    beta_a: float
    beta_b: float

    def __post_init__(self):
        for name in ("beta_a", "beta_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ModelError(f"{name} must lie in [0, 1], got {v!r}")

    def of(self, which: Store) -> float:
        return self.beta_a if which == "a" else self.beta_b

    def distance(self, other: "BetaPair") -> float:
        return max(abs(self.beta_a - other.beta_a), abs(self.beta_b - other.beta_b))


def effective_profile(scenario: TransshipScenario, store: Store, beta_other: float) -> RateProfile:
    if not 0.0 <= beta_other <= 1.0:
        raise ModelError(f"beta_other must lie in [0, 1], got {beta_other!r}")
    me, peer = scenario.store(store), scenario.other(store)
    boosted = me.demand_rate + beta_other * peer.demand_rate
    rates = [0.0] + [
        boosted if level >= me.transship_cutoff else me.demand_rate
        for level in range(1, me.reorder_point + 2)
    ]
    return RateProfile(0, tuple(rates))


def store_system(scenario: TransshipScenario, store: Store, beta_other: float) -> SystemSpec:
    me = scenario.store(store)
    policy = Policy(me.reorder_point, 1, scenario.lead_time)
    return SystemSpec(policy, effective_profile(scenario, store, beta_other))


def stockout_fraction(scenario: TransshipScenario, store: Store, beta_other: float) -> float:
    """Empty-store fraction written out directly (products split at the cutoff).

    An independent route to ``solve_q1(store_system(...))[0]``.
    """
    me, peer = scenario.store(store), scenario.other(store)
    tau, r, c = scenario.lead_time, me.reorder_point, me.transship_cutoff
    low = tau * me.demand_rate
    high = tau * (me.demand_rate + beta_other * peer.demand_rate)

    def term(j):
        n_low = max(0, (c - 1) - (j + 1) + 1)
        n_high = (r + 1) - max(c, j + 1) + 1
        return low**n_low * high ** max(n_high, 0) / math.factorial(r - j + 1)

    return term(0) / math.fsum(term(j) for j in range(r + 2))


def beta_update(scenario: TransshipScenario, current: BetaPair) -> BetaPair:
    a = solve_q1(store_system(scenario, "a", current.beta_b))[0]
    b = solve_q1(store_system(scenario, "b", current.beta_a))[0]
    return BetaPair(a, b)


@dataclass(frozen=True)
class FixedPointReport:
    beta: BetaPair
    iterations: int
    residual: float  # sup-norm distance between beta and its undamped update


def iterate_fixed_point(
    scenario: TransshipScenario,
    tolerance: float = 1e-10,
    max_iterations: int = 10_000,
    damping: float = 0.5,
    start: BetaPair = BetaPair(0.0, 0.0),
) -> FixedPointReport:
    """Damped successive substitution ``beta <- (1 - a) beta + a update(beta)``."""
    if not tolerance > 0:
        raise ModelError("tolerance must be positive")
    if not 0.0 < damping <= 1.0:
        raise ModelError("damping must lie in (0, 1]")
    beta = start
    residual = math.inf
    for it in range(max_iterations + 1):
        new = beta_update(scenario, beta)
        residual = new.distance(beta)
        if residual <= tolerance:
            return FixedPointReport(beta, it, residual)
        beta = BetaPair(
            (1 - damping) * beta.beta_a + damping * new.beta_a,
            (1 - damping) * beta.beta_b + damping * new.beta_b,
        )
    raise NoConvergence(
        f"no fixed point within {max_iterations} iterations; last residual {residual:.3g}",
        residual=residual,
    )


def solve_fixed_point(
    scenario: TransshipScenario,
    tolerance: float = 1e-10,
    max_iterations: int = 10_000,
    damping: float = 0.5,
) -> BetaPair:
    return iterate_fixed_point(scenario, tolerance, max_iterations, damping).beta


def multistart_fixed_point(scenario: TransshipScenario, tolerance=1e-10, max_iterations=10_000, damping=0.5):
    """Solve from ``(0, 0)`` and ``(1, 1)``; returns both reports and their distance.

    Uniqueness is not known in general, so disagreement is reported, not resolved.
    """
    low = iterate_fixed_point(scenario, tolerance, max_iterations, damping, BetaPair(0.0, 0.0))
    high = iterate_fixed_point(scenario, tolerance, max_iterations, damping, BetaPair(1.0, 1.0))
    return low, high, low.beta.distance(high.beta)


def store_distributions(scenario: TransshipScenario, beta: BetaPair) -> tuple[LevelDistribution, LevelDistribution]:
    return (
        solve_q1(store_system(scenario, "a", beta.beta_b)),
        solve_q1(store_system(scenario, "b", beta.beta_a)),
    )
