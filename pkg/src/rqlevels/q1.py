"""Closed-form equilibrium for unit order quantity (q = 1).

With ``q = 1`` the inventory level alone fixes how many orders are pending, and
the embedded chain observed at order placements and arrivals has a product-form
solution that does not depend on the residual lead times. Integrating the
occupancy times against it gives

    a(l)  proportional to  prod_{i=l+1}^{r+1} (tau * lambda_i) / (r - l + 1)!

on ``[l_L, r + 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ModelError, NotQ1
from .quadrature import integrate_1d
from .rate_model import LevelDistribution, SystemSpec


def _require_q1(spec: SystemSpec):
    if spec.policy.order_quantity != 1:
        raise NotQ1(f"order quantity must be 1, got {spec.policy.order_quantity}")


@dataclass(frozen=True)
class EmbeddedConstantsQ1:
    """Unnormalised equilibrium masses/densities of the embedded chain.

    ``arrival_top`` is the mass of arrivals that leave no order pending (level
    ``r + 1``). ``placement[l]`` is the mass or density of order placements that
    leave the level at ``l``; ``arrival[l]`` the density of arrivals that bring
    the level up to ``l`` with orders still pending. All are constants in the
    residual lead times.
    """

    scale: float
    arrival_top: float
    placement: dict = field(default_factory=dict)
    arrival: dict = field(default_factory=dict)

    # the residual checker and the integration route only call these three
    def bar_y(self) -> float:
        return self.arrival_top

    def hat_y(self, level: int, times: Sequence[float] = ()) -> float:
        return self.placement[level]

    def y(self, level: int, times: Sequence[float] = ()) -> float:
        return self.arrival[level]

    def perturbed(self, kind: str, level: int | None = None, factor: float = 1.1) -> "EmbeddedConstantsQ1":
        """Copy with one value multiplied by ``factor``; used to show residual checks bite."""
        if kind == "arrival_top":
            return replace(self, arrival_top=self.arrival_top * factor)
        if kind not in ("placement", "arrival"):
            raise ModelError(f"unknown component {kind!r}")
        table = dict(getattr(self, kind))
        table[level] = table[level] * factor
        return replace(self, **{kind: table})


def embedded_solution_q1(spec: SystemSpec, scale: float = 1.0) -> EmbeddedConstantsQ1:
    _require_q1(spec)
    r, n0, floor = spec.policy.reorder_point, spec.max_outstanding, spec.floor_level
    low = r - (n0 - 2)  # lowest level with a positive rate below r + 1
    lam = spec.profile.rate

    def inv_prod(upper):
        return scale / math.prod(lam(i) for i in range(low, upper + 1))

    placement = {l: inv_prod(l) for l in range(low, r + 1)}
    placement[r - (n0 - 1)] = scale
    arrival = {l: inv_prod(l - 1) for l in range(low + 1, r + 1)}
    if n0 >= 2:
        arrival[low] = scale
    assert r - (n0 - 1) == floor
    return EmbeddedConstantsQ1(scale, inv_prod(r), placement, arrival)


@dataclass(frozen=True)
class WeightTable:
    """Expected time per embedded-chain visit spent at each level (unnormalised)."""

    weights: dict

    def distribution(self) -> LevelDistribution:
        levels = sorted(self.weights)
        return LevelDistribution.from_weights(levels[0], [self.weights[l] for l in levels])


def weights_q1(spec: SystemSpec, scale: float = 1.0) -> WeightTable:
    _require_q1(spec)
    r, n0, tau = spec.policy.reorder_point, spec.max_outstanding, spec.policy.lead_time
    lam = spec.profile.rate
    low = r - (n0 - 2)

    def prod(a, b):
        return math.prod(lam(i) for i in range(a, b + 1))

    w = {r + 1: scale / prod(low, r + 1)}
    for l in range(low + 1, r + 1):
        w[l] = scale * tau ** (r - l + 1) / (math.factorial(r - l + 1) * prod(low, l))
    if n0 >= 2:
        w[low] = scale * tau ** (n0 - 1) / (math.factorial(n0 - 1) * lam(low))
    w[r - (n0 - 1)] = scale * tau**n0 / math.factorial(n0)
    return WeightTable(dict(sorted(w.items())))


def _log_terms(spec: SystemSpec) -> np.ndarray:
    r, tau = spec.policy.reorder_point, spec.policy.lead_time
    levels = spec.levels
    logs = []
    for l in levels:
        s = sum(math.log(tau * spec.profile.rate(i)) for i in range(l + 1, r + 2))
        logs.append(s - math.lgamma(r - l + 2))
    return np.array(logs)


def solve_q1(spec: SystemSpec) -> LevelDistribution:
    """Long-run level distribution on ``[l_L, r + 1]`` for a q = 1 system."""
    _require_q1(spec)
    logs = _log_terms(spec)
    return LevelDistribution.from_weights(spec.floor_level, np.exp(logs - logs.max()))


# ---------------------------------------------------------------------------
# verification routes


def _sorted_vector(times, tau):
    t = tuple(float(x) for x in times)
    if any(b < a for a, b in zip(t, t[1:])) or (t and (t[0] < 0 or t[-1] > tau)):
        raise ModelError(f"time vector must be sorted within [0, tau]: {t}")
    return t


def equilibrium_residuals_q1(
    spec: SystemSpec,
    solution,
    sample_times: Iterable[Sequence[float]],
    tol: float = 1e-10,
) -> dict[str, float]:
    """Largest ``|LHS - RHS|`` of each embedded-chain balance equation.

    ``solution`` provides ``bar_y()``, ``hat_y(level, times)`` and
    ``y(level, times)``; times are residual lead times in ascending order.
    Each sample is a sorted vector ``(t_1, ..., t_N0)``; an equation for a state
    with ``k`` pending orders reads the last ``k`` entries (arrival states) or
    the ``k - 1`` entries before the last, followed by ``tau`` (placements).
    Labels: ``0A``/``0B`` balance the no-pending state and the first placement,
    ``0C`` the arrival at ``r``, ``kB``/``kC`` placements/arrivals leaving ``k``
    orders pending at level ``r - k + 1``.
    """
    _require_q1(spec)
    r, n0, tau = spec.policy.reorder_point, spec.max_outstanding, spec.policy.lead_time
    profile = spec.profile
    low = r - (n0 - 2)

    def g0(level, x):
        return kernels.decrease_probability(profile, level, 0, x)

    def f1(level, x):
        return kernels.descent_density(profile, level, level, x)

    samples = [_sorted_vector(tv, tau) for tv in sample_times]
    for tv in samples:
        if len(tv) != n0:
            raise ModelError(f"each time vector needs N_0={n0} entries, got {len(tv)}")
    out: dict[str, float] = {}

    def record(label, lhs, rhs):
        out[label] = max(out.get(label, 0.0), abs(lhs - rhs))

    rhs = g0(r, tau) * solution.hat_y(r, (tau,))
    if n0 >= 2:
        rhs += integrate_1d(lambda x: g0(r, x) * solution.y(r, (x,)), 0.0, tau, tol)
    record("0A", solution.bar_y(), rhs)
    record("0B", solution.hat_y(r, (tau,)), solution.bar_y())

    for tv in samples:
        for k in range(1, n0):
            level, src = r - k + 1, r - k
            T = np.array(tv[n0 - k :])
            u = tau - T[-1]
            rhs = g0(src, u) * solution.hat_y(src, (u,) + tuple(u + T))
            if src >= low:
                rhs += integrate_1d(
                    lambda x: g0(src, x) * solution.y(src, (x,) + tuple(x + T)), 0.0, u, tol
                )
            record("0C" if k == 1 else f"{k}C", solution.y(level, tuple(T)), rhs)
        for k in range(2, n0 + 1):
            level, src = r - k + 1, r - k + 2
            T = np.array(tv[n0 - k : n0 - 1])
            u = tau - T[-1]
            rhs = f1(src, u) * solution.hat_y(src, tuple(u + T[:-1]) + (tau,))
            rhs += integrate_1d(lambda x: f1(src, x) * solution.y(src, tuple(x + T)), 0.0, u, tol)
            record(f"{k}B", solution.hat_y(level, tuple(T) + (tau,)), rhs)
    return out


def equilibrium_residual_q1(spec, solution, sample_times, tol: float = 1e-10) -> float:
    return max(equilibrium_residuals_q1(spec, solution, sample_times, tol).values())


def random_time_vectors(spec: SystemSpec, count: int, seed: int = 0) -> list[tuple[float, ...]]:
    """Sorted uniform samples of ``N_0`` residual lead times in ``[0, tau)``."""
    rng = np.random.default_rng(seed)
    tau = spec.policy.lead_time
    return [tuple(np.sort(rng.uniform(0.0, tau, spec.max_outstanding))) for _ in range(count)]


def weights_q1_by_integration(spec: SystemSpec, solution: EmbeddedConstantsQ1, tol: float = 1e-11) -> WeightTable:
    """Occupancy weights integrated directly against a time-independent solution.

    Expected time at level ``r - k + 1`` in a state with ``k`` pending orders is
    ``h(l, l, t)`` with ``t`` the soonest arrival. For a solution constant in the
    residual times, integrating over the ordered simplex of the other times
    leaves a single integral weighted by ``(tau - t)^m / m!``.
    """
    _require_q1(spec)
    r, n0, tau = spec.policy.reorder_point, spec.max_outstanding, spec.policy.lead_time
    profile = spec.profile

    def h(level, t):
        return kernels.expected_level_time(profile, level, level, t)

    def simplex(func, dims):
        # integral of func(t_min) over 0 <= t_min <= ... <= t_max <= tau
        if dims == 0:
            raise ValueError("zero-dimensional simplex has no smallest time")
        m = dims - 1
        return integrate_1d(lambda t: func(t) * (tau - t) ** m / math.factorial(m), 0.0, tau, tol)

    w = {r + 1: solution.bar_y() / profile.rate(r + 1)}
    for k in range(1, n0):
        level = r - k + 1
        placed = solution.hat_y(level) * (h(level, tau) if k == 1 else simplex(lambda t: h(level, t), k - 1))
        w[level] = solution.y(level) * simplex(lambda t: h(level, t), k) + placed
    floor = r - (n0 - 1)
    w[floor] = solution.hat_y(floor) * (tau if n0 == 1 else simplex(lambda t: t, n0 - 1))
    return WeightTable(dict(sorted(w.items())))
