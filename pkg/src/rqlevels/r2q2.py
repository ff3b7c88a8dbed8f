"""Analytical solution for r = 2, q = 2 with constant rate above an absorbing 0.

Up to two orders can be outstanding. Scaling the embedded chain so that the
first placement (level 2, one order pending) has mass 1, the density of second
placements ``z(t)`` (level 0, older order due in ``t``) solves

    z(t) = int_0^{tau-t} lam^2 (tau-t-x) e^{-lam (tau-t-x)} z(x) dx
           + lam^2 (tau-t) e^{-lam (tau-t)},

whose solution is ``A + B t + C e^{sqrt2 lam t} + D e^{-sqrt2 lam t}``.
Arrivals at level 2 with one order pending have density ``z(tau - t)``; none
arrive at level 1. Occupancy weights follow by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ModelError
from .quadrature import integrate_1d
from .rate_model import LevelDistribution, RateProfile, constant_profile

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ZSolution:
    lam: float
    tau: float
    A: float
    B: float
    C: float
    D: float

    def z(self, t):
        k = SQRT2 * self.lam
        return self.A + self.B * t + self.C * np.exp(k * t) + self.D * np.exp(-k * t)

    def derivative(self, t, order: int):
        k = SQRT2 * self.lam
        linear = {0: self.A + self.B * t, 1: self.B}.get(order, 0.0)
        return linear + k**order * self.C * np.exp(k * t) + (-k) ** order * self.D * np.exp(-k * t)


def _check(lam, tau):
    if not (lam > 0 and math.isfinite(lam)):
        raise ModelError(f"rate must be positive, got {lam!r}")
    if not (tau > 0 and math.isfinite(tau)):
        raise ModelError(f"lead time must be positive, got {tau!r}")


def z_constants(lam: float, tau: float) -> ZSolution:
    _check(lam, tau)
    e = math.exp(lam * tau * SQRT2)
    den = e - 3.0 + 2.0 * SQRT2
    # e^x > 3 - 2 sqrt2 for every x > 0
    assert den > 0
    A = 0.5 * lam * SQRT2 * (-2.0 * SQRT2 + 3.0 + e) / den
    C = -0.5 * lam * SQRT2 / den
    D = -0.5 * (-4.0 + 3.0 * SQRT2) * lam * e / den
    return ZSolution(lam, tau, A, 0.0, C, D)


def integral_equation_residual(sol: ZSolution, t_grid: Sequence[float], tol: float = 1e-12) -> float:
    lam, tau = sol.lam, sol.tau
    worst = 0.0
    for t in t_grid:
        if not 0.0 <= t <= tau:
            raise ModelError(f"grid point {t} outside [0, {tau}]")
        u = tau - t
        kernel = lambda x: lam**2 * (u - x) * math.exp(-lam * (u - x)) * sol.z(x)
        rhs = integrate_1d(kernel, 0.0, u, tol) + lam**2 * u * math.exp(-lam * u)
        worst = max(worst, abs(rhs - sol.z(t)))
    return worst


def ode_residual(sol: ZSolution, t_grid: Sequence[float]) -> float:
    t = np.asarray(t_grid, dtype=float)
    r = -2.0 * sol.lam**2 * sol.derivative(t, 2) + sol.derivative(t, 4)
    return float(np.max(np.abs(r)))


@dataclass(frozen=True)
class R2Q2Weights:
    arrival_top: dict  # level -> mass of arrivals leaving no order pending (3 and 4)
    weights: dict  # level -> expected time per embedded visit

    @property
    def arrival_balance(self) -> float:
        """Arrivals into levels 3 and 4 must add to the first-placement mass 1."""
        return sum(self.arrival_top.values()) - 1.0


def r2q2_profile(lam: float) -> RateProfile:
    return constant_profile(lam, 0, 4)


def r2q2_weights(lam: float, tau: float, tol: float = 1e-9, strategy=kernels.AUTO) -> R2Q2Weights:
    sol = z_constants(lam, tau)
    profile = r2q2_profile(lam)

    def arriving_at_2(x):  # density of arrivals at level 2 with the other order due in x
        return float(sol.z(tau - x))

    def g(l, d, t):
        return kernels.decrease_probability(profile, l, d, t, strategy)

    def h(start, l, t):
        return kernels.expected_level_time(profile, start, l, t, strategy)

    # arrivals that empty the pipeline; the level-1 arrival density is zero
    bar4 = integrate_1d(lambda x: g(2, 0, x) * arriving_at_2(x), 0.0, tau, tol) + g(2, 0, tau)
    bar3 = integrate_1d(lambda x: g(2, 1, x) * arriving_at_2(x), 0.0, tau, tol) + g(2, 1, tau)

    w = {
        4: bar4 / lam,
        3: (bar3 + bar4) / lam,
    }
    for level in (1, 2):
        w[level] = integrate_1d(lambda t: h(2, level, t) * arriving_at_2(t), 0.0, tau, tol) + h(2, level, tau)
    w[0] = integrate_1d(lambda t: t * float(sol.z(t)), 0.0, tau, tol)
    return R2Q2Weights({3: bar3, 4: bar4}, dict(sorted(w.items())))


def solve_r2q2(lam: float, tau: float, tol: float = 1e-9) -> LevelDistribution:
    w = r2q2_weights(lam, tau, tol).weights
    return LevelDistribution.from_weights(0, [w[l] for l in range(5)])
