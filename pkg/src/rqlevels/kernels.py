"""Kernels of a pure-death process with level-dependent exponential holding times.

Three quantities drive every equilibrium computation:

* ``f`` - density of the time to traverse a chain of levels, a sum of
  independent exponentials (hypoexponential, Erlang when all rates agree);
* ``g(l, d, t)`` - probability the level falls from ``l`` to exactly ``l - d``
  within ``t``;
* ``h(l', l, t)`` - expected time spent at level ``l`` during ``[0, t]`` when
  starting from ``l'``.

Each has a partial-fraction closed form for distinct rates, an Erlang/Poisson
form for equal rates, and a product-form Laplace transform. The closed forms
cancel catastrophically when rates nearly coincide, so the automatic strategy
falls back to numerical inversion of the transform there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np
from scipy import special

from .errors import EmptyChain, LevelOutOfRange, ModelError, PoleHit
from .laplace import DEFAULT_ACCURACY, DEFAULT_TERMS, invert_laplace
from .rate_model import RateProfile

Mode = Literal["closed_form_distinct", "closed_form_erlang", "laplace_inversion"]
MODES = ("closed_form_distinct", "closed_form_erlang", "laplace_inversion")


@dataclass(frozen=True)
class RateChain:
    """Rates of consecutive levels traversed by the process (all positive)."""

    rates: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "rates", rates)
        for lam in rates:
            if not (lam > 0 and math.isfinite(lam)):
                raise ModelError(f"chain rates must be positive and finite, got {lam!r}")

    def __len__(self):
        return len(self.rates)


@dataclass(frozen=True)
class EvalStrategy:
    """How kernels are evaluated.

    ``mode=None`` picks automatically: the Erlang form when all rates are
    bitwise equal, the distinct-rates form when the smallest pairwise relative
    gap exceeds ``distinctness_tolerance``, the chain has at most
    ``max_closed_form_length`` entries and the partial-fraction coefficients sum
    in absolute value to at most ``max_condition``; inversion otherwise.
    """

    mode: Optional[Mode] = None
    distinctness_tolerance: float = 1e-6
    max_closed_form_length: int = 12
    max_condition: float = 1e7
    inversion_accuracy: float = DEFAULT_ACCURACY
    inversion_terms: int = DEFAULT_TERMS

    def __post_init__(self):
        if self.mode is not None and self.mode not in MODES:
            raise ModelError(f"unknown evaluation mode {self.mode!r}")
        if not self.distinctness_tolerance > 0:
            raise ModelError("distinctness_tolerance must be positive")


AUTO = EvalStrategy()
ChainLike = Union[RateChain, Sequence[float]]


def _as_chain(chain: ChainLike) -> tuple[float, ...]:
    if isinstance(chain, RateChain):
        return chain.rates
    return RateChain(tuple(chain)).rates


def min_relative_gap(rates: Sequence[float]) -> float:
    """Smallest ``|a - b| / max(|a|, |b|)`` over pairs; ``inf`` for fewer than two."""
    x = np.sort(np.asarray(rates, dtype=float))
    if x.size < 2:
        return math.inf
    diff = np.diff(x)
    scale = np.maximum(np.abs(x[1:]), np.abs(x[:-1]))
    with np.errstate(invalid="ignore", divide="ignore"):
        gaps = np.where(scale > 0, diff / scale, 0.0)
    return float(gaps.min())


def partial_fraction_coefficients(rates: Sequence[float]) -> np.ndarray:
    """``c_i = prod_{j != i} lambda_j / (lambda_j - lambda_i)`` for distinct rates."""
    lam = np.asarray(rates, dtype=float)
    n = lam.size
    c = np.ones(n)
    for i in range(n):
        for j in range(n):
            if j != i:
                c[i] *= lam[j] / (lam[j] - lam[i])
    return c


def _phi(mu: float, t: float) -> float:
    """``(1 - exp(-mu t)) / mu``, continuous at ``mu = 0``."""
    if mu == 0.0:
        return t
    return -math.expm1(-mu * t) / mu


def _choose(chain: tuple[float, ...], tail: Optional[float], strategy: EvalStrategy) -> Mode:
    """Pick an evaluation mode for ``chain`` followed by an optional ``tail`` rate."""
    if not chain:
        # a single exponential stage is exact under any closed form
        return strategy.mode or "closed_form_distinct"
    all_rates = chain if tail is None or tail == 0.0 else chain + (tail,)
    equal = all(x == chain[0] for x in all_rates)
    if strategy.mode is not None:
        if strategy.mode == "closed_form_erlang" and not equal:
            raise ModelError("Erlang closed form requires all rates to be equal")
        if strategy.mode == "closed_form_distinct" and (
            len(all_rates) > 1 and min_relative_gap(all_rates) == 0.0
        ):
            raise ModelError("distinct-rates closed form requires distinct rates")
        return strategy.mode
    if equal:
        return "closed_form_erlang"
    if (
        len(all_rates) <= strategy.max_closed_form_length
        and min_relative_gap(all_rates) > strategy.distinctness_tolerance
        and np.abs(partial_fraction_coefficients(all_rates)).sum() <= strategy.max_condition
    ):
        return "closed_form_distinct"
    return "laplace_inversion"


def _check_time(t: float):
    if not (t >= 0 and math.isfinite(t)):
        raise ModelError(f"time must be finite and non-negative, got {t!r}")


def _check_poles(rates, s):
    s = np.asarray(s)
    for lam in rates:
        if np.any(s == -lam):
            raise PoleHit(f"transform evaluated at its pole s = {-lam}")


def _chain_product(rates, s):
    out = np.ones_like(np.asarray(s, dtype=complex))
    for lam in rates:
        out = out * (lam / (lam + s))
    return out


def _unwrap(value, s):
    return complex(value) if np.ndim(s) == 0 else value


# ---------------------------------------------------------------------------
# densities of sums of exponentials


def hypo_density_transform(chain: ChainLike, s):
    """Laplace transform ``prod lambda_i / (lambda_i + s)``; 1 for an empty chain."""
    rates = tuple(chain.rates) if isinstance(chain, RateChain) else tuple(float(x) for x in chain)
    _check_poles(rates, s)
    return _unwrap(_chain_product(rates, s), s)


def _density_distinct(rates, t):
    lam = np.asarray(rates)
    c = partial_fraction_coefficients(lam)
    return float(np.sum(c * lam * np.exp(-lam * t)))


def _density_erlang(rates, t):
    n, lam = len(rates), rates[0]
    if t == 0.0:
        return lam if n == 1 else 0.0
    return math.exp(n * math.log(lam) + (n - 1) * math.log(t) - lam * t - math.lgamma(n))


def hypo_density(chain: ChainLike, t: float, strategy: EvalStrategy = AUTO) -> float:
    """Density at ``t`` of the sum of independent exponentials with the chain's rates."""
    rates = _as_chain(chain)
    if not rates:
        raise EmptyChain("density of an empty chain is undefined")
    _check_time(t)
    if t == 0.0:
        return rates[0] if len(rates) == 1 else 0.0
    mode = _choose(rates, None, strategy)
    if len(rates) == 1 and mode != "laplace_inversion":
        return rates[0] * math.exp(-rates[0] * t)
    if mode == "closed_form_erlang":
        return _density_erlang(rates, t)
    if mode == "closed_form_distinct":
        return max(_density_distinct(rates, t), 0.0)
    value = invert_laplace(
        lambda s: _chain_product(rates, s), t, strategy.inversion_accuracy, strategy.inversion_terms
    )
    return max(value, 0.0)


def descent_density(profile: RateProfile, l_high: int, l_low: int, t: float, strategy=AUTO) -> float:
    """Density of the time to fall through levels ``l_high .. l_low`` (inclusive)."""
    return hypo_density(profile.chain(l_low, l_high), t, strategy)


# ---------------------------------------------------------------------------
# probability of falling exactly d levels


def _decrease_parts(profile: RateProfile, l: int, d: int):
    if d < 0 or int(d) != d:
        raise ModelError(f"decrease must be a non-negative integer, got {d!r}")
    if l > profile.level_max or l - d < profile.floor_level:
        raise LevelOutOfRange(
            f"decrease from {l} by {d} leaves profile range [{profile.floor_level}, {profile.level_max}]"
        )
    chain = profile.chain(l - d + 1, l)
    tail = profile.rate(l - d)
    return chain, tail


def decrease_probability_transform(profile: RateProfile, l: int, d: int, s):
    """``1/(lambda_{l-d} + s) * prod_{i=l-d+1}^{l} lambda_i/(lambda_i + s)``."""
    chain, tail = _decrease_parts(profile, l, d)
    _check_poles(chain + (tail,), s)
    return _unwrap(_chain_product(chain, s) / (tail + np.asarray(s, dtype=complex)), s)


def _decrease_distinct(chain, tail, t):
    lam = np.asarray(chain)
    c = partial_fraction_coefficients(lam)
    terms = c * lam / (tail - lam) * (np.exp(-lam * t) - math.exp(-tail * t))
    return float(np.sum(terms))


def _decrease_erlang(chain, tail, t):
    d, lam = len(chain), chain[0]
    x = lam * t
    if tail == 0.0:
        # absorbing target: falling at least d levels
        return float(special.gammainc(d, x))
    return math.exp(d * math.log(x) - x - math.lgamma(d + 1)) if x > 0 else 0.0


def decrease_probability(profile: RateProfile, l: int, d: int, t: float, strategy=AUTO) -> float:
    """Probability ``g(l, d, t)`` that the level is exactly ``l - d`` after time ``t``.

    When ``l - d`` is the floor the holding time there is infinite, so this is
    the probability of having fallen at least ``d`` levels.
    """
    chain, tail = _decrease_parts(profile, l, d)
    _check_time(t)
    if t == 0.0:
        return 1.0 if d == 0 else 0.0
    mode = _choose(chain, tail, strategy)
    if d == 0 and mode != "laplace_inversion":
        return math.exp(-tail * t)
    if mode == "closed_form_erlang":
        value = _decrease_erlang(chain, tail, t)
    elif mode == "closed_form_distinct":
        value = _decrease_distinct(chain, tail, t)
    else:
        value = invert_laplace(
            lambda s: _chain_product(chain, s) / (tail + s),
            t,
            strategy.inversion_accuracy,
            strategy.inversion_terms,
        )
    return min(max(value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# expected occupancy time


def _occupancy_parts(profile: RateProfile, l_start: int, l: int):
    if not profile.floor_level <= l <= l_start <= profile.level_max:
        raise LevelOutOfRange(
            f"need {profile.floor_level} <= l={l} <= l_start={l_start} <= {profile.level_max}"
        )
    return profile.chain(l + 1, l_start), profile.rate(l)


def expected_level_time_transform(profile: RateProfile, l_start: int, l: int, s):
    """``1/(s (lambda_l + s)) * prod_{i=l+1}^{l_start} lambda_i/(lambda_i + s)``."""
    chain, tail = _occupancy_parts(profile, l_start, l)
    _check_poles(chain + (tail, 0.0), s)
    s_arr = np.asarray(s, dtype=complex)
    return _unwrap(_chain_product(chain, s_arr) / (s_arr * (tail + s_arr)), s)


def _occupancy_distinct(chain, tail, t):
    lam = np.asarray(chain)
    c = partial_fraction_coefficients(lam)
    base = _phi(tail, t)
    terms = c * (base + (np.exp(-lam * t) - math.exp(-tail * t)) / (lam - tail))
    return float(np.sum(terms))


def _occupancy_erlang(chain, tail, t):
    n, lam = len(chain), chain[0]
    x = lam * t
    if tail == 0.0:
        return t * float(special.gammainc(n, x)) - n / lam * float(special.gammainc(n + 1, x))
    return float(special.gammainc(n + 1, x)) / lam


def expected_level_time(profile: RateProfile, l_start: int, l: int, t: float, strategy=AUTO) -> float:
    """Expected time ``h(l_start, l, t)`` spent at level ``l`` during ``[0, t]``."""
    chain, tail = _occupancy_parts(profile, l_start, l)
    _check_time(t)
    if t == 0.0:
        return 0.0
    mode = _choose(chain, tail, strategy)
    if not chain and mode != "laplace_inversion":
        return _phi(tail, t)
    if mode == "closed_form_erlang":
        value = _occupancy_erlang(chain, tail, t)
    elif mode == "closed_form_distinct":
        value = _occupancy_distinct(chain, tail, t)
    else:
        value = invert_laplace(
            lambda s: _chain_product(chain, s) / (s * (tail + s)),
            t,
            strategy.inversion_accuracy,
            strategy.inversion_terms,
        )
    return min(max(value, 0.0), t)
