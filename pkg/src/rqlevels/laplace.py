"""Numerical Laplace transform inversion by Euler summation of the Bromwich series.

The Bromwich integral is discretised with the trapezoidal rule along the line
``Re(s) = A / (2t)``; the resulting alternating series is accelerated with
binomial (Euler) averaging of its last ``m + 1`` partial sums. Discretisation
error is about ``exp(-A)`` times the size of ``F`` near ``3t``, so ``A`` is
derived from the requested accuracy.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .errors import AccuracyNotReached, ModelError

DEFAULT_TERMS = 35
DEFAULT_AVERAGED = 11
DEFAULT_ACCURACY = 1e-8


def _euler_weights(m: int) -> np.ndarray:
    return np.array([math.comb(m, j) for j in range(m + 1)], dtype=float) / 2.0**m


def bromwich_nodes(t: float, terms: int = DEFAULT_TERMS, target_accuracy: float = DEFAULT_ACCURACY):
    """Abscissae ``s_k`` at which the transform is sampled for inversion at ``t``."""
    A = math.log(100.0 / target_accuracy)
    k = np.arange(terms)
    return (A + 2j * math.pi * k) / (2.0 * t), A


def _euler_sum(values: np.ndarray, A: float, t: float, averaged: int):
    terms = values.size
    series = np.real(values) * np.where(np.arange(terms) % 2 == 0, 1.0, -1.0)
    series[0] *= 0.5
    partial = np.cumsum(series) * (math.exp(A / 2.0) / t)
    n = terms - averaged - 1
    w = _euler_weights(averaged)
    value = float(w @ partial[n : n + averaged + 1])
    previous = float(w @ partial[n - 1 : n + averaged])
    return value, abs(value - previous) + math.exp(-A) * max(1.0, abs(value))


def invert_laplace(
    transform: Callable[[np.ndarray], np.ndarray],
    t: float,
    target_accuracy: float = DEFAULT_ACCURACY,
    terms: int = DEFAULT_TERMS,
    averaged: int = DEFAULT_AVERAGED,
    max_terms: Optional[int] = None,
) -> float:
    """Return ``F(t)`` from its Laplace transform ``transform``.

    ``transform`` is called with a complex array of abscissae and must return an
    array of the same shape. The error estimate combines the change between the
    last two Euler averages with the discretisation bound. While it exceeds
    ``target_accuracy`` the series is extended by ``averaged + 1`` terms, up to
    ``max_terms`` (default ``3 * terms``); past that :class:`AccuracyNotReached`
    is raised.
    """
    if not (t > 0 and math.isfinite(t)):
        raise ModelError(f"inversion time must be positive, got {t!r}")
    if averaged < 1 or terms < averaged + 2:
        raise ModelError("need terms >= averaged + 2 and averaged >= 1")
    max_terms = 3 * terms if max_terms is None else max(max_terms, terms)
    n_terms = terms
    while True:
        s, A = bromwich_nodes(t, n_terms, target_accuracy)
        values = np.broadcast_to(np.asarray(transform(s), dtype=complex), s.shape)
        value, estimate = _euler_sum(values, A, t, averaged)
        if math.isfinite(value) and estimate <= target_accuracy:
            return value
        if n_terms >= max_terms:
            raise AccuracyNotReached(
                f"Laplace inversion at t={t} reached only ~{estimate:.3g} "
                f"(target {target_accuracy:.3g}) with {n_terms} terms",
                residual=estimate,
            )
        n_terms = min(n_terms + averaged + 1, max_terms)
