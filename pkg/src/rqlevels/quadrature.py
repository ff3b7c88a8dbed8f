"""Thin wrapper around adaptive Gauss-Kronrod quadrature that fails loudly."""

import warnings

from scipy import integrate

from .errors import QuadratureFailure


def integrate_1d(func, a: float, b: float, tol: float = 1e-10, limit: int = 200) -> float:
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(func, a, b, epsabs=tol, epsrel=tol, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"quadrature on [{a}, {b}] failed: {exc}") from exc
    if err > max(tol, tol * abs(value)):
        raise QuadratureFailure(
            f"quadrature on [{a}, {b}] error estimate {err:.3g} exceeds {tol:.3g}", residual=err
        )
    return value
