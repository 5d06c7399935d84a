"""Numerical integration substrate.

Adaptive integration over intervals, 2-d boxes, and polar annuli is delegated
to scipy's QUADPACK wrappers behind a single ``integrate_adaptive`` entry
point; periodic integrands (torus base measures) use Gauss-Legendre panels
with node doubling until the increment stabilizes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _si

from .errors import QuadratureError

__all__ = [
    "Interval",
    "Box",
    "PolarAnnulus",
    "integrate_adaptive",
    "periodic_integral",
]


@dataclass(frozen=True)
class Interval:
    a: float
    b: float


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; integrand is called as f(x, y) for 2-d boxes."""

    bounds: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PolarAnnulus:
    """Region r_min <= |x| <= r_max in the plane; integrand is f(x, y) in
    Cartesian coordinates, the polar Jacobian is applied internally."""

    r_min: float = 0.0
    r_max: float = math.inf


def _quad(f, a, b, abs_tol, limit=200):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", _si.IntegrationWarning)
        try:
            val, err = _si.quad(f, a, b, epsabs=abs_tol, epsrel=max(1e-12, abs_tol * 1e-2),
                                limit=limit)
        except Exception as exc:  # scipy raises on hard failures
            raise QuadratureError(f"quad failed on [{a}, {b}]: {exc}") from exc
    if not math.isfinite(val):
        raise QuadratureError(f"quad returned non-finite value on [{a}, {b}]")
    # subdivision budget exhausted without the estimate coming under control
    if caught and err > 10.0 * max(abs_tol, 1e-10 * abs(val)):
        raise QuadratureError(
            f"quad did not converge on [{a}, {b}]: estimate {err:.3g} after warnings")
    return val, err


def integrate_adaptive(f, domain, abs_tol: float = 1e-9) -> tuple[float, float]:
    """Integrate a scalar field over the domain.

    Returns (value, error estimate); the true error is bounded by
    max(abs_tol, estimate) on well-behaved integrands, with endpoint
    singularities handled by the underlying open rules.
    """
    if isinstance(domain, Interval):
        return _quad(f, domain.a, domain.b, abs_tol)
    if isinstance(domain, Box):
        if len(domain.bounds) == 1:
            (a, b), = domain.bounds
            return _quad(f, a, b, abs_tol)
        if len(domain.bounds) != 2:
            raise QuadratureError("only 1-d and 2-d boxes are supported; use Monte Carlo beyond")
        (ax, bx), (ay, by) = domain.bounds
        inner_tol = abs_tol * 0.1

        def outer(x):
            return _quad(lambda y: f(x, y), ay, by, inner_tol)[0]

        val, err = _quad(outer, ax, bx, abs_tol)
        return val, err + inner_tol
    if isinstance(domain, PolarAnnulus):
        inner_tol = abs_tol * 0.1

        def ring(phi):
            c, s = math.cos(phi), math.sin(phi)
            return _quad(lambda r: f(r * c, r * s) * r, domain.r_min, domain.r_max,
                         inner_tol)[0]

        val, err = _quad(ring, 0.0, 2.0 * math.pi, abs_tol)
        return val, err + inner_tol
    raise QuadratureError(f"unsupported domain {domain!r}")


def periodic_integral(f, period: float = 2.0 * math.pi, abs_tol: float = 1e-12,
                      max_nodes: int = 1 << 14) -> tuple[float, float]:
    """Gauss-Legendre panel quadrature with node doubling for periodic f.

    f may be vectorized over a node array; raises when the doubling fails to
    converge within the node budget.
    """
    prev = None
    n = 16
    while n <= max_nodes:
        x, w = np.polynomial.legendre.leggauss(n)
        nodes = 0.5 * period * (x + 1.0)
        vals = np.asarray(f(nodes), dtype=float)
        cur = float(np.dot(w, vals) * 0.5 * period)
        if prev is not None and abs(cur - prev) <= abs_tol:
            return cur, abs(cur - prev)
        prev = cur
        n *= 2
    raise QuadratureError(f"periodic quadrature did not converge within {max_nodes} nodes")
