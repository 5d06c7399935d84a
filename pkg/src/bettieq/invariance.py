"""Numerical verifiers for the four equivalence mechanisms: orbit invariance
of the transport Jacobian, maximal-invariant checks, modular-character sums
and integrals, the radius-shifted (Haar) variant, and score orthogonality.

Conventions: smooth maps act on (m, d) arrays of points; Jacobian
determinants are signed, consumers take absolute values.  The modular
character of Lebesgue measure is x; for the radial measure r^{d-1} dr it is
x^d (a scaling r -> c r multiplies r^{d-1} dr by c^d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng as _rng
from .errors import (BoundaryError, Degenerate, InvalidInput, NotInDelta,
                     QuadratureError, UndefinedScore)
from .families import Family, make_family
from .equivalence import excess_mass_mc
from .quadrature import Box, Interval, PolarAnnulus, integrate_adaptive, periodic_integral

__all__ = [
    "SmoothMap",
    "GroupActionSampler",
    "Domain",
    "CheckResult",
    "BaseMeasure",
    "jacobian_det_fd",
    "orbit_invariance_check",
    "maximal_invariant_check",
    "modular_sum_check",
    "modular_integral_check",
    "haar_variant_check",
    "score_orthogonality_check",
    "lebesgue_character",
    "radial_character",
    "write_checks_csv",
]

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothMap:
    """Map between equal-dimension spaces, acting on (m, d) point arrays."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = ""
    jac_det: float | Callable[[np.ndarray], np.ndarray] | None = None
    inverse: Callable[[np.ndarray], np.ndarray] | None = None
    domain: tuple | None = None          # ((lo, hi), ...) box bounds, optional

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    def jac_det_at(self, pts: np.ndarray) -> np.ndarray:
        """Closed-form signed determinant at points, if declared."""
        if self.jac_det is None:
            raise InvalidInput(f"map {self.label!r} has no closed-form Jacobian")
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if callable(self.jac_det):
            return np.asarray(self.jac_det(pts), dtype=float)
        return np.full(pts.shape[0], float(self.jac_det))


@dataclass(frozen=True)
class GroupActionSampler:
    """Draws group elements as smooth maps; maps must be bijections."""

    label: str
    draw: Callable[[np.random.Generator], SmoothMap]


@dataclass(frozen=True)
class Domain:
    """Sampling window plus a membership rule for orbit images."""

    lo: tuple
    hi: tuple
    membership: str = "window"   # window | ball | positive | all
    radius: float = 0.0

    def sample(self, gen: np.random.Generator, m: int) -> np.ndarray:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        return lo + (hi - lo) * gen.random((m, len(lo)))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.membership == "all":
            return np.ones(len(pts), dtype=bool)
        if self.membership == "ball":
            return np.einsum("ij,ij->i", pts, pts) <= self.radius**2
        if self.membership == "positive":
            return np.all(pts > 0.0, axis=1)
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        return np.all((pts >= lo) & (pts <= hi), axis=1)


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_violation: float
    tolerance: float
    passed: bool
    witnesses: tuple = field(default=())

    @staticmethod
    def from_violation(name, violation, tol, witnesses=()):
        violation = float(violation)
        return CheckResult(name, violation, float(tol), violation <= tol,
                           tuple(witnesses))


# ---------------------------------------------------------------------------
# finite-difference Jacobians
# ---------------------------------------------------------------------------

def jacobian_det_fd(smap: SmoothMap, x, h: float | None = None) -> float:
    """Signed determinant of the central-difference Jacobian at x.

    When the map declares a closed form, the two values are cross-checked
    (mismatch beyond 1e-4 relative raises); the finite-difference value is
    returned either way.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = len(x)
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    if smap.domain is not None:
        for (lo, hi), xi in zip(smap.domain, x):
            if xi - h < lo or xi + h > hi:
                raise BoundaryError(f"point {x} within step {h} of the domain edge")
    jac = np.empty((d, d))
    for j in range(d):
        up = x.copy()
        dn = x.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (smap(up[None, :])[0] - smap(dn[None, :])[0]) / (2.0 * h)
    det = float(np.linalg.det(jac))
    if smap.jac_det is not None:
        closed = float(smap.jac_det_at(x[None, :])[0])
        if abs(det - closed) > 1e-4 * max(1.0, abs(closed)):
            raise InvalidInput(
                f"map {smap.label!r}: finite-difference det {det} disagrees with "
                f"closed form {closed}")
    return det


def _abs_det(smap: SmoothMap, pts: np.ndarray) -> np.ndarray:
    """|det J| at points, preferring the closed form."""
    if smap.jac_det is not None:
        return np.abs(smap.jac_det_at(pts))
    return np.abs(np.array([jacobian_det_fd(smap, p) for p in np.atleast_2d(pts)]))


# ---------------------------------------------------------------------------
# orbit and maximal-invariant checks
# ---------------------------------------------------------------------------

def _relative_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float).reshape(len(a), -1))
    b = np.atleast_2d(np.asarray(b, dtype=float).reshape(len(b), -1))
    return np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)), axis=1)


def orbit_invariance_check(h, action: GroupActionSampler, domain: Domain,
                           n_trials: int = 200, tol: float = 1e-8,
                           seed: int = 0, name: str | None = None) -> CheckResult:
    """Max relative change of the scalar field h along sampled orbits.

    Trials whose image leaves the domain are skipped and counted; more than
    50% skips makes the check degenerate.
    """
    gen = _rng.stream(seed, _rng.CHECK, 1)
    pts = domain.sample(gen, n_trials)
    worst = 0.0
    witness = None
    skipped = 0
    for i in range(n_trials):
        g = action.draw(gen)
        img = g(pts[i][None, :])
        if not bool(domain.contains(img)[0]):
            skipped += 1
            continue
        base = np.atleast_1d(h(pts[i][None, :]))[0]
        moved = np.atleast_1d(h(img))[0]
        violation = abs(moved - base) / max(1.0, abs(base))
        if violation > worst:
            worst = violation
            witness = (tuple(pts[i]), tuple(img[0]), float(violation))
    if skipped > n_trials // 2:
        raise Degenerate(f"{skipped}/{n_trials} orbit images left the domain")
    return CheckResult.from_violation(
        name or f"orbit_invariance[{action.label}]", worst, tol,
        [witness] if witness else [])


def maximal_invariant_check(t_map, action: GroupActionSampler, domain: Domain,
                            n_trials: int = 200, tol: float = 1e-8,
                            seed: int = 0, name: str | None = None,
                            spot_pairs: int = 20, spot_group: int = 40) -> CheckResult:
    """Invariance of T along orbits, plus a best-effort separation spot check:
    points with visibly different T values should not be joinable by sampled
    group elements.  Sampling cannot prove maximality; this is a heuristic."""
    gen = _rng.stream(seed, _rng.CHECK, 2)
    pts = domain.sample(gen, n_trials)
    worst = 0.0
    witness = None
    skipped = 0
    for i in range(n_trials):
        g = action.draw(gen)
        img = g(pts[i][None, :])
        if not bool(domain.contains(img)[0]):
            skipped += 1
            continue
        violation = float(_relative_gap(np.atleast_2d(t_map(img)),
                                        np.atleast_2d(t_map(pts[i][None, :])))[0])
        if violation > worst:
            worst = violation
            witness = (tuple(pts[i]), tuple(img[0]), float(violation))
    if skipped > n_trials // 2:
        raise Degenerate(f"{skipped}/{n_trials} orbit images left the domain")
    # separation spot check (only meaningful if invariance holds)
    if worst <= tol:
        a = domain.sample(gen, spot_pairs)
        b = domain.sample(gen, spot_pairs)
        gs = [action.draw(gen) for _ in range(spot_group)]
        for x1, x2 in zip(a, b):
            gap = float(_relative_gap(np.atleast_2d(t_map(x1[None, :])),
                                      np.atleast_2d(t_map(x2[None, :])))[0])
            if gap <= 1e-2:
                continue
            for g in gs:
                if float(np.linalg.norm(g(x1[None, :])[0] - x2)) < 1e-3:
                    worst = max(worst, gap)
                    witness = (tuple(x1), tuple(x2), gap)
                    break
    return CheckResult.from_violation(
        name or f"maximal_invariant[{action.label}]", worst, tol,
        [witness] if witness else [])


# ---------------------------------------------------------------------------
# modular-character checks
# ---------------------------------------------------------------------------

def lebesgue_character(x):
    return x


def radial_character(d: int):
    """Modular character of the radial measure r^{d-1} dr: scaling r by c
    multiplies the measure by c^d."""

    def character(x):
        return x**d

    character.__name__ = f"radial_character_d{d}"
    return character


def _require_constant_det(smap: SmoothMap, domain: Domain, gen, n_probe: int = 20,
                          rel_tol: float = 1e-8) -> float:
    pts = domain.sample(gen, n_probe)
    dets = _abs_det(smap, pts)
    lo, hi = float(np.min(dets)), float(np.max(dets))
    if hi - lo > rel_tol * max(1.0, hi):
        raise NotInDelta(
            f"map {smap.label!r}: |det J| varies over the domain ({lo} .. {hi})")
    return 0.5 * (lo + hi)


def modular_sum_check(maps, modular_character, domain: Domain,
                      tol: float = 1e-12, seed: int = 0,
                      name: str = "modular_sum") -> CheckResult:
    """|sum_i Psi(|det J_{phi_i^{-1}}|) - 1| for constant-Jacobian maps."""
    gen = _rng.stream(seed, _rng.CHECK, 3)
    total = 0.0
    for smap in maps:
        det = _require_constant_det(smap, domain, gen)
        total += float(modular_character(1.0 / det))
    return CheckResult.from_violation(name, abs(total - 1.0), tol,
                                      [("sum", float(total))])


@dataclass(frozen=True)
class BaseMeasure:
    """Quadrature description of the base measure: weight(z) dz on [a, b];
    'torus' bases use periodic Gauss-Legendre panels, intervals use the
    adaptive rule."""

    kind: str                  # torus | interval
    a: float = 0.0
    b: float = TWO_PI
    weight: Callable | None = None

    def integrate(self, f, abs_tol: float) -> tuple[float, float]:
        def weighted(z):
            vals = np.asarray(f(np.atleast_1d(z)), dtype=float)
            if self.weight is not None:
                vals = vals * np.asarray(self.weight(np.atleast_1d(z)), dtype=float)
            return vals

        if self.kind == "torus":
            return periodic_integral(weighted, self.b - self.a, abs_tol)
        if self.kind == "interval":
            return integrate_adaptive(lambda z: float(weighted(z)[0]),
                                      Interval(self.a, self.b), abs_tol)
        raise InvalidInput(f"unknown base measure {self.kind!r}")


def modular_integral_check(fiber_map_family, base: BaseMeasure, modular_character,
                           fiber_domain: Domain, tol: float = 1e-9, seed: int = 0,
                           name: str = "modular_integral") -> CheckResult:
    """|int Psi(|det J_{phi_z^{-1}}|) mu(dz) - 1| over the base measure.

    Each fiber map must have a constant Jacobian over the fiber (checked at
    sampled probe points for every quadrature node)."""
    gen = _rng.stream(seed, _rng.CHECK, 4)
    probes = fiber_domain.sample(gen, 5)

    def integrand(zs):
        out = np.empty(len(zs))
        for i, z in enumerate(np.asarray(zs, dtype=float)):
            smap = fiber_map_family(float(z))
            dets = _abs_det(smap, probes)
            lo, hi = float(np.min(dets)), float(np.max(dets))
            if hi - lo > 1e-8 * max(1.0, hi):
                raise NotInDelta(f"fiber map at z={z}: |det J| not constant")
            out[i] = float(modular_character(1.0 / (0.5 * (lo + hi))))
        return out

    value, est = base.integrate(integrand, abs_tol=min(tol * 0.1, 1e-10))
    if est > max(tol, 1e-9):
        raise QuadratureError(f"{name}: quadrature estimate {est} above tolerance")
    return CheckResult.from_violation(name, abs(value - 1.0), tol,
                                      [("integral", float(value))])


# ---------------------------------------------------------------------------
# Haar-shift variant check
# ---------------------------------------------------------------------------

class _TiltedRadialControl(Family):
    """Deliberately broken radial variant: the angle tilt uses |cos| so the
    modular constraint integral is 1 + 2 rho / pi != 1; the density is
    renormalized to stay a probability, which shifts its excess mass."""

    def __init__(self):
        self.id = "radial_rho_tilted_control"
        from .families import Support
        self.support = Support("euclidean", 2)
        self.theta_doc = "single rho with |rho| < 1"

    def validate(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if len(theta) != 1 or abs(theta[0]) >= 1.0:
            raise InvalidInput("need |rho| < 1")
        return theta

    def _norm(self, rho: float) -> float:
        return 1.0 + 2.0 * rho / math.pi

    def density(self, theta, x):
        rho = self.validate(theta)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r2 = np.einsum("ij,ij->i", x, x)
        phi = np.arctan2(x[:, 1], x[:, 0])
        s2 = 1.0 + rho * np.abs(np.cos(phi))
        return np.exp(-0.5 * r2 / s2) / (TWO_PI * self._norm(rho))

    def _draw(self, theta, n, rng):
        rho = theta[0]
        from .families import _rejection_loop

        def propose(m):
            phi = rng.uniform(0.0, TWO_PI, m)
            acc = rng.random(m) * (1.0 + abs(rho)) < (1.0 + rho * np.abs(np.cos(phi)))
            return phi, acc

        phi = _rejection_loop(rng, n, propose, self.id)
        u = 1.0 - rng.random(n)
        r = np.sqrt(1.0 + rho * np.abs(np.cos(phi))) * np.sqrt(-2.0 * np.log(u))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def haar_variant_check(rho: float, n: int = 100_000, seed: int = 0,
                       t_points: int = 16, mode: str = "haar",
                       name: str | None = None) -> CheckResult:
    """Excess-mass agreement between the radial family and its radius-shifted
    composition (mode='haar'), or the deliberately broken tilt control
    (mode='broken').  Violation is the largest gap in pooled-standard-error
    units; tolerance 3."""
    base = make_family("radial_rho")
    if mode == "haar":
        other: Family = make_family("radial_rho_haar")
    elif mode == "broken":
        other = _TiltedRadialControl()
    else:
        raise InvalidInput(f"unknown mode {mode!r}")
    t_grid = np.linspace(0.005, 0.155, t_points)
    a = excess_mass_mc(base, [rho], t_grid, n, seed)
    b = excess_mass_mc(other, [rho], t_grid, n, seed)
    pooled = np.sqrt(a.stderr**2 + b.stderr**2)
    pooled = np.maximum(pooled, 1e-12)
    z = np.abs(a.values - b.values) / pooled
    worst = int(np.argmax(z))
    return CheckResult.from_violation(
        name or f"haar_variant[{mode}]", float(np.max(z)), 3.0,
        [("t", float(t_grid[worst]), "gap", float(a.values[worst] - b.values[worst]))])


# ---------------------------------------------------------------------------
# score orthogonality
# ---------------------------------------------------------------------------

def _score_integrand(family: Family, theta, k: int, comp: int):
    def f(*point):
        x = np.asarray(point, dtype=float)[None, :]
        dens = float(family.density(theta, x)[0])
        if dens <= 0.0:
            return 0.0
        s = float(family.score(theta, x)[0, comp])
        return dens ** (k + 1) * s

    return f


def score_orthogonality_check(family: Family, theta, k_list,
                              tol: float = 1e-6, seed: int = 0,
                              integrator: str = "auto", mc_n: int = 1_000_000,
                              abs_tol: float = 1e-9,
                              name: str | None = None) -> CheckResult:
    """Componentwise values of int f_theta^{k+1} S dx for each k.

    Quadrature on supports of dimension <= 2 (polar rule on the plane);
    importance-sampled Monte Carlo (density itself as the proposal) beyond.
    """
    theta = family.validate(theta)
    p = len(theta)
    kind, d = family.support.kind, family.support.dim
    use_mc = integrator == "mc" or (integrator == "auto" and d > 2)
    values = {}
    worst = 0.0
    witness = []
    for k in k_list:
        comps = np.empty(p)
        if use_mc:
            gen = _rng.stream(seed, _rng.CHECK, 5)
            cloud = family.sample(theta, mc_n, gen)
            dens = family.density(theta, cloud.points)
            score = family.score(theta, cloud.points)
            comps = (dens[:, None] ** k * score).mean(axis=0)
        else:
            for comp in range(p):
                g = _score_integrand(family, theta, k, comp)
                if kind == "euclidean" and d == 2:
                    val, _ = integrate_adaptive(g, PolarAnnulus(), abs_tol)
                elif d == 1:
                    lo = -math.inf if kind in ("euclidean", "real_split") else 0.0
                    if kind == "real_split":
                        neg, _ = integrate_adaptive(lambda x: g(x), Interval(lo, 0.0), abs_tol)
                        pos, _ = integrate_adaptive(lambda x: g(x), Interval(0.0, math.inf), abs_tol)
                        val = neg + pos
                    else:
                        a, b = (0.0, 1.0) if kind == "box01" else (lo, math.inf)
                        val, _ = integrate_adaptive(g, Interval(a, b), abs_tol)
                elif kind == "box01" and d == 2:
                    val, _ = integrate_adaptive(g, Box(((0.0, 1.0), (0.0, 1.0))), abs_tol)
                elif kind == "orthant" and d == 2:
                    val, _ = integrate_adaptive(g, Box(((0.0, math.inf), (0.0, math.inf))), abs_tol)
                elif kind == "torus" and d == 2:
                    def outer(ys):
                        out = np.empty(len(ys))
                        for i, y in enumerate(ys):
                            out[i] = periodic_integral(
                                lambda zs: np.array([g(y, z) for z in zs]),
                                TWO_PI, abs_tol)[0]
                        return out
                    val, _ = periodic_integral(outer, TWO_PI, abs_tol)
                else:
                    raise InvalidInput(f"no quadrature rule for {kind} d={d}; use mc")
                comps[comp] = val
        values[int(k)] = comps.copy()
        worst = max(worst, float(np.max(np.abs(comps))))
        witness.append((int(k), tuple(float(c) for c in comps)))
    return CheckResult.from_violation(
        name or f"score_orthogonality[{family.id}]", worst, tol, witness)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def write_checks_csv(path, rows) -> None:
    """rows: (check_name, family, theta_label, CheckResult)."""
    with open(path, "w") as fh:
        fh.write("check,family,theta,max_violation,tolerance,pass,witness\n")
        for name, family, theta, res in rows:
            wit = repr(res.witnesses[:1])[:200].replace(",", ";") if res.witnesses else ""
            fh.write(f"{name},{family},{theta},{res.max_violation!r},"
                     f"{res.tolerance!r},{res.passed},{wit}\n")
