"""Named verification checks with expected outcomes.

Each entry binds one family (or control) to the mechanism that certifies its
equivalence class: orbit invariance of the transport Jacobian, maximal
invariants, modular sums/integrals, the radius-shift variant, or score
orthogonality.  Controls are expected to fail; the CLI verify command exits
0 only when every expected pass passes and every expected failure fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInput
from .families import make_family
from .invariance import (BaseMeasure, CheckResult, Domain, GroupActionSampler,
                         SmoothMap, haar_variant_check, lebesgue_character,
                         maximal_invariant_check, modular_integral_check,
                         modular_sum_check, orbit_invariance_check,
                         radial_character, score_orthogonality_check)

__all__ = ["NamedCheck", "check_names", "run_checks", "REGISTRY_MAPS"]

TWO_PI = 2.0 * math.pi
SQRT_HALF = math.sqrt(0.5)


# ---------------------------------------------------------------------------
# group actions
# ---------------------------------------------------------------------------

def _rotation_map(angle: float) -> SmoothMap:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return SmoothMap(fn=lambda y: y @ rot.T, label=f"rot({angle:.3f})",
                     jac_det=1.0, inverse=lambda y: y @ rot)


def so2_action() -> GroupActionSampler:
    return GroupActionSampler(
        "SO(2)", lambda gen: _rotation_map(float(gen.uniform(0.0, TWO_PI))))


def _haar_so(gen: np.random.Generator, d: int) -> np.ndarray:
    a = gen.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return q


def block_so_action(p: int, q: int) -> GroupActionSampler:
    def draw(gen):
        bp = _haar_so(gen, p)
        bq = _haar_so(gen, q)
        block = np.zeros((p + q, p + q))
        block[:p, :p] = bp
        block[p:, p:] = bq
        return SmoothMap(fn=lambda y: y @ block.T, label=f"SO({p})xSO({q})",
                         jac_det=1.0, inverse=lambda y: y @ block)

    return GroupActionSampler(f"SO({p})xSO({q})", draw)


def diag_action(lo: float = 0.5, hi: float = 2.0) -> GroupActionSampler:
    def draw(gen):
        t = math.exp(gen.uniform(math.log(lo), math.log(hi)))
        scale = np.array([t, 1.0 / t])
        return SmoothMap(fn=lambda y: y * scale, label=f"diag({t:.3f},1/{t:.3f})",
                         jac_det=1.0, inverse=lambda y: y / scale)

    return GroupActionSampler("diag(t,1/t)", draw)


# ---------------------------------------------------------------------------
# invariant fields and maximal invariants (in transported coordinates)
# ---------------------------------------------------------------------------

def gauss_jac_2d(y):
    return np.exp(-0.5 * np.einsum("ij,ij->i", y, y)) / TWO_PI


def weibull_jac(y):
    return 4.0 * y[:, 0] * y[:, 1]


def sopq_jac(y, p=2, q=2, sp=SQRT_HALF, sq=SQRT_HALF):
    d = p + q
    np_part = np.einsum("ij,ij->i", y[:, :p], y[:, :p])
    nq_part = np.einsum("ij,ij->i", y[:, p:], y[:, p:])
    const = sp**p * sq**q / (TWO_PI) ** (d / 2.0)
    return const * np.exp(-0.5 * np_part / sp**2 - 0.5 * nq_part / sq**2)


def coord_field(y):
    return y[:, 0]


def norm_sq(y):
    return np.einsum("ij,ij->i", y, y)


def coord_prod(y):
    return y[:, 0] * y[:, 1]


def block_norms(y, p=2):
    return np.column_stack([np.einsum("ij,ij->i", y[:, :p], y[:, :p]),
                            np.einsum("ij,ij->i", y[:, p:], y[:, p:])])


ROT2_DOMAIN = Domain((-2.0, -2.0), (2.0, 2.0), "ball", 3.0)
ROT4_DOMAIN = Domain((-1.4,) * 4, (1.4,) * 4, "ball", 3.0)
ORTHANT_DOMAIN = Domain((0.05, 0.05), (4.0, 4.0), "positive")
LINE_DOMAIN = Domain((0.1,), (3.0,), "all")
FIBER_DOMAIN = Domain((0.2,), (3.0,), "all")


# ---------------------------------------------------------------------------
# constant-Jacobian maps (mass transport pieces and test fixtures)
# ---------------------------------------------------------------------------

def scale_map_1d(c: float, label: str) -> SmoothMap:
    return SmoothMap(fn=lambda x: c * x, label=label, jac_det=float(c),
                     inverse=lambda x: x / c)


def square_map_2d() -> SmoothMap:
    """(x, y) -> (x^2, y^2); its Jacobian determinant 4xy is the invariant
    field of the positive-quadrant family."""
    return SmoothMap(fn=lambda p: p**2, label="square2d",
                     jac_det=lambda p: 4.0 * p[:, 0] * p[:, 1],
                     inverse=lambda p: np.sqrt(p))


def radial_fiber_map(rho: float, z: float) -> SmoothMap:
    xi = math.sqrt(TWO_PI / (1.0 + rho * math.cos(z)))
    return SmoothMap(fn=lambda r: r * xi, label=f"r*xi({z:.3f})", jac_det=float(xi),
                     inverse=lambda r: r / xi)


def torus_fiber_map(theta: float, z: float) -> SmoothMap:
    shift = theta + z
    return SmoothMap(fn=lambda y: np.mod(y + shift, TWO_PI), label=f"shift({shift:.3f})",
                     jac_det=1.0, inverse=lambda y: np.mod(y - shift, TWO_PI))


# closed-form maps exercised by the finite-difference consistency tests
REGISTRY_MAPS: list[tuple[SmoothMap, Domain]] = [
    (_rotation_map(0.7), ROT2_DOMAIN),
    (_rotation_map(2.1), ROT2_DOMAIN),
    (scale_map_1d(2.0, "ax"), LINE_DOMAIN),
    (scale_map_1d(-1.5, "-bx"), LINE_DOMAIN),
    (square_map_2d(), ORTHANT_DOMAIN),
    (radial_fiber_map(0.5, 1.0), FIBER_DOMAIN),
    (SmoothMap(fn=lambda p: p * np.array([2.0, 3.0]), label="diag(2,3)", jac_det=6.0,
               inverse=lambda p: p / np.array([2.0, 3.0])), ROT2_DOMAIN),
]


# ---------------------------------------------------------------------------
# the named checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NamedCheck:
    name: str
    family: str
    theta: str
    expected_pass: bool
    run: Callable[[int], CheckResult]


def _mass_transport_maps(a: float, b: float):
    return [scale_map_1d(a, "ax"), scale_map_1d(-b, "-bx")]


def _build_checks() -> list[NamedCheck]:
    checks: list[NamedCheck] = []

    def add(name, family, theta, expected, fn):
        checks.append(NamedCheck(name, family, theta, expected, fn))

    # orbit invariance of the transport Jacobian (group mechanism)
    add("orbit_rotated_normal_2d", "rotated_normal_2d", "-", True,
        lambda seed: orbit_invariance_check(gauss_jac_2d, so2_action(), ROT2_DOMAIN,
                                            seed=seed, name="orbit_rotated_normal_2d"))
    add("orbit_weibull_biv", "weibull_biv", "-", True,
        lambda seed: orbit_invariance_check(weibull_jac, diag_action(), ORTHANT_DOMAIN,
                                            seed=seed, name="orbit_weibull_biv"))
    add("orbit_sopq_normal", "sopq_normal", "-", True,
        lambda seed: orbit_invariance_check(sopq_jac, block_so_action(2, 2), ROT4_DOMAIN,
                                            seed=seed, name="orbit_sopq_normal"))
    add("orbit_control", "control", "-", False,
        lambda seed: orbit_invariance_check(coord_field, so2_action(), ROT2_DOMAIN,
                                            seed=seed, name="orbit_control"))

    # maximal invariants
    add("maximal_rotated_normal_2d", "rotated_normal_2d", "-", True,
        lambda seed: maximal_invariant_check(norm_sq, so2_action(), ROT2_DOMAIN,
                                             seed=seed, name="maximal_rotated_normal_2d"))
    add("maximal_weibull_biv", "weibull_biv", "-", True,
        lambda seed: maximal_invariant_check(coord_prod, diag_action(), ORTHANT_DOMAIN,
                                             seed=seed, name="maximal_weibull_biv"))
    add("maximal_sopq_normal", "sopq_normal", "-", True,
        lambda seed: maximal_invariant_check(block_norms, block_so_action(2, 2),
                                             ROT4_DOMAIN, seed=seed,
                                             name="maximal_sopq_normal"))
    add("maximal_control", "control", "-", False,
        lambda seed: maximal_invariant_check(coord_field, so2_action(), ROT2_DOMAIN,
                                             seed=seed, name="maximal_control"))

    # modular sums (piecewise transport on the line)
    for label, a, b, expected in [("2_2", 2.0, 2.0, True),
                                  ("3_1.5", 3.0, 1.5, True),
                                  ("4_4over3", 4.0, 4.0 / 3.0, True),
                                  ("control_2_3", 2.0, 3.0, False)]:
        add(f"modsum_{label}", "mass_transport", f"{a};{b}", expected,
            lambda seed, a=a, b=b, label=label: modular_sum_check(
                _mass_transport_maps(a, b), lebesgue_character, LINE_DOMAIN,
                seed=seed, name=f"modsum_{label}"))

    # modular integrals on fiber bundles
    for rho in (0.0, 0.5, 0.9):
        tag = repr(rho)
        add(f"modint_radial_rho_{tag}", "radial_rho", tag, True,
            lambda seed, rho=rho, tag=tag: modular_integral_check(
                lambda z: radial_fiber_map(rho, z),
                BaseMeasure("torus"), radial_character(2), FIBER_DOMAIN,
                seed=seed, name=f"modint_radial_rho_{tag}"))
    add("modint_torus_vonmises", "torus_vonmises", "1.0", True,
        lambda seed: modular_integral_check(
            lambda z: torus_fiber_map(1.0, z),
            BaseMeasure("torus", weight=lambda z: np.full_like(z, 1.0 / TWO_PI)),
            lebesgue_character, FIBER_DOMAIN, seed=seed,
            name="modint_torus_vonmises"))
    add("modint_control_double", "control", "-", False,
        lambda seed: modular_integral_check(
            lambda z: scale_map_1d(2.0, "2r"),
            BaseMeasure("torus", weight=lambda z: np.full_like(z, 1.0 / TWO_PI)),
            lebesgue_character, FIBER_DOMAIN, seed=seed,
            name="modint_control_double"))

    # radius-shift (Haar) variant
    add("haar_rho_0", "radial_rho_haar", "0.0", True,
        lambda seed: haar_variant_check(0.0, seed=seed, name="haar_rho_0"))
    add("haar_rho_0.5", "radial_rho_haar", "0.5", True,
        lambda seed: haar_variant_check(0.5, seed=seed, name="haar_rho_0.5"))
    add("haar_broken_tilt", "control", "0.5", False,
        lambda seed: haar_variant_check(0.5, seed=seed, mode="broken",
                                        name="haar_broken_tilt"))

    # score orthogonality
    for rho in (0.0, 0.3, 0.7):
        tag = repr(rho)
        add(f"score_radial_{tag}", "radial_rho", tag, True,
            lambda seed, rho=rho, tag=tag: score_orthogonality_check(
                make_family("radial_rho"), [rho], range(6), seed=seed,
                name=f"score_radial_{tag}"))
    add("score_location", "location", "0.3", True,
        lambda seed: score_orthogonality_check(
            make_family("location"), [0.3], range(4), seed=seed, tol=1e-8,
            name="score_location"))
    add("score_scale_control", "scale", "1.0", False,
        lambda seed: score_orthogonality_check(
            make_family("scale"), [1.0], [1], seed=seed, name="score_scale_control"))
    add("score_mass_transport", "mass_transport", "1.7", True,
        lambda seed: score_orthogonality_check(
            make_family("mass_transport"), [1.7], range(4), seed=seed,
            name="score_mass_transport"))

    return checks


_CHECKS = {c.name: c for c in _build_checks()}


def check_names() -> list[str]:
    return list(_CHECKS)


def run_checks(names=None, seed: int = 0):
    """Run the selected checks; yields (NamedCheck, CheckResult)."""
    selected = list(_CHECKS) if names is None else list(names)
    out = []
    for name in selected:
        if name not in _CHECKS:
            raise InvalidInput(f"unknown check {name!r}; known: {check_names()}")
        spec = _CHECKS[name]
        out.append((spec, spec.run(seed)))
    return out
