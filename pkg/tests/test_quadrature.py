import math

import numpy as np
import pytest

from bettieq.errors import QuadratureError
from bettieq.families import make_family
from bettieq.quadrature import (Box, Interval, PolarAnnulus, integrate_adaptive,
                                periodic_integral)

TWO_PI = 2.0 * math.pi


def gamma_pushforward_density(z):
    # density of the squared signed-chi(3) pushforward variable
    return math.sqrt(z / TWO_PI) * math.exp(-0.5 * z) if z > 0 else 0.0


def test_cosine_over_period():
    val, err = integrate_adaptive(math.cos, Interval(0.0, TWO_PI), abs_tol=1e-12)
    assert abs(val) <= 1e-12
    assert err <= 1e-10


def test_gamma_density_normalizes():
    val, _ = integrate_adaptive(gamma_pushforward_density, Interval(0.0, math.inf),
                                abs_tol=1e-9)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_gamma_mean_is_three():
    val, _ = integrate_adaptive(lambda z: z * gamma_pushforward_density(z),
                                Interval(0.0, math.inf), abs_tol=1e-9)
    assert val == pytest.approx(3.0, abs=1e-8)


def test_boundary_singular_box_density():
    fam = make_family("rotated_normal_2d")

    def f(x, y):
        return float(fam.density([0.6], np.array([[x, y]]))[0])

    val, _ = integrate_adaptive(f, Box(((0.0, 1.0), (0.0, 1.0))), abs_tol=1e-3)
    assert val == pytest.approx(1.0, abs=1e-3)


def test_polar_gaussian():
    def f(x, y):
        return math.exp(-0.5 * (x * x + y * y)) / TWO_PI

    val, _ = integrate_adaptive(f, PolarAnnulus(), abs_tol=1e-10)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_interval_1d_box_equivalence():
    val_box, _ = integrate_adaptive(math.exp, Box(((0.0, 1.0),)), abs_tol=1e-12)
    val_int, _ = integrate_adaptive(math.exp, Interval(0.0, 1.0), abs_tol=1e-12)
    assert val_box == pytest.approx(val_int, rel=1e-14)
    assert val_int == pytest.approx(math.e - 1.0, rel=1e-12)


def test_nonfinite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_adaptive(lambda x: 1.0 / x, Interval(0.0, 1.0), abs_tol=1e-9)


def test_unsupported_domain_raises():
    with pytest.raises(QuadratureError):
        integrate_adaptive(math.cos, Box(((0.0, 1.0),) * 3))
    with pytest.raises(QuadratureError):
        integrate_adaptive(math.cos, "interval")


def test_periodic_integral_trig_polynomials():
    val, est = periodic_integral(lambda z: 1.0 + 0.5 * np.cos(z), abs_tol=1e-13)
    assert val == pytest.approx(TWO_PI, rel=1e-13)
    assert est <= 1e-12
    val, _ = periodic_integral(np.sin, abs_tol=1e-13)
    assert abs(val) <= 1e-12


def test_periodic_integral_budget():
    gen = np.random.default_rng(0)

    def noisy(z):
        return gen.random(len(np.atleast_1d(z)))

    with pytest.raises(QuadratureError):
        periodic_integral(noisy, abs_tol=1e-14, max_nodes=64)


ANALYTIC_CORPUS = [
    (math.cos, Interval(0.0, TWO_PI), 0.0),
    (lambda x: x * x, Interval(0.0, 1.0), 1.0 / 3.0),
    (gamma_pushforward_density, Interval(0.0, math.inf), 1.0),
    (lambda x: math.exp(-x * x), Interval(-math.inf, math.inf), math.sqrt(math.pi)),
]


def test_halving_tolerance_never_hurts():
    for f, dom, truth in ANALYTIC_CORPUS:
        for tol in (1e-6, 1e-8):
            coarse, _ = integrate_adaptive(f, dom, abs_tol=tol)
            fine, _ = integrate_adaptive(f, dom, abs_tol=tol / 2.0)
            assert abs(fine - truth) <= abs(coarse - truth) + 1e-14


def test_error_contract_on_corpus():
    for f, dom, truth in ANALYTIC_CORPUS:
        val, est = integrate_adaptive(f, dom, abs_tol=1e-9)
        assert abs(val - truth) <= max(1e-9, est)
