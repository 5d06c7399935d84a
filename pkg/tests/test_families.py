import math

import numpy as np
import pytest
from scipy import integrate as si
from scipy import special as sp
from scipy import stats

from bettieq import special
from bettieq.errors import InvalidParam, SamplingError, UndefinedScore
from bettieq.families import _rejection_loop, family_ids, make_family, manifest
from bettieq.geom import FlatTorus
from bettieq.quadrature import Box, Interval, PolarAnnulus, integrate_adaptive, periodic_integral
from bettieq.rng import stream

TWO_PI = 2.0 * math.pi
PUSH_N = 50_000


def draw(fam, theta, n, tag=0):
    return fam.sample(theta, n, stream(777, tag))


# ---------------------------------------------------------------------------
# closed-form density values
# ---------------------------------------------------------------------------

def test_density_rotated_normal_spot():
    fam = make_family("rotated_normal_2d")
    x = np.array([[float(special.norm_cdf(1.0)), 0.5]])
    assert fam.density([0.0], x)[0] == pytest.approx(1.0, abs=1e-12)


def test_density_weibull_spot():
    fam = make_family("weibull_biv")
    got = fam.density([1.0], [[1.0, 1.0]])[0]
    assert got == pytest.approx(math.exp(-2.0) / 4.0, rel=1e-15)


def test_density_radial_spot():
    fam = make_family("radial_rho")
    assert fam.density([0.0], [[0.0, 0.0]])[0] == pytest.approx(1.0 / TWO_PI, rel=1e-15)


def test_density_outside_support_is_zero():
    assert make_family("rotated_normal_2d").density([0.3], [[1.2, 0.5]])[0] == 0.0
    assert make_family("weibull_biv").density([1.0], [[-0.5, 1.0]])[0] == 0.0


def test_density_boundary_capped():
    wb = make_family("weibull_biv").density([1.0], [[0.0, 1.0]])[0]
    assert np.isfinite(wb) and wb <= 1e300
    rn = make_family("rotated_normal_2d").density([0.3], [[0.0, 0.5]])[0]
    assert np.isfinite(rn)


# ---------------------------------------------------------------------------
# normalization by quadrature (d <= 2) and Monte Carlo (d > 2)
# ---------------------------------------------------------------------------

def _density_xy(fam, theta):
    def f(x, y):
        return float(fam.density(theta, np.array([[x, y]]))[0])

    return f


@pytest.mark.parametrize("theta", [[0.0], [0.7854], [2.5]])
def test_normalization_rotated_normal(theta):
    fam = make_family("rotated_normal_2d")
    val, _ = integrate_adaptive(_density_xy(fam, theta), Box(((0.0, 1.0), (0.0, 1.0))),
                                abs_tol=1e-4)
    assert val == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("theta", [[0.0], [0.9], [2.0]])
def test_normalization_rotated_laplace(theta):
    fam = make_family("rotated_general_d", xi="laplace")
    val, _ = integrate_adaptive(_density_xy(fam, theta), Box(((0.0, 1.0), (0.0, 1.0))),
                                abs_tol=1e-4)
    assert val == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("theta", [[0.5], [1.0], [2.0]])
def test_normalization_weibull(theta):
    fam = make_family("weibull_biv")
    val, _ = integrate_adaptive(_density_xy(fam, theta),
                                Box(((0.0, math.inf), (0.0, math.inf))), abs_tol=1e-4)
    assert val == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("theta", [[0.0], [0.5], [-0.9]])
def test_normalization_radial_and_haar(theta):
    for fid in ("radial_rho", "radial_rho_haar"):
        fam = make_family(fid)
        val, _ = integrate_adaptive(_density_xy(fam, theta), PolarAnnulus(),
                                    abs_tol=1e-5)
        assert val == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("theta", [[0.0], [1.0], [4.0]])
def test_normalization_torus(theta):
    fam = make_family("torus_vonmises")

    def outer(ys):
        out = np.empty(len(ys))
        for i, y in enumerate(ys):
            out[i] = periodic_integral(
                lambda zs: fam.density(theta, np.column_stack([np.full_like(zs, y), zs])),
                TWO_PI, abs_tol=1e-11)[0]
        return out

    val, _ = periodic_integral(outer, TWO_PI, abs_tol=1e-10)
    assert val == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("theta", [[1.5], [2.0, 2.0], [3.0, 1.5]])
def test_normalization_mass_transport(theta):
    fam = make_family("mass_transport")

    def f(x):
        return float(fam.density(theta, [[x]])[0])

    neg, _ = integrate_adaptive(f, Interval(-math.inf, 0.0), abs_tol=1e-6)
    pos, _ = integrate_adaptive(f, Interval(0.0, math.inf), abs_tol=1e-6)
    assert neg + pos == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("theta", [[-0.4], [0.0], [1.3]])
def test_normalization_location_scale(theta):
    loc = make_family("location")

    def f(x):
        return float(loc.density(theta, [[x]])[0])

    val, _ = integrate_adaptive(f, Interval(-math.inf, math.inf), abs_tol=1e-6)
    assert val == pytest.approx(1.0, abs=1e-3)
    sc = make_family("scale")
    s = abs(theta[0]) + 0.5

    def g(x):
        return float(sc.density([s], [[x]])[0])

    val, _ = integrate_adaptive(g, Interval(-math.inf, math.inf), abs_tol=1e-6)
    assert val == pytest.approx(1.0, abs=1e-3)


def test_normalization_sopq_monte_carlo():
    fam = make_family("sopq_normal")
    theta = [0.4, 1.2]
    gen = stream(31, 0)
    x = gen.random((1_000_000, 4))
    est = fam.density(theta, x).mean()
    assert est == pytest.approx(1.0, abs=1e-2)


# ---------------------------------------------------------------------------
# sampler / density agreement (chi-square goodness of fit)
# ---------------------------------------------------------------------------

def _chi_square(counts, probs, n):
    counts = np.asarray(counts, dtype=float).ravel()
    probs = np.asarray(probs, dtype=float).ravel()
    rest_p = max(1.0 - probs.sum(), 0.0)
    rest_c = n - counts.sum()
    counts = np.append(counts, rest_c)
    probs = np.append(probs, rest_p)
    keep = probs * n >= 2.0
    stat = float(np.sum((counts[keep] - n * probs[keep]) ** 2 / (n * probs[keep])))
    df = int(keep.sum()) - 1
    return stat, float(stats.chi2.ppf(1.0 - 1e-3, df))


def _gauss_moments(a, b, sigma=1.0):
    """(M0, M1, M2): integrals of 1, y, y^2 against N(0, sigma^2) over [a, b]."""
    za, zb = a / sigma, b / sigma
    pa, pb = stats.norm.pdf(za), stats.norm.pdf(zb)
    m0 = stats.norm.cdf(zb) - stats.norm.cdf(za)
    m1 = sigma * (pa - pb)
    zpa = za * pa if pa > 0.0 else 0.0     # avoid inf * 0 at unbounded edges
    zpb = zb * pb if pb > 0.0 else 0.0
    m2 = sigma**2 * (m0 + zpa - zpb)
    return m0, m1, m2


def test_gof_rotated_normal():
    theta = 0.7
    fam = make_family("rotated_normal_2d")
    pts = draw(fam, [theta], PUSH_N, tag=1).points
    edges = np.linspace(0.0, 1.0, 11)
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=(edges, edges))
    c, s = math.cos(theta), math.sin(theta)
    y_edges = sp.ndtri(np.clip(edges, 1e-300, 1.0))
    probs = np.empty((10, 10))
    for i in range(10):
        ma = _gauss_moments(y_edges[i], y_edges[i + 1])
        for j in range(10):
            mb = _gauss_moments(y_edges[j], y_edges[j + 1])
            probs[i, j] = (c * c * ma[2] * mb[0] + 2 * c * s * ma[1] * mb[1]
                           + s * s * ma[0] * mb[2])
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


def test_gof_sopq_marginal():
    fam = make_family("sopq_normal")
    theta = [0.4, 1.2]
    pts = draw(fam, theta, PUSH_N, tag=2).points[:, :2]
    edges = np.linspace(0.0, 1.0, 11)
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=(edges, edges))
    sp_, sq_ = fam.sigma_p, fam.sigma_q
    t1, t2 = math.cos(theta[0]), math.sin(theta[0])
    y_edges = sp_ * sp.ndtri(np.clip(edges, 1e-300, 1.0))
    probs = np.empty((10, 10))
    for i in range(10):
        ma = _gauss_moments(y_edges[i], y_edges[i + 1], sp_)
        for j in range(10):
            mb = _gauss_moments(y_edges[j], y_edges[j + 1], sp_)
            probs[i, j] = (t1 * t1 * ma[2] * mb[0] + 2 * t1 * t2 * ma[1] * mb[1]
                           + t2 * t2 * ma[0] * mb[2] + sq_**2 * ma[0] * mb[0])
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


def test_gof_rotated_laplace_marginal():
    angle = 0.6
    fam = make_family("rotated_general_d", xi="laplace")
    x1 = draw(fam, [angle], PUSH_N, tag=3).points[:, 0]
    edges = np.linspace(0.0, 1.0, 21)
    counts, _ = np.histogram(x1, bins=edges)
    b = 1.0 / math.sqrt(2.0)
    c2, s2 = math.cos(angle) ** 2, math.sin(angle) ** 2
    y_edges = np.asarray(special.laplace_ppf(np.clip(edges, 1e-300, 1 - 1e-16), b))
    probs = []
    for i in range(20):
        val, _ = si.quad(lambda y: (c2 * y * y + s2) * float(special.laplace_pdf(y, b)),
                         y_edges[i], y_edges[i + 1], epsabs=1e-11)
        probs.append(val)
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


def test_gof_weibull():
    theta = 2.0
    fam = make_family("weibull_biv")
    pts = draw(fam, [theta], PUSH_N, tag=4).points
    u = theta * np.sqrt(pts[:, 0])
    v = np.sqrt(pts[:, 1]) / theta
    edges = np.linspace(0.0, 3.0, 11)
    counts, _, _ = np.histogram2d(u, v, bins=(edges, edges))
    g = -np.diff(np.exp(-edges))
    probs = np.outer(g, g)
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


@pytest.mark.parametrize("fid", ["radial_rho", "radial_rho_haar"])
def test_gof_radial(fid):
    rho = 0.5
    fam = make_family(fid)
    pts = draw(fam, [rho], PUSH_N, tag=5).points
    r = np.hypot(pts[:, 0], pts[:, 1])
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
    if fid == "radial_rho_haar":
        phi = np.mod(phi + r, TWO_PI)   # undo the radius shift
    r_edges = np.array([0.0, 0.5, 0.8, 1.1, 1.4, 1.7, 2.0, 2.4, 2.9, 3.5, np.inf])
    p_edges = np.linspace(0.0, TWO_PI, 11)
    counts, _, _ = np.histogram2d(r, phi, bins=(r_edges, p_edges))
    probs = np.empty((10, 10))
    for j in range(10):
        for i in range(10):
            def cell(a):
                s2 = 1.0 + rho * np.cos(a)
                hi = 0.0 if np.isinf(r_edges[i + 1]) else math.exp(-r_edges[i + 1] ** 2 / (2 * s2))
                return (1.0 + rho * np.cos(a)) / TWO_PI * (
                    math.exp(-r_edges[i] ** 2 / (2 * s2)) - hi)

            probs[i, j], _ = si.quad(cell, p_edges[j], p_edges[j + 1], epsabs=1e-11)
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


def test_gof_torus_vonmises():
    theta = 1.0
    fam = make_family("torus_vonmises")
    pts = draw(fam, [theta], PUSH_N, tag=6).points
    edges = np.linspace(0.0, TWO_PI, 11)
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=(edges, edges))
    probs = np.empty((10, 10))
    for i in range(10):
        for j in range(10):
            probs[i, j], _ = si.dblquad(
                lambda z, y: float(fam.density([theta], np.array([[y, z]]))[0]),
                edges[i], edges[i + 1], edges[j], edges[j + 1], epsabs=1e-9)
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


def test_gof_mass_transport():
    a, b = 3.0, 1.5
    fam = make_family("mass_transport")
    x = draw(fam, [a, b], PUSH_N, tag=7).points[:, 0]
    edges = np.array([-np.inf, -2.0, -1.5, -1.0, -0.6, -0.3, -0.1, 0.0,
                      0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, np.inf])
    counts, _ = np.histogram(x, bins=edges)

    def cdf(x):
        if x >= 0.0:
            return 1.0 - math.exp(-a * x) / a
        return math.exp(b * x) / b

    probs = np.diff([cdf(e) if np.isfinite(e) else (0.0 if e < 0 else 1.0)
                     for e in edges])
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


def test_gof_location_scale_1d():
    loc = make_family("location")
    x = draw(loc, [0.7], PUSH_N, tag=8).points[:, 0]
    edges = np.concatenate([[-np.inf], np.linspace(-2.0, 3.5, 19), [np.inf]])
    counts, _ = np.histogram(x, bins=edges)
    probs = np.diff(stats.norm.cdf(edges, loc=0.7))
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit

    sc = make_family("scale")
    x = draw(sc, [2.0], PUSH_N, tag=9).points[:, 0]
    counts, _ = np.histogram(x, bins=edges)
    probs = np.diff(stats.norm.cdf(edges, scale=2.0))
    stat, crit = _chi_square(counts, probs, PUSH_N)
    assert stat < crit


# ---------------------------------------------------------------------------
# pushforward facts used throughout the bench
# ---------------------------------------------------------------------------

def test_rotated_normal_pushforward_mean():
    fam = make_family("rotated_normal_2d")
    cloud = draw(fam, [1.0], 100_000, tag=10)
    z = fam.density([1.0], cloud.points)
    # mean of the pushforward density, cross-checked by the moment integral
    mean_oracle, _ = si.quad(lambda t: t * math.sqrt(t / TWO_PI) * math.exp(-t / 2.0),
                             0.0, 200.0)
    assert mean_oracle == pytest.approx(3.0, abs=1e-9)
    assert abs(z.mean() - 3.0) < 0.05


def test_weibull_transformation_to_exponentials():
    fam = make_family("weibull_biv")
    for tag, theta in enumerate((0.5, 1.0, 2.0)):
        pts = draw(fam, [theta], 20_000, tag=20 + tag).points
        u = theta * np.sqrt(pts[:, 0])
        v = np.sqrt(pts[:, 1]) / theta
        assert abs(u.mean() - 1.0) < 0.02 * 2.5
        assert abs(v.mean() - 1.0) < 0.02 * 2.5
        for marginal in (u, v):
            z = np.sort(marginal)
            n = len(z)
            cdf = 1.0 - np.exp(-z)
            i = np.arange(1, n + 1)
            d = np.max(np.maximum(np.abs(cdf - i / n), np.abs(cdf - (i - 1) / n)))
            assert d < 1.9495 / math.sqrt(n)


def test_mass_transport_positive_fraction():
    fam = make_family("mass_transport")
    pts = draw(fam, [2.0, 2.0], 100_000, tag=30).points[:, 0]
    assert abs((pts >= 0).mean() - 0.5) < 0.01


def test_radial_pushforward_uniform():
    fam = make_family("radial_rho")
    cloud = draw(fam, [0.7], 50_000, tag=31)
    z = fam.density([0.7], cloud.points)
    assert z.max() <= 1.0 / TWO_PI + 1e-12
    assert abs(z.mean() - 1.0 / (2.0 * TWO_PI)) < 3e-4


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------

SCORE_CASES = [
    ("rotated_normal_2d", [0.6], {}),
    ("rotated_general_d", [0.8], {"xi": "laplace"}),
    ("weibull_biv", [1.3], {}),
    ("radial_rho", [0.4], {}),
    ("radial_rho_haar", [-0.3], {}),
    ("scale", [1.5], {}),
    ("location", [0.3], {}),
    ("torus_vonmises", [0.9], {}),
    ("mass_transport", [1.7], {}),
]


@pytest.mark.parametrize("fid,theta,opts", SCORE_CASES)
def test_score_matches_finite_difference(fid, theta, opts):
    fam = make_family(fid, **opts)
    pts = draw(fam, theta, 100, tag=40).points
    closed = fam.score(theta, pts)
    fd = fam.score_fd(theta, pts)
    rel = np.abs(closed - fd) / np.maximum(1.0, np.abs(fd))
    assert rel.max() < 1e-5


def test_score_spot_values():
    rad = make_family("radial_rho")
    assert rad.score([0.0], [[1.0, 0.0]])[0, 0] == pytest.approx(0.5, rel=1e-12)
    assert rad.score([0.37], [[0.0, 2.0]])[0, 0] == pytest.approx(0.0, abs=1e-12)
    loc = make_family("location")
    assert loc.score([0.0], [[1.0]])[0, 0] == pytest.approx(1.0, rel=1e-12)


def test_score_error_paths():
    fam = make_family("rotated_normal_2d")
    with pytest.raises(UndefinedScore):
        fam.score([0.3], [[1.5, 0.5]])      # zero density outside the box
    with pytest.raises(UndefinedScore):
        make_family("location", g="uniform").score([0.0], [[0.5]])
    with pytest.raises(UndefinedScore):
        make_family("mass_transport").score([2.0, 2.0], [[0.5]])


# ---------------------------------------------------------------------------
# parameter domains, determinism, plumbing
# ---------------------------------------------------------------------------

def test_invalid_parameters():
    with pytest.raises(InvalidParam):
        make_family("radial_rho").validate([1.0])
    with pytest.raises(InvalidParam):
        make_family("mass_transport").validate([2.0, 3.0])
    with pytest.raises(InvalidParam):
        make_family("mass_transport").validate([0.9])
    with pytest.raises(InvalidParam):
        make_family("scale").validate([-1.0])
    with pytest.raises(InvalidParam):
        make_family("rotated_general_d", dim=3).validate([0.5, 0.5, 0.5])
    with pytest.raises(InvalidParam):
        make_family("sopq_normal").validate([1.0, 0.5, 1.0, 0.0])  # p-block not unit
    with pytest.raises(InvalidParam):
        make_family("torus_vonmises", kappa=20.0)
    with pytest.raises(InvalidParam):
        make_family("nonexistent_family")
    with pytest.raises(InvalidParam):
        make_family("radial_rho", bogus=1)


def test_seed_determinism():
    fam = make_family("torus_vonmises")
    a = fam.sample([1.0], 500, stream(3, 1)).points
    b = fam.sample([1.0], 500, stream(3, 1)).points
    assert np.array_equal(a, b)
    c = fam.sample([1.0], 500, stream(4, 1)).points
    assert not np.array_equal(a, c)


def test_samples_inside_support():
    box = draw(make_family("rotated_normal_2d"), [0.3], 5_000, tag=50).points
    assert np.all((box > 0.0) & (box < 1.0))
    orth = draw(make_family("weibull_biv"), [2.0], 5_000, tag=51).points
    assert np.all(orth > 0.0)
    tor = draw(make_family("torus_vonmises"), [1.0], 5_000, tag=52)
    assert isinstance(tor.metric, FlatTorus)
    assert np.all((tor.points >= 0.0) & (tor.points < TWO_PI))


def test_rejection_abort():
    gen = stream(9, 9)

    def hopeless(m):
        return gen.random(m), np.zeros(m, dtype=bool)

    with pytest.raises(SamplingError):
        _rejection_loop(gen, 10, hopeless, "hopeless")


def test_manifest_covers_registry():
    m = manifest()
    assert sorted(m) == family_ids()
    assert len(m) == 10
    for fid, entry in m.items():
        assert entry["id"] == fid
        assert "kind" in entry["support"] and "dim" in entry["support"]
        assert "theta" in entry and "options" in entry


def test_theta_angle_and_vector_forms_agree():
    fam = make_family("rotated_general_d")
    x = np.array([[0.3, 0.8], [0.6, 0.1]])
    a = fam.density([0.7], x)
    b = fam.density([math.cos(0.7), math.sin(0.7)], x)
    assert np.allclose(a, b, rtol=1e-14)
