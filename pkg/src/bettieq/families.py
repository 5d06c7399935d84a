"""Registry of parametric families: densities, exact samplers, scores.

Every family evaluates its density in closed form, draws iid samples by the
constructive recipe that makes its pushforward distribution explicit, and
(where the parameter set is open) exposes the score.  Samplers consume an
explicit ``numpy.random.Generator``; rejection-based ones log their
acceptance rate and abort below 1%.

Densities never return +/-inf: values are capped at 1e300 and points outside
the support map to 0.  Samplers never emit support-boundary points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import InvalidParam, SamplingError, UndefinedScore
from .geom import Euclidean, FlatTorus, PointCloud

__all__ = ["Support", "Family", "make_family", "family_ids", "manifest"]

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DENSITY_CAP = 1e300
_MIN_ACCEPT = 0.01


@dataclass(frozen=True)
class Support:
    """Where the family lives; drives complex choice and quadrature domains.

    kind is one of 'box01' ([0,1]^d), 'euclidean' (R^d), 'orthant' (R_+^d),
    'real_split' (R, split at 0), 'torus' (T^d with period 2*pi).
    """

    kind: str
    dim: int

    @property
    def period(self) -> float:
        return TWO_PI


def _as_theta(theta) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise InvalidParam(f"parameter must be a finite vector, got {theta!r}")
    return arr


def _cap(values: np.ndarray) -> np.ndarray:
    return np.nan_to_num(values, nan=0.0, posinf=DENSITY_CAP, neginf=0.0)


class Family:
    """Base class; subclasses fill in the closed forms."""

    id: str = ""
    support: Support
    theta_doc: str = ""

    @property
    def intrinsic_dim(self) -> int:
        return self.support.dim

    def metric(self):
        if self.support.kind == "torus":
            return FlatTorus((TWO_PI,) * self.support.dim)
        return Euclidean()

    # -- contract -----------------------------------------------------------
    def validate(self, theta) -> np.ndarray:
        raise NotImplementedError

    def density(self, theta, x) -> np.ndarray:
        """Density at points x of shape (m, d); 0 outside the support."""
        raise NotImplementedError

    def sample(self, theta, n: int, rng: np.random.Generator) -> PointCloud:
        if n < 1:
            raise InvalidParam("need n >= 1")
        pts = self._draw(self.validate(theta), int(n), rng)
        return PointCloud(pts, self.metric())

    def _draw(self, theta: np.ndarray, n: int, rng) -> np.ndarray:
        raise NotImplementedError

    def score(self, theta, x) -> np.ndarray:
        """Gradient of the log density in the parameter as given, shape (m, p).

        Families parameterized by angles differentiate in the angle; a score
        for constrained vector parameterizations is undefined.
        """
        raw = _as_theta(theta)
        self.validate(theta)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if np.any(self.density(theta, x) <= 0.0):
            raise UndefinedScore(f"{self.id}: zero density in score evaluation")
        closed = self._score(raw, x)
        if closed is not None:
            return closed
        return self.score_fd(raw, x)

    def _score(self, theta: np.ndarray, x: np.ndarray):
        """Closed-form score given the raw parameter vector, or None."""
        return None

    def score_fd(self, theta, x) -> np.ndarray:
        """Central finite-difference score, step 1e-5 * max(1, |theta_i|),
        perturbing the raw parameter components."""
        theta = _as_theta(theta)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((x.shape[0], len(theta)))
        for i in range(len(theta)):
            h = 1e-5 * max(1.0, abs(theta[i]))
            up = theta.copy()
            dn = theta.copy()
            up[i] += h
            dn[i] -= h
            fu = self.density(up, x)
            fd = self.density(dn, x)
            if np.any(fu <= 0.0) or np.any(fd <= 0.0):
                raise UndefinedScore(f"{self.id}: zero density in finite difference")
            out[:, i] = (np.log(fu) - np.log(fd)) / (2.0 * h)
        return out

    def manifest_entry(self) -> dict:
        return {
            "id": self.id,
            "support": {"kind": self.support.kind, "dim": self.support.dim},
            "theta": self.theta_doc,
        }


def _rejection_loop(rng, n: int, propose, what: str):
    """Run batched rejection; propose(m) -> (values, accept_mask)."""
    chunks = []
    got = 0
    proposed = 0
    accepted = 0
    while got < n:
        m = max(1024, 2 * (n - got))
        vals, acc = propose(m)
        proposed += m
        accepted += int(np.count_nonzero(acc))
        take = vals[acc]
        chunks.append(take[: n - got])
        got += len(take[: n - got])
        if proposed >= 200_000 and accepted < _MIN_ACCEPT * proposed:
            raise SamplingError(
                f"{what}: acceptance rate {accepted / proposed:.2%} below 1%")
    rate = accepted / proposed
    log.debug("%s acceptance rate: %.3f", what, rate)
    return np.concatenate(chunks)


# ---------------------------------------------------------------------------
# location / scale with a plug-in g
# ---------------------------------------------------------------------------

class LocationFamily(Family):
    """f_theta(x) = g(x - theta) on R^d; g is standard Gaussian or the unit
    box indicator (the latter has no score)."""

    def __init__(self, dim: int = 1, g: str = "gaussian"):
        if g not in ("gaussian", "uniform"):
            raise InvalidParam(f"unsupported location g={g!r}")
        self.id = "location"
        self.g = g
        self.support = Support("euclidean", dim)
        self.theta_doc = f"offset vector, length {dim}"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != self.support.dim:
            raise InvalidParam(f"location needs a length-{self.support.dim} offset")
        return theta

    def density(self, theta, x):
        theta = self.validate(theta)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = x - theta
        if self.g == "gaussian":
            d = self.support.dim
            return (TWO_PI) ** (-d / 2.0) * np.exp(-0.5 * np.einsum("ij,ij->i", u, u))
        inside = np.all((u >= 0.0) & (u <= 1.0), axis=1)
        return inside.astype(float)

    def _draw(self, theta, n, rng):
        d = self.support.dim
        if self.g == "gaussian":
            return rng.standard_normal((n, d)) + theta
        return rng.random((n, d)) + theta

    def _score(self, theta, x):
        if self.g != "gaussian":
            raise UndefinedScore("uniform g is not differentiable")
        return x - theta


class ScaleFamily(Family):
    """f_theta(x) = theta^-d g(x/theta) on R^d with standard Gaussian g."""

    def __init__(self, dim: int = 1):
        self.id = "scale"
        self.support = Support("euclidean", dim)
        self.theta_doc = "single scale factor > 0"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != 1 or theta[0] <= 0.0:
            raise InvalidParam("scale needs a single positive factor")
        return theta

    def density(self, theta, x):
        s = self.validate(theta)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.support.dim
        r2 = np.einsum("ij,ij->i", x, x)
        return s ** (-d) * (TWO_PI) ** (-d / 2.0) * np.exp(-0.5 * r2 / s**2)

    def _draw(self, theta, n, rng):
        return theta[0] * rng.standard_normal((n, self.support.dim))

    def _score(self, theta, x):
        s = theta[0]
        d = self.support.dim
        r2 = np.einsum("ij,ij->i", x, x)
        return (-d / s + r2 / s**3)[:, None]


# ---------------------------------------------------------------------------
# rotated quantile-transport families on the unit box
# ---------------------------------------------------------------------------

def _chi3_signed(rng, n):
    """Signed draw with density r^2 exp(-r^2/2)/sqrt(2 pi) on R."""
    mag = np.sqrt(rng.gamma(1.5, 2.0, n))
    sign = 2.0 * rng.integers(0, 2, n) - 1.0
    return sign * mag


def _complete_basis(w: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal completion; first column is w."""
    d = len(w)
    q, _ = np.linalg.qr(np.column_stack([w, np.eye(d)[:, : d - 1]]))
    if np.dot(q[:, 0], w) < 0.0:
        q = -q
    return q


class RotatedGeneralFamily(Family):
    """f_theta(x) = (theta . Finv(x))^2 on [0,1]^d for a univariate quantile
    function Finv applied per coordinate (xi standardized to mean 0, var 1).

    xi='gaussian' samples by the exact rotation construction; xi='laplace'
    (scale 1/sqrt(2)) samples by rejection from the second-moment-tilted
    proposal, exact up to the rejection step."""

    def __init__(self, dim: int = 2, xi: str = "gaussian"):
        if xi not in ("gaussian", "laplace"):
            raise InvalidParam(f"unsupported xi={xi!r}")
        if dim < 2:
            raise InvalidParam("need dim >= 2")
        self.id = "rotated_general_d"
        self.xi = xi
        self.laplace_scale = 1.0 / math.sqrt(2.0)
        self.support = Support("box01", dim)
        self.theta_doc = (f"unit vector of length {dim}, or a single angle when dim=2")

    def validate(self, theta):
        theta = _as_theta(theta)
        d = self.support.dim
        if len(theta) == 1 and d == 2:
            return np.array([math.cos(theta[0]), math.sin(theta[0])])
        if len(theta) != d:
            raise InvalidParam(f"need a length-{d} direction or an angle")
        if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
            raise InvalidParam("direction must be a unit vector")
        return theta

    def _ppf(self, p):
        if self.xi == "gaussian":
            return special.norm_ppf(p)
        return special.laplace_ppf(p, self.laplace_scale)

    def _pdf(self, y):
        if self.xi == "gaussian":
            return special.norm_pdf(y)
        return special.laplace_pdf(y, self.laplace_scale)

    def density(self, theta, x):
        return self._density_from_w(self.validate(theta), x)

    def _density_from_w(self, w, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        p = np.clip(x, 1e-300, 1.0 - 1e-16)
        y = self._ppf(p)
        vals = np.minimum((y @ w) ** 2, DENSITY_CAP)
        return np.where(inside, _cap(vals), 0.0)

    def _draw(self, theta, n, rng):
        w = self.validate(theta)
        d = self.support.dim
        if self.xi == "gaussian":
            basis = _complete_basis(w)
            coord = np.empty((n, d))
            coord[:, 0] = _chi3_signed(rng, n)
            coord[:, 1:] = rng.standard_normal((n, d - 1))
            y = coord @ basis.T
            return np.clip(special.norm_cdf(y), 1e-15, 1.0 - 1e-15)
        b = self.laplace_scale

        def propose(m):
            y = rng.laplace(0.0, b, (m, d))
            idx = rng.integers(0, d, m)
            tail = rng.gamma(3.0, b, m) * (2.0 * rng.integers(0, 2, m) - 1.0)
            y[np.arange(m), idx] = tail
            ratio = (y @ w) ** 2 / np.einsum("ij,ij->i", y, y)
            return y, rng.random(m) < ratio

        y = _rejection_loop(rng, n, propose, f"{self.id} xi=laplace")
        p = special.laplace_cdf(y, b)
        return np.clip(p, 1e-15, 1.0 - 1e-15)

    def _score(self, theta, x):
        theta = _as_theta(theta)
        if len(theta) != 1 or self.support.dim != 2:
            raise UndefinedScore("score only for the angle parameterization")
        a = theta[0]
        p = np.clip(np.atleast_2d(np.asarray(x, dtype=float)), 1e-300, 1.0 - 1e-16)
        y = self._ppf(p)
        num = -math.sin(a) * y[:, 0] + math.cos(a) * y[:, 1]
        den = math.cos(a) * y[:, 0] + math.sin(a) * y[:, 1]
        return (2.0 * num / den)[:, None]


class RotatedNormal2D(RotatedGeneralFamily):
    """Angle-indexed Gaussian transport on the unit square; the pushforward
    f_theta(X) is Gamma(3/2, rate 1/2) for every angle.

    Sampling follows the planar recipe: a signed chi(3) radius R and a
    standard normal S are rotated by -theta and pushed through the normal
    CDF."""

    def __init__(self):
        super().__init__(dim=2, xi="gaussian")
        self.id = "rotated_normal_2d"
        self.theta_doc = "single rotation angle (radians)"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != 1:
            raise InvalidParam("rotated_normal_2d takes a single angle")
        return theta

    def density(self, theta, x):
        a = self.validate(theta)[0]
        return self._density_from_w(np.array([math.cos(a), math.sin(a)]), x)

    def _draw(self, theta, n, rng):
        a = theta[0]
        r = _chi3_signed(rng, n)
        s = rng.standard_normal(n)
        u = r * math.cos(a) - s * math.sin(a)
        v = r * math.sin(a) + s * math.cos(a)
        p = special.norm_cdf(np.column_stack([u, v]))
        return np.clip(p, 1e-15, 1.0 - 1e-15)

    def _score(self, theta, x):
        a = theta[0]
        p = np.clip(np.atleast_2d(np.asarray(x, dtype=float)), 1e-300, 1.0 - 1e-16)
        y = special.norm_ppf(p)
        num = -math.sin(a) * y[:, 0] + math.cos(a) * y[:, 1]
        den = math.cos(a) * y[:, 0] + math.sin(a) * y[:, 1]
        return (2.0 * num / den)[:, None]


class SopqNormalFamily(Family):
    """Block-rotation family on [0,1]^d, d = p + q: the quantile transport
    uses N(0, sigma_p^2) on the first p coordinates and N(0, sigma_q^2) on
    the rest, with sigma_p^2 + sigma_q^2 = 1."""

    def __init__(self, p: int = 2, q: int = 2, sigma_p: float | None = None):
        if p < 1 or q < 1:
            raise InvalidParam("need p, q >= 1")
        self.id = "sopq_normal"
        self.p = p
        self.q = q
        self.sigma_p = math.sqrt(0.5) if sigma_p is None else float(sigma_p)
        if not 0.0 < self.sigma_p < 1.0:
            raise InvalidParam("sigma_p must be in (0, 1)")
        self.sigma_q = math.sqrt(1.0 - self.sigma_p**2)
        self.support = Support("box01", p + q)
        self.theta_doc = (
            f"unit vectors for each block (length {p}+{q}), or two angles when p=q=2")

    def validate(self, theta):
        theta = _as_theta(theta)
        d = self.p + self.q
        if len(theta) == 2 and self.p == 2 and self.q == 2:
            ap, aq = theta
            return np.array([math.cos(ap), math.sin(ap), math.cos(aq), math.sin(aq)])
        if len(theta) != d:
            raise InvalidParam(f"need a length-{d} direction or two angles")
        tp, tq = theta[: self.p], theta[self.p:]
        if abs(np.linalg.norm(tp) - 1.0) > 1e-9 or abs(np.linalg.norm(tq) - 1.0) > 1e-9:
            raise InvalidParam("each block must be a unit vector")
        return theta

    def _sigmas(self):
        return np.concatenate([np.full(self.p, self.sigma_p), np.full(self.q, self.sigma_q)])

    def density(self, theta, x):
        w = self.validate(theta)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        p = np.clip(x, 1e-300, 1.0 - 1e-16)
        y = special.norm_ppf(p) * self._sigmas()
        vals = np.minimum((y @ w) ** 2, DENSITY_CAP)
        return np.where(inside, _cap(vals), 0.0)

    def _draw(self, theta, n, rng):
        w = self.validate(theta)
        d = self.p + self.q
        w_eff = w * self._sigmas()      # unit norm by the block constraints
        basis = _complete_basis(w_eff)
        coord = np.empty((n, d))
        coord[:, 0] = _chi3_signed(rng, n)
        coord[:, 1:] = rng.standard_normal((n, d - 1))
        u = coord @ basis.T
        return np.clip(special.norm_cdf(u), 1e-15, 1.0 - 1e-15)

    def _score(self, theta, x):
        if len(theta) == 2 and self.p == 2 and self.q == 2:
            return None     # finite differences in the two angles
        raise UndefinedScore("score only for the two-angle parameterization")


# ---------------------------------------------------------------------------
# Weibull pair on the positive quadrant
# ---------------------------------------------------------------------------

class WeibullBivFamily(Family):
    """f_theta(x, y) = exp(-theta sqrt(x) - sqrt(y)/theta) / (4 sqrt(xy)).

    Pushing samples through (u, v) = (theta sqrt(x), sqrt(y)/theta) gives two
    independent unit exponentials, which is also the sampling recipe."""

    def __init__(self):
        self.id = "weibull_biv"
        self.support = Support("orthant", 2)
        self.theta_doc = "single factor > 0"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != 1 or theta[0] <= 0.0:
            raise InvalidParam("weibull_biv needs a single positive factor")
        return theta

    def density(self, theta, x):
        t = self.validate(theta)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all(x >= 0.0, axis=1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sx = np.sqrt(np.maximum(x[:, 0], 0.0))
            sy = np.sqrt(np.maximum(x[:, 1], 0.0))
            vals = np.exp(-t * sx - sy / t) / (4.0 * sx * sy)
        return np.where(inside, np.minimum(_cap(vals), DENSITY_CAP), 0.0)

    def _draw(self, theta, n, rng):
        t = theta[0]
        u = rng.exponential(1.0, n)
        v = rng.exponential(1.0, n)
        eps = 1e-300
        return np.column_stack([np.maximum((u / t) ** 2, eps), np.maximum((t * v) ** 2, eps)])

    def _score(self, theta, x):
        t = theta[0]
        return (-np.sqrt(x[:, 0]) + np.sqrt(x[:, 1]) / t**2)[:, None]


# ---------------------------------------------------------------------------
# piecewise mass transport on the real line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _HalflineG:
    """Plug-in density on R_+ with derivative of log for scores."""

    name: str

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        if self.name == "exp":
            return np.where(u >= 0.0, np.exp(-np.clip(u, 0.0, 700.0)), 0.0)
        # gamma with shape 10, rate 2 (the smooth control)
        k, rate = 10.0, 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = rate**k * u ** (k - 1) * np.exp(-rate * u) / math.gamma(k)
        return np.where(u > 0.0, _cap(vals), 0.0)

    def dlog(self, u):
        u = np.asarray(u, dtype=float)
        if self.name == "exp":
            return np.full_like(u, -1.0)
        k, rate = 10.0, 2.0
        return (k - 1.0) / u - rate

    def sample(self, rng, n):
        if self.name == "exp":
            return rng.exponential(1.0, n)
        return rng.gamma(10.0, 0.5, n)


class MassTransportFamily(Family):
    """f(x) = g(a x) for x >= 0 and g(-b x) for x < 0, constrained to
    1/a + 1/b = 1; theta may be (a, b) or the single parameter t > 1 meaning
    (a, b) = (t, t/(t-1)).  The score is defined for the one-parameter form."""

    def __init__(self, g: str = "exp"):
        if g not in ("exp", "gamma"):
            raise InvalidParam(f"unsupported mass_transport g={g!r}")
        self.id = "mass_transport"
        self.g = _HalflineG(g)
        self.support = Support("real_split", 1)
        self.theta_doc = "(a, b) with 1/a + 1/b = 1, or a single t > 1"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) == 1:
            t = theta[0]
            if t <= 1.0:
                raise InvalidParam("one-parameter form needs t > 1")
            return theta
        if len(theta) != 2:
            raise InvalidParam("mass_transport takes (a, b) or a single t")
        a, b = theta
        if a <= 1.0 or b <= 1.0 or abs(1.0 / a + 1.0 / b - 1.0) > 1e-9:
            raise InvalidParam(
                f"(a, b)=({a}, {b}) violates the constraint 1/a + 1/b = 1")
        return theta

    def _ab(self, theta):
        if len(theta) == 1:
            t = theta[0]
            return t, t / (t - 1.0)
        return theta[0], theta[1]

    def density(self, theta, x):
        a, b = self._ab(self.validate(theta))
        x = np.atleast_2d(np.asarray(x, dtype=float))[:, 0]
        return np.where(x >= 0.0, self.g.pdf(a * x), self.g.pdf(-b * x))

    def _draw(self, theta, n, rng):
        a, b = self._ab(theta)
        z = self.g.sample(rng, n)
        branch = rng.random(n) < 1.0 / a
        return np.where(branch, z / a, -z / b)[:, None]

    def _score(self, theta, x):
        if len(theta) != 1:
            raise UndefinedScore("score only for the one-parameter form")
        t = theta[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))[:, 0]
        pos = x >= 0.0
        s = np.empty_like(x)
        s[pos] = x[pos] * self.g.dlog(t * x[pos])
        u = t * x[~pos] / (1.0 - t)
        s[~pos] = x[~pos] / (1.0 - t) ** 2 * self.g.dlog(u)
        return s[:, None]


# ---------------------------------------------------------------------------
# torus and radial fiber-shift families
# ---------------------------------------------------------------------------

class TorusVonMisesFamily(Family):
    """f_theta(y, z) = exp(kappa cos(theta + y + z)) / ((2 pi)^2 I0(kappa))
    on the flat 2-torus.  W ~ von Mises(kappa) by rejection from a uniform
    proposal, Z uniform, Y = W - Z - theta (mod 2 pi)."""

    def __init__(self, kappa: float = 2.0):
        if not 0.0 <= kappa <= 15.0:
            raise InvalidParam("kappa must be in [0, 15]")
        self.id = "torus_vonmises"
        self.kappa = float(kappa)
        self.i0 = special.bessel_i0(self.kappa)
        self.support = Support("torus", 2)
        self.theta_doc = "single shift angle (radians)"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != 1:
            raise InvalidParam("torus_vonmises takes a single angle")
        return theta

    def density(self, theta, x):
        t = self.validate(theta)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.exp(self.kappa * np.cos(t + x[:, 0] + x[:, 1])) / (TWO_PI**2 * self.i0)

    def _draw(self, theta, n, rng):
        t = theta[0]
        k = self.kappa

        def propose(m):
            w = rng.uniform(0.0, TWO_PI, m)
            acc = rng.random(m) < np.exp(k * (np.cos(w) - 1.0))
            return w, acc

        w = _rejection_loop(rng, n, propose, self.id)
        z = rng.uniform(0.0, TWO_PI, n)
        y = np.mod(w - z - t, TWO_PI)
        return np.column_stack([y, z])

    def _score(self, theta, x):
        t = theta[0]
        return (-self.kappa * np.sin(t + x[:, 0] + x[:, 1]))[:, None]


def _radial_common_draw(rho, n, rng, what):
    """(radius, angle) draw for the angle-tilted Gaussian: angle density
    (1 + rho cos phi)/(2 pi) by rejection, then a Rayleigh radius with
    squared scale (1 + rho cos phi)."""

    def propose(m):
        phi = rng.uniform(0.0, TWO_PI, m)
        acc = rng.random(m) * (1.0 + abs(rho)) < (1.0 + rho * np.cos(phi))
        return phi, acc

    phi = _rejection_loop(rng, n, propose, what)
    u = 1.0 - rng.random(n)           # in (0, 1], keeps the log finite
    r = np.sqrt(1.0 + rho * np.cos(phi)) * np.sqrt(-2.0 * np.log(u))
    return r, phi


class RadialRhoFamily(Family):
    """f_rho(x) = exp(-r^2 / (2 (1 + rho cos phi))) / (2 pi) on R^2; the
    pushforward f_rho(X) is uniform on (0, 1/(2 pi)) for every |rho| < 1."""

    def __init__(self):
        self.id = "radial_rho"
        self.support = Support("euclidean", 2)
        self.theta_doc = "single rho with |rho| < 1"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != 1 or abs(theta[0]) >= 1.0:
            raise InvalidParam("radial_rho needs |rho| < 1")
        return theta

    def density(self, theta, x):
        rho = self.validate(theta)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r2 = np.einsum("ij,ij->i", x, x)
        phi = np.arctan2(x[:, 1], x[:, 0])
        return np.exp(-0.5 * r2 / (1.0 + rho * np.cos(phi))) / TWO_PI

    def _draw(self, theta, n, rng):
        r, phi = _radial_common_draw(theta[0], n, rng, self.id)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi)])

    def _score(self, theta, x):
        rho = theta[0]
        r2 = np.einsum("ij,ij->i", x, x)
        phi = np.arctan2(x[:, 1], x[:, 0])
        c = np.cos(phi)
        return (r2 * c / (2.0 * (1.0 + rho * c) ** 2))[:, None]


class RadialRhoHaarFamily(Family):
    """Radius-shifted composition of the radial family: the angle argument of
    the tilt is translated by the radius, f(x) = g(r xi_rho(r + phi)).  Same
    pushforward as radial_rho; sampling reuses the radial draw and shifts the
    angle back."""

    def __init__(self):
        self.id = "radial_rho_haar"
        self.support = Support("euclidean", 2)
        self.theta_doc = "single rho with |rho| < 1"

    def validate(self, theta):
        theta = _as_theta(theta)
        if len(theta) != 1 or abs(theta[0]) >= 1.0:
            raise InvalidParam("radial_rho_haar needs |rho| < 1")
        return theta

    def density(self, theta, x):
        rho = self.validate(theta)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.sqrt(np.einsum("ij,ij->i", x, x))
        phi = np.arctan2(x[:, 1], x[:, 0])
        return np.exp(-0.5 * r**2 / (1.0 + rho * np.cos(r + phi))) / TWO_PI

    def _draw(self, theta, n, rng):
        r, psi = _radial_common_draw(theta[0], n, rng, self.id)
        phi = np.mod(psi - r, TWO_PI)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi)])

    def _score(self, theta, x):
        rho = theta[0]
        r = np.sqrt(np.einsum("ij,ij->i", x, x))
        phi = np.arctan2(x[:, 1], x[:, 0])
        c = np.cos(r + phi)
        return (r**2 * c / (2.0 * (1.0 + rho * c) ** 2))[:, None]


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_REGISTRY = {
    "location": (LocationFamily, {"dim": 1, "g": "gaussian"}),
    "scale": (ScaleFamily, {"dim": 1}),
    "rotated_normal_2d": (RotatedNormal2D, {}),
    "rotated_general_d": (RotatedGeneralFamily, {"dim": 2, "xi": "gaussian"}),
    "sopq_normal": (SopqNormalFamily, {"p": 2, "q": 2, "sigma_p": None}),
    "weibull_biv": (WeibullBivFamily, {}),
    "mass_transport": (MassTransportFamily, {"g": "exp"}),
    "torus_vonmises": (TorusVonMisesFamily, {"kappa": 2.0}),
    "radial_rho": (RadialRhoFamily, {}),
    "radial_rho_haar": (RadialRhoHaarFamily, {}),
}


def family_ids() -> list[str]:
    return sorted(_REGISTRY)


def make_family(family_id: str, **options) -> Family:
    if family_id not in _REGISTRY:
        raise InvalidParam(f"unknown family {family_id!r}; known: {family_ids()}")
    cls, defaults = _REGISTRY[family_id]
    unknown = set(options) - set(defaults)
    if unknown:
        raise InvalidParam(f"{family_id} does not take options {sorted(unknown)}")
    kwargs = {**defaults, **options}
    return cls(**kwargs)


def manifest() -> dict:
    """Machine-readable catalogue of ids, options, and parameter schemas."""
    out = {}
    for fid, (cls, defaults) in sorted(_REGISTRY.items()):
        fam = cls(**defaults)
        entry = fam.manifest_entry()
        entry["options"] = {k: v for k, v in defaults.items()}
        out[fid] = entry
    return out
