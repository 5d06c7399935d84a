"""Empirical equivalence bench: excess mass, pushforward comparisons, and
thermodynamic Betti curves.

Seeding policy: pushforward draws are keyed by the parameter value, so the
same theta always sees the same sample no matter where it sits in a list,
while distinct thetas get independent streams.  Betti-curve replications are
keyed by replication index only, which couples the clouds across thetas
(common random numbers) and makes curve gaps conservative.
"""

from __future__ import annotations

import hashlib
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import InvalidInput, InvalidParam
from .families import Family
from .geom import Euclidean, build_cech_filtration, build_rips_filtration
from .homology import betti_at, compute_persistence

__all__ = [
    "ExcessMassCurve",
    "BettiCurve",
    "EquivalenceReport",
    "pushforward_samples",
    "excess_mass_mc",
    "ks_two_sample",
    "ks_critical",
    "betti_curve",
    "compare",
    "CompareConfig",
    "theta_key",
    "write_excess_csv",
    "write_betti_csv",
    "write_report_csv",
]

# two-sample KS critical coefficients c(alpha); threshold = c * sqrt((m+n)/(m n))
KS_COEFF = {0.10: 1.2239, 0.05: 1.3581, 0.01: 1.6276, 0.001: 1.9495}

DEFAULT_SIMPLEX_BUDGET = 20_000_000
DEFAULT_DEGREE_CAP = 60.0


def theta_key(theta) -> int:
    """Stable 63-bit key of a parameter vector (value-based, order-free)."""
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    digest = hashlib.blake2b(arr.tobytes(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def format_theta(theta) -> str:
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    return ";".join(repr(float(v)) for v in arr)


# ---------------------------------------------------------------------------
# pushforward and excess mass
# ---------------------------------------------------------------------------

def pushforward_samples(family: Family, theta, n: int, seed: int,
                        stream_key: int | None = None) -> np.ndarray:
    """Z_i = f_theta(X_i) for an iid sample X from the family."""
    key = theta_key(theta) if stream_key is None else int(stream_key)
    cloud = family.sample(theta, n, _rng.stream(seed, _rng.SAMPLE, key))
    return family.density(theta, cloud.points)


@dataclass(frozen=True)
class ExcessMassCurve:
    t_grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n: int

    def sup_gap(self, other: "ExcessMassCurve") -> float:
        return float(np.max(np.abs(self.values - other.values)))


def excess_mass_mc(family: Family, theta, t_grid, n: int, seed: int,
                   stream_key: int | None = None) -> ExcessMassCurve:
    """Monte Carlo excess mass: the survival function of Z = f_theta(X).

    values[j] = (1/n) #\\{ f_theta(X_i) >= t_j \\}; binomial standard errors.
    Shares the pushforward stream, so the duality with the empirical CDF of
    ``pushforward_samples`` under the same seed is exact.
    """
    if n < 100:
        raise InvalidInput("need n >= 100 for a meaningful curve")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(np.diff(t_grid) <= 0):
        raise InvalidInput("t_grid must be strictly increasing and non-empty")
    z = pushforward_samples(family, theta, n, seed, stream_key=stream_key)
    values = np.array([(z >= t).mean() for t in t_grid])
    stderr = np.sqrt(values * (1.0 - values) / n)
    return ExcessMassCurve(t_grid, values, stderr, n)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

def ks_critical(alpha: float, m: int, n: int) -> float:
    if alpha not in KS_COEFF:
        raise InvalidInput(f"alpha must be one of {sorted(KS_COEFF)}")
    return KS_COEFF[alpha] * math.sqrt((m + n) / (m * n))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    passed: bool
    critical: float
    alpha: float


def ks_two_sample(a, b, alpha: float = 0.001) -> KSResult:
    """Two-sample KS by the merge algorithm; pass = statistic below the
    critical value c(alpha) sqrt((m+n)/(m n))."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) < 25 or len(b) < 25:
        raise InvalidInput("need at least 25 samples on each side")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    d = float(np.max(np.abs(fa - fb)))
    crit = ks_critical(alpha, len(a), len(b))
    return KSResult(d, d <= crit, crit, alpha)


def ks_distance_to_cdf(sorted_z: np.ndarray, cdf_at_z: np.ndarray) -> float:
    """sup_i max(|F(z_i) - i/n|, |F(z_i) - (i-1)/n|) for sorted samples."""
    n = len(sorted_z)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(cdf_at_z - i / n), np.abs(cdf_at_z - (i - 1) / n))))


# ---------------------------------------------------------------------------
# Betti curves in the thermodynamic regime
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BettiCurve:
    k: int
    t_grid: np.ndarray
    values: np.ndarray      # mean of beta_k(K(X_n, t n^{-1/d})) / n
    stderr: np.ndarray
    n: int
    replications: int

    def sup_gap_z(self, other: "BettiCurve") -> float:
        """Largest gap in pooled-standard-error units."""
        pooled = np.sqrt(self.stderr**2 + other.stderr**2)
        pooled = np.maximum(pooled, 1e-15)
        return float(np.max(np.abs(self.values - other.values) / pooled))


def _ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d


def check_degree_cap(family: Family, theta, t_grid, seed: int,
                     cap: float = DEFAULT_DEGREE_CAP) -> float:
    """Refuse t values whose expected ball occupancy n vol(r) f_sup exceeds
    the cap; the supremum of the density is estimated by sampling."""
    d = family.intrinsic_dim
    probe = family.sample(theta, 4096, _rng.stream(seed, _rng.BETTI, 0))
    f_sup = float(np.max(family.density(theta, probe.points)))
    t_max = float(np.max(np.asarray(t_grid, dtype=float)))
    load = _ball_volume(d, t_max) * f_sup
    if load > cap:
        raise InvalidInput(
            f"t={t_max} gives expected ball occupancy {load:.1f} > cap {cap}; "
            f"estimated sup density {f_sup:.3g}")
    return load


def _betti_replication(args):
    family, theta, n, seed, rep, radii, k_max, max_simplices = args
    gen = _rng.stream(seed, _rng.BETTI, rep + 1)
    cloud = family.sample(theta, n, gen)
    r_max = float(np.max(radii))
    dim_max = k_max + 1
    if isinstance(cloud.metric, Euclidean):
        filt = build_cech_filtration(cloud, r_max, dim_max, max_simplices)
    else:
        filt = build_rips_filtration(cloud, r_max, dim_max, max_simplices)
    diagram = compute_persistence(filt, k_max)
    out = np.empty((k_max + 1, len(radii)))
    for k in range(k_max + 1):
        for j, r in enumerate(radii):
            out[k, j] = betti_at(diagram, r, k) / n
    return rep, out


def betti_curve(family: Family, theta, n: int, t_grid, k_max: int,
                replications: int, seed: int, jobs: int = 1,
                max_simplices: int = DEFAULT_SIMPLEX_BUDGET,
                degree_cap: float = DEFAULT_DEGREE_CAP,
                return_raw: bool = False):
    """Replicated thermodynamic Betti curves beta_k(t)/n at r = t n^{-1/d}.

    One persistence computation per replication answers every t.  Cech is
    used on Euclidean supports, Rips with the intrinsic flat metric on tori.
    With ``return_raw`` also returns the (reps, k_max+1, T) per-replication
    matrix.
    """
    theta_arr = family.validate(theta)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0.0) or np.any(np.diff(t_grid) <= 0):
        raise InvalidInput("t_grid must be positive and strictly increasing")
    if replications < 2:
        raise InvalidInput("need at least 2 replications for standard errors")
    check_degree_cap(family, theta_arr, t_grid, seed, degree_cap)
    d = family.intrinsic_dim
    radii = t_grid * n ** (-1.0 / d)
    tasks = [(family, theta_arr, n, seed, rep, radii, k_max, max_simplices)
             for rep in range(replications)]
    if jobs > 1:
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            results = pool.map(_betti_replication, tasks)
    else:
        results = [_betti_replication(t) for t in tasks]
    results.sort(key=lambda pair: pair[0])
    stack = np.stack([mat for _, mat in results])   # (reps, k+1, T)
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(replications)
    curves = [BettiCurve(k, t_grid, mean[k], stderr[k], n, replications)
              for k in range(k_max + 1)]
    if return_raw:
        return curves, stack
    return curves


# ---------------------------------------------------------------------------
# the comparison bench
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompareConfig:
    n_push: int = 100_000
    alpha: float = 0.001
    excess_points: int = 25
    betti_enabled: bool = False
    betti_n: int = 1000
    betti_t_grid: tuple = (0.25, 0.5, 0.75, 1.0)
    betti_k_max: int = 1
    betti_replications: int = 8
    betti_gap_threshold: float = 5.0     # pooled standard errors
    separation_margin: float = 1.5
    jobs: int = 1
    max_simplices: int = DEFAULT_SIMPLEX_BUDGET
    degree_cap: float = DEFAULT_DEGREE_CAP


@dataclass(frozen=True)
class PairResult:
    theta_a: tuple
    theta_b: tuple
    stats: tuple            # of (name, value, threshold)
    verdict: str


@dataclass(frozen=True)
class EquivalenceReport:
    family_id: str
    thetas: tuple
    pairs: tuple            # of PairResult
    config: CompareConfig = field(repr=False, default=CompareConfig())

    @property
    def verdicts(self) -> list[str]:
        return [p.verdict for p in self.pairs]


def _verdict(stats, margin: float) -> str:
    all_ok = all(value <= threshold for _, value, threshold in stats)
    if all_ok:
        return "equivalent-consistent"
    if any(value > margin * threshold for _, value, threshold in stats):
        return "separated"
    return "inconclusive"


def compare(family: Family, theta_list, config: CompareConfig | None = None,
            seed: int = 0) -> EquivalenceReport:
    """Pairwise pushforward-KS, excess-mass gap, and optional Betti-curve gap
    with verdicts.  A verdict is evidence, never proof: 'equivalent-consistent'
    means no statistic exceeded its threshold."""
    cfg = config or CompareConfig()
    thetas = [np.atleast_1d(np.asarray(t, dtype=float)) for t in theta_list]
    if len(thetas) < 2:
        raise InvalidParam("need at least two parameter values to compare")

    zs = [pushforward_samples(family, t, cfg.n_push, seed) for t in thetas]
    pooled = np.concatenate(zs)
    qs = np.linspace(0.02, 0.98, cfg.excess_points)
    t_grid = np.unique(np.quantile(pooled, qs))
    curves = [excess_mass_mc(family, t, t_grid, cfg.n_push, seed) for t in thetas]

    betti = None
    if cfg.betti_enabled:
        betti = [betti_curve(family, t, cfg.betti_n, cfg.betti_t_grid,
                             cfg.betti_k_max, cfg.betti_replications, seed,
                             jobs=cfg.jobs, max_simplices=cfg.max_simplices,
                             degree_cap=cfg.degree_cap) for t in thetas]

    pairs = []
    for i in range(len(thetas)):
        for j in range(i + 1, len(thetas)):
            ks = ks_two_sample(zs[i], zs[j], cfg.alpha)
            stats = [("ks_pushforward", ks.statistic, ks.critical)]
            gap = curves[i].sup_gap(curves[j])
            stats.append(("excess_sup_gap", gap, ks.critical))
            if betti is not None:
                for k in range(cfg.betti_k_max + 1):
                    z = betti[i][k].sup_gap_z(betti[j][k])
                    stats.append((f"betti_gap_z_k{k}", z, cfg.betti_gap_threshold))
            pairs.append(PairResult(tuple(thetas[i]), tuple(thetas[j]),
                                    tuple(stats), _verdict(stats, cfg.separation_margin)))
    return EquivalenceReport(family.id, tuple(tuple(t) for t in thetas),
                             tuple(pairs), cfg)


# ---------------------------------------------------------------------------
# CSV exports
# ---------------------------------------------------------------------------

def write_excess_csv(path, theta, curve: ExcessMassCurve) -> None:
    with open(path, "w") as fh:
        fh.write("theta,t,value,stderr,n\n")
        label = format_theta(theta)
        for t, v, s in zip(curve.t_grid, curve.values, curve.stderr):
            fh.write(f"{label},{float(t)!r},{float(v)!r},{float(s)!r},{curve.n}\n")


def write_betti_csv(path, theta, curves: list[BettiCurve]) -> None:
    with open(path, "w") as fh:
        fh.write("theta,k,t,mean,stderr,n,reps\n")
        label = format_theta(theta)
        for c in curves:
            for t, v, s in zip(c.t_grid, c.values, c.stderr):
                fh.write(f"{label},{c.k},{float(t)!r},{float(v)!r},{float(s)!r},"
                         f"{c.n},{c.replications}\n")


def write_report_csv(path, report: EquivalenceReport) -> None:
    with open(path, "w") as fh:
        fh.write("theta_a,theta_b,stat,value,threshold,verdict\n")
        for p in report.pairs:
            a = format_theta(p.theta_a)
            b = format_theta(p.theta_b)
            for name, value, threshold in p.stats:
                fh.write(f"{a},{b},{name},{float(value)!r},{float(threshold)!r},{p.verdict}\n")
