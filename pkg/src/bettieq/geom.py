"""Point clouds, metrics, minimal enclosing balls, and truncated filtrations.

A filtration is stored columnar (values, dimensions, padded vertex rows) in
the canonical order (value, dimension, lexicographic vertices), which makes
faces precede cofaces and keeps construction bit-reproducible.  Complexes are
truncated at ``r_max``: a simplex enters the Cech complex when the minimal
enclosing ball of its vertices has radius <= r_max, and the Rips complex when
half its diameter does, so both share one radius axis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import BudgetExceeded, InvalidInput, UnsupportedMetric

__all__ = [
    "Euclidean",
    "FlatTorus",
    "PointCloud",
    "Simplex",
    "Filtration",
    "min_enclosing_ball_radius",
    "build_cech_filtration",
    "build_rips_filtration",
    "write_cloud_csv",
    "read_cloud_csv",
]


# ---------------------------------------------------------------------------
# metrics and point clouds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Euclidean:
    def pairwise_sq(self, pts: np.ndarray) -> np.ndarray:
        diff = pts[:, None, :] - pts[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True)
class FlatTorus:
    """Flat torus with the given period per axis (scalar broadcasts)."""

    periods: tuple[float, ...] | float

    def pairwise_sq(self, pts: np.ndarray) -> np.ndarray:
        per = np.asarray(self.periods, dtype=float)
        diff = np.abs(pts[:, None, :] - pts[None, :, :])
        diff = np.minimum(diff, per - diff)
        return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True)
class PointCloud:
    """Ordered points in R^D or on a flat torus."""

    points: np.ndarray
    metric: Euclidean | FlatTorus = field(default_factory=Euclidean)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidInput("points must be a (n, D) array with D >= 1")
        object.__setattr__(self, "points", pts)
        if isinstance(self.metric, FlatTorus):
            per = self.metric.periods
            if np.isscalar(per):
                per = (float(per),) * pts.shape[1]
            per = tuple(float(p) for p in per)
            if len(per) != pts.shape[1]:
                raise InvalidInput("one period per axis required")
            if np.any(pts < 0.0) or np.any(pts >= np.asarray(per)):
                raise InvalidInput("torus coordinates must lie in [0, period)")
            object.__setattr__(self, "metric", FlatTorus(per))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def write_cloud_csv(cloud: PointCloud, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i}" for i in range(cloud.dim)) + "\n")
        for row in cloud.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_cloud_csv(path, metric: Euclidean | FlatTorus | None = None) -> PointCloud:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("x0"):
            raise InvalidInput(f"unexpected point-cloud header: {header!r}")
        pts = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return PointCloud(np.asarray(pts, dtype=float), metric or Euclidean())


# ---------------------------------------------------------------------------
# minimal enclosing balls
# ---------------------------------------------------------------------------

_CONTAIN_SLACK = 1.0 + 1e-12


def _ball_of_boundary(pts: np.ndarray):
    """Smallest ball with all of ``pts`` on its boundary, or None if the
    support set is affinely degenerate."""
    a0 = pts[0]
    if len(pts) == 1:
        return a0, 0.0
    q = pts[1:] - a0
    gram = 2.0 * q @ q.T
    rhs = np.einsum("ij,ij->i", q, q)
    try:
        lam = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return None
    center = a0 + lam @ q
    r2 = float(np.dot(center - a0, center - a0))
    d2 = np.einsum("ij,ij->i", pts - center, pts - center)
    if np.any(np.abs(d2 - r2) > 1e-9 * max(1.0, r2)):
        return None
    return center, r2


def _contains(ball, p) -> bool:
    if ball is None:
        return False
    center, r2 = ball
    return float(np.dot(p - center, p - center)) <= r2 * _CONTAIN_SLACK + 1e-300


def _welzl(order: list[np.ndarray], boundary: list[np.ndarray], dim: int):
    if not order or len(boundary) == dim + 1:
        if not boundary:
            return None
        return _ball_of_boundary(np.asarray(boundary))
    p = order[0]
    ball = _welzl(order[1:], boundary, dim)
    if ball is not None and _contains(ball, p):
        return ball
    return _welzl(order[1:], boundary + [p], dim)


def _meb_enumerate(pts: np.ndarray):
    """Exact fallback: try every candidate support subset."""
    m, dim = pts.shape
    best = None
    for size in range(1, min(dim + 1, m) + 1):
        for combo in itertools.combinations(range(m), size):
            ball = _ball_of_boundary(pts[list(combo)])
            if ball is None:
                continue
            center, r2 = ball
            d2 = np.einsum("ij,ij->i", pts - center, pts - center)
            if np.all(d2 <= r2 * _CONTAIN_SLACK + 1e-300):
                if best is None or r2 < best[1]:
                    best = (center, r2)
    return best


def min_enclosing_ball_radius(points) -> float:
    """Radius of the smallest ball containing all points (Euclidean).

    Exact for one or two points; within 1e-12 relative error otherwise.
    Welzl-style move-to-front recursion, with an exhaustive support-set
    fallback for degenerate configurations.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise InvalidInput("minimal enclosing ball of an empty set")
    m = pts.shape[0]
    if m == 1:
        return 0.0
    if m == 2:
        return 0.5 * float(np.linalg.norm(pts[0] - pts[1]))
    uniq = np.unique(pts, axis=0)
    if len(uniq) == 1:
        return 0.0
    ball = _welzl(list(uniq), [], pts.shape[1])
    if ball is not None:
        center, r2 = ball
        d2 = np.einsum("ij,ij->i", uniq - center, uniq - center)
        if not np.all(d2 <= r2 * (1.0 + 1e-9) + 1e-300):
            ball = None
    if ball is None:
        ball = _meb_enumerate(uniq)
    if ball is None:
        raise InvalidInput("could not determine minimal enclosing ball")
    return float(np.sqrt(ball[1]))


def _triangle_meb_sq(pts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Squared MEB radii for triangles, vectorized."""
    a = pts[tris[:, 0]]
    b = pts[tris[:, 1]]
    c = pts[tris[:, 2]]
    d2ab = np.einsum("ij,ij->i", a - b, a - b)
    d2ac = np.einsum("ij,ij->i", a - c, a - c)
    d2bc = np.einsum("ij,ij->i", b - c, b - c)
    stack = np.stack([d2ab, d2ac, d2bc])
    longest = stack.max(axis=0)
    total = stack.sum(axis=0)
    # obtuse or right: half the longest edge already covers the triangle
    obtuse = longest >= total - longest
    sixteen_a2 = np.maximum(
        2.0 * (d2ab * d2ac + d2ac * d2bc + d2bc * d2ab) - (d2ab**2 + d2ac**2 + d2bc**2),
        1e-300,
    )
    # clamp so a near-right acute triangle can never dip below its edge values
    circum2 = np.maximum(d2ab * d2ac * d2bc / sixteen_a2, 0.25 * longest)
    return np.where(obtuse, 0.25 * longest, circum2)


# ---------------------------------------------------------------------------
# filtration container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Simplex:
    vertices: tuple[int, ...]
    value: float

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if any(b <= a for a, b in zip(verts, verts[1:])):
            raise InvalidInput(f"vertices must be strictly increasing: {verts}")
        if self.value < 0.0:
            raise InvalidInput("filtration value must be >= 0")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "value", float(self.value))

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class Filtration:
    """Simplices sorted by (value, dimension, lexicographic vertices)."""

    values: np.ndarray          # (m,) float64
    dims: np.ndarray            # (m,) int8
    verts: np.ndarray           # (m, dim_max + 1) int32, padded with -1
    dim_max: int
    r_max: float
    n_vertices: int

    def __len__(self) -> int:
        return len(self.values)

    def simplex(self, i: int) -> Simplex:
        d = int(self.dims[i])
        return Simplex(tuple(int(v) for v in self.verts[i, : d + 1]), float(self.values[i]))

    @property
    def simplices(self) -> list[Simplex]:
        return [self.simplex(i) for i in range(len(self))]

    @staticmethod
    def from_simplices(simplices, dim_max: int, r_max: float) -> "Filtration":
        """Canonicalize and validate a list of Simplex objects."""
        simplices = sorted(simplices, key=lambda s: (s.value, s.dim, s.vertices))
        m = len(simplices)
        verts = np.full((m, dim_max + 1), -1, dtype=np.int32)
        values = np.empty(m)
        dims = np.empty(m, dtype=np.int8)
        seen: dict[tuple[int, ...], float] = {}
        n_vertices = 0
        for i, s in enumerate(simplices):
            if s.dim > dim_max:
                raise InvalidInput(f"simplex dimension {s.dim} exceeds dim_max={dim_max}")
            if s.value > r_max:
                raise InvalidInput(f"simplex value {s.value} exceeds r_max={r_max}")
            if s.dim > 0:
                for face in itertools.combinations(s.vertices, s.dim):
                    if face not in seen:
                        raise InvalidInput(f"face {face} missing or later than {s.vertices}")
                    if seen[face] > s.value:
                        raise InvalidInput(f"monotonicity violated at {s.vertices}")
            seen[s.vertices] = s.value
            values[i] = s.value
            dims[i] = s.dim
            verts[i, : s.dim + 1] = s.vertices
            n_vertices = max(n_vertices, s.vertices[-1] + 1)
        return Filtration(values, dims, verts, dim_max, float(r_max), n_vertices)

    def restricted(self, r: float) -> "Filtration":
        """Prefix of the filtration with value <= r."""
        keep = self.values <= r
        return Filtration(self.values[keep], self.dims[keep], self.verts[keep],
                          self.dim_max, float(r), self.n_vertices)

    def counts_at(self, r: float) -> np.ndarray:
        """Number of simplices of each dimension with value <= r."""
        out = np.zeros(self.dim_max + 1, dtype=np.int64)
        kept = self.dims[self.values <= r]
        for d in range(self.dim_max + 1):
            out[d] = int(np.count_nonzero(kept == d))
        return out

    def dump_csv(self, path) -> None:
        """Debug dump, one row per simplex: value,dim,v0,v1,..."""
        with open(path, "w") as fh:
            for i in range(len(self)):
                d = int(self.dims[i])
                vs = ",".join(str(int(v)) for v in self.verts[i, : d + 1])
                fh.write(f"{float(self.values[i])!r},{d},{vs}\n")


# ---------------------------------------------------------------------------
# complex construction
# ---------------------------------------------------------------------------

@njit(cache=True)
def _count_triangles(indptr, indices, edges):
    total = 0
    for e in range(edges.shape[0]):
        i, j = edges[e, 0], edges[e, 1]
        ai, bi = indptr[i], indptr[i + 1]
        aj, bj = indptr[j], indptr[j + 1]
        while ai < bi and aj < bj:
            u, v = indices[ai], indices[aj]
            if u == v:
                if u > j:
                    total += 1
                ai += 1
                aj += 1
            elif u < v:
                ai += 1
            else:
                aj += 1
    return total


@njit(cache=True)
def _fill_triangles(indptr, indices, edges, out):
    k = 0
    for e in range(edges.shape[0]):
        i, j = edges[e, 0], edges[e, 1]
        ai, bi = indptr[i], indptr[i + 1]
        aj, bj = indptr[j], indptr[j + 1]
        while ai < bi and aj < bj:
            u, v = indices[ai], indices[aj]
            if u == v:
                if u > j:
                    out[k, 0] = i
                    out[k, 1] = j
                    out[k, 2] = u
                    k += 1
                ai += 1
                aj += 1
            elif u < v:
                ai += 1
            else:
                aj += 1
    return k


def _adjacency_csr(n: int, edges: np.ndarray):
    deg = np.zeros(n, dtype=np.int64)
    for col in (0, 1):
        np.add.at(deg, edges[:, col], 1)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    pos = indptr[:-1].copy()
    for i, j in edges:
        indices[pos[i]] = j
        pos[i] += 1
        indices[pos[j]] = i
        pos[j] += 1
    for i in range(n):
        indices[indptr[i]:indptr[i + 1]].sort()
    return indptr, indices


def _expand_cliques(prev: np.ndarray, indptr, indices):
    """Candidate (p+1)-simplices: cliques extending each p-simplex upward."""
    if prev.shape[0] == 0:
        return np.empty((0, prev.shape[1] + 1), dtype=np.int64)
    if prev.shape[1] == 2:
        t = _count_triangles(indptr, indices, prev)
        out = np.empty((t, 3), dtype=np.int64)
        _fill_triangles(indptr, indices, prev, out)
        return out
    rows = []
    for row in prev:
        cand = indices[indptr[row[0]]:indptr[row[0] + 1]]
        for v in row[1:]:
            cand = np.intersect1d(cand, indices[indptr[v]:indptr[v + 1]], assume_unique=True)
            if cand.size == 0:
                break
        else:
            for u in cand[cand > row[-1]]:
                rows.append(np.append(row, u))
    if not rows:
        return np.empty((0, prev.shape[1] + 1), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def _sort_dim_block(simplices: np.ndarray, values: np.ndarray):
    keys = tuple(simplices[:, c] for c in range(simplices.shape[1] - 1, -1, -1))
    order = np.lexsort(keys + (values,))
    return simplices[order], values[order]


def _assemble(n: int, blocks, dim_max: int, r_max: float) -> Filtration:
    """Stack per-dimension blocks (already sorted) into canonical global order."""
    total = sum(len(v) for _, v in blocks)
    values = np.empty(total)
    dims = np.empty(total, dtype=np.int8)
    verts = np.full((total, dim_max + 1), -1, dtype=np.int32)
    pos = 0
    for d, (simp, vals) in enumerate(blocks):
        m = len(vals)
        values[pos:pos + m] = vals
        dims[pos:pos + m] = d
        if m:
            verts[pos:pos + m, : d + 1] = simp
        pos += m
    order = np.argsort(values, kind="stable")
    return Filtration(values[order], dims[order], verts[order], dim_max, float(r_max), n)


def _check_budget(count: int, max_simplices: int | None, what: str):
    if max_simplices is not None and count > max_simplices:
        raise BudgetExceeded(f"{what}: {count} simplices exceeds budget {max_simplices}")


def _graph_blocks(cloud: PointCloud, r_max: float):
    """Edges with value d/2 <= r_max, plus the squared-distance matrix."""
    n = cloud.n
    sq = cloud.metric.pairwise_sq(cloud.points)
    iu, ju = np.triu_indices(n, k=1)
    half = 0.5 * np.sqrt(sq[iu, ju])
    keep = half <= r_max
    edges = np.column_stack([iu[keep], ju[keep]]).astype(np.int64)
    return edges, half[keep], sq


def _clamp_to_faces(cand: np.ndarray, vals: np.ndarray, face_map: dict):
    """Raise each value to the max of its faces' values (a mathematical no-op
    that enforces monotone ordering against cross-algorithm rounding); drop
    candidates with a truncated-away face."""
    keep = np.ones(len(cand), dtype=bool)
    for idx, row in enumerate(cand):
        tup = tuple(int(v) for v in row)
        worst = vals[idx]
        for drop in range(len(tup)):
            fv = face_map.get(tup[:drop] + tup[drop + 1:])
            if fv is None:
                keep[idx] = False
                break
            if fv > worst:
                worst = fv
        vals[idx] = worst
    return cand[keep], vals[keep]


def _build_filtration(cloud: PointCloud, r_max: float, dim_max: int,
                      max_simplices: int | None, value_fn) -> Filtration:
    n = cloud.n
    blocks = [(np.arange(n, dtype=np.int64)[:, None], np.zeros(n))]
    if dim_max >= 1:
        edges, edge_vals, sq = _graph_blocks(cloud, r_max)
        count = n + len(edges)
        _check_budget(count, max_simplices, "dim 1")
        blocks.append(_sort_dim_block(edges, edge_vals))
        indptr, indices = _adjacency_csr(n, edges)
        prev = edges
        prev_vals = edge_vals
        for d in range(2, dim_max + 1):
            cand = _expand_cliques(prev, indptr, indices)
            count += len(cand)
            _check_budget(count, max_simplices, f"dim {d}")
            if len(cand) == 0:
                break
            vals = value_fn(cand, d, sq)
            if d >= 3:
                face_map = {tuple(int(v) for v in row): val
                            for row, val in zip(prev, prev_vals)}
                cand, vals = _clamp_to_faces(cand, vals, face_map)
            keep = vals <= r_max
            prev = cand[keep]
            prev_vals = vals[keep]
            if len(prev) == 0:
                break
            blocks.append(_sort_dim_block(prev, prev_vals))
    return _assemble(n, blocks, dim_max, r_max)


def build_rips_filtration(cloud: PointCloud, r_max: float, dim_max: int,
                          max_simplices: int | None = None) -> Filtration:
    """Vietoris-Rips filtration; edge value = d(i, j)/2, cofaces take the max."""
    if dim_max < 0 or r_max <= 0.0:
        raise InvalidInput("need dim_max >= 0 and r_max > 0")

    def rips_value(prev, d, sq):
        vals = np.zeros(len(prev))
        for a in range(d + 1):
            for b in range(a + 1, d + 1):
                np.maximum(vals, 0.5 * np.sqrt(sq[prev[:, a], prev[:, b]]), out=vals)
        return vals

    return _build_filtration(cloud, r_max, dim_max, max_simplices, rips_value)


def build_cech_filtration(cloud: PointCloud, r_max: float, dim_max: int,
                          max_simplices: int | None = None) -> Filtration:
    """Cech filtration: simplex value = minimal enclosing ball radius.

    Expansion is edge-first: only cliques of the r_max neighborhood graph are
    tested; cliques whose enclosing ball exceeds r_max are discarded.
    """
    if not isinstance(cloud.metric, Euclidean):
        raise UnsupportedMetric("Cech complexes need ambient Euclidean balls; use Rips")
    if dim_max < 0 or r_max <= 0.0:
        raise InvalidInput("need dim_max >= 0 and r_max > 0")
    pts = cloud.points

    def cech_value(prev, d, sq):
        if d == 2:
            return np.sqrt(_triangle_meb_sq(pts, prev))
        return np.array([min_enclosing_ball_radius(pts[row]) for row in prev])

    return _build_filtration(cloud, r_max, dim_max, max_simplices, cech_value)
