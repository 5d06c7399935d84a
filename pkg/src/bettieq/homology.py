"""Persistent homology over the two-element field.

The reduction is the plain column algorithm: columns are processed in
filtration order and repeatedly XOR-ed with the earlier column owning their
pivot until they acquire a fresh pivot or vanish.  Pairs (i, j) give finite
intervals (value_i, value_j) in degree dim(i); unpaired creators give
infinite intervals.  Zero-length pairs are kept in the diagram but can never
satisfy birth <= r < death, so Betti queries exclude them automatically.

``brute_force_betti`` is an independent oracle: it computes ranks of the
boundary maps of the sub-complex at radius r by Gaussian elimination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidInput, OutOfRange, TooLarge
from .geom import Filtration

__all__ = [
    "PersistenceDiagram",
    "compute_persistence",
    "betti_at",
    "persistent_betti",
    "brute_force_betti",
    "write_diagram_csv",
]

INF = math.inf


@dataclass(frozen=True)
class PersistenceDiagram:
    """Birth/death intervals per homology degree, up to k_max."""

    intervals: dict[int, np.ndarray]   # degree -> (m, 2) array, death may be inf
    k_max: int
    r_max: float

    def degree(self, k: int) -> np.ndarray:
        if k < 0:
            raise InvalidInput("degree must be >= 0")
        if k > self.k_max:
            raise InvalidInput(f"degree {k} not computed (k_max={self.k_max})")
        return self.intervals.get(k, np.empty((0, 2)))


def _face_codes(verts: np.ndarray, width: int, n: int) -> np.ndarray:
    """Integer codes of vertex tuples (columns 0..width-1)."""
    if width > 1 and n ** width >= 2 ** 62:
        raise InvalidInput("too many vertices to index faces")
    code = verts[:, 0].astype(np.int64)
    for c in range(1, width):
        code = code * n + verts[:, c]
    return code


def _boundary_csr(filt: Filtration, dim_cap: int):
    """CSR boundary columns (face filtration indices, sorted) up to dim_cap."""
    keep = filt.dims <= dim_cap
    values = filt.values[keep]
    dims = filt.dims[keep].astype(np.int64)
    verts = filt.verts[keep].astype(np.int64)
    m = len(values)
    n = max(filt.n_vertices, 1)

    counts = np.where(dims >= 1, dims + 1, 0)
    col_ptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=col_ptr[1:])
    col_rows = np.empty(col_ptr[-1], dtype=np.int64)

    idx_all = np.arange(m, dtype=np.int64)
    for p in range(1, dim_cap + 1):
        rows_p = idx_all[dims == p]
        if rows_p.size == 0:
            continue
        rows_pm1 = idx_all[dims == p - 1]
        codes_pm1 = _face_codes(verts[rows_pm1], p, n)
        order = np.argsort(codes_pm1)
        codes_sorted = codes_pm1[order]
        fil_sorted = rows_pm1[order]

        vp = verts[rows_p, : p + 1]
        faces = np.empty((rows_p.size, p + 1), dtype=np.int64)
        cols = np.arange(p + 1)
        for drop in range(p + 1):
            sub = vp[:, cols[cols != drop]]
            fcodes = _face_codes(sub, p, n)
            loc = np.searchsorted(codes_sorted, fcodes)
            if np.any(loc >= codes_sorted.size) or np.any(codes_sorted[np.minimum(loc, codes_sorted.size - 1)] != fcodes):
                raise InvalidInput("face missing from filtration")
            faces[:, drop] = fil_sorted[loc]
        faces.sort(axis=1)
        for t, j in enumerate(rows_p):
            col_rows[col_ptr[j]:col_ptr[j + 1]] = faces[t]
    return col_ptr, col_rows, values, dims


@njit(cache=True)
def _reduce(col_ptr, col_rows, m):
    pivot_owner = np.full(m, -1, dtype=np.int64)
    stored_start = np.zeros(m, dtype=np.int64)
    stored_len = np.zeros(m, dtype=np.int64)
    pool = np.empty(max(64, col_rows.size * 2), dtype=np.int64)
    pool_len = 0
    buf = np.empty(m + 1, dtype=np.int64)
    tmp = np.empty(m + 1, dtype=np.int64)
    for j in range(m):
        blen = col_ptr[j + 1] - col_ptr[j]
        for t in range(blen):
            buf[t] = col_rows[col_ptr[j] + t]
        while blen > 0:
            piv = buf[blen - 1]
            owner = pivot_owner[piv]
            if owner == -1:
                pivot_owner[piv] = j
                if pool_len + blen > pool.size:
                    newcap = pool.size * 2
                    while newcap < pool_len + blen:
                        newcap *= 2
                    newpool = np.empty(newcap, dtype=np.int64)
                    newpool[:pool_len] = pool[:pool_len]
                    pool = newpool
                stored_start[j] = pool_len
                stored_len[j] = blen
                for t in range(blen):
                    pool[pool_len + t] = buf[t]
                pool_len += blen
                break
            o_start = stored_start[owner]
            o_len = stored_len[owner]
            a = 0
            b = 0
            k = 0
            while a < blen and b < o_len:
                u = buf[a]
                v = pool[o_start + b]
                if u == v:
                    a += 1
                    b += 1
                elif u < v:
                    tmp[k] = u
                    k += 1
                    a += 1
                else:
                    tmp[k] = v
                    k += 1
                    b += 1
            while a < blen:
                tmp[k] = buf[a]
                k += 1
                a += 1
            while b < o_len:
                tmp[k] = pool[o_start + b]
                k += 1
                b += 1
            for t in range(k):
                buf[t] = tmp[t]
            blen = k
    return pivot_owner, stored_len


def compute_persistence(filt: Filtration, k_max: int) -> PersistenceDiagram:
    """Reduce the boundary matrix and collect intervals for degrees <= k_max.

    Degree-``dim_max`` cycles have unresolvable deaths (no cofaces exist in a
    truncated filtration) and appear as infinite intervals.
    """
    if k_max < 0:
        raise InvalidInput("k_max must be >= 0")
    if k_max > filt.dim_max:
        raise InvalidInput(f"k_max={k_max} exceeds filtration dim_max={filt.dim_max}")
    # columns of dimension > k_max + 1 cannot influence degrees <= k_max
    dim_cap = min(filt.dim_max, k_max + 1)
    col_ptr, col_rows, values, dims = _boundary_csr(filt, dim_cap)
    m = len(values)
    pivot_owner, stored_len = _reduce(col_ptr, col_rows, m)

    per_degree: dict[int, list[tuple[float, float]]] = {k: [] for k in range(k_max + 1)}
    is_creator = stored_len == 0
    for i in np.nonzero(is_creator)[0]:
        k = int(dims[i])
        if k > k_max:
            continue
        j = pivot_owner[i]
        death = float(values[j]) if j >= 0 else INF
        per_degree[k].append((float(values[i]), death))
    intervals = {}
    for k in range(k_max + 1):
        arr = np.array(sorted(per_degree[k]), dtype=float).reshape(-1, 2)
        intervals[k] = arr
    return PersistenceDiagram(intervals, k_max, filt.r_max)


def betti_at(diagram: PersistenceDiagram, r: float, k: int) -> int:
    """Number of degree-k intervals alive at r (birth <= r < death)."""
    if r < 0.0:
        raise InvalidInput("radius must be >= 0")
    if r > diagram.r_max:
        raise OutOfRange(f"r={r} beyond truncation radius {diagram.r_max}")
    iv = diagram.degree(k)
    if iv.size == 0:
        return 0
    return int(np.count_nonzero((iv[:, 0] <= r) & (r < iv[:, 1])))


def persistent_betti(diagram: PersistenceDiagram, r: float, s: float, k: int) -> int:
    """Count degree-k cycles born at or before r that survive past s."""
    if r > s:
        raise InvalidInput("need r <= s")
    if r < 0.0:
        raise InvalidInput("radius must be >= 0")
    if s > diagram.r_max:
        raise OutOfRange(f"s={s} beyond truncation radius {diagram.r_max}")
    iv = diagram.degree(k)
    if iv.size == 0:
        return 0
    return int(np.count_nonzero((iv[:, 0] <= r) & (s < iv[:, 1])))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def _f2_rank(mat: np.ndarray) -> int:
    """Rank over the two-element field by row elimination."""
    if mat.size == 0:
        return 0
    m = mat.astype(np.uint8).copy()
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        sub = m[rank:, c]
        nz = np.nonzero(sub)[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
        hits = np.nonzero(m[rank + 1:, c])[0]
        if hits.size:
            m[rank + 1 + hits] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def brute_force_betti(filt: Filtration, r: float, k: int) -> int:
    """Betti number of the sub-complex at r via boundary-map ranks.

    Independent of the reduction path; intended for tests, with a 5000
    simplex cap.
    """
    if k < 0:
        raise InvalidInput("degree must be >= 0")
    keep = filt.values <= r
    total = int(np.count_nonzero(keep))
    if total > 5000:
        raise TooLarge(f"sub-complex has {total} simplices (cap 5000)")
    if total == 0 or k > filt.dim_max:
        return 0
    dims = filt.dims[keep].astype(int)
    verts = filt.verts[keep]

    def simplices_of(p):
        rows = verts[dims == p][:, : p + 1]
        return {tuple(int(v) for v in row): i for i, row in enumerate(rows)}

    sk = simplices_of(k)
    nk = len(sk)
    if nk == 0:
        return 0

    def boundary_rank(p, lower_index):
        upper = verts[dims == p][:, : p + 1]
        if len(upper) == 0 or not lower_index:
            return 0
        mat = np.zeros((len(lower_index), len(upper)), dtype=np.uint8)
        for j, row in enumerate(upper):
            tup = tuple(int(v) for v in row)
            for drop in range(p + 1):
                face = tup[:drop] + tup[drop + 1:]
                mat[lower_index[face], j] = 1
        return _f2_rank(mat)

    rank_k = 0 if k == 0 else boundary_rank(k, simplices_of(k - 1))
    rank_k1 = 0 if k + 1 > filt.dim_max else boundary_rank(k + 1, sk)
    return nk - rank_k - rank_k1


def write_diagram_csv(diagram: PersistenceDiagram, path) -> None:
    """Export as k,birth,death rows with an ``inf`` literal for open deaths."""
    with open(path, "w") as fh:
        fh.write("k,birth,death\n")
        for k in range(diagram.k_max + 1):
            for birth, death in diagram.degree(k):
                d = "inf" if math.isinf(death) else repr(float(death))
                fh.write(f"{k},{float(birth)!r},{d}\n")
