"""Shared independent oracles for the test suite.

These deliberately re-derive results through different algorithms than the
library: grid minimization for enclosing balls, union-find for components,
and rank formulas for persistent Betti numbers.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest


def grid_meb_radius(points: np.ndarray, sweeps: int = 40) -> float:
    """Minimal enclosing ball radius by iterated grid refinement of the
    center (minimize the max distance)."""
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = 0.5 * (lo + hi)
    span = float(np.max(hi - lo)) + 1e-9
    best = center
    for _ in range(sweeps):
        offsets = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=pts.shape[1])))
        cands = best + span * offsets
        rad = np.sqrt(((cands[:, None, :] - pts[None, :, :]) ** 2).sum(-1)).max(axis=1)
        best = cands[int(np.argmin(rad))]
        span *= 0.55
    return float(np.sqrt(((best - pts) ** 2).sum(-1)).max())


def subset_meb_radius(points: np.ndarray) -> float:
    """Exact enclosing-ball radius by enumerating candidate support subsets
    (circumscribed balls of every subset of size <= D + 1)."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    m, d = pts.shape
    if m == 1:
        return 0.0
    best = None
    for size in range(1, min(d + 1, m) + 1):
        for combo in itertools.combinations(range(m), size):
            sub = pts[list(combo)]
            a0 = sub[0]
            if size == 1:
                center, r2 = a0, 0.0
            else:
                q = sub[1:] - a0
                gram = 2.0 * q @ q.T
                rhs = np.einsum("ij,ij->i", q, q)
                try:
                    lam = np.linalg.solve(gram, rhs)
                except np.linalg.LinAlgError:
                    continue
                center = a0 + lam @ q
                r2 = float(((center - a0) ** 2).sum())
                if np.any(np.abs(np.einsum("ij,ij->i", sub - center, sub - center) - r2)
                          > 1e-9 * max(1.0, r2)):
                    continue
            d2 = np.einsum("ij,ij->i", pts - center, pts - center)
            if np.all(d2 <= r2 * (1.0 + 1e-10) + 1e-300):
                if best is None or r2 < best:
                    best = r2
    assert best is not None
    return float(np.sqrt(best))


def union_find_components(n: int, edges) -> int:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[ri] = rj
    return len({find(v) for v in range(n)})


def f2_rank_ref(mat: np.ndarray) -> int:
    """Plain row-echelon rank over GF(2), independent of the library."""
    m = [int("".join(str(int(v)) for v in row), 2) if len(row) else 0
         for row in np.asarray(mat, dtype=int)]
    rank = 0
    for col in range(np.asarray(mat).shape[1] if np.asarray(mat).size else 0):
        bit = 1 << (np.asarray(mat).shape[1] - 1 - col)
        piv = next((i for i in range(rank, len(m)) if m[i] & bit), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and (m[i] & bit):
                m[i] ^= m[rank]
        rank += 1
    return rank


def persistent_betti_rank_oracle(filt, r: float, s: float, k: int) -> int:
    """Rank of the inclusion H_k(K_r) -> H_k(K_s) from scratch:
    dim Z_k(K_r) - dim(Z_k(K_r) cap B_k(K_s))."""
    keep_r = filt.values <= r
    keep_s = filt.values <= s
    dims = filt.dims.astype(int)
    verts = filt.verts

    def simplex_list(mask, p):
        sel = mask & (dims == p)
        return [tuple(int(v) for v in row[: p + 1]) for row in verts[sel]]

    k_s = simplex_list(keep_s, k)
    index_s = {t: i for i, t in enumerate(k_s)}
    k_r = simplex_list(keep_r, k)
    if not k_r:
        return 0

    def boundary(upper, lower_index):
        mat = np.zeros((len(lower_index), len(upper)), dtype=int)
        for j, tup in enumerate(upper):
            for drop in range(len(tup)):
                face = tup[:drop] + tup[drop + 1:]
                mat[lower_index[face], j] = 1
        return mat

    km1_r = simplex_list(keep_r, k - 1) if k > 0 else []
    index_km1_r = {t: i for i, t in enumerate(km1_r)}
    if k == 0:
        z_dim = len(k_r)
        null_basis = np.eye(len(k_r), dtype=int)
    else:
        d_k = boundary(k_r, index_km1_r) if km1_r else np.zeros((0, len(k_r)), dtype=int)
        null_basis = _f2_null_space(d_k)
        z_dim = null_basis.shape[1]
    if z_dim == 0:
        return 0
    # embed the r-cycles into the s-chain space
    emb = np.zeros((len(k_s), z_dim), dtype=int)
    for local, tup in enumerate(k_r):
        emb[index_s[tup]] = null_basis[local]
    kp1_s = simplex_list(keep_s, k + 1) if k + 1 <= filt.dim_max else []
    if kp1_s:
        b_mat = boundary(kp1_s, index_s)
    else:
        b_mat = np.zeros((len(k_s), 0), dtype=int)
    dim_b = f2_rank_ref(b_mat.T) if b_mat.size else 0
    joint = np.concatenate([emb, b_mat], axis=1)
    dim_sum = f2_rank_ref(joint.T) if joint.size else 0
    # dim(Z cap B) = dim Z + dim B - dim(Z + B)
    return z_dim - (z_dim + dim_b - dim_sum)


def _f2_null_space(mat: np.ndarray) -> np.ndarray:
    """Basis of the GF(2) null space as columns."""
    m = np.asarray(mat, dtype=int).copy() % 2
    rows, cols = m.shape
    pivot_col_of_row = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i, c]), None)
        if piv is None:
            continue
        m[[r, piv]] = m[[piv, r]]
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        pivot_col_of_row.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivot_col_of_row]
    basis = np.zeros((cols, len(free)), dtype=int)
    for idx, fc in enumerate(free):
        basis[fc, idx] = 1
        for row, pc in enumerate(pivot_col_of_row):
            if m[row, fc]:
                basis[pc, idx] = 1
    return basis


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
