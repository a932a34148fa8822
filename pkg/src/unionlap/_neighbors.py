"""Fixed-radius neighbor search on a uniform grid, plus streaming pair sums.

The hot loops come in two flavours with identical arithmetic: numba kernels
(default) and a blocked numpy path (``UNIONLAP_DISABLE_NUMBA=1``). Squared
distances are accumulated coordinate by coordinate in both, so the closed
ball test ``|x - y|^2 <= r^2`` resolves ties the same way everywhere.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import _accel
from ._accel import njit

KERNEL_CODES = {"indicator": 0, "triangular": 1, "gauss": 2}


class CellGrid:
    """Points bucketed into cubic cells of side ``radius``."""

    def __init__(self, points: np.ndarray, radius: float):
        X = np.ascontiguousarray(points, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("need a nonempty (n, N) point array")
        self.points = X
        self.radius = float(radius)
        lo = X.min(axis=0)
        cells = np.floor((X - lo) / self.radius).astype(np.int64) + 1
        shape = cells.max(axis=0) + 2
        strides = np.ones(X.shape[1], dtype=np.int64)
        for c in range(X.shape[1] - 2, -1, -1):
            strides[c] = strides[c + 1] * shape[c + 1]
        if float(np.prod(shape.astype(float))) > 2.0**62:
            raise ValueError("grid too fine for 64-bit cell keys; increase the radius")
        self.keys = cells @ strides
        self.order = np.argsort(self.keys, kind="stable")
        sorted_keys = self.keys[self.order]
        self.ukeys, self.ustart, counts = np.unique(sorted_keys, return_index=True, return_counts=True)
        self.uend = self.ustart + counts
        offs = np.array(list(itertools.product((-1, 0, 1), repeat=X.shape[1])), dtype=np.int64)
        self.offsets = offs @ strides

    def cell_members(self, key_index: int) -> np.ndarray:
        return self.order[self.ustart[key_index] : self.uend[key_index]]


# --------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _sqdist(X, i, j):
    d2 = 0.0
    for c in range(X.shape[1]):
        diff = X[i, c] - X[j, c]
        d2 += diff * diff
    return d2


@njit(cache=True)
def _find(ukeys, key):
    pos = np.searchsorted(ukeys, key)
    if pos < ukeys.size and ukeys[pos] == key:
        return pos
    return -1


@njit(cache=True)
def _radius_csr_nb(X, r2, keys, order, ukeys, ustart, uend, offsets):
    n = X.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for o in offsets:
            p = _find(ukeys, keys[i] + o)
            if p < 0:
                continue
            for t in range(ustart[p], uend[p]):
                j = order[t]
                if _sqdist(X, i, j) <= r2:
                    counts[i] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + counts[i]
    indices = np.empty(indptr[n], dtype=np.int64)
    d2s = np.empty(indptr[n], dtype=np.float64)
    for i in range(n):
        pos = indptr[i]
        for o in offsets:
            p = _find(ukeys, keys[i] + o)
            if p < 0:
                continue
            for t in range(ustart[p], uend[p]):
                j = order[t]
                d2 = _sqdist(X, i, j)
                if d2 <= r2:
                    indices[pos] = j
                    d2s[pos] = d2
                    pos += 1
        a, b = indptr[i], indptr[i + 1]
        perm = np.argsort(indices[a:b])
        indices[a:b] = indices[a:b][perm]
        d2s[a:b] = d2s[a:b][perm]
    return indptr, indices, d2s


@njit(cache=True)
def _eta_nb(code, param, t):
    if t > 1.0:
        return 0.0
    if code == 0:
        return 1.0
    if code == 1:
        return 1.0 - t
    return np.exp(-0.5 * (param * t) ** 2)


@njit(cache=True)
def _conv_nb(X, w, radius, code, param, keys, order, ukeys, ustart, uend, offsets):
    n = X.shape[0]
    r2 = radius * radius
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for o in offsets:
            p = _find(ukeys, keys[i] + o)
            if p < 0:
                continue
            for t in range(ustart[p], uend[p]):
                j = order[t]
                d2 = _sqdist(X, i, j)
                if d2 <= r2:
                    acc += w[j] * _eta_nb(code, param, np.sqrt(d2) / radius)
        out[i] = acc
    return out


@njit(cache=True)
def _energy_nb(X, w, f, rows, radius, code, param, keys, order, ukeys, ustart, uend, offsets):
    r2 = radius * radius
    total = 0.0
    for i in rows:
        acc = 0.0
        for o in offsets:
            p = _find(ukeys, keys[i] + o)
            if p < 0:
                continue
            for t in range(ustart[p], uend[p]):
                j = order[t]
                diff = f[i] - f[j]
                if diff == 0.0:
                    continue
                d2 = _sqdist(X, i, j)
                if d2 <= r2:
                    acc += w[j] * _eta_nb(code, param, np.sqrt(d2) / radius) * diff * diff
        total += w[i] * acc
    return total


# --------------------------------------------------------------------------
# numpy path


def _pair_blocks(grid: CellGrid, r2: float, block: int = 16384, rows_subset=None):
    """Yield ``(i, j, d2)`` for all pairs within the radius, rows in blocks."""
    X = grid.points
    all_rows = np.arange(X.shape[0]) if rows_subset is None else np.asarray(rows_subset)
    n = all_rows.size
    for lo in range(0, n, block):
        rows = all_rows[lo : lo + block]
        ii, jj, dd = [], [], []
        for o in grid.offsets:
            target = grid.keys[rows] + o
            pos = np.searchsorted(grid.ukeys, target)
            pos_c = np.minimum(pos, grid.ukeys.size - 1)
            hit = grid.ukeys[pos_c] == target
            if not np.any(hit):
                continue
            r = rows[hit]
            start = grid.ustart[pos_c[hit]]
            cnt = grid.uend[pos_c[hit]] - start
            total = int(cnt.sum())
            if total == 0:
                continue
            i = np.repeat(r, cnt)
            # flat positions start_k, start_k + 1, ..., start_k + cnt_k - 1
            first = np.repeat(np.cumsum(cnt) - cnt, cnt)
            t = np.repeat(start, cnt) + (np.arange(total) - first)
            j = grid.order[t]
            d2 = np.zeros(total)
            for c in range(X.shape[1]):
                diff = X[i, c] - X[j, c]
                d2 += diff * diff
            keep = d2 <= r2
            ii.append(i[keep])
            jj.append(j[keep])
            dd.append(d2[keep])
        if ii:
            yield np.concatenate(ii), np.concatenate(jj), np.concatenate(dd)


def _radius_csr_np(grid: CellGrid, r2: float):
    n = grid.points.shape[0]
    parts = list(_pair_blocks(grid, r2))
    i = np.concatenate([p[0] for p in parts])
    j = np.concatenate([p[1] for p in parts])
    d2 = np.concatenate([p[2] for p in parts])
    perm = np.lexsort((j, i))
    i, j, d2 = i[perm], j[perm], d2[perm]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(i, minlength=n), out=indptr[1:])
    return indptr, j.astype(np.int64), d2


def active_rows(grid: CellGrid, f: np.ndarray) -> np.ndarray:
    """Rows whose neighborhood (own and adjacent cells) is not one constant value.

    Pairs starting at any other row have ``f_i == f_j`` and contribute nothing.
    """
    fs = f[grid.order]
    cmin = np.minimum.reduceat(fs, grid.ustart)
    cmax = np.maximum.reduceat(fs, grid.ustart)
    const = cmin == cmax
    quiet = const.copy()
    for o in grid.offsets:
        target = grid.ukeys + o
        pos = np.searchsorted(grid.ukeys, target)
        pos_c = np.minimum(pos, grid.ukeys.size - 1)
        exists = grid.ukeys[pos_c] == target
        same = const[pos_c] & (cmin[pos_c] == cmin)
        quiet &= ~exists | same
    cell_of_sorted = np.repeat(np.arange(grid.ukeys.size), grid.uend - grid.ustart)
    cell = np.empty_like(cell_of_sorted)
    cell[grid.order] = cell_of_sorted
    return np.flatnonzero(~quiet[cell])


def _eta_np(code, param, t):
    if code == 0:
        return np.where(t <= 1.0, 1.0, 0.0)
    if code == 1:
        return np.where(t <= 1.0, 1.0 - t, 0.0)
    return np.where(t <= 1.0, np.exp(-0.5 * (param * t) ** 2), 0.0)


# --------------------------------------------------------------------------
# public entry points


def radius_neighbors(points, radius: float, use_numba: bool | None = None):
    """CSR neighbor structure of the closed ``radius`` ball, self included.

    Returns ``(indptr, indices, sqdist)`` with column indices ascending in
    every row.
    """
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    grid = CellGrid(points, radius)
    r2 = grid.radius**2
    if use_numba:
        return _radius_csr_nb(grid.points, r2, grid.keys, grid.order, grid.ukeys, grid.ustart, grid.uend, grid.offsets)
    return _radius_csr_np(grid, r2)


def brute_neighbors(points, radius: float):
    """All-pairs reference for :func:`radius_neighbors` (quadratic memory)."""
    X = np.ascontiguousarray(points, dtype=float)
    n = X.shape[0]
    d2 = np.zeros((n, n))
    for c in range(X.shape[1]):
        diff = X[:, None, c] - X[None, :, c]
        d2 += diff * diff
    mask = d2 <= radius**2
    i, j = np.nonzero(mask)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(mask.sum(axis=1), out=indptr[1:])
    return indptr, j.astype(np.int64), d2[i, j]


def weighted_convolution(points, weights, radius, code, param=0.0, use_numba=None):
    """``c_i = sum_j w_j eta(|x_i - x_j| / radius)`` over the closed ball."""
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    grid = CellGrid(points, radius)
    w = np.ascontiguousarray(weights, dtype=float)
    if use_numba:
        return _conv_nb(grid.points, w, grid.radius, code, float(param), grid.keys, grid.order,
                        grid.ukeys, grid.ustart, grid.uend, grid.offsets)
    out = np.zeros(grid.points.shape[0])
    for i, j, d2 in _pair_blocks(grid, grid.radius**2):
        out += np.bincount(i, weights=w[j] * _eta_np(code, param, np.sqrt(d2) / grid.radius),
                           minlength=out.size)
    return out


def weighted_pair_energy(points, weights, values, radius, code, param=0.0, use_numba=None):
    """``sum_{i,j} w_i w_j eta(|x_i - x_j| / radius) (f_i - f_j)^2``.

    Rows inside regions where ``f`` is locally constant are skipped.
    """
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    grid = CellGrid(points, radius)
    w = np.ascontiguousarray(weights, dtype=float)
    f = np.ascontiguousarray(values, dtype=float)
    rows = active_rows(grid, f)
    if use_numba:
        return float(_energy_nb(grid.points, w, f, rows, grid.radius, code, float(param), grid.keys,
                                grid.order, grid.ukeys, grid.ustart, grid.uend, grid.offsets))
    total = 0.0
    for i, j, d2 in _pair_blocks(grid, grid.radius**2, rows_subset=rows):
        diff = f[i] - f[j]
        total += float(np.sum(w[i] * w[j] * _eta_np(code, param, np.sqrt(d2) / grid.radius) * diff * diff))
    return total
