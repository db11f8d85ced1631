"""Minimal CSR sparse algebra and a dense symmetric eigensolver.

Everything is 64-bit floats. Products use a fixed summation order
(ascending column index within each row) so repeated runs are
bit-identical. The eigensolver is a verification oracle for small
matrices, not a general-purpose routine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConvergenceError",
    "SparseMatrix",
    "spmv",
    "spmm_dense",
    "dense_sym_eig",
]

EIG_SIZE_CAP = 512


class ConvergenceError(RuntimeError):
    """Iterative routine failed to reach its tolerance."""


def _as_float_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class SparseMatrix:
    """Compressed sparse row matrix of 64-bit floats.

    ``row_starts`` has length ``rows + 1``; ``col_indices`` are strictly
    ascending within each row (no duplicates). Instances are immutable:
    the backing arrays are marked read-only at construction.
    """

    rows: int
    cols: int
    row_starts: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rs = np.ascontiguousarray(self.row_starts, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimensions")
        if rs.shape != (self.rows + 1,):
            raise ValueError("row_starts must have length rows + 1")
        if rs[0] != 0 or rs[-1] != len(vals) or len(ci) != len(vals):
            raise ValueError("row_starts endpoints inconsistent with data")
        if np.any(np.diff(rs) < 0):
            raise ValueError("row_starts must be non-decreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.cols):
            raise ValueError("column index out of range")
        # strictly ascending columns inside every row <=> no duplicates
        if len(ci) > 1:
            row_breaks = np.zeros(len(ci), dtype=bool)
            breaks = rs[1:-1]
            row_breaks[breaks[breaks < len(ci)]] = True
            if np.any((np.diff(ci) <= 0) & ~row_breaks[1:]):
                raise ValueError("columns must be strictly ascending within a row")
        for arr in (rs, ci, vals):
            arr.flags.writeable = False
        object.__setattr__(self, "row_starts", rs)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", vals)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @classmethod
    def from_coo(cls, rows, cols, r, c, v) -> "SparseMatrix":
        """Build from coordinate triplets; duplicate entries are summed."""
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        if not (len(r) == len(c) == len(v)):
            raise ValueError("coordinate arrays must have equal length")
        if len(r):
            if r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols:
                raise ValueError("coordinate out of range")
            order = np.lexsort((c, r))
            r, c, v = r[order], c[order], v[order]
            key = r * cols + c
            uniq, first = np.unique(key, return_index=True)
            vals = np.bincount(
                np.searchsorted(uniq, key), weights=v, minlength=len(uniq)
            )
            r, c, v = r[first], c[first], vals
        row_starts = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=rows), out=row_starts[1:])
        return cls(rows, cols, row_starts, c, v)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = _as_float_matrix(a)
        r, c = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], r, c, a[r, c])

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseMatrix":
        empty = np.zeros(0, dtype=np.int64)
        return cls(rows, cols, np.zeros(rows + 1, dtype=np.int64), empty, np.zeros(0))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self._row_ids(), self.col_indices] = self.values
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_coo(
            self.cols, self.rows, self.col_indices, self._row_ids(), self.values
        )

    def _row_ids(self) -> np.ndarray:
        return np.repeat(
            np.arange(self.rows, dtype=np.int64), np.diff(self.row_starts)
        )


def spmv(m: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """CSR matrix-vector product with ascending-column summation order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (m.cols,):
        raise ValueError(f"vector length {x.shape} incompatible with {m.shape}")
    if m.nnz == 0:
        return np.zeros(m.rows)
    products = m.values * x[m.col_indices]
    # bincount accumulates in input order = ascending column within each row
    return np.bincount(m._row_ids(), weights=products, minlength=m.rows)


def spmm_dense(m: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """CSR times dense block: columnwise spmv, same deterministic order."""
    x = _as_float_matrix(x)
    if m.cols != x.shape[0]:
        raise ValueError(f"shapes {m.shape} and {x.shape} do not align")
    d = x.shape[1]
    if m.nnz == 0 or d == 0:
        return np.zeros((m.rows, d))
    products = m.values[:, None] * x[m.col_indices, :]
    flat_bins = (m._row_ids()[:, None] * d + np.arange(d, dtype=np.int64)).ravel()
    out = np.bincount(flat_bins, weights=products.ravel(), minlength=m.rows * d)
    return out.reshape(m.rows, d)


def _round_robin_rounds(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: n-1 rounds of disjoint index pairs covering all pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ks, ls = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a >= 0 and b >= 0:
                ks.append(min(a, b))
                ls.append(max(a, b))
        rounds.append((np.array(ks, dtype=np.int64), np.array(ls, dtype=np.int64)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def dense_sym_eig(
    a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 120
) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Sweeps run in round-robin pivot order; each round's disjoint rotations
    are applied as a single orthogonal update (equivalent to applying them
    sequentially, since rotations in disjoint planes commute and leave each
    other's pivot entries untouched). Iterates until the off-diagonal
    Frobenius norm drops below ``tol``.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvector columns.
    """
    a = _as_float_matrix(a)
    n = a.shape[0]
    if n != a.shape[1]:
        raise ValueError("matrix must be square")
    if n > EIG_SIZE_CAP:
        raise ValueError(f"size {n} exceeds the verification cap {EIG_SIZE_CAP}")
    if n and np.max(np.abs(a - a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not symmetric")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))

    A = (a + a.T) / 2.0
    V = np.eye(n)
    if n == 1:
        return A[0].copy(), V

    rounds = _round_robin_rounds(n)
    for _ in range(max_sweeps):
        off = A - np.diag(np.diag(A))
        if np.sqrt(np.sum(off * off)) < tol:
            break
        for ks, ls in rounds:
            akl = A[ks, ls]
            active = akl != 0.0
            if not np.any(active):
                continue
            ks_a, ls_a, akl_a = ks[active], ls[active], akl[active]
            tau = (A[ls_a, ls_a] - A[ks_a, ks_a]) / (2.0 * akl_a)
            root = np.sqrt(1.0 + tau * tau)
            # smaller-magnitude rotation; |tau| + root never cancels
            t = np.copysign(1.0, tau) / (np.abs(tau) + root)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Q = np.eye(n)
            Q[ks_a, ks_a] = c
            Q[ls_a, ls_a] = c
            Q[ks_a, ls_a] = s
            Q[ls_a, ks_a] = -s
            A = Q.T @ A @ Q
            A = (A + A.T) / 2.0
            V = V @ Q
    else:
        raise ConvergenceError(
            f"Jacobi did not reach off-norm {tol} in {max_sweeps} sweeps"
        )

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
