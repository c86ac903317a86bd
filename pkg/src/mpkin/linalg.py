"""Sparse Jacobian patterns and a sparse LU with reusable symbolic analysis.

Jacobian lifecycle: processes register (row, col) slots on a
:class:`JacobianBuilder`; ``freeze()`` produces an immutable CSC
:class:`SparsePattern`; values are then accumulated into a data array
aligned with the pattern.  Writing to a slot that was never registered is
an error raised when positions are resolved, i.e. at initialisation.

:class:`SparseLU` performs the symbolic work (minimum-degree ordering and
fill computation) once per pattern and refactors new values with the
compiled kernels, in the spirit of KLU's refactor path.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from mpkin import _kernels


class PatternError(ValueError):
    """A value was routed to a Jacobian slot outside the frozen pattern."""


class SingularMatrixError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class SparsePattern:
    """Frozen CSC sparsity pattern of an ``n_rows x n_cols`` matrix."""

    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def _keys(self) -> np.ndarray:
        cols = np.repeat(np.arange(self.n_cols, dtype=np.int64), np.diff(self.indptr))
        return cols * self.n_rows + self.indices

    def positions(self, rows, cols) -> np.ndarray:
        """Data-array positions of (rows[i], cols[i]); raises on unregistered slots."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size == 0:
            return np.zeros(0, dtype=np.int64)
        keys = self._keys()
        want = cols * self.n_rows + rows
        pos = np.searchsorted(keys, want)
        pos_c = np.minimum(pos, max(keys.size - 1, 0))
        bad = (pos >= keys.size) | (keys[pos_c] != want)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise PatternError(f"slot ({rows[i]}, {cols[i]}) is not in the frozen pattern")
        return pos

    def contains(self, rows, cols) -> np.ndarray:
        keys = self._keys()
        want = np.asarray(cols, dtype=np.int64) * self.n_rows + np.asarray(rows, dtype=np.int64)
        pos = np.minimum(np.searchsorted(keys, want), max(keys.size - 1, 0))
        return (keys.size > 0) & (keys[pos] == want)

    def coo(self) -> tuple[np.ndarray, np.ndarray]:
        cols = np.repeat(np.arange(self.n_cols, dtype=np.int64), np.diff(self.indptr))
        return self.indices.copy(), cols

    def matrix(self, data: np.ndarray) -> sp.csc_matrix:
        return sp.csc_matrix((data, self.indices, self.indptr), shape=self.shape)

    def equals(self, other: "SparsePattern") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


class JacobianBuilder:
    """Collects registered slots; ``freeze`` turns them into a SparsePattern."""

    def __init__(self, n_rows: int, n_cols: int | None = None):
        self.n_rows = n_rows
        self.n_cols = n_rows if n_cols is None else n_cols
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self.frozen = False

    def register(self, rows, cols) -> None:
        if self.frozen:
            raise PatternError("pattern already frozen; no new slots can be registered")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= self.n_rows
                          or cols.min() < 0 or cols.max() >= self.n_cols):
            raise PatternError("registered slot out of range")
        self._rows.append(rows)
        self._cols.append(cols)

    def freeze(self, include_diagonal: bool = False) -> SparsePattern:
        rows = np.concatenate(self._rows) if self._rows else np.zeros(0, np.int64)
        cols = np.concatenate(self._cols) if self._cols else np.zeros(0, np.int64)
        if include_diagonal:
            d = np.arange(min(self.n_rows, self.n_cols), dtype=np.int64)
            rows = np.concatenate([rows, d])
            cols = np.concatenate([cols, d])
        self.frozen = True
        return pattern_from_coo(self.n_rows, self.n_cols, rows, cols)


def pattern_from_coo(n_rows, n_cols, rows, cols) -> SparsePattern:
    keys = np.unique(np.asarray(cols, np.int64) * n_rows + np.asarray(rows, np.int64))
    c = keys // n_rows
    r = keys % n_rows
    indptr = np.zeros(n_cols + 1, dtype=np.int64)
    np.cumsum(np.bincount(c, minlength=n_cols), out=indptr[1:])
    return SparsePattern(n_rows, n_cols, indptr, r.astype(np.int64))


class SparseJacobian:
    """Values over a frozen pattern, filled by accumulation."""

    def __init__(self, pattern: SparsePattern, data: np.ndarray | None = None):
        self.pattern = pattern
        self.data = np.zeros(pattern.nnz) if data is None else data

    def accumulate(self, positions: np.ndarray, values: np.ndarray) -> None:
        _kernels.scatter_add(self.data, positions, values)

    def to_scipy(self) -> sp.csc_matrix:
        return self.pattern.matrix(self.data.copy())

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()


# --------------------------------------------------------------------------
# composition J_solver = J_direct + J_param @ P within a frozen pattern
# --------------------------------------------------------------------------


class ProductPlan:
    """Precomputed index triples for ``target += A @ B`` inside ``target``'s pattern."""

    def __init__(self, target: SparsePattern, a: SparsePattern, b: SparsePattern):
        if a.n_cols != b.n_rows or target.shape != (a.n_rows, b.n_cols):
            raise ValueError("incompatible shapes for the chain-rule product")
        a_rows, a_cols = a.coo()
        b_rows, b_cols = b.coo()
        # group B entries by row (B is CSC; sort by row)
        order = np.argsort(b_rows, kind="stable")
        b_rowptr = np.zeros(b.n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(b_rows, minlength=b.n_rows), out=b_rowptr[1:])
        ia, ib, it_r, it_c = [], [], [], []
        for pa in range(a.nnz):
            k = a_cols[pa]
            sel = order[b_rowptr[k]:b_rowptr[k + 1]]
            if sel.size == 0:
                continue
            ia.append(np.full(sel.size, pa, dtype=np.int64))
            ib.append(sel)
            it_r.append(np.full(sel.size, a_rows[pa], dtype=np.int64))
            it_c.append(b_cols[sel])
        if ia:
            self.a_pos = np.concatenate(ia)
            self.b_pos = np.concatenate(ib)
            rows = np.concatenate(it_r)
            cols = np.concatenate(it_c)
        else:
            self.a_pos = self.b_pos = rows = cols = np.zeros(0, dtype=np.int64)
        try:
            self.t_pos = target.positions(rows, cols)
        except PatternError as exc:
            raise PatternError(f"chain-rule product overflows the solver pattern: {exc}") from None

    def apply(self, target_data: np.ndarray, a_data: np.ndarray, b_data: np.ndarray) -> None:
        if self.t_pos.size:
            _kernels.scatter_add(target_data, self.t_pos, a_data[self.a_pos] * b_data[self.b_pos])


def compose_solver_jacobian(j_direct: sp.spmatrix, j_param: sp.spmatrix,
                            dparam_dy: sp.spmatrix,
                            pattern: SparsePattern | None = None) -> sp.csc_matrix:
    """J_solver = J_direct + J_param @ dparam_dy.

    With ``pattern`` given, the result is confined to it and a product
    entry falling outside raises PatternError.
    """
    j_direct = sp.csc_matrix(j_direct)
    j_param = sp.csc_matrix(j_param)
    dparam_dy = sp.csc_matrix(dparam_dy)
    if pattern is None:
        return sp.csc_matrix(j_direct + j_param @ dparam_dy)
    out = np.zeros(pattern.nnz)
    jd = j_direct.tocoo()
    _kernels.scatter_add(out, pattern.positions(jd.row, jd.col), jd.data.astype(np.float64))
    a = _pattern_of(j_param)
    b = _pattern_of(dparam_dy)
    plan = ProductPlan(pattern, a, b)
    plan.apply(out, _data_on(j_param, a), _data_on(dparam_dy, b))
    return pattern.matrix(out)


def _pattern_of(m: sp.csc_matrix) -> SparsePattern:
    c = m.tocoo()
    return pattern_from_coo(m.shape[0], m.shape[1], c.row, c.col)


def _data_on(m: sp.csc_matrix, pat: SparsePattern) -> np.ndarray:
    c = m.tocoo()
    out = np.zeros(pat.nnz)
    if c.nnz:
        np.add.at(out, pat.positions(c.row, c.col), c.data)
    return out


# --------------------------------------------------------------------------
# sparse LU
# --------------------------------------------------------------------------


def minimum_degree_order(n: int, rows, cols) -> tuple[np.ndarray, list[list[int]]]:
    """Exact minimum-degree ordering on the symmetrised pattern.

    Returns the elimination order (new -> old) and, for each eliminated
    node, its uneliminated neighbours at elimination time (the column
    structure of L / row structure of U in the filled graph).
    """
    adj: list[set[int] | None] = [set() for _ in range(n)]
    for r, c in zip(np.asarray(rows).tolist(), np.asarray(cols).tolist()):
        if r != c:
            adj[r].add(c)
            adj[c].add(r)
    heap = [(len(a), i) for i, a in enumerate(adj)]
    heapq.heapify(heap)
    done = [False] * n
    order: list[int] = []
    struct: list[list[int]] = [[] for _ in range(n)]
    while heap:
        deg, v = heapq.heappop(heap)
        if done[v] or deg != len(adj[v]):
            continue
        done[v] = True
        order.append(v)
        nbrs = adj[v]
        struct[v] = list(nbrs)
        for u in nbrs:
            au = adj[u]
            au.discard(v)
            au |= nbrs
            au.discard(u)
            heapq.heappush(heap, (len(au), u))
        adj[v] = None
    return np.asarray(order, dtype=np.int64), struct


class SparseLU:
    """LU of matrices sharing one sparsity pattern.

    ``SparseLU(pattern)`` runs the symbolic analysis once.  ``factor`` (or
    ``factor_shifted`` for ``I - c*J``) then only redoes numerics.  Without
    numba, or when a static pivot fails, the factorisation falls back to
    SuperLU for that matrix.
    """

    pivot_tol = 1e-14

    def __init__(self, pattern: SparsePattern, backend: str | None = None):
        if pattern.n_rows != pattern.n_cols:
            raise ValueError("LU needs a square pattern")
        self.pattern = pattern
        self.n = pattern.n_rows
        self.backend = backend or ("kernel" if _kernels.USE_NUMBA else "superlu")
        self.n_symbolic = 0
        self.n_numeric = 0
        self.n_fallback = 0
        self._superlu = None
        self._matrix = None
        if self.backend == "kernel":
            self._symbolic()

    def _symbolic(self) -> None:
        n = self.n
        rows, cols = self.pattern.coo()
        order, struct = minimum_degree_order(n, rows, cols)
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n, dtype=np.int64)
        row_cols: list[list[int]] = [[i] for i in range(n)]
        for v in range(n):
            pv = int(pos[v])
            for u in struct[v]:
                pu = int(pos[u])  # pu > pv
                row_cols[pv].append(pu)  # U entry (pv, pu)
                row_cols[pu].append(pv)  # L entry (pu, pv)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(rc) for rc in row_cols])
        indices = np.empty(indptr[-1], dtype=np.int64)
        for i, rc in enumerate(row_cols):
            rc.sort()
            indices[indptr[i]:indptr[i + 1]] = rc
        keys = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr)) * n + indices
        self.perm = order
        self.iperm = pos
        self.lu_indptr = indptr
        self.lu_indices = indices
        self.lu_diag = np.searchsorted(keys, np.arange(n, dtype=np.int64) * (n + 1))
        self.map = np.searchsorted(keys, pos[rows] * n + pos[cols])
        self.lu_data = np.zeros(indices.size)
        self._work = np.full(n, -1, dtype=np.int64)
        self.n_symbolic += 1

    @property
    def fill_nnz(self) -> int:
        return int(self.lu_indices.size) if self.backend == "kernel" else -1

    def factor(self, data: np.ndarray) -> "SparseLU":
        """Factor the matrix with the frozen pattern and these CSC values."""
        return self._factor(data, None)

    def factor_shifted(self, jac_data: np.ndarray, c: float) -> "SparseLU":
        """Factor I - c*J where J has the frozen pattern (diagonal must be registered)."""
        return self._factor(jac_data, c)

    def _factor(self, data, c):
        self.n_numeric += 1
        if self.backend == "kernel":
            lu = self.lu_data
            lu[:] = 0.0
            if c is None:
                lu[self.map] = data
            else:
                lu[self.map] = -c * data
                lu[self.lu_diag] += 1.0
            status = _kernels.lu_factor_numba(
                self.lu_indptr, self.lu_indices, lu, self.lu_diag, self._work, self.pivot_tol
            ) if _kernels.USE_NUMBA else _kernels.lu_factor_python(
                self.lu_indptr, self.lu_indices, lu, self.lu_diag, self._work, self.pivot_tol
            )
            if status < 0:
                self._superlu = None
                return self
            self.n_fallback += 1
        m = self.pattern.matrix(np.asarray(data, dtype=np.float64).copy())
        if c is not None:
            m = sp.identity(self.n, format="csc") - c * m
        try:
            self._superlu = spla.splu(sp.csc_matrix(m))
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from None
        return self

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if self._superlu is not None:
            return self._superlu.solve(b)
        x = b[self.perm].copy()
        if _kernels.USE_NUMBA:
            _kernels.lu_solve_numba(self.lu_indptr, self.lu_indices, self.lu_data,
                                    self.lu_diag, x)
        else:
            _kernels.lu_solve_python(self.lu_indptr, self.lu_indices, self.lu_data,
                                     self.lu_diag, x)
        out = np.empty_like(x)
        out[self.perm] = x
        return out


def sparse_lu_factor(matrix: sp.spmatrix, symbolic: SparseLU | None = None) -> SparseLU:
    """Factor ``matrix``; pass a previous factorisation to reuse its symbolic analysis."""
    m = sp.csc_matrix(matrix)
    m.sort_indices()
    if symbolic is None:
        c = m.tocoo()
        symbolic = SparseLU(pattern_from_coo(m.shape[0], m.shape[1], c.row, c.col))
    pat = symbolic.pattern
    c = m.tocoo()
    data = np.zeros(pat.nnz)
    np.add.at(data, pat.positions(c.row, c.col), c.data)
    return symbolic.factor(data)


def sparse_lu_solve(fact: SparseLU, b: np.ndarray) -> np.ndarray:
    return fact.solve(b)
