"""Deterministic equality-form LP solving and MPS export.

The certificate LPs have the shape min lambda subject to Z y = b with
y = [lambda, c], c >= 0 and lambda free. They are solved by a two-phase
revised simplex with an explicitly maintained basis inverse, refactorized
every 100 pivots. Bland's rule is always on: these LPs are highly degenerate
and determinism matters more than pivot count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import blas as _blas, lu_factor, lu_solve

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
REFACTOR_EVERY = 100

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_ITERATION_LIMIT = "iteration_limit"
STATUS_UNBOUNDED = "unbounded"


@dataclass
class LPSolution:
    status: str
    objective: float
    y: np.ndarray | None  # [lambda, c...] in the original column order
    iterations: int
    objective_trace: list[float] = field(default_factory=list)
    feasibility_residual: float = math.nan

    @property
    def lam(self) -> float:
        return self.objective


class _Simplex:
    """min c@x  s.t.  A x = b, x >= 0.  A is csc; columns never change."""

    def __init__(self, A: sparse.csc_matrix, b: np.ndarray, c: np.ndarray,
                 max_pivots: int):
        self.A = A.tocsc()
        self.b = np.asarray(b, dtype=float).copy()
        self.c = np.asarray(c, dtype=float).copy()
        self.m, self.n = self.A.shape
        self.max_pivots = max_pivots
        self.iterations = 0
        self.trace: list[float] = []

        # flip rows so b >= 0
        flip = self.b < 0.0
        if np.any(flip):
            signs = np.where(flip, -1.0, 1.0)
            self.A = sparse.diags(signs).dot(self.A).tocsc()
            self.b = signs * self.b

        # drop structurally empty rows; a nonzero rhs there is infeasible
        row_nnz = self.A.tocsr().getnnz(axis=1)
        empty = row_nnz == 0
        self.infeasible_row = bool(np.any(empty & (np.abs(self.b) > FEAS_TOL)))
        if np.any(empty):
            keep = ~empty
            self.A = self.A.tocsr()[keep].tocsc()
            self.b = self.b[keep]
            self.m = self.A.shape[0]
        self.AT = self.A.T.tocsr()

    def _column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[s:e], self.A.data[s:e]

    def _rebuild_basis(self, basis: list[int]) -> tuple[np.ndarray, np.ndarray]:
        B = np.zeros((self.m, self.m))
        for i, col in enumerate(basis):
            if col < self.n:
                rows, vals = self._column(col)
                B[rows, i] = vals
            else:  # artificial: unit column on its row
                B[col - self.n, i] = 1.0
        lu = lu_factor(B, check_finite=False)
        Binv = np.asfortranarray(lu_solve(lu, np.eye(self.m), check_finite=False))
        xB = Binv @ self.b
        np.maximum(xB, 0.0, out=xB)
        return Binv, xB

    def _pivot(self, Binv, xB, basis, nonbasic, r, j, w):
        # column-major Binv keeps both the rank-1 update (dger) and the
        # w = Binv[:, rows] @ vals column gather cheap
        theta = max(xB[r] / w[r], 0.0)
        xB -= theta * w
        np.maximum(xB, 0.0, out=xB)
        xB[r] = theta
        Binv[r, :] /= w[r]
        row_r = Binv[r, :].copy()
        scale = w.copy()
        scale[r] = 0.0
        updated = _blas.dger(-1.0, scale, row_r, a=Binv, overwrite_a=1,
                             overwrite_x=1, overwrite_y=1)
        if updated is not Binv:
            raise RuntimeError("basis inverse update was not in place")
        nonbasic[j] = False
        if basis[r] < self.n:
            nonbasic[basis[r]] = True
        basis[r] = j

    def _run_phase(self, basis, Binv, xB, cost, record):
        """Bland pivoting until optimal/unbounded/limit. `cost` covers real
        columns plus, in phase 1, the artificials appended after them.
        `basis` is an int array mutated in place."""
        nonbasic = np.ones(self.n, dtype=bool)
        real = basis[basis < self.n]
        nonbasic[real] = False
        cB = cost[basis]
        y = Binv.T @ cB  # simplex multipliers, updated incrementally below
        since_refactor = 0
        while True:
            if self.iterations >= self.max_pivots:
                return STATUS_ITERATION_LIMIT, xB, Binv
            red = cost[: self.n] - self.AT.dot(y)
            eligible = np.flatnonzero((red < -PIVOT_TOL) & nonbasic)
            if eligible.size == 0:
                return STATUS_OPTIMAL, xB, Binv
            j = int(eligible[0])  # Bland: lowest eligible index enters
            rows, vals = self._column(j)
            w = Binv[:, rows] @ vals
            pos = np.flatnonzero(w > PIVOT_TOL)
            if pos.size == 0:
                return STATUS_UNBOUNDED, xB, Binv
            ratios = xB[pos] / w[pos]
            rmin = float(np.min(ratios))
            close = pos[ratios <= rmin + 1e-12 + 1e-9 * abs(rmin)]
            r = int(close[np.argmin(basis[close])])  # Bland: lowest basic index leaves
            y += (red[j] / w[r]) * Binv[r, :]
            self._pivot(Binv, xB, basis, nonbasic, r, j, w)
            cB[r] = cost[j]
            self.iterations += 1
            since_refactor += 1
            if record:
                self.trace.append(float(cB @ xB))
            if since_refactor >= REFACTOR_EVERY:
                Binv, xB = self._rebuild_basis(basis)
                y = Binv.T @ cB
                since_refactor = 0

    def solve(self) -> tuple[str, np.ndarray | None]:
        if self.infeasible_row:
            return STATUS_INFEASIBLE, None
        if self.m == 0:
            if np.any(self.c < -PIVOT_TOL):
                return STATUS_UNBOUNDED, None
            return STATUS_OPTIMAL, np.zeros(self.n)

        # phase 1: artificial identity basis, cost = sum of artificials.
        # Artificials never re-enter once out, which is Bland-safe and standard.
        basis = np.arange(self.n, self.n + self.m, dtype=np.int64)
        Binv = np.eye(self.m, order="F")
        xB = self.b.copy()
        cost1 = np.concatenate([np.zeros(self.n), np.ones(self.m)])
        status, xB, Binv = self._run_phase(basis, Binv, xB, cost1, False)
        if status == STATUS_ITERATION_LIMIT:
            return status, None
        if status == STATUS_UNBOUNDED:  # cannot happen: phase-1 objective >= 0
            raise RuntimeError("phase 1 reported unbounded")
        art_value = float(np.sum(xB[basis >= self.n]))
        if art_value > FEAS_TOL * (1.0 + float(np.max(np.abs(self.b), initial=0.0))):
            return STATUS_INFEASIBLE, None

        # drive leftover zero-valued artificials out; a row where no real
        # column can pivot is redundant and gets dropped.
        nonbasic = np.ones(self.n, dtype=bool)
        real = basis[basis < self.n]
        nonbasic[real] = False
        drop_rows = []
        for i in range(self.m):
            if basis[i] < self.n:
                continue
            row_vec = self.AT.dot(Binv[i, :])
            cands = np.flatnonzero((np.abs(row_vec) > PIVOT_TOL) & nonbasic)
            if cands.size == 0:
                drop_rows.append(i)
                continue
            j = int(cands[0])
            rows, vals = self._column(j)
            w = Binv[:, rows] @ vals
            self._pivot(Binv, xB, basis, nonbasic, i, j, w)

        if drop_rows:
            keep = np.ones(self.m, dtype=bool)
            keep[drop_rows] = False
            self.A = self.A.tocsr()[keep].tocsc()
            self.AT = self.A.T.tocsr()
            self.b = self.b[keep]
            self.m = int(np.sum(keep))
            basis = basis[keep]
        if np.any(basis >= self.n):
            raise RuntimeError("artificial variable left in basis after cleanup")

        if self.m == 0:
            if np.any(self.c < -PIVOT_TOL):
                return STATUS_UNBOUNDED, None
            return STATUS_OPTIMAL, np.zeros(self.n)

        Binv, xB = self._rebuild_basis(basis)
        status, xB, Binv = self._run_phase(basis, Binv, xB, self.c, True)
        if status != STATUS_OPTIMAL:
            return status, None
        x = np.zeros(self.n)
        x[basis] = xB
        return STATUS_OPTIMAL, x


def solve_standard_form(A, b, c, max_pivots: int = 1_000_000):
    """min c@x s.t. Ax = b, x >= 0. Returns (status, x, iterations, trace)."""
    s = _Simplex(sparse.csc_matrix(A, dtype=float), b, c, max_pivots)
    status, x = s.solve()
    return status, x, s.iterations, s.trace


def solve(lp, max_pivots: int = 1_000_000) -> LPSolution:
    """Solve an assembled certificate LP: min lambda, Z y = b, y = [lambda, c],
    c >= 0. The free lambda is split into a difference of two nonnegative
    variables; everything downstream is the standard form above."""
    Z = lp.matrix.tocsc()
    b = np.asarray(lp.rhs, dtype=float)
    m, ncols = Z.shape
    A = sparse.hstack([Z[:, :1], -Z[:, :1], Z[:, 1:]], format="csc")
    c = np.zeros(ncols + 1)
    c[0], c[1] = 1.0, -1.0
    status, x, iterations, trace = solve_standard_form(A, b, c, max_pivots)
    if status != STATUS_OPTIMAL:
        return LPSolution(status, math.inf if status == STATUS_INFEASIBLE else math.nan,
                          None, iterations, trace)
    lam = float(x[0] - x[1])
    y = np.concatenate([[lam], x[2:]])
    residual = float(np.max(np.abs(Z.dot(y) - b))) if m else 0.0
    return LPSolution(STATUS_OPTIMAL, lam, y, iterations, trace, residual)


def _fmt(v: float) -> str:
    return format(v, ".17g")


def mps_bytes(lp, name: str = "LIPCERT") -> bytes:
    """Free-format MPS with deterministic naming: objective COST, equality
    rows R0000001.., the free objective column LAMBDA, certificate columns
    C0000001.. (default nonnegative), 17-significant-digit values."""
    Z = lp.matrix.tocsc()
    b = np.asarray(lp.rhs, dtype=float)
    m, ncols = Z.shape
    row_name = [f"R{i + 1:07d}" for i in range(m)]
    lines = [f"NAME {name}", "ROWS", " N COST"]
    lines.extend(f" E {rn}" for rn in row_name)
    lines.append("COLUMNS")

    def column_entries(col: str, j: int) -> list[str]:
        s, e = Z.indptr[j], Z.indptr[j + 1]
        return [f" {col} {row_name[i]} {_fmt(v)}"
                for i, v in sorted(zip(Z.indices[s:e].tolist(), Z.data[s:e].tolist()))]

    lines.append(" LAMBDA COST 1")
    lines.extend(column_entries("LAMBDA", 0))
    for j in range(1, ncols):
        lines.extend(column_entries(f"C{j:07d}", j))
    lines.append("RHS")
    for i in range(m):
        if b[i] != 0.0:
            lines.append(f" RHS {row_name[i]} {_fmt(b[i])}")
    lines.append("BOUNDS")
    lines.append(" FR BND LAMBDA")
    lines.append("ENDATA")
    return ("\n".join(lines) + "\n").encode("ascii")


def export_mps(lp, sink, name: str = "LIPCERT") -> None:
    """Write the LP to a binary file object or a path."""
    data = mps_bytes(lp, name)
    if hasattr(sink, "write"):
        sink.write(data)
    else:
        with open(sink, "wb") as fh:
            fh.write(data)
