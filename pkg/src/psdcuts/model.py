"""Problem data and the lifted linear relaxation.

A box-bounded QCQP over (x, y) is lifted by replacing every product
x_i x_j with a column X_ij (i <= j; the symmetric twin maps to the same
column).  The initial relaxation adds, per variable pair, the four
McCormick rows derived from the x-bounds, plus interval bounds on each
X_ij column.  Rows built here are permanent: the cutting loop never
removes them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    pass


@dataclass
class QcqpProblem:
    """max x'Q[0]x + a[0]'x + b[0]'y  s.t.  x'Q[k]x + a[k]'x + b[k]'y <= c[k-1],
    bounds lx <= x <= ux, ly <= y <= uy.  All Q[k] symmetric, all bounds finite.
    """

    Q: list[np.ndarray]
    a: list[np.ndarray]
    b: list[np.ndarray]
    c: np.ndarray
    lx: np.ndarray
    ux: np.ndarray
    ly: np.ndarray = field(default_factory=lambda: np.zeros(0))
    uy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    name: str = ""

    @property
    def n(self) -> int:
        return self.lx.size

    @property
    def m(self) -> int:
        return self.ly.size

    @property
    def p(self) -> int:
        return self.c.size

    @classmethod
    def create(cls, Q, a=None, b=None, c=None, lx=None, ux=None,
               ly=None, uy=None, name="") -> "QcqpProblem":
        """Normalize raw arrays: symmetrize every Q as (Q+Q')/2, default the
        missing linear parts to zero, then validate."""
        Q = [np.asarray(M, dtype=float) for M in (Q if isinstance(Q, (list, tuple)) else [Q])]
        n = Q[0].shape[0]
        Q = [(M + M.T) / 2.0 for M in Q]
        p = len(Q) - 1
        lx = np.zeros(n) if lx is None else np.asarray(lx, dtype=float)
        ux = np.ones(n) if ux is None else np.asarray(ux, dtype=float)
        ly = np.zeros(0) if ly is None else np.asarray(ly, dtype=float)
        uy = np.zeros(0) if uy is None else np.asarray(uy, dtype=float)
        m = ly.size
        if a is None:
            a = [np.zeros(n) for _ in range(p + 1)]
        a = [np.asarray(v, dtype=float) for v in a]
        if b is None:
            b = [np.zeros(m) for _ in range(p + 1)]
        b = [np.asarray(v, dtype=float) for v in b]
        c = np.zeros(p) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
        prob = cls(Q=Q, a=a, b=b, c=c, lx=lx, ux=ux, ly=ly, uy=uy, name=name)
        prob.validate()
        return prob

    def validate(self) -> None:
        n, m, p = self.n, self.m, self.p
        if len(self.Q) != p + 1 or len(self.a) != p + 1 or len(self.b) != p + 1:
            raise ModelError(f"need {p + 1} objective/constraint blocks, got "
                             f"{len(self.Q)}/{len(self.a)}/{len(self.b)}")
        for k, M in enumerate(self.Q):
            if M.shape != (n, n):
                raise ModelError(f"Q[{k}] has shape {M.shape}, expected {(n, n)}")
            if np.max(np.abs(M - M.T), initial=0.0) != 0.0:
                raise ModelError(f"Q[{k}] is not symmetric after load")
        for k, v in enumerate(self.a):
            if v.shape != (n,):
                raise ModelError(f"a[{k}] has length {v.size}, expected {n}")
        for k, v in enumerate(self.b):
            if v.shape != (m,):
                raise ModelError(f"b[{k}] has length {v.size}, expected {m}")
        for lo, hi, tag in ((self.lx, self.ux, "x"), (self.ly, self.uy, "y")):
            if lo.shape != hi.shape:
                raise ModelError(f"{tag}-bound vectors differ in length")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ModelError(f"non-finite {tag}-bound")
            if np.any(lo > hi):
                i = int(np.argmax(lo > hi))
                raise ModelError(f"{tag}-bound {i + 1} has lower > upper")

    def objective_value(self, x, y=None) -> float:
        x = np.asarray(x, dtype=float)
        val = float(x @ self.Q[0] @ x + self.a[0] @ x)
        if self.m:
            val += float(self.b[0] @ np.asarray(y, dtype=float))
        return val

    def constraint_values(self, x, y=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = np.array([float(x @ self.Q[k + 1] @ x + self.a[k + 1] @ x)
                         for k in range(self.p)])
        if self.m:
            vals += np.array([float(self.b[k + 1] @ np.asarray(y, dtype=float))
                              for k in range(self.p)])
        return vals


def product_bounds(lx: np.ndarray, ux: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interval bounds L <= x_i x_j <= U from the four bound products,
    with the diagonal lower bound clamped at zero (X_ii >= x_i^2 >= 0)."""
    lx = np.asarray(lx, dtype=float)
    ux = np.asarray(ux, dtype=float)
    if np.any(lx > ux) or not (np.all(np.isfinite(lx)) and np.all(np.isfinite(ux))):
        raise ModelError("bounds must be finite with lower <= upper")
    prods = np.stack([np.outer(lx, lx), np.outer(lx, ux),
                      np.outer(ux, lx), np.outer(ux, ux)])
    L = prods.min(axis=0)
    U = prods.max(axis=0)
    di = np.diag_indices_from(L)
    L[di] = np.maximum(L[di], 0.0)
    return L, U


@dataclass(frozen=True)
class McCormickRow:
    """One inequality  lo <= X_ij + ci*x_i + cj*x_j <= hi  over a single pair."""

    i: int
    j: int
    ci: float
    cj: float
    lo: float
    hi: float

    def value(self, xi: float, xj: float, Xij: float) -> float:
        return Xij + self.ci * xi + self.cj * xj


def mccormick_rows(i: int, j: int, lx, ux) -> list[McCormickRow]:
    """The four bound-product inequalities for the pair (i, j), i <= j.
    For i == j the two upper rows coincide and are collapsed."""
    if i > j:
        raise ModelError("mccormick_rows expects i <= j")
    li, ui = float(lx[i]), float(ux[i])
    lj, uj = float(lx[j]), float(ux[j])
    inf = float("inf")
    if i == j:
        rows = [
            McCormickRow(i, j, -2.0 * li, 0.0, -li * li, inf),
            McCormickRow(i, j, -2.0 * ui, 0.0, -ui * ui, inf),
            McCormickRow(i, j, -(li + ui), 0.0, -inf, -li * ui),
            McCormickRow(i, j, -(ui + li), 0.0, -inf, -ui * li),
        ]
    else:
        rows = [
            McCormickRow(i, j, -lj, -li, -li * lj, inf),
            McCormickRow(i, j, -uj, -ui, -ui * uj, inf),
            McCormickRow(i, j, -uj, -li, -inf, -li * uj),
            McCormickRow(i, j, -lj, -ui, -inf, -ui * lj),
        ]
    out: list[McCormickRow] = []
    for r in rows:
        if r not in out:
            out.append(r)
    return out


@dataclass
class MomentMatrix:
    """Dense symmetric (n+1)x(n+1) matrix [[1, x'], [x, X]] built from an
    LP point; row/column 0 is the homogenizing border."""

    mat: np.ndarray

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=float)
        if self.mat.ndim != 2 or self.mat.shape[0] != self.mat.shape[1]:
            raise ModelError("moment matrix must be square")
        if self.mat[0, 0] != 1.0:
            raise ModelError("moment matrix corner entry must be exactly 1")

    @property
    def n(self) -> int:
        return self.mat.shape[0] - 1


def moment_matrix(x_star, X_star) -> MomentMatrix:
    """Assemble [[1, x'], [x, X]] from a point in (x, X) space."""
    x_star = np.asarray(x_star, dtype=float)
    X_star = np.asarray(X_star, dtype=float)
    n = x_star.size
    if X_star.shape != (n, n):
        raise ModelError(f"X block has shape {X_star.shape}, expected {(n, n)}")
    mat = np.empty((n + 1, n + 1))
    mat[0, 0] = 1.0
    mat[0, 1:] = x_star
    mat[1:, 0] = x_star
    mat[1:, 1:] = (X_star + X_star.T) / 2.0
    return MomentMatrix(mat)


@dataclass
class ExtendedModel:
    """The lifted LP: columns (x, y, X upper triangle), a maximization
    objective, and the permanent rows (original constraints + McCormick)."""

    n: int
    m: int
    p: int
    obj: np.ndarray         # (num_cols,)
    col_lb: np.ndarray
    col_ub: np.ndarray
    rows: np.ndarray        # (num_rows, num_cols) permanent rows, dense
    row_lb: np.ndarray
    row_ub: np.ndarray
    L: np.ndarray           # (n, n) bounds on X
    U: np.ndarray
    num_rlt_rows: int
    name: str = ""

    @property
    def num_cols(self) -> int:
        return self.obj.size

    def x_col(self, i: int) -> int:
        return i

    def y_col(self, j: int) -> int:
        return self.n + j

    def pair_col(self, i: int, j: int) -> int:
        """Column of X_ij; symmetric pairs share one column."""
        if i > j:
            i, j = j, i
        return self.n + self.m + i * self.n - (i * (i - 1)) // 2 + (j - i)

    def split_columns(self, cols: np.ndarray):
        """LP column vector -> (x, y, X) with X expanded to a full symmetric matrix."""
        n, m = self.n, self.m
        x = np.asarray(cols[:n], dtype=float)
        y = np.asarray(cols[n:n + m], dtype=float)
        X = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                X[i, j] = X[j, i] = cols[self.pair_col(i, j)]
        return x, y, X

    def column_point(self, x, X, y=None) -> np.ndarray:
        """Pack (x, X, y) into an LP column vector."""
        out = np.zeros(self.num_cols)
        out[:self.n] = np.asarray(x, dtype=float)
        if self.m:
            out[self.n:self.n + self.m] = np.asarray(y, dtype=float)
        X = np.asarray(X, dtype=float)
        for i in range(self.n):
            for j in range(i, self.n):
                out[self.pair_col(i, j)] = X[i, j]
        return out

    def moment_from_columns(self, cols: np.ndarray) -> MomentMatrix:
        x, _, X = self.split_columns(cols)
        return moment_matrix(x, X)

    def objective_at(self, x, X, y=None) -> float:
        return float(self.obj @ self.column_point(x, X, y))


def _quad_row(model: ExtendedModel, Q, av, bv) -> np.ndarray:
    """Dense LP row for Q . X + a'x + b'y with symmetric pairs folded."""
    row = np.zeros(model.num_cols)
    row[:model.n] = av
    if model.m:
        row[model.n:model.n + model.m] = bv
    for i in range(model.n):
        row[model.pair_col(i, i)] += Q[i, i]
        for j in range(i + 1, model.n):
            if Q[i, j] != 0.0:
                row[model.pair_col(i, j)] += 2.0 * Q[i, j]
    return row


def lift(problem: QcqpProblem) -> ExtendedModel:
    """Build the lifted LP relaxation: objective and constraint rows with
    products replaced by X columns, McCormick rows from the x-bounds
    (exact duplicates dropped), and interval bounds on the X columns.
    Products of problem constraints are deliberately not generated."""
    problem.validate()
    n, m, p = problem.n, problem.m, problem.p
    num_cols = n + m + n * (n + 1) // 2
    L, U = product_bounds(problem.lx, problem.ux)

    model = ExtendedModel(
        n=n, m=m, p=p,
        obj=np.zeros(num_cols),
        col_lb=np.zeros(num_cols), col_ub=np.zeros(num_cols),
        rows=np.zeros((0, num_cols)), row_lb=np.zeros(0), row_ub=np.zeros(0),
        L=L, U=U, num_rlt_rows=0, name=problem.name)

    model.obj = _quad_row(model, problem.Q[0], problem.a[0], problem.b[0])
    model.col_lb[:n] = problem.lx
    model.col_ub[:n] = problem.ux
    if m:
        model.col_lb[n:n + m] = problem.ly
        model.col_ub[n:n + m] = problem.uy
    for i in range(n):
        for j in range(i, n):
            col = model.pair_col(i, j)
            model.col_lb[col] = L[i, j]
            model.col_ub[col] = U[i, j]

    rows, row_lb, row_ub = [], [], []
    for k in range(p):
        rows.append(_quad_row(model, problem.Q[k + 1], problem.a[k + 1],
                              problem.b[k + 1]))
        row_lb.append(-np.inf)
        row_ub.append(float(problem.c[k]))

    n_rlt = 0
    seen: set[tuple] = set()
    for i in range(n):
        for j in range(i, n):
            for r in mccormick_rows(i, j, problem.lx, problem.ux):
                key = (i, j, r.ci, r.cj, r.lo, r.hi)
                if key in seen:
                    continue
                seen.add(key)
                dense = np.zeros(num_cols)
                dense[model.pair_col(i, j)] = 1.0
                dense[i] += r.ci
                dense[j] += r.cj
                rows.append(dense)
                row_lb.append(r.lo)
                row_ub.append(r.hi)
                n_rlt += 1

    model.rows = np.asarray(rows) if rows else np.zeros((0, num_cols))
    model.row_lb = np.asarray(row_lb, dtype=float)
    model.row_ub = np.asarray(row_ub, dtype=float)
    model.num_rlt_rows = n_rlt
    return model
