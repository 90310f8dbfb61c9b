"""LP backends for the cutting-plane loop.

Two implementations of the same small contract:

* ``DenseSimplexBackend`` - self-contained bounded-variable dual simplex
  (dense basis inverse, product-form updates, periodic refactorization).
  It warm-starts naturally across row additions and removals, which is
  what the cut loop needs, and it is the reference backend: runs are
  bit-deterministic for a fixed call sequence.
* ``ScipyLinprogBackend`` - thin adapter over ``scipy.optimize.linprog``
  (HiGHS).  No warm start; every solve is from scratch.  Useful as an
  independent cross-check.

All variables must have bounds (finite on at least one side for slacks,
finite on both sides for structural columns); every row carries a
(lo, hi) pair with one side possibly infinite.  Objective sense is
maximize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import _kernels

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
PIVOT_LIMIT = "pivot-limit"


class LpError(RuntimeError):
    """Raised for structural misuse of a backend (not for infeasibility)."""


@dataclass
class LpSolution:
    status: str
    objective: float
    x: np.ndarray  # structural column values


class LpBackend(Protocol):
    """Capability contract the engine relies on."""

    def load(self, obj: np.ndarray, col_lb: np.ndarray, col_ub: np.ndarray) -> None:
        """Define columns and a maximization objective; drops all rows."""

    def add_rows(self, coeffs: np.ndarray, row_lb: np.ndarray,
                 row_ub: np.ndarray) -> list[int]:
        """Append rows lo <= a'x <= hi; returns stable handles."""

    def remove_rows(self, handles: Sequence[int]) -> None: ...

    def solve(self) -> LpSolution: ...

    def activities(self, handles: Sequence[int]) -> np.ndarray:
        """Row activities a'x at the last optimum, in handle order."""

    @property
    def num_rows(self) -> int: ...


class DenseSimplexBackend:
    """Reference LP backend; see module docstring.

    Removed rows are first deactivated in place (their slack bounds are
    freed, which keeps the current basis valid) and physically compacted
    once enough garbage accumulates.
    """

    def __init__(self, max_pivots: int | None = None, tol_primal: float = 1e-9,
                 tol_pivot: float = 1e-10, refactor_every: int = 1500):
        self.tol_primal = tol_primal
        self.tol_pivot = tol_pivot
        self.refactor_every = refactor_every
        self._max_pivots = max_pivots
        self._loaded = False

    # -- model construction -------------------------------------------------

    def load(self, obj, col_lb, col_ub):
        obj = np.asarray(obj, dtype=float)
        col_lb = np.asarray(col_lb, dtype=float)
        col_ub = np.asarray(col_ub, dtype=float)
        if not (obj.shape == col_lb.shape == col_ub.shape):
            raise LpError("objective and column bounds must have equal length")
        if not (np.all(np.isfinite(col_lb)) and np.all(np.isfinite(col_ub))):
            raise LpError("structural columns need finite bounds")
        if np.any(col_lb > col_ub):
            raise LpError("column lower bound exceeds upper bound")
        self.nc = obj.size
        self.obj = obj
        self.col_lb = col_lb
        self.col_ub = col_ub
        self._A = np.zeros((0, self.nc))
        self._row_lb = np.zeros(0)
        self._row_ub = np.zeros(0)
        self._row_handle = np.zeros(0, dtype=np.int64)
        self._dead = np.zeros(0, dtype=bool)
        self._handle_to_row: dict[int, int] = {}
        self._next_handle = 0
        self._basis_valid = False
        self._need_refactor = True
        self._last: LpSolution | None = None
        self._last_act: np.ndarray | None = None
        self._loaded = True

    def _require_loaded(self):
        if not self._loaded:
            raise LpError("backend has no model loaded")

    @property
    def num_rows(self) -> int:
        self._require_loaded()
        return int(np.count_nonzero(~self._dead))

    def add_rows(self, coeffs, row_lb, row_ub):
        self._require_loaded()
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        row_lb = np.atleast_1d(np.asarray(row_lb, dtype=float))
        row_ub = np.atleast_1d(np.asarray(row_ub, dtype=float))
        k = coeffs.shape[0]
        if coeffs.shape[1] != self.nc or row_lb.size != k or row_ub.size != k:
            raise LpError("row block shape mismatch")
        if np.any(np.isneginf(row_lb) & np.isposinf(row_ub)):
            raise LpError("row must be bounded on at least one side")

        m_old = self._A.shape[0]
        handles = list(range(self._next_handle, self._next_handle + k))
        self._next_handle += k
        self._A = np.vstack([self._A, coeffs])
        self._row_lb = np.concatenate([self._row_lb, row_lb])
        self._row_ub = np.concatenate([self._row_ub, row_ub])
        self._row_handle = np.concatenate([self._row_handle, np.asarray(handles)])
        self._dead = np.concatenate([self._dead, np.zeros(k, dtype=bool)])
        for i, h in enumerate(handles):
            self._handle_to_row[h] = m_old + i
        if self._basis_valid:
            self._slack_lb = np.concatenate([self._slack_lb, row_lb])
            self._slack_ub = np.concatenate([self._slack_ub, row_ub])
            self._extend_basis(m_old, k, coeffs)
        self._last = None
        self._last_act = None
        return handles

    def _extend_basis(self, m_old, k, coeffs):
        # New rows enter with their slacks basic; the previous duals remain
        # valid because basic slacks carry zero cost, so this is a warm start.
        nc = self.nc
        act = coeffs @ self._xval[:nc]
        self._basis = np.concatenate([self._basis,
                                      nc + m_old + np.arange(k, dtype=np.int64)])
        # slack variable ids above m_old shift by nothing (slacks are indexed
        # by physical row), but the stacked state arrays must be rebuilt.
        xval = np.empty(nc + m_old + k)
        vstat = np.empty(nc + m_old + k, dtype=np.int64)
        dj = np.empty(nc + m_old + k)
        xval[:nc + m_old] = self._xval
        vstat[:nc + m_old] = self._vstat
        dj[:nc + m_old] = self._dj
        xval[nc + m_old:] = act
        vstat[nc + m_old:] = _kernels.BASIC
        dj[nc + m_old:] = 0.0
        self._xval, self._vstat, self._dj = xval, vstat, dj

        Bn = np.zeros((m_old + k, m_old + k))
        Bn[:m_old, :m_old] = self._Binv
        if m_old:
            C = np.zeros((k, m_old))
            for i, bi in enumerate(self._basis[:m_old]):
                if bi < nc:
                    C[:, i] = coeffs[:, bi]
            Bn[m_old:, :m_old] = C @ self._Binv
        Bn[m_old:, m_old:] = -np.eye(k)
        self._Binv = Bn

    def remove_rows(self, handles):
        self._require_loaded()
        for h in handles:
            r = self._handle_to_row.pop(int(h), None)
            if r is None:
                raise LpError(f"unknown or already removed row handle {h}")
            self._dead[r] = True
            if self._basis_valid:
                slack = self.nc + r
                if self._vstat[slack] == _kernels.BASIC:
                    # freeing the slack bounds deactivates the row in place
                    self._slack_lb[r] = -np.inf
                    self._slack_ub[r] = np.inf
                else:
                    # tight row removed: the basis would need repair; fall
                    # back to a cold start on the next solve
                    self._basis_valid = False
        self._last = None
        self._last_act = None
        self._compact_if_needed()

    def _compact_if_needed(self):
        dead = int(np.count_nonzero(self._dead))
        if dead == 0 or dead <= max(32, (self._A.shape[0] - dead) // 3):
            return
        keep = ~self._dead
        old_rows = np.flatnonzero(keep)
        if self._basis_valid:
            # dead slacks are basic (live ones were freed above); drop them
            # from the basis and remap surviving slack indices
            new_of_old = -np.ones(self._A.shape[0], dtype=np.int64)
            new_of_old[old_rows] = np.arange(old_rows.size)
            basis = []
            for v in self._basis:
                if v < self.nc:
                    basis.append(v)
                else:
                    r = v - self.nc
                    if keep[r]:
                        basis.append(self.nc + new_of_old[r])
            self._basis = np.asarray(basis, dtype=np.int64)
            ntot = self.nc + old_rows.size
            xval = np.empty(ntot)
            vstat = np.empty(ntot, dtype=np.int64)
            dj = np.zeros(ntot)
            xval[:self.nc] = self._xval[:self.nc]
            vstat[:self.nc] = self._vstat[:self.nc]
            xval[self.nc:] = self._xval[self.nc + old_rows]
            vstat[self.nc:] = self._vstat[self.nc + old_rows]
            self._xval, self._vstat, self._dj = xval, vstat, dj
            self._slack_lb = self._slack_lb[old_rows]
            self._slack_ub = self._slack_ub[old_rows]
            self._Binv = np.zeros((old_rows.size, old_rows.size))
            self._need_refactor = True
            if self._basis.size != old_rows.size:
                self._basis_valid = False
        self._A = self._A[old_rows]
        self._row_lb = self._row_lb[old_rows]
        self._row_ub = self._row_ub[old_rows]
        self._row_handle = self._row_handle[old_rows]
        self._dead = self._dead[old_rows]
        self._handle_to_row = {int(h): i for i, h in enumerate(self._row_handle)}

    # -- solving -------------------------------------------------------------

    def _cold_start(self):
        m = self._A.shape[0]
        nc = self.nc
        self._basis = nc + np.arange(m, dtype=np.int64)
        self._vstat = np.empty(nc + m, dtype=np.int64)
        self._xval = np.empty(nc + m)
        self._dj = np.zeros(nc + m)
        # nonbasic columns sit on the bound that makes the all-slack basis
        # dual feasible for the minimization form (-obj)
        cmin = -self.obj
        at_ub = cmin < 0.0
        self._vstat[:nc] = np.where(at_ub, _kernels.AT_UB, _kernels.AT_LB)
        self._xval[:nc] = np.where(at_ub, self.col_ub, self.col_lb)
        self._vstat[nc:] = _kernels.BASIC
        self._xval[nc:] = self._A @ self._xval[:nc]
        self._slack_lb = self._row_lb.copy()
        self._slack_ub = self._row_ub.copy()
        self._slack_lb[self._dead] = -np.inf
        self._slack_ub[self._dead] = np.inf
        self._Binv = np.zeros((m, m))
        self._need_refactor = True
        self._basis_valid = True

    def solve(self) -> LpSolution:
        self._require_loaded()
        if self._A.shape[0] == 0:
            x = np.where(self.obj > 0.0, self.col_ub, self.col_lb)
            sol = LpSolution(OPTIMAL, float(self.obj @ x), x)
            self._last = sol
            self._last_act = np.zeros(0)
            return sol
        if not self._basis_valid:
            self._cold_start()
        m = self._A.shape[0]
        max_pivots = self._max_pivots or (50000 + 60 * m + 10 * self.nc)
        lb = np.concatenate([self.col_lb, self._slack_lb])
        ub = np.concatenate([self.col_ub, self._slack_ub])
        obj_min = np.concatenate([-self.obj, np.zeros(m)])

        status = _kernels.DS_PIVOT_LIMIT
        for attempt in range(4):
            code, _ = _kernels.dual_simplex(
                self._A, obj_min, lb, ub, self._basis, self._vstat,
                self._xval, self._dj, self._Binv,
                self._need_refactor, max_pivots,
                self.tol_primal, self.tol_pivot, self.refactor_every)
            self._need_refactor = False
            if code != _kernels.DS_OPTIMAL:
                status = {_kernels.DS_INFEASIBLE: INFEASIBLE,
                          _kernels.DS_PIVOT_LIMIT: PIVOT_LIMIT}[code]
                break
            # verify the reported point against the true row activities;
            # on drift, refactorize and resume
            x = self._xval[:self.nc]
            act = self._A @ x
            bad = ((act - self._slack_ub > 10 * self.tol_primal) |
                   (self._slack_lb - act > 10 * self.tol_primal))
            bad_cols = ((x - self.col_ub > 10 * self.tol_primal) |
                        (self.col_lb - x > 10 * self.tol_primal))
            if not (bad.any() or bad_cols.any()):
                status = OPTIMAL
                break
            self._need_refactor = True
        else:
            status = PIVOT_LIMIT

        x = self._xval[:self.nc].copy()
        sol = LpSolution(status=status,
                         objective=float(self.obj @ x),
                         x=x)
        self._last = sol
        self._last_act = self._A @ x
        return sol

    def activities(self, handles):
        self._require_loaded()
        if self._last_act is None:
            raise LpError("no solution available; call solve() first")
        rows = [self._handle_to_row[int(h)] for h in handles]
        return self._last_act[rows].copy()


class ScipyLinprogBackend:
    """HiGHS-backed adapter with the same surface; re-solves from scratch."""

    def __init__(self):
        from scipy.optimize import linprog  # deferred so numpy-only installs work
        self._linprog = linprog
        self._loaded = False

    def load(self, obj, col_lb, col_ub):
        self.obj = np.asarray(obj, dtype=float)
        self.col_lb = np.asarray(col_lb, dtype=float)
        self.col_ub = np.asarray(col_ub, dtype=float)
        self.nc = self.obj.size
        self._rows: dict[int, tuple[np.ndarray, float, float]] = {}
        self._next_handle = 0
        self._last_x: np.ndarray | None = None
        self._loaded = True

    @property
    def num_rows(self):
        return len(self._rows)

    def add_rows(self, coeffs, row_lb, row_ub):
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        row_lb = np.atleast_1d(np.asarray(row_lb, dtype=float))
        row_ub = np.atleast_1d(np.asarray(row_ub, dtype=float))
        handles = []
        for i in range(coeffs.shape[0]):
            h = self._next_handle
            self._next_handle += 1
            self._rows[h] = (coeffs[i].copy(), float(row_lb[i]), float(row_ub[i]))
            handles.append(h)
        self._last_x = None
        return handles

    def remove_rows(self, handles):
        for h in handles:
            if int(h) not in self._rows:
                raise LpError(f"unknown or already removed row handle {h}")
            del self._rows[int(h)]
        self._last_x = None

    def solve(self) -> LpSolution:
        if not self._loaded:
            raise LpError("backend has no model loaded")
        a_ub, b_ub = [], []
        for coeff, lo, hi in self._rows.values():
            if np.isfinite(hi):
                a_ub.append(coeff)
                b_ub.append(hi)
            if np.isfinite(lo):
                a_ub.append(-coeff)
                b_ub.append(-lo)
        res = self._linprog(
            -self.obj,
            A_ub=np.asarray(a_ub) if a_ub else None,
            b_ub=np.asarray(b_ub) if b_ub else None,
            bounds=np.column_stack([self.col_lb, self.col_ub]),
            method="highs")
        if res.status == 2:
            return LpSolution(INFEASIBLE, float("nan"), np.zeros(self.nc))
        if res.status != 0:
            return LpSolution(PIVOT_LIMIT, float("nan"), np.zeros(self.nc))
        x = np.asarray(res.x)
        self._last_x = x
        return LpSolution(OPTIMAL, float(self.obj @ x), x.copy())

    def activities(self, handles):
        if self._last_x is None:
            raise LpError("no solution available; call solve() first")
        return np.array([self._rows[int(h)][0] @ self._last_x for h in handles])


def make_backend(name: str) -> LpBackend:
    if name == "simplex":
        return DenseSimplexBackend()
    if name == "scipy":
        return ScipyLinprogBackend()
    raise ValueError(f"unknown LP backend {name!r} (expected 'simplex' or 'scipy')")
