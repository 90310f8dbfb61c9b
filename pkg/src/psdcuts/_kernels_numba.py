"""numba-compiled twins of the kernels in `_kernels_numpy`.

Importing this module triggers JIT compilation (cached on disk after the
first build).  The sparsification kernels share their source with the
numpy module; the dual simplex is re-stated with explicit element loops,
which is what the compiler wants, while the numpy module keeps a
vectorized form of the same pivot rules.
"""

import numpy as np
from numba import njit

from . import _kernels_numpy as _src

DS_OPTIMAL = _src.DS_OPTIMAL
DS_INFEASIBLE = _src.DS_INFEASIBLE
DS_PIVOT_LIMIT = _src.DS_PIVOT_LIMIT
AT_LB = _src.AT_LB
AT_UB = _src.AT_UB
BASIC = _src.BASIC

quad_form = njit(cache=True)(_src.quad_form)
violation_state = njit(cache=True)(_src.violation_state)
sparsify1_starts = njit(cache=True)(_src.sparsify1_starts)
sparsify2_starts = njit(cache=True)(_src.sparsify2_starts)


@njit(cache=True)
def dual_simplex(A, obj_min, lb, ub, basis, vstat, xval, dj, Binv,
                 need_refactor, max_pivots, tol_primal, tol_pivot,
                 refactor_every):
    """Loop form of `_kernels_numpy.dual_simplex`; same contract."""
    m, nc = A.shape
    ntot = nc + m

    def refactor():
        B = np.zeros((m, m))
        for i in range(m):
            vi = basis[i]
            if vi < nc:
                for r in range(m):
                    B[r, i] = A[r, vi]
            else:
                B[vi - nc, i] = -1.0
        Binv[:, :] = np.linalg.inv(B)
        y = np.zeros(m)
        for i in range(m):
            cb = obj_min[basis[i]]
            if cb != 0.0:
                for r in range(m):
                    y[r] += cb * Binv[i, r]
        dj[:nc] = obj_min[:nc] - y @ A
        dj[nc:] = y
        for i in range(m):
            dj[basis[i]] = 0.0
        rhs = np.zeros(m)
        for r in range(m):
            acc = 0.0
            for j in range(nc):
                if vstat[j] != BASIC:
                    acc += A[r, j] * xval[j]
            rhs[r] = acc
        for r in range(m):
            js = nc + r
            if vstat[js] != BASIC:
                rhs[r] -= xval[js]
        xb = -(Binv @ rhs)
        for i in range(m):
            xval[basis[i]] = xb[i]

    if need_refactor:
        refactor()

    pivots = 0
    since_refactor = 0
    degen_streak = 0
    bland = False
    while True:
        # leaving variable: most violated basic bound (Bland: lowest var index)
        r_pick = -1
        sigma = 1.0
        if bland:
            best_idx = ntot
            for i in range(m):
                vi = basis[i]
                xv = xval[vi]
                if xv - ub[vi] > tol_primal and vi < best_idx:
                    best_idx = vi
                    r_pick = i
                    sigma = 1.0
                elif lb[vi] - xv > tol_primal and vi < best_idx:
                    best_idx = vi
                    r_pick = i
                    sigma = -1.0
        else:
            best_viol = tol_primal
            for i in range(m):
                vi = basis[i]
                xv = xval[vi]
                over = xv - ub[vi]
                under = lb[vi] - xv
                if over > best_viol:
                    best_viol = over
                    r_pick = i
                    sigma = 1.0
                elif under > best_viol:
                    best_viol = under
                    r_pick = i
                    sigma = -1.0
        if r_pick < 0:
            return DS_OPTIMAL, pivots

        p = basis[r_pick]
        rho = Binv[r_pick, :].copy()
        alpha = np.empty(ntot)
        alpha[:nc] = rho @ A
        alpha[nc:] = -rho

        # dual ratio test
        q = -1
        best_ratio = np.inf
        best_mag = 0.0
        for j in range(ntot):
            st = vstat[j]
            if st == BASIC:
                continue
            if ub[j] - lb[j] <= 0.0:
                continue
            abar = sigma * alpha[j]
            if st == AT_LB:
                if abar <= tol_pivot:
                    continue
            else:
                if abar >= -tol_pivot:
                    continue
            ratio = dj[j] / abar
            if ratio < 0.0:
                ratio = 0.0
            if ratio < best_ratio - 1e-12:
                best_ratio = ratio
                best_mag = abs(abar)
                q = j
            elif ratio < best_ratio + 1e-12 and not bland:
                mag = abs(abar)
                if mag > best_mag:
                    best_mag = mag
                    q = j
        if q < 0:
            if since_refactor > 0:
                refactor()
                since_refactor = 0
                continue
            return DS_INFEASIBLE, pivots

        if q < nc:
            col = A[:, q].copy()
            beta = Binv @ col
        else:
            beta = -Binv[:, q - nc].copy()
        alpha_q = alpha[q]

        # primal step: drive the leaving variable onto its violated bound
        if sigma > 0.0:
            bound_t = ub[p]
        else:
            bound_t = lb[p]
        delta = (xval[p] - bound_t) / alpha_q
        if delta != 0.0:
            for i in range(m):
                xval[basis[i]] -= delta * beta[i]
        xval[q] = xval[q] + delta
        xval[p] = bound_t

        # dual step
        theta = dj[q] / alpha_q
        if theta != 0.0:
            for j in range(ntot):
                dj[j] -= theta * alpha[j]
        dj[q] = 0.0

        # product-form update of the basis inverse
        inv_piv = 1.0 / beta[r_pick]
        for j in range(m):
            Binv[r_pick, j] *= inv_piv
        for i in range(m):
            if i != r_pick:
                f = beta[i]
                if f != 0.0:
                    for j in range(m):
                        Binv[i, j] -= f * Binv[r_pick, j]

        basis[r_pick] = q
        vstat[q] = BASIC
        if sigma > 0.0:
            vstat[p] = AT_UB
        else:
            vstat[p] = AT_LB

        pivots += 1
        since_refactor += 1
        if abs(delta) <= 1e-12:
            degen_streak += 1
            if degen_streak > 2 * m + 200:
                bland = True
        else:
            degen_streak = 0
            bland = False
        if pivots >= max_pivots:
            return DS_PIVOT_LIMIT, pivots
        if since_refactor >= refactor_every:
            refactor()
            since_refactor = 0
