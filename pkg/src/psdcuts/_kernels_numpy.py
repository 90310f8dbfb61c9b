"""Hot numeric kernels, written in an njit-compilable numpy subset.

This module is the single source of truth for the inner loops; the
compiled twins in `_kernels_numba` wrap these exact functions with
`numba.njit`.  Keep the code restricted to constructs numba supports
(plain loops, 1-D fancy indexing, `np.linalg.eigh`/`inv`, `np.dot`).
"""

import numpy as np

# dual_simplex exit codes
DS_OPTIMAL = 0
DS_INFEASIBLE = 1
DS_PIVOT_LIMIT = 2

# variable status codes shared with the LP backend
AT_LB = 0
AT_UB = 1
BASIC = 2


def quad_form(mat, w):
    """w' M w for symmetric M."""
    return w @ (mat @ w)


def violation_state(mat, w):
    """Violation -w'Mw and the helper vector m_j = w_j (Mw)_j."""
    t = mat @ w
    return -(w @ t), w * t


def sparsify1_starts(mat, v, perm, min_viol, max_nz):
    """Cyclic-restart sparsification sweeps with incremental violation updates.

    One sweep per starting position over ``perm``; the position just before
    the start is never zeroed.  An entry is zeroed only while the remaining
    violation stays strictly above ``min_viol``.  A sweep's vector is kept
    only if it ends with fewer than ``max_nz`` nonzeros.  Returns the kept
    vectors stacked in a (count, d) array.
    """
    d = v.shape[0]
    out = np.zeros((d, d))
    n_out = 0
    for s in range(d):
        w = v.copy()
        t = mat @ w
        mvec = w * t
        dviol = -(w @ t)
        protected = (s - 1) % d
        for k in range(d):
            pos = (s + k) % d
            if pos == protected:
                continue
            ell = perm[pos]
            wl = w[ell]
            if wl == 0.0:
                continue
            dnew = dviol + 2.0 * mvec[ell] - wl * wl * mat[ell, ell]
            if dnew > min_viol:
                for j in range(d):
                    mvec[j] -= wl * w[j] * mat[j, ell]
                w[ell] = 0.0
                mvec[ell] = 0.0
                dviol = dnew
        nnz = 0
        for i in range(d):
            if w[i] != 0.0:
                nnz += 1
        if nnz < max_nz:
            out[n_out, :] = w
            n_out += 1
    return out[:n_out, :].copy()


def sparsify2_starts(mat, v, perm, min_viol, max_nz):
    """Sparsification sweeps where each candidate is rebuilt from the
    most negative eigenvector of the principal minor on the current support
    before the entry is zeroed.  Same emission rule as sparsify1_starts."""
    d = v.shape[0]
    out = np.zeros((d, d))
    n_out = 0
    for s in range(d):
        w = v.copy()
        protected = (s - 1) % d
        for k in range(d):
            pos = (s + k) % d
            if pos == protected:
                continue
            ell = perm[pos]
            supp = np.flatnonzero(w)
            sz = supp.shape[0]
            if sz == 0:
                break
            minor = np.empty((sz, sz))
            for a in range(sz):
                ia = supp[a]
                for b in range(sz):
                    minor[a, b] = mat[ia, supp[b]]
            evals, evecs = np.linalg.eigh(minor)
            if evals[0] >= 0.0:
                # minor PSD: any sub-support vector has -z'Mz <= 0, cannot pass
                continue
            wb = evecs[:, 0].copy()
            for a in range(sz):
                if abs(wb[a]) > 1e-12:
                    if wb[a] < 0.0:
                        wb = -wb
                    break
            local = -1
            for a in range(sz):
                if supp[a] == ell:
                    local = a
                    break
            if local >= 0:
                wb[local] = 0.0
            q = 0.0
            for a in range(sz):
                if wb[a] != 0.0:
                    for b in range(sz):
                        if wb[b] != 0.0:
                            q += wb[a] * minor[a, b] * wb[b]
            if -q > min_viol:
                wnew = np.zeros(d)
                for a in range(sz):
                    wnew[supp[a]] = wb[a]
                w = wnew
        nnz = 0
        for i in range(d):
            if w[i] != 0.0:
                nnz += 1
        if nnz < max_nz:
            out[n_out, :] = w
            n_out += 1
    return out[:n_out, :].copy()


def dual_simplex(A, obj_min, lb, ub, basis, vstat, xval, dj, Binv,
                 need_refactor, max_pivots, tol_primal, tol_pivot,
                 refactor_every):
    """Bounded-variable dual simplex on  min obj_min'z  s.t.  A x - s = 0.

    The full variable vector is z = (x_0..x_{nc-1}, s_0..s_{m-1}); the slack
    column of row r is -e_r.  ``basis``, ``vstat``, ``xval``, ``dj`` and
    ``Binv`` carry the warm-start state and are updated in place.  Entry
    requires dual feasibility (guaranteed by the caller's cold start and by
    row additions that keep previous duals valid).

    Returns (status, pivot count) with status one of DS_OPTIMAL,
    DS_INFEASIBLE, DS_PIVOT_LIMIT.

    This vectorized form is the fallback path; the compiled twin in
    `_kernels_numba` implements the same pivot rules with explicit loops.
    """
    m, nc = A.shape
    ntot = nc + m

    def refactor():
        B = np.zeros((m, m))
        for i in range(m):
            vi = basis[i]
            if vi < nc:
                B[:, i] = A[:, vi]
            else:
                B[vi - nc, i] = -1.0
        Binv[:, :] = np.linalg.inv(B)
        y = obj_min[basis] @ Binv
        dj[:nc] = obj_min[:nc] - y @ A
        dj[nc:] = y
        dj[basis] = 0.0
        xs = np.where(vstat[:nc] != BASIC, xval[:nc], 0.0)
        rhs = A @ xs
        slack_nb = vstat[nc:] != BASIC
        rhs[slack_nb] -= xval[nc:][slack_nb]
        xval[basis] = -(Binv @ rhs)

    if need_refactor:
        refactor()

    fixed = ub - lb <= 0.0
    pivots = 0
    since_refactor = 0
    degen_streak = 0
    bland = False
    while True:
        # leaving variable: most violated basic bound (Bland: lowest var index)
        xb = xval[basis]
        over = xb - ub[basis]
        under = lb[basis] - xb
        viol = np.maximum(over, under)
        if bland:
            hit = np.flatnonzero(viol > tol_primal)
            if hit.size == 0:
                return DS_OPTIMAL, pivots
            r_pick = int(hit[np.argmin(basis[hit])])
        else:
            r_pick = int(np.argmax(viol))
            if viol[r_pick] <= tol_primal:
                return DS_OPTIMAL, pivots
        sigma = 1.0 if over[r_pick] >= under[r_pick] else -1.0

        p = basis[r_pick]
        rho = Binv[r_pick, :]
        alpha = np.empty(ntot)
        alpha[:nc] = rho @ A
        alpha[nc:] = -rho

        abar = sigma * alpha
        eligible = np.ones(ntot, dtype=bool)
        eligible[basis] = False
        eligible &= ~fixed
        at_lb = vstat == AT_LB
        eligible &= np.where(at_lb, abar > tol_pivot, abar < -tol_pivot)
        if not eligible.any():
            if since_refactor > 0:
                refactor()
                since_refactor = 0
                continue
            return DS_INFEASIBLE, pivots
        ratios = np.full(ntot, np.inf)
        ratios[eligible] = np.maximum(dj[eligible] / abar[eligible], 0.0)
        best_ratio = ratios.min()
        cands = ratios <= best_ratio + 1e-12
        if bland:
            q = int(np.flatnonzero(cands)[0])
        else:
            q = int(np.argmax(np.where(cands, np.abs(abar), -1.0)))
        alpha_q = alpha[q]

        if q < nc:
            beta = Binv @ A[:, q]
        else:
            beta = -Binv[:, q - nc].copy()

        # primal step: drive the leaving variable onto its violated bound
        bound_t = ub[p] if sigma > 0.0 else lb[p]
        delta = (xval[p] - bound_t) / alpha_q
        if delta != 0.0:
            xval[basis] -= delta * beta
        xval[q] = xval[q] + delta
        xval[p] = bound_t

        # dual step
        theta = dj[q] / alpha_q
        if theta != 0.0:
            dj -= theta * alpha
        dj[q] = 0.0

        # product-form update of the basis inverse
        prow = Binv[r_pick, :] / beta[r_pick]
        beta_masked = beta.copy()
        beta_masked[r_pick] = 0.0
        Binv -= np.outer(beta_masked, prow)
        Binv[r_pick, :] = prow

        basis[r_pick] = q
        vstat[q] = BASIC
        vstat[p] = AT_UB if sigma > 0.0 else AT_LB

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
