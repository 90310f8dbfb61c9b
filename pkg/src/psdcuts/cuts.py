"""Spectral cut generation and the cut pool.

A vector v in R^(n+1) induces the valid inequality v' M v >= 0 over the
moment matrix M = [[1, x'], [x, X]]; expanded into LP coordinates that is

    2*v0*v_i  on x_i,   v_i^2 on X_ii,   2*v_i*v_j on X_ij (i<j),
    with constant v0^2, sense >= 0.

Eigenvectors of negative eigenvalues of the current M* give violated
cuts.  Two sparsification schemes thin those dense vectors while keeping
a prescribed fraction of the violation, and principal minors of M* on
the sparse supports contribute further cuts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linalg import eigh_sorted, lift_vector, principal_minor
from .model import MomentMatrix

PSDCUT = "PSDCUT"
SPARSE1 = "SPARSE1"
SPARSE2 = "SPARSE2"
MINOR = "MINOR"

DEFAULT_EIG_TOL = 1e-8
#: tuned (pct_viol, pct_nz) defaults per sparsification scheme
SPARSIFY_DEFAULTS = {1: (0.6, 0.2), 2: (0.6, 0.4)}


class CutError(ValueError):
    pass


@dataclass(frozen=True)
class Cut:
    """One linear inequality generated from a vector over the moment matrix."""

    vector: np.ndarray          # (n+1,) generating vector
    provenance: str             # PSDCUT | SPARSE1 | SPARSE2 | MINOR
    violation: float            # -v'M*v at the point that was separated

    @property
    def constant(self) -> float:
        return float(self.vector[0] ** 2)

    @property
    def x_coeffs(self) -> np.ndarray:
        return 2.0 * self.vector[0] * self.vector[1:]

    def pair_coeff(self, i: int, j: int) -> float:
        v = self.vector
        if i == j:
            return float(v[i + 1] ** 2)
        return float(2.0 * v[i + 1] * v[j + 1])

    @property
    def is_constant(self) -> bool:
        """True when only the border entry is nonzero (row '1 >= 0')."""
        return not np.any(self.vector[1:])

    def row_value(self, x, X) -> float:
        """Evaluate constant + linear part at a point in (x, X) space; the
        cut reads row_value >= 0."""
        x = np.asarray(x, dtype=float)
        X = np.asarray(X, dtype=float)
        v = self.vector
        val = self.constant + float(self.x_coeffs @ x)
        n = x.size
        for i in range(n):
            val += v[i + 1] ** 2 * X[i, i]
            for j in range(i + 1, n):
                val += 2.0 * v[i + 1] * v[j + 1] * X[i, j]
        return val

    def dense_row(self, model) -> tuple[np.ndarray, float, float]:
        """LP row (coeffs, lo, hi) over the model's columns: linear part
        >= -constant."""
        row = np.zeros(model.num_cols)
        row[:model.n] = self.x_coeffs
        support = np.flatnonzero(self.vector[1:])
        for a, i in enumerate(support):
            for j in support[a:]:
                row[model.pair_col(int(i), int(j))] += self.pair_coeff(int(i), int(j))
        return row, -self.constant, np.inf


def cut_from_vector(v: np.ndarray, provenance: str = PSDCUT,
                    violation: float = float("nan")) -> Cut:
    """Wrap a generating vector as a Cut; rejects the zero vector."""
    v = np.asarray(v, dtype=float).copy()
    if not np.any(v):
        raise CutError("zero vector generates no cut")
    v.setflags(write=False)
    return Cut(vector=v, provenance=provenance, violation=float(violation))


def separate_psd(mm: MomentMatrix, eig_tol: float = DEFAULT_EIG_TOL) -> list[Cut]:
    """One dense cut per eigenvalue below -eig_tol of the moment matrix;
    empty when the matrix is PSD to tolerance.  Violations equal the
    negated eigenvalues (unit eigenvectors)."""
    vals, vecs = eigh_sorted(mm.mat)
    out = []
    for k in range(vals.size):
        if vals[k] < -eig_tol:
            out.append(cut_from_vector(vecs[:, k], PSDCUT, violation=-float(vals[k])))
    return out


@dataclass
class SparsifyParams:
    """Knobs of the sparsification sweep.  min_viol and max_nz are derived
    per call: min_viol = (input violation) * pct_viol, max_nz =
    floor(length * pct_nz)."""

    pct_viol: float = 0.6
    pct_nz: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.pct_viol <= 1.0 and 0.0 <= self.pct_nz <= 1.0):
            raise CutError("pct_viol and pct_nz must lie in [0, 1]")

    @classmethod
    def defaults_for(cls, scheme: int, seed: int = 0) -> "SparsifyParams":
        pv, pn = SPARSIFY_DEFAULTS[scheme]
        return cls(pct_viol=pv, pct_nz=pn, seed=seed)


def violation_update(d: float, m: np.ndarray, w: np.ndarray, ell: int,
                     mm: MomentMatrix | np.ndarray) -> tuple[float, np.ndarray]:
    """Constant-time violation update for zeroing entry ell of w.

    Given d = -w'Mw and m_j = w_j (Mw)_j, returns the violation d' and the
    helper vector m' for w with w[ell] := 0, without touching the dense
    quadratic form.
    """
    mat = mm.mat if isinstance(mm, MomentMatrix) else np.asarray(mm, dtype=float)
    wl = float(w[ell])
    d_new = d + 2.0 * float(m[ell]) - wl * wl * float(mat[ell, ell])
    m_new = m - wl * (w * mat[:, ell])
    m_new[ell] = 0.0
    return d_new, m_new


def _sparsify(scheme: int, v, mm: MomentMatrix, params: SparsifyParams,
              rng: np.random.Generator | None) -> list[np.ndarray]:
    v = np.ascontiguousarray(v, dtype=float)
    viol0 = -float(_kernels.quad_form(mm.mat, v))
    if viol0 <= 0.0:
        raise CutError("sparsify requires a violated input vector (v'Mv < 0)")
    length = v.size
    max_nz = int(np.floor(length * params.pct_nz))
    if max_nz <= 0:
        return []
    min_viol = viol0 * params.pct_viol
    if rng is None:
        rng = np.random.default_rng(params.seed)
    perm = rng.permutation(length).astype(np.int64)
    fn = _kernels.sparsify1_starts if scheme == 1 else _kernels.sparsify2_starts
    raw = fn(mm.mat, v, perm, min_viol, max_nz)
    return dedup_vectors([raw[i] for i in range(raw.shape[0])])


def sparsify1(v, mm: MomentMatrix, params: SparsifyParams,
              rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Cyclic-restart sparsification: one sweep per starting position over
    a random permutation, the entry before the start never zeroed; keeps a
    sweep's vector only if nnz < max_nz, deduplicated across starts."""
    return _sparsify(1, v, mm, params, rng)


def sparsify2(v, mm: MomentMatrix, params: SparsifyParams,
              rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Like sparsify1, but each candidate is rebuilt as the most negative
    eigenvector of the principal minor on the current support before the
    entry is zeroed."""
    return _sparsify(2, v, mm, params, rng)


def minor_cuts(w, mm: MomentMatrix, eig_tol: float = DEFAULT_EIG_TOL) -> list[Cut]:
    """Cuts from negative eigenpairs of the moment matrix's principal minor
    on the support of w, lifted back to full dimension."""
    w = np.asarray(w, dtype=float)
    support = np.flatnonzero(w)
    if support.size == 0:
        raise CutError("minor_cuts needs a vector with nonempty support")
    minor = principal_minor(mm.mat, support)
    vals, vecs = eigh_sorted(minor)
    out = []
    for k in range(vals.size):
        if vals[k] < -eig_tol:
            lifted = lift_vector(vecs[:, k], support, mm.mat.shape[0])
            out.append(cut_from_vector(lifted, MINOR, violation=-float(vals[k])))
    return out


def _norm_key(v: np.ndarray) -> tuple[tuple[int, ...], np.ndarray]:
    support = tuple(int(i) for i in np.flatnonzero(v))
    u = v / np.linalg.norm(v)
    for i in support:
        if abs(u[i]) > 1e-12:
            if u[i] < 0.0:
                u = -u
            break
    return support, u


def dedup_vectors(vectors, tol: float = 1e-12) -> list[np.ndarray]:
    """Drop vectors equal to an earlier one up to scaling/sign (compared
    after unit normalization, entrywise within tol)."""
    kept: list[np.ndarray] = []
    groups: dict[tuple[int, ...], list[np.ndarray]] = {}
    for v in vectors:
        support, u = _norm_key(v)
        bucket = groups.setdefault(support, [])
        if any(np.max(np.abs(u - other)) <= tol for other in bucket):
            continue
        bucket.append(u)
        kept.append(v)
    return kept


class CutPool:
    """Added cut rows with their LP handles; permanent rows never enter.

    Insertion drops duplicates of cuts already in the pool (same support
    and, after unit normalization, coefficients within 1e-12).
    """

    def __init__(self):
        self.cuts: list[Cut] = []
        self.handles: list[int] = []
        self._groups: dict[tuple[int, ...], list[np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self.cuts)

    def is_duplicate(self, cut: Cut) -> bool:
        support, u = _norm_key(cut.vector)
        return any(np.max(np.abs(u - other)) <= 1e-12
                   for other in self._groups.get(support, []))

    def select_new(self, candidates) -> list[Cut]:
        """Candidates that duplicate neither the pool nor an earlier
        candidate, in order; nothing is inserted."""
        staged: dict[tuple[int, ...], list[np.ndarray]] = {}
        fresh = []
        for cut in candidates:
            support, u = _norm_key(cut.vector)
            pool_bucket = self._groups.get(support, [])
            batch_bucket = staged.setdefault(support, [])
            if any(np.max(np.abs(u - other)) <= 1e-12
                   for other in pool_bucket + batch_bucket):
                continue
            batch_bucket.append(u)
            fresh.append(cut)
        return fresh

    def add(self, cut: Cut, handle: int) -> bool:
        support, u = _norm_key(cut.vector)
        bucket = self._groups.setdefault(support, [])
        if any(np.max(np.abs(u - other)) <= 1e-12 for other in bucket):
            return False
        bucket.append(u)
        self.cuts.append(cut)
        self.handles.append(handle)
        return True

    def counts_by_provenance(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.cuts:
            out[c.provenance] = out.get(c.provenance, 0) + 1
        return out

    def _drop(self, indices: list[int]) -> list[int]:
        removed = [self.handles[i] for i in indices]
        keep = [i for i in range(len(self.cuts)) if i not in set(indices)]
        self.cuts = [self.cuts[i] for i in keep]
        self.handles = [self.handles[i] for i in keep]
        self._groups = {}
        for c in self.cuts:
            support, u = _norm_key(c.vector)
            self._groups.setdefault(support, []).append(u)
        return removed


def purge(pool: CutPool, slacks: np.ndarray, z_t: float, z_prev: float,
          purge_eps: float = 1e-4, slack_tol: float = 1e-7) -> list[int]:
    """Cut-management rule: when the bound barely moved
    (z_t >= (1 - purge_eps) * z_prev), drop every pooled cut whose row is
    not tight (slack > slack_tol) at the current optimum.  Returns the LP
    handles of the removed rows; the pool is untouched when the trigger
    does not fire."""
    slacks = np.asarray(slacks, dtype=float)
    if slacks.size != len(pool):
        raise CutError(f"got {slacks.size} slacks for a pool of {len(pool)}")
    if not z_t >= (1.0 - purge_eps) * z_prev:
        return []
    drop = [i for i in range(len(pool)) if slacks[i] > slack_tol]
    return pool._drop(drop)
