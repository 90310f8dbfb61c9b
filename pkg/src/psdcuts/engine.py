"""The cutting-plane loop.

Each iteration solves the LP, assembles the moment matrix from the
optimum, separates violated cuts per strategy, optionally purges slack
cuts, and adds the new rows.  The loop stops on PSD feasibility, the
iteration cap, the wall-clock limit, or tailing off.  Strategies:

    s        dense eigenvector cuts only
    sparse1  dense cuts + cyclic-restart sparsified cuts
    sparse2  dense cuts + eigen-rebuilt sparsified cuts
    s1m      sparse1 plus principal-minor cuts on each sparse support
    s2m      sparse2 plus principal-minor cuts on each sparse support
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import cuts as cuts_mod
from . import lp
from .cuts import (Cut, CutPool, SparsifyParams, cut_from_vector, minor_cuts,
                   purge, separate_psd, sparsify1, sparsify2)
from .linalg import eigh_sorted
from .model import ExtendedModel

STRATEGIES = ("s", "s1m", "s2m", "sparse1", "sparse2")

STATUS_ITERATION_LIMIT = "iteration-limit"
STATUS_TIME_LIMIT = "time-limit"
STATUS_TAILING_OFF = "tailing-off"
STATUS_PSD_FEASIBLE = "psd-feasible"
STATUS_LP_ERROR = "lp-error"

TRACE_HEADER = "iter,seconds,objective,cuts_added,cuts_purged,pool_size,min_eig"


@dataclass
class LoopConfig:
    strategy: str = "s2m"
    max_iterations: int = 1000
    time_limit_seconds: float | None = 600.0
    tail_window: int = 50
    tail_eps: float = 1e-4
    purge_eps: float | None = 1e-4
    slack_tol: float = 1e-7
    eig_tol: float = 1e-8
    pct_viol: float | None = None   # None -> tuned default for the scheme
    pct_nz: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; "
                             f"expected one of {STRATEGIES}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.time_limit_seconds is not None and self.time_limit_seconds <= 0:
            raise ValueError("time_limit_seconds must be positive")
        if self.tail_window < 1:
            raise ValueError("tail_window must be positive")

    @property
    def sparsify_scheme(self) -> int | None:
        return {"s": None, "sparse1": 1, "s1m": 1,
                "sparse2": 2, "s2m": 2}[self.strategy]

    @property
    def with_minor(self) -> bool:
        return self.strategy in ("s1m", "s2m")

    def sparsify_params(self) -> SparsifyParams | None:
        scheme = self.sparsify_scheme
        if scheme is None:
            return None
        base = SparsifyParams.defaults_for(scheme, seed=self.seed)
        return SparsifyParams(
            pct_viol=self.pct_viol if self.pct_viol is not None else base.pct_viol,
            pct_nz=self.pct_nz if self.pct_nz is not None else base.pct_nz,
            seed=self.seed)


@dataclass
class IterationRecord:
    iteration: int
    seconds: float
    objective: float
    cuts_added: dict[str, int]
    cuts_purged: int
    pool_size: int
    min_eig: float

    @property
    def total_added(self) -> int:
        return sum(self.cuts_added.values())


@dataclass
class RunTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: str = ""
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.records]

    @property
    def final_objective(self) -> float:
        return self.records[-1].objective

    def to_csv(self) -> str:
        lines = [TRACE_HEADER]
        for r in self.records:
            lines.append(f"{r.iteration},{r.seconds!r},{r.objective!r},"
                         f"{r.total_added},{r.cuts_purged},{r.pool_size},"
                         f"{r.min_eig!r}")
        lines.append(f"# status={self.status}")
        for key in sorted(self.meta):
            lines.append(f"# {key}={self.meta[key]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "RunTrace":
        trace = cls()
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, val = body.split("=", 1)
                    if key.strip() == "status":
                        trace.status = val.strip()
                    else:
                        trace.meta[key.strip()] = val.strip()
                continue
            if line.startswith("iter,"):
                continue
            parts = line.split(",")
            trace.records.append(IterationRecord(
                iteration=int(parts[0]), seconds=float(parts[1]),
                objective=float(parts[2]),
                cuts_added={"total": int(parts[3])},
                cuts_purged=int(parts[4]), pool_size=int(parts[5]),
                min_eig=float(parts[6])))
        return trace


def tailing_off(z_history, window: int = 50, eps: float = 1e-4) -> bool:
    """Stagnation rule: true once more than ``window`` objectives exist and
    z_t >= (1 - eps) * z_{t-window}."""
    t = len(z_history)
    if t <= window:
        return False
    return z_history[-1] >= (1.0 - eps) * z_history[-1 - window]


def _separate(mm, eigvals, eigvecs, config: LoopConfig, params, rng) -> list[Cut]:
    """All violated cuts for one LP optimum, per the configured strategy."""
    out: list[Cut] = []
    neg = [k for k in range(eigvals.size) if eigvals[k] < -config.eig_tol]
    for k in neg:
        out.append(cut_from_vector(eigvecs[:, k], cuts_mod.PSDCUT,
                                   violation=-float(eigvals[k])))
    scheme = config.sparsify_scheme
    if scheme is not None:
        sparsifier = sparsify1 if scheme == 1 else sparsify2
        prov = cuts_mod.SPARSE1 if scheme == 1 else cuts_mod.SPARSE2
        for k in neg:
            vec = np.ascontiguousarray(eigvecs[:, k])
            for w in sparsifier(vec, mm, params, rng=rng):
                viol = -float(w @ mm.mat @ w)
                out.append(cut_from_vector(w, prov, violation=viol))
                if config.with_minor:
                    out.extend(minor_cuts(w, mm, eig_tol=config.eig_tol))
    return out


def run(model: ExtendedModel, config: LoopConfig | None = None,
        backend: lp.LpBackend | None = None,
        cut_sink: list | None = None) -> RunTrace:
    """Drive the cutting-plane loop; returns the per-iteration trace.

    The backend defaults to the reference dual simplex.  When ``cut_sink``
    is a list, every cut actually added to the LP is appended to it.
    """
    config = config or LoopConfig()
    backend = backend or lp.DenseSimplexBackend()
    backend.load(model.obj, model.col_lb, model.col_ub)
    perm_handles = backend.add_rows(model.rows, model.row_lb, model.row_ub)

    params = config.sparsify_params()
    seed_seq = np.random.SeedSequence(config.seed)
    pool = CutPool()
    trace = RunTrace(meta={"strategy": config.strategy,
                           "seed": str(config.seed),
                           "permanent_rows": str(len(perm_handles))})
    if model.name:
        trace.meta["instance"] = model.name

    z_history: list[float] = []
    z_prev: float | None = None
    warned_sign = False
    t0 = time.perf_counter()
    t = 0
    while True:
        sol = backend.solve()
        if sol.status != lp.OPTIMAL:
            trace.status = STATUS_LP_ERROR
            trace.meta["lp_status"] = sol.status
            break
        t += 1
        z_t = sol.objective
        z_history.append(z_t)
        elapsed = time.perf_counter() - t0
        mm = model.moment_from_columns(sol.x)
        eigvals, eigvecs = eigh_sorted(mm.mat)
        min_eig = float(eigvals[0])

        def record(added=None, purged=0):
            trace.records.append(IterationRecord(
                iteration=t, seconds=elapsed, objective=z_t,
                cuts_added=dict(added or {}), cuts_purged=purged,
                pool_size=len(pool), min_eig=min_eig))

        if (config.time_limit_seconds is not None
                and elapsed >= config.time_limit_seconds):
            record()
            trace.status = STATUS_TIME_LIMIT
            break
        if tailing_off(z_history, config.tail_window, config.tail_eps):
            record()
            trace.status = STATUS_TAILING_OFF
            break
        if min_eig >= -config.eig_tol:
            record()
            trace.status = STATUS_PSD_FEASIBLE
            break
        if t >= config.max_iterations:
            record()
            trace.status = STATUS_ITERATION_LIMIT
            break

        rng = np.random.default_rng(seed_seq.spawn(1)[0])
        new_cuts = _separate(mm, eigvals, eigvecs, config, params, rng)

        if (not warned_sign and z_t <= 0.0
                and (config.purge_eps is not None or config.tail_window)):
            warnings.warn(
                "objective is non-positive; the multiplicative purge and "
                "tailing-off tests assume positive bounds", RuntimeWarning,
                stacklevel=2)
            warned_sign = True

        purged = 0
        if config.purge_eps is not None and z_prev is not None and len(pool):
            slacks = backend.activities(pool.handles) - np.array(
                [-c.constant for c in pool.cuts])
            removed = purge(pool, slacks, z_t, z_prev,
                            purge_eps=config.purge_eps,
                            slack_tol=config.slack_tol)
            if removed:
                backend.remove_rows(removed)
                purged = len(removed)

        added: dict[str, int] = {}
        fresh = pool.select_new(c for c in new_cuts if not c.is_constant)
        if fresh:
            block = np.empty((len(fresh), model.num_cols))
            lo = np.empty(len(fresh))
            for idx, cut in enumerate(fresh):
                block[idx], lo[idx], _ = cut.dense_row(model)
            handles = backend.add_rows(block, lo, np.full(len(fresh), np.inf))
            for cut, handle in zip(fresh, handles):
                pool.add(cut, handle)
                added[cut.provenance] = added.get(cut.provenance, 0) + 1
                if cut_sink is not None:
                    cut_sink.append(cut)
        if not added:
            # every separated direction already sits in the pool: the LP is
            # PSD-feasible up to the solver tolerance and cannot be tightened
            # further by this separator
            record(purged=purged)
            trace.meta["note"] = "separation-exhausted"
            trace.status = STATUS_PSD_FEASIBLE
            break

        record(added=added, purged=purged)
        z_prev = z_t

    assert backend.num_rows >= len(perm_handles), "permanent rows were dropped"
    trace.meta.setdefault("iterations", str(len(trace.records)))
    return trace
