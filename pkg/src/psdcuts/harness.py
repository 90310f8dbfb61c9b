"""Benchmark layer: gap accounting, pairwise algorithm comparison,
parameter tuning, and synthetic box-QP instances.

Bounds are compared through the share of the initial relaxation gap they
close; two results are deemed different at a checkpoint only when their
closed gaps differ by at least g percentage points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .engine import RunTrace
from .model import QcqpProblem

CLOCKED_TIMES = (1.0, 2.0, 5.0, 10.0, 20.0, 30.0)

OPT_SUPPLIED = "supplied"
OPT_BRUTE_FORCED = "brute-forced"


class HarnessError(ValueError):
    pass


@dataclass
class GapRecord:
    """Initial bound (rlt), a checkpoint bound (bnd), and the reference
    optimum (opt, supplied or brute-forced)."""

    rlt: float
    bnd: float
    opt: float
    opt_provenance: str = OPT_SUPPLIED


def gap_closed(rec: GapRecord) -> float:
    """Percentage of the initial gap closed: 100 (rlt - bnd) / (rlt - opt).
    Undefined when the initial gap is zero.  Values outside [0, 100] signal
    an invalid run and are flagged with a warning."""
    if rec.rlt == rec.opt:
        raise HarnessError("zero initial gap: gap closed is undefined")
    val = 100.0 * (rec.rlt - rec.bnd) / (rec.rlt - rec.opt)
    if val < -1e-7 or val > 100.0 + 1e-7:
        warnings.warn(f"gap closed {val:.4f}% outside [0, 100]; "
                      "bound or optimum looks invalid", RuntimeWarning,
                      stacklevel=2)
    return val


Checkpoint = tuple[str, float]  # ("iter", k) or ("time", seconds)


def parse_checkpoints(spec: str) -> list[Checkpoint]:
    """Parse 'iter:5,time:30,...' (bare integers count as iterations)."""
    out: list[Checkpoint] = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            kind, val = tok.split(":", 1)
            kind = kind.strip().lower()
            if kind not in ("iter", "time"):
                raise HarnessError(f"unknown checkpoint kind {kind!r}")
            out.append((kind, float(val)))
        else:
            out.append(("iter", float(tok)))
    if not out:
        raise HarnessError("empty checkpoint list")
    return out


def bound_at(trace: RunTrace, checkpoint: Checkpoint) -> float | None:
    """Objective available at the checkpoint, or None when the trace does
    not reach it (run ended in fewer iterations, or no bound existed yet /
    the run had already stopped at that time)."""
    kind, val = checkpoint
    if not trace.records:
        return None
    if kind == "iter":
        k = int(val)
        for r in trace.records:
            if r.iteration == k:
                return r.objective
        return None
    last = None
    for r in trace.records:
        if r.seconds <= val:
            last = r.objective
    if last is None or trace.records[-1].seconds < val:
        return None
    return last


@dataclass
class ComparisonRow:
    checkpoint: Checkpoint
    a_wins: float      # percentages over the whole instance set
    b_wins: float
    tie: float
    inc: float
    impr: float        # mean gap improvement of B over A on comparable instances
    n_comparable: int


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow]
    instances: list[str]
    g: float

    def to_csv(self) -> str:
        lines = ["checkpoint,A_wins,B_wins,tie,inc,impr"]
        for r in self.rows:
            label = f"{r.checkpoint[0]}:{r.checkpoint[1]:g}"
            impr = "" if np.isnan(r.impr) else repr(r.impr)
            lines.append(f"{label},{r.a_wins!r},{r.b_wins!r},{r.tie!r},"
                         f"{r.inc!r},{impr}")
        return "\n".join(lines) + "\n"


def compare(traces_a: Mapping[str, tuple[RunTrace, GapRecord]],
            traces_b: Mapping[str, tuple[RunTrace, GapRecord]],
            checkpoints: Sequence[Checkpoint],
            g: float = 1.0) -> ComparisonReport:
    """Win/tie/incomparable accounting between two algorithms on a common
    instance set.  At each checkpoint an instance is incomparable when
    either trace lacks the checkpoint; otherwise the side whose closed gap
    exceeds the other's by at least g percentage points wins."""
    names_a, names_b = set(traces_a), set(traces_b)
    if names_a != names_b:
        missing = sorted(names_a ^ names_b)
        raise HarnessError(f"instance sets differ between A and B: {missing}")
    names = sorted(names_a)
    if not names:
        raise HarnessError("empty instance set")

    rows = []
    for cp in checkpoints:
        n_a = n_b = n_tie = n_inc = 0
        diffs = []
        for name in names:
            tr_a, rec_a = traces_a[name]
            tr_b, rec_b = traces_b[name]
            ba = bound_at(tr_a, cp)
            bb = bound_at(tr_b, cp)
            if ba is None or bb is None or rec_a.rlt == rec_a.opt:
                n_inc += 1
                continue
            ga = gap_closed(GapRecord(rec_a.rlt, ba, rec_a.opt))
            gb = gap_closed(GapRecord(rec_b.rlt, bb, rec_b.opt))
            diffs.append(gb - ga)
            if ga - gb >= g:
                n_a += 1
            elif gb - ga >= g:
                n_b += 1
            else:
                n_tie += 1
        total = len(names)
        rows.append(ComparisonRow(
            checkpoint=cp,
            a_wins=100.0 * n_a / total, b_wins=100.0 * n_b / total,
            tie=100.0 * n_tie / total, inc=100.0 * n_inc / total,
            impr=float(np.mean(diffs)) if diffs else float("nan"),
            n_comparable=len(diffs)))
    return ComparisonReport(rows=rows, instances=names, g=g)


# -- parameter tuning --------------------------------------------------------

Evaluator = Callable[[object, float, float], Sequence[float]]


def tune(instances: Sequence, evaluator: Evaluator,
         v_range: tuple[float, float] = (0.0, 1.0),
         n_range: tuple[float, float] = (0.0, 1.0),
         g: float = 1.0, round_cap: int = 20) -> tuple[float, float]:
    """Grid search for (pct_viol, pct_nz).

    Each round evaluates the 3x3 grid {lo, mid, up} x {lo, mid, up}; the
    evaluator returns the closed gaps of one run at the clocked times.  A
    grid point beats another by collecting more per-time wins (threshold g)
    across all instances and times; the point winning the most pairwise
    matchups is the round's best (ties resolved toward the current center).
    Ranges are recentered on the winner and halved until the winner is the
    center and the spans are within (0.2, 0.1).
    """
    if not instances:
        raise HarnessError("tune needs a nonempty instance set")
    v_lo, v_up = map(float, v_range)
    n_lo, n_up = map(float, n_range)
    if not (0 <= v_lo <= v_up <= 1 and 0 <= n_lo <= n_up <= 1):
        raise HarnessError("tuning ranges must satisfy 0 <= lo <= up <= 1")

    cache: dict[tuple, list[float]] = {}

    def evaluate(inst_id, inst, v, n):
        key = (inst_id, round(v, 12), round(n, 12))
        if key not in cache:
            cache[key] = [float(x) for x in evaluator(inst, v, n)]
        return cache[key]

    for _ in range(round_cap):
        v_mid = (v_lo + v_up) / 2.0
        n_mid = (n_lo + n_up) / 2.0
        grid = [(v, n) for v in (v_lo, v_mid, v_up) for n in (n_lo, n_mid, n_up)]
        grid = list(dict.fromkeys(grid))  # collapse degenerate ranges
        results = {combo: [evaluate(i, inst, *combo)
                           for i, inst in enumerate(instances)]
                   for combo in grid}

        scores = {combo: 0 for combo in grid}
        for i1 in range(len(grid)):
            for i2 in range(i1 + 1, len(grid)):
                c1, c2 = grid[i1], grid[i2]
                w1 = w2 = 0
                for g1, g2 in zip(results[c1], results[c2]):
                    for a, b in zip(g1, g2):
                        if np.isnan(a) or np.isnan(b):
                            continue
                        if a - b >= g:
                            w1 += 1
                        elif b - a >= g:
                            w2 += 1
                if w1 > w2:
                    scores[c1] += 1
                elif w2 > w1:
                    scores[c2] += 1

        center = (v_mid, n_mid)
        best_score = max(scores.values())
        candidates = [c for c in grid if scores[c] == best_score]
        if center in candidates:
            best = center
        else:
            candidates.sort(key=lambda c: (abs(c[0] - v_mid) + abs(c[1] - n_mid),
                                           grid.index(c)))
            best = candidates[0]

        if best == center and (v_up - v_lo) <= 0.2 and (n_up - n_lo) <= 0.1:
            return center

        v_span = (v_up - v_lo) / 2.0
        n_span = (n_up - n_lo) / 2.0
        v_lo = min(max(best[0] - v_span / 2.0, 0.0), 1.0)
        v_up = min(max(best[0] + v_span / 2.0, 0.0), 1.0)
        n_lo = min(max(best[1] - n_span / 2.0, 0.0), 1.0)
        n_up = min(max(best[1] + n_span / 2.0, 0.0), 1.0)
    raise HarnessError(f"tuning did not settle within {round_cap} rounds")


# -- instances and reference optima -------------------------------------------

def gen_boxqp(n: int, density: float, seed: int) -> QcqpProblem:
    """Random box-QP: maximize x'Qx + a'x over the unit box.  Q is symmetric
    with nonzero integer entries in [-50, 50]; exactly round(density * pairs)
    off-diagonal pairs are populated and the diagonal is always dense.
    Deterministic in the seed."""
    if n < 2:
        raise HarnessError("gen_boxqp needs n >= 2")
    if not (0.0 < density <= 1.0):
        raise HarnessError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)

    def nonzero_ints(size):
        return rng.integers(1, 51, size=size) * rng.choice((-1, 1), size=size)

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    k = int(round(density * len(pairs)))
    chosen = rng.choice(len(pairs), size=k, replace=False)
    Q = np.zeros((n, n))
    vals = nonzero_ints(k)
    for idx, val in zip(chosen, vals):
        i, j = pairs[idx]
        Q[i, j] = Q[j, i] = val
    Q[np.diag_indices(n)] = nonzero_ints(n)
    a = rng.integers(-50, 51, size=n).astype(float)
    name = f"boxqp_n{n}_d{int(round(density * 100)):03d}_s{seed}"
    return QcqpProblem.create(Q=[Q], a=[a], lx=np.zeros(n), ux=np.ones(n),
                              name=name)


def _coordinate_ascent(problem: QcqpProblem, x: np.ndarray,
                       max_sweeps: int = 200) -> tuple[np.ndarray, float]:
    """Exact per-coordinate maximization of the quadratic over the box."""
    Q, a = problem.Q[0], problem.a[0]
    lx, ux = problem.lx, problem.ux
    x = x.copy()
    best = problem.objective_value(x)
    for _ in range(max_sweeps):
        improved = False
        for i in range(problem.n):
            q2 = Q[i, i]
            q1 = 2.0 * (Q[i] @ x - Q[i, i] * x[i]) + a[i]
            cands = [lx[i], ux[i]]
            if q2 < 0.0:
                v = -q1 / (2.0 * q2)
                if lx[i] < v < ux[i]:
                    cands.append(v)
            vals = [q2 * t * t + q1 * t for t in cands]
            t_new = cands[int(np.argmax(vals))]
            if t_new != x[i]:
                old = x[i]
                x[i] = t_new
                new_obj = problem.objective_value(x)
                if new_obj > best + 1e-12:
                    best = new_obj
                    improved = True
                else:
                    x[i] = old
        if not improved:
            break
    return x, best


def brute_force_opt(problem: QcqpProblem, grid_step: float = 0.01) -> float:
    """Reference optimum for tiny unconstrained instances: dense grid scan
    over the box followed by exact coordinate ascent from the best grid
    points.  Only supports n <= 3, p = 0, m = 0."""
    if problem.n > 3:
        raise HarnessError("brute_force_opt supports n <= 3 only")
    if problem.p or problem.m:
        raise HarnessError("brute_force_opt supports box-constrained "
                           "objectives only (p = 0, m = 0)")
    axes = []
    for i in range(problem.n):
        count = max(2, int(round((problem.ux[i] - problem.lx[i]) / grid_step)) + 1)
        axes.append(np.linspace(problem.lx[i], problem.ux[i], count))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    Q, a = problem.Q[0], problem.a[0]
    vals = np.einsum("pi,ij,pj->p", pts, Q, pts) + pts @ a
    order = np.argsort(vals)[::-1][:32]
    best = float(vals[order[0]])
    for idx in order:
        _, val = _coordinate_ascent(problem, pts[idx])
        best = max(best, val)
    return best


def best_feasible_value(problem: QcqpProblem, starts: int = 100,
                        seed: int = 0) -> float:
    """Best-known objective via multi-start exact coordinate ascent; serves
    as the reference optimum when the true one is unavailable."""
    if problem.p or problem.m:
        raise HarnessError("local search supports box-constrained "
                           "objectives only (p = 0, m = 0)")
    rng = np.random.default_rng(seed)
    best = -np.inf
    points = [problem.lx.copy(), problem.ux.copy(),
              (problem.lx + problem.ux) / 2.0]
    points += [rng.uniform(problem.lx, problem.ux) for _ in range(starts)]
    for x0 in points:
        _, val = _coordinate_ascent(problem, x0)
        best = max(best, val)
    return float(best)
