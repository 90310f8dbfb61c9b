"""Command-line surface: solve / compare / tune / gen-boxqp."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import engine, harness
from . import io as instance_io
from .engine import LoopConfig, RunTrace
from .harness import GapRecord
from .lp import make_backend
from .model import lift


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="psdcuts",
        description="LP outer-approximation of the PSD+RLT relaxation of "
                    "box-bounded QCQPs via spectral cutting planes")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the cutting-plane loop on one instance")
    ps.add_argument("--instance", required=True, help="instance file (.qcqp)")
    ps.add_argument("--strategy", default="s2m", choices=engine.STRATEGIES)
    ps.add_argument("--max-iters", type=int, default=1000)
    ps.add_argument("--time-limit", type=float, default=600.0)
    ps.add_argument("--pct-viol", type=float, default=None,
                    help="violation fraction kept while sparsifying "
                         "(default 0.6)")
    ps.add_argument("--pct-nz", type=float, default=None,
                    help="max nonzero fraction of sparsified cuts "
                         "(default 0.2 for sparse1/s1m, 0.4 for sparse2/s2m)")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--trace", default=None, help="write the iteration trace CSV here")
    ps.add_argument("--opt", type=float, default=None,
                    help="known optimal/best value, recorded for gap reports")
    ps.add_argument("--until-stall", default=None, metavar="EPS,WIN",
                    help="run with no time limit until the bound improves by "
                         "less than EPS (relative) over WIN iterations")
    ps.add_argument("--no-purge", action="store_true",
                    help="disable cut purging")
    ps.add_argument("--backend", default="simplex", choices=("simplex", "scipy"))

    pc = sub.add_parser("compare", help="win/tie accounting between two trace directories")
    pc.add_argument("--a", required=True, help="directory of algorithm A traces")
    pc.add_argument("--b", required=True, help="directory of algorithm B traces")
    pc.add_argument("--g", type=float, default=1.0,
                    help="two gaps differ only beyond this many percentage points")
    pc.add_argument("--checkpoints", default="iter:1,iter:5,iter:10,iter:50",
                    help="comma list of iter:N / time:S checkpoints")
    pc.add_argument("--out", default=None, help="write the report CSV here")

    pt = sub.add_parser("tune", help="grid-tune the sparsification parameters")
    pt.add_argument("--strategy", default="s2m",
                    choices=[s for s in engine.STRATEGIES if s != "s"])
    pt.add_argument("--instances", required=True, help="directory of .qcqp files")
    pt.add_argument("--g", type=float, default=1.0)
    pt.add_argument("--clock-times", default="1,2,5,10,20,30",
                    help="comma list of evaluation times in seconds")
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--v-range", default="0,1", help="pct_viol range lo,hi")
    pt.add_argument("--n-range", default="0,1", help="pct_nz range lo,hi")

    pg = sub.add_parser("gen-boxqp", help="generate a random box-QP instance")
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--density", type=float, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--out", required=True)
    return p


def _cmd_solve(args) -> int:
    problem = instance_io.load(args.instance)
    model = lift(problem)
    kwargs = dict(strategy=args.strategy, max_iterations=args.max_iters,
                  time_limit_seconds=args.time_limit, seed=args.seed,
                  pct_viol=args.pct_viol, pct_nz=args.pct_nz)
    if args.no_purge:
        kwargs["purge_eps"] = None
    if args.until_stall is not None:
        try:
            eps_s, win_s = args.until_stall.split(",")
            eps, win = float(eps_s), int(win_s)
        except ValueError:
            print(f"error: --until-stall expects EPS,WIN, got {args.until_stall!r}",
                  file=sys.stderr)
            return 2
        kwargs["time_limit_seconds"] = None
        kwargs["tail_eps"] = eps
        kwargs["tail_window"] = win
    config = LoopConfig(**kwargs)
    trace = engine.run(model, config, backend=make_backend(args.backend))
    if args.opt is not None:
        trace.meta["opt"] = repr(float(args.opt))
    if trace.records:
        rlt = trace.records[0].objective
        trace.meta["rlt"] = repr(rlt)
        bound = trace.final_objective
        line = (f"{problem.name or args.instance}: status={trace.status} "
                f"iterations={len(trace.records)} rlt={rlt:.6g} bound={bound:.6g}")
        if args.opt is not None and rlt != args.opt:
            gap = harness.gap_closed(GapRecord(rlt, bound, args.opt))
            line += f" gap_closed={gap:.2f}%"
        print(line)
    if args.trace:
        Path(args.trace).write_text(trace.to_csv(), encoding="utf-8")
    if trace.status == engine.STATUS_LP_ERROR:
        print(f"error: LP backend failed "
              f"({trace.meta.get('lp_status', 'unknown')})", file=sys.stderr)
        return 1
    return 0


def _read_trace_dir(path: str) -> dict[str, tuple[RunTrace, GapRecord]]:
    files = sorted(Path(path).glob("*.csv"))
    if not files:
        raise harness.HarnessError(f"no trace CSVs found in {path}")
    out = {}
    for f in files:
        trace = RunTrace.from_csv(f.read_text(encoding="utf-8"))
        if not trace.records:
            raise harness.HarnessError(f"trace {f} has no iterations")
        if "opt" not in trace.meta:
            raise harness.HarnessError(
                f"trace {f} lacks an '# opt=' entry; run solve with --opt")
        rlt = trace.records[0].objective
        rec = GapRecord(rlt=rlt, bnd=trace.final_objective,
                        opt=float(trace.meta["opt"]))
        out[f.stem] = (trace, rec)
    return out


def _cmd_compare(args) -> int:
    traces_a = _read_trace_dir(args.a)
    traces_b = _read_trace_dir(args.b)
    checkpoints = harness.parse_checkpoints(args.checkpoints)
    report = harness.compare(traces_a, traces_b, checkpoints, g=args.g)
    csv_text = report.to_csv()
    print(csv_text, end="")
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    return 0


def _cmd_tune(args) -> int:
    inst_files = sorted(Path(args.instances).glob("*.qcqp"))
    if not inst_files:
        print(f"error: no .qcqp instances in {args.instances}", file=sys.stderr)
        return 1
    clock_times = [float(t) for t in args.clock_times.split(",") if t.strip()]
    problems = [instance_io.load(f) for f in inst_files]
    opts = []
    for f, prob in zip(inst_files, problems):
        sidecar = f.with_suffix(".opt")
        if sidecar.exists():
            opts.append(float(sidecar.read_text().strip()))
        else:
            opts.append(harness.best_feasible_value(prob, seed=args.seed))

    def evaluator(item, pct_viol, pct_nz):
        prob, opt = item
        config = LoopConfig(strategy=args.strategy, seed=args.seed,
                            pct_viol=pct_viol, pct_nz=pct_nz,
                            time_limit_seconds=max(clock_times) + 1.0)
        trace = engine.run(lift(prob), config)
        rlt = trace.records[0].objective
        gaps = []
        for ct in clock_times:
            bnd = harness.bound_at(trace, ("time", ct))
            if bnd is None or rlt == opt:
                gaps.append(float("nan"))
            else:
                gaps.append(harness.gap_closed(GapRecord(rlt, bnd, opt)))
        return gaps

    v_range = tuple(float(t) for t in args.v_range.split(","))
    n_range = tuple(float(t) for t in args.n_range.split(","))
    best_v, best_n = harness.tune(list(zip(problems, opts)), evaluator,
                                  v_range=v_range, n_range=n_range, g=args.g)
    print(f"pct_viol={best_v:.4g} pct_nz={best_n:.4g}")
    return 0


def _cmd_gen_boxqp(args) -> int:
    problem = harness.gen_boxqp(args.n, args.density, args.seed)
    instance_io.save(problem, args.out)
    print(f"wrote {args.out} ({problem.name})")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": _cmd_solve, "compare": _cmd_compare,
                "tune": _cmd_tune, "gen-boxqp": _cmd_gen_boxqp}
    try:
        return handlers[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
