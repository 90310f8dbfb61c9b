import numpy as np
import pytest

import psdcuts as pc
from psdcuts.engine import (STATUS_ITERATION_LIMIT, STATUS_LP_ERROR,
                            STATUS_PSD_FEASIBLE, STATUS_TAILING_OFF,
                            STATUS_TIME_LIMIT, LoopConfig, RunTrace, run,
                            tailing_off)
from psdcuts.lp import DenseSimplexBackend


class TestTailingOff:
    def test_short_history_false(self):
        assert not tailing_off([1.0] * 49, window=50)

    def test_constant_51_true(self):
        assert tailing_off([1.0] * 51, window=50)

    def test_constant_50_false(self):
        # needs window+1 recorded values
        assert not tailing_off([1.0] * 50, window=50)

    def test_threshold_arithmetic(self):
        base = [100.0] * 50
        assert not tailing_off(base + [99.9899], window=50, eps=1e-4)
        assert tailing_off(base + [99.99], window=50, eps=1e-4)

    def test_small_window(self):
        assert tailing_off([5.0, 5.0, 5.0], window=2)
        assert not tailing_off([5.0, 5.0, 1.0], window=2)


class TestLoopConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            LoopConfig(strategy="nope")
        with pytest.raises(ValueError):
            LoopConfig(max_iterations=0)
        with pytest.raises(ValueError):
            LoopConfig(time_limit_seconds=0.0)

    def test_sparsify_defaults_per_strategy(self):
        assert LoopConfig(strategy="s").sparsify_params() is None
        p1 = LoopConfig(strategy="s1m").sparsify_params()
        assert (p1.pct_viol, p1.pct_nz) == (0.6, 0.2)
        p2 = LoopConfig(strategy="s2m").sparsify_params()
        assert (p2.pct_viol, p2.pct_nz) == (0.6, 0.4)
        p_over = LoopConfig(strategy="s2m", pct_nz=0.7).sparsify_params()
        assert (p_over.pct_viol, p_over.pct_nz) == (0.6, 0.7)


def _run_parabola(parabola, **kw):
    return run(pc.lift(parabola), LoopConfig(**{"strategy": "s",
                                                "max_iterations": 40, **kw}))


class TestRun:
    def test_psd_feasible_at_first_iteration(self):
        # max -X_11: optimum sits at x=0, X=0, already rank-one consistent
        prob = pc.QcqpProblem.create(Q=[np.array([[-1.0]])])
        trace = run(pc.lift(prob), LoopConfig(strategy="s"))
        assert trace.status == STATUS_PSD_FEASIBLE
        assert len(trace.records) == 1
        assert trace.records[0].total_added == 0

    def test_parabola_converges(self, parabola):
        trace = _run_parabola(parabola)
        assert trace.records[0].objective == pytest.approx(0.5, abs=1e-9)
        assert min(trace.objectives) <= 0.2501

    def test_iteration_cap(self, parabola):
        trace = _run_parabola(parabola, max_iterations=3)
        assert trace.status == STATUS_ITERATION_LIMIT
        assert len(trace.records) == 3

    def test_time_limit(self, parabola):
        trace = _run_parabola(parabola, time_limit_seconds=1e-9)
        assert trace.status == STATUS_TIME_LIMIT
        assert len(trace.records) == 1

    def test_tailing_off_small_window(self, parabola):
        trace = _run_parabola(parabola, tail_window=3, tail_eps=1e-4,
                              max_iterations=1000)
        assert trace.status == STATUS_TAILING_OFF
        z = trace.objectives
        assert z[-1] >= (1 - 1e-4) * z[-4]

    def test_monotone_without_purging(self):
        prob = pc.gen_boxqp(8, 0.9, seed=2)
        trace = run(pc.lift(prob), LoopConfig(strategy="s2m", purge_eps=None,
                                              max_iterations=15))
        z = trace.objectives
        assert all(z[i + 1] <= z[i] + 1e-7 for i in range(len(z) - 1))

    def test_every_added_cut_was_violated(self):
        prob = pc.gen_boxqp(7, 0.8, seed=4)
        sink = []
        run(pc.lift(prob), LoopConfig(strategy="s2m", max_iterations=10),
            cut_sink=sink)
        assert sink
        assert all(c.violation >= 1e-8 for c in sink)

    def test_permanent_rows_survive(self):
        prob = pc.gen_boxqp(6, 0.9, seed=5)
        model = pc.lift(prob)
        backend = DenseSimplexBackend()
        trace = run(model, LoopConfig(strategy="s2m", max_iterations=12),
                    backend=backend)
        n_perm = int(trace.meta["permanent_rows"])
        assert n_perm == model.rows.shape[0]
        # permanent handles are 0..n_perm-1 and must still be alive
        acts = backend.activities(list(range(n_perm)))
        assert acts.shape == (n_perm,)

    def test_purge_happens_and_is_recorded(self):
        prob = pc.gen_boxqp(8, 0.9, seed=6)
        trace = run(pc.lift(prob), LoopConfig(strategy="s2m",
                                              max_iterations=30))
        assert any(r.cuts_purged > 0 for r in trace.records)

    def test_determinism(self):
        prob = pc.gen_boxqp(8, 0.8, seed=7)
        model = pc.lift(prob)
        config = LoopConfig(strategy="s2m", max_iterations=15, seed=3)
        tr1 = run(model, config)
        tr2 = run(model, config)
        assert tr1.status == tr2.status
        assert len(tr1.records) == len(tr2.records)
        assert all(abs(a - b) <= 1e-9
                   for a, b in zip(tr1.objectives, tr2.objectives))

    def test_warns_on_nonpositive_objective(self):
        # max x - 3 X_11 on [1, 2]: bound is negative from the start
        prob = pc.QcqpProblem.create(Q=[np.array([[-3.0]])],
                                     a=[np.array([1.0])],
                                     lx=[1.0], ux=[2.0])
        with pytest.warns(RuntimeWarning, match="non-positive"):
            run(pc.lift(prob), LoopConfig(strategy="s", max_iterations=5))

    def test_lp_error_on_infeasible_constraints(self):
        # constraint x_1 <= -1 conflicts with the box [0, 1]
        prob = pc.QcqpProblem.create(
            Q=[np.array([[-1.0]]), np.zeros((1, 1))],
            a=[np.array([1.0]), np.array([1.0])], c=[-1.0])
        trace = run(pc.lift(prob), LoopConfig(strategy="s"))
        assert trace.status == STATUS_LP_ERROR
        assert trace.records == []

    def test_scipy_backend_agrees(self):
        prob = pc.gen_boxqp(6, 0.9, seed=9)
        model = pc.lift(prob)
        tr_ref = run(model, LoopConfig(strategy="s", max_iterations=5))
        tr_sci = run(model, LoopConfig(strategy="s", max_iterations=5),
                     backend=pc.ScipyLinprogBackend())
        for a, b in zip(tr_ref.objectives, tr_sci.objectives):
            assert a == pytest.approx(b, abs=1e-6 * max(1, abs(b)))


class TestTraceCsv:
    def test_round_trip(self, parabola):
        trace = _run_parabola(parabola, max_iterations=5)
        trace.meta["opt"] = "0.25"
        text = trace.to_csv()
        assert text.splitlines()[0] == pc.engine.TRACE_HEADER
        back = RunTrace.from_csv(text)
        assert back.status == trace.status
        assert back.meta["opt"] == "0.25"
        assert len(back.records) == len(trace.records)
        for a, b in zip(back.records, trace.records):
            assert a.iteration == b.iteration
            assert a.objective == b.objective
            assert a.seconds == b.seconds
            assert a.total_added == b.total_added
            assert a.pool_size == b.pool_size

    def test_status_is_trailing_comment(self, parabola):
        trace = _run_parabola(parabola, max_iterations=2)
        lines = trace.to_csv().strip().splitlines()
        data = [ln for ln in lines if not ln.startswith("#")]
        assert len(data) == 1 + len(trace.records)
        assert any(ln.startswith("# status=") for ln in lines)
