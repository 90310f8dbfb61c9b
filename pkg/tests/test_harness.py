import numpy as np
import pytest

import psdcuts as pc
from psdcuts.engine import IterationRecord, RunTrace
from psdcuts.harness import (GapRecord, HarnessError, best_feasible_value,
                             bound_at, brute_force_opt, compare, gap_closed,
                             gen_boxqp, parse_checkpoints, tune)


def make_trace(objectives, seconds=None, status="iteration-limit"):
    seconds = seconds or [0.1 * (i + 1) for i in range(len(objectives))]
    records = [IterationRecord(iteration=i + 1, seconds=s, objective=z,
                               cuts_added={}, cuts_purged=0, pool_size=0,
                               min_eig=0.0)
               for i, (z, s) in enumerate(zip(objectives, seconds))]
    return RunTrace(records=records, status=status)


class TestGapClosed:
    def test_basic_values(self):
        assert gap_closed(GapRecord(100.0, 20.0, 0.0)) == pytest.approx(80.0)
        assert gap_closed(GapRecord(100.0, 100.0, 0.0)) == 0.0
        assert gap_closed(GapRecord(100.0, 0.0, 0.0)) == 100.0

    def test_zero_initial_gap_undefined(self):
        with pytest.raises(HarnessError):
            gap_closed(GapRecord(5.0, 5.0, 5.0))

    def test_flags_out_of_range(self):
        with pytest.warns(RuntimeWarning):
            gap_closed(GapRecord(100.0, -1.0, 0.0))

    def test_affine_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            opt = rng.normal()
            bnd = opt + rng.uniform(0.01, 5)
            rlt = bnd + rng.uniform(0.01, 5)
            base = gap_closed(GapRecord(rlt, bnd, opt))
            shift = rng.normal() * 10
            scale = rng.uniform(0.1, 10)
            moved = gap_closed(GapRecord(scale * rlt + shift,
                                         scale * bnd + shift,
                                         scale * opt + shift))
            assert moved == pytest.approx(base, abs=1e-8)


class TestBoundAt:
    def test_iteration_checkpoints(self):
        tr = make_trace([10.0, 8.0, 7.0])
        assert bound_at(tr, ("iter", 2)) == 8.0
        assert bound_at(tr, ("iter", 5)) is None

    def test_time_checkpoints(self):
        tr = make_trace([10.0, 8.0, 7.0], seconds=[1.0, 2.0, 3.0])
        assert bound_at(tr, ("time", 2.5)) == 8.0
        assert bound_at(tr, ("time", 3.0)) == 7.0
        # run stopped at 3.0s: nothing to report later
        assert bound_at(tr, ("time", 4.0)) is None
        # no bound available that early
        assert bound_at(tr, ("time", 0.5)) is None

    def test_parse_checkpoints(self):
        cps = parse_checkpoints("iter:1, 5, time:2.5")
        assert cps == [("iter", 1.0), ("iter", 5.0), ("time", 2.5)]
        with pytest.raises(HarnessError):
            parse_checkpoints("epoch:3")


class TestCompare:
    def _entry(self, objectives, opt=0.0, **kw):
        tr = make_trace(objectives, **kw)
        return tr, GapRecord(rlt=objectives[0], bnd=objectives[-1], opt=opt)

    def test_threshold_semantics(self):
        # gaps: A closes 50%, B closes 52%
        a = {"i": self._entry([100.0, 50.0])}
        b = {"i": self._entry([100.0, 48.0])}
        rep1 = compare(a, b, [("iter", 2)], g=1.0)
        assert (rep1.rows[0].a_wins, rep1.rows[0].b_wins) == (0.0, 100.0)
        rep5 = compare(a, b, [("iter", 2)], g=5.0)
        assert rep5.rows[0].tie == 100.0
        assert rep5.rows[0].impr == pytest.approx(2.0)

    def test_incomparable_when_trace_short(self):
        a = {"i": self._entry([100.0] * 40)}
        b = {"i": self._entry([100.0] * 60)}
        rep = compare(a, b, [("iter", 50)], g=1.0)
        assert rep.rows[0].inc == 100.0

    def test_mismatched_sets_rejected(self):
        a = {"i": self._entry([100.0, 50.0])}
        b = {"j": self._entry([100.0, 50.0])}
        with pytest.raises(HarnessError, match="i"):
            compare(a, b, [("iter", 1)])

    def test_partition_and_hand_computed_report(self):
        # four instances, checkpoint iteration 2, g = 1:
        #   inst1: A 60 vs B 80  -> B wins, diff +20
        #   inst2: A 50 vs B 50.5 -> tie, diff +0.5
        #   inst3: A 90 vs B 70  -> A wins, diff -20
        #   inst4: B trace too short -> incomparable
        a = {"inst1": self._entry([100.0, 40.0]),
             "inst2": self._entry([100.0, 50.0]),
             "inst3": self._entry([100.0, 10.0]),
             "inst4": self._entry([100.0, 10.0])}
        b = {"inst1": self._entry([100.0, 20.0]),
             "inst2": self._entry([100.0, 49.5]),
             "inst3": self._entry([100.0, 30.0]),
             "inst4": self._entry([100.0])}
        rep = compare(a, b, [("iter", 2)], g=1.0)
        row = rep.rows[0]
        assert row.a_wins == 25.0 and row.b_wins == 25.0
        assert row.tie == 25.0 and row.inc == 25.0
        assert row.a_wins + row.b_wins + row.tie + row.inc == 100.0
        assert row.impr == pytest.approx((20.0 + 0.5 - 20.0) / 3.0)
        assert row.n_comparable == 3
        csv = rep.to_csv()
        assert csv.splitlines()[0] == "checkpoint,A_wins,B_wins,tie,inc,impr"
        assert csv.splitlines()[1].startswith("iter:2,25.0,25.0,25.0,25.0,")


class TestTune:
    def test_constant_evaluator_returns_center(self):
        calls = []

        def flat(inst, v, n):
            calls.append((v, n))
            return [50.0] * 6

        best = tune([0], flat)
        assert best == (0.5, 0.5)

    def test_monotone_in_nz_drifts_to_maximum(self):
        def prefer_nz(inst, v, n):
            return [100.0 * n] * 6

        v_best, n_best = tune([0], prefer_nz, g=1.0)
        assert n_best >= 0.95

    def test_empty_instances_rejected(self):
        with pytest.raises(HarnessError):
            tune([], lambda *a: [0.0] * 6)

    def test_nan_checkpoints_are_skipped(self):
        def patchy(inst, v, n):
            return [float("nan")] * 5 + [100.0 * v]

        v_best, _ = tune([0], patchy, g=1.0)
        assert v_best >= 0.95


class TestGenBoxqp:
    def test_full_density_populates_everything(self):
        prob = gen_boxqp(6, 1.0, seed=0)
        off = ~np.eye(6, dtype=bool)
        assert np.all(prob.Q[0][off] != 0)

    def test_deterministic(self):
        p1 = gen_boxqp(9, 0.5, seed=123)
        p2 = gen_boxqp(9, 0.5, seed=123)
        assert np.array_equal(p1.Q[0], p2.Q[0])
        assert np.array_equal(p1.a[0], p2.a[0])

    def test_density_entries_and_symmetry(self):
        n = 20
        pairs = n * (n - 1) // 2
        for seed in range(50):
            prob = gen_boxqp(n, 0.3, seed=seed)
            Q = prob.Q[0]
            assert np.array_equal(Q, Q.T)
            nz = np.count_nonzero(Q[np.triu_indices(n, 1)])
            assert abs(nz / pairs - 0.3) <= 0.1
            vals = Q[Q != 0]
            assert np.all(np.abs(vals) <= 50)
            assert np.all(vals == np.round(vals))
            assert np.all(np.abs(prob.a[0]) <= 50)
            prob.validate()

    def test_unit_box_and_shape(self):
        prob = gen_boxqp(4, 0.5, seed=1)
        assert prob.p == 0 and prob.m == 0
        assert np.array_equal(prob.lx, np.zeros(4))
        assert np.array_equal(prob.ux, np.ones(4))
        with pytest.raises(HarnessError):
            gen_boxqp(1, 0.5, seed=1)


class TestBruteForce:
    def test_parabola(self, parabola):
        assert brute_force_opt(parabola) == pytest.approx(0.25, abs=1e-9)

    def test_convex_corner(self):
        prob = pc.QcqpProblem.create(Q=[np.array([[1.0]])])
        assert brute_force_opt(prob) == pytest.approx(1.0, abs=1e-9)

    def test_against_full_grid_2d(self):
        prob = gen_boxqp(2, 1.0, seed=13)
        fine = np.linspace(0, 1, 1001)
        xx, yy = np.meshgrid(fine, fine)
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        Q, a = prob.Q[0], prob.a[0]
        vals = np.einsum("pi,ij,pj->p", pts, Q, pts) + pts @ a
        assert brute_force_opt(prob, grid_step=1e-3) == pytest.approx(
            vals.max(), abs=1e-4)

    def test_rejects_large_or_constrained(self):
        with pytest.raises(HarnessError):
            brute_force_opt(gen_boxqp(4, 0.5, seed=0))

    def test_local_search_consistent(self):
        for seed in range(5):
            prob = gen_boxqp(3, 0.8, seed=seed)
            bf = brute_force_opt(prob, grid_step=0.02)
            ls = best_feasible_value(prob, starts=60, seed=seed)
            assert ls <= bf + 1e-8
            assert ls >= bf - 1e-5
