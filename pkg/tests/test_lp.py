import numpy as np
import pytest

from psdcuts.lp import (INFEASIBLE, OPTIMAL, DenseSimplexBackend, LpError,
                        ScipyLinprogBackend, make_backend)


def random_bounded_lp(rng, nc=None, mr=None):
    """Feasible-by-construction LP: rows built around an interior point."""
    nc = nc or int(rng.integers(2, 12))
    mr = mr or int(rng.integers(1, 25))
    lb = rng.normal(size=nc)
    ub = lb + rng.uniform(0.1, 3, size=nc)
    obj = rng.normal(size=nc)
    A = rng.normal(size=(mr, nc)) * (rng.random((mr, nc)) < 0.7)
    x0 = rng.uniform(lb, ub)
    act0 = A @ x0
    lo = np.where(rng.random(mr) < 0.5, act0 - rng.uniform(0.05, 2, mr), -np.inf)
    hi = np.where(np.isneginf(lo) | (rng.random(mr) < 0.3),
                  act0 + rng.uniform(0.05, 2, mr), np.inf)
    return obj, lb, ub, A, lo, hi


class TestDenseSimplex:
    def test_tiny_lp(self):
        be = DenseSimplexBackend()
        be.load(np.array([1.0, 1.0]), np.zeros(2), np.ones(2))
        h = be.add_rows(np.array([[1.0, 1.0]]), [-np.inf], [1.5])
        sol = be.solve()
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(1.5, abs=1e-9)
        assert be.activities(h)[0] == pytest.approx(1.5, abs=1e-9)

    def test_bounds_only(self):
        be = DenseSimplexBackend()
        be.load(np.array([2.0, -3.0]), np.array([-1.0, -1.0]), np.ones(2))
        sol = be.solve()
        assert sol.objective == pytest.approx(5.0, abs=1e-12)

    def test_matches_scipy_on_random_lps(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            obj, lb, ub, A, lo, hi = random_bounded_lp(rng)
            b1 = DenseSimplexBackend()
            b1.load(obj, lb, ub)
            b1.add_rows(A, lo, hi)
            s1 = b1.solve()
            b2 = ScipyLinprogBackend()
            b2.load(obj, lb, ub)
            b2.add_rows(A, lo, hi)
            s2 = b2.solve()
            assert s1.status == s2.status == OPTIMAL
            assert s1.objective == pytest.approx(
                s2.objective, abs=1e-6 * max(1, abs(s2.objective)))
            act = A @ s1.x
            assert np.all(act <= hi + 1e-6) and np.all(act >= lo - 1e-6)
            assert np.all(s1.x <= ub + 1e-9) and np.all(s1.x >= lb - 1e-9)

    def test_resolve_unmodified_is_identical(self):
        rng = np.random.default_rng(1)
        obj, lb, ub, A, lo, hi = random_bounded_lp(rng)
        be = DenseSimplexBackend()
        be.load(obj, lb, ub)
        be.add_rows(A, lo, hi)
        s1 = be.solve()
        s2 = be.solve()
        assert abs(s1.objective - s2.objective) <= 1e-9
        assert np.array_equal(s1.x, s2.x)

    def test_warm_add_remove_cycles(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            nc = int(rng.integers(3, 9))
            lb, ub = -np.ones(nc), np.ones(nc)
            obj = rng.normal(size=nc)
            b1 = DenseSimplexBackend()
            b1.load(obj, lb, ub)
            b2 = ScipyLinprogBackend()
            b2.load(obj, lb, ub)
            live = []
            x0 = rng.uniform(lb, ub)
            for _ in range(6):
                k = int(rng.integers(1, 4))
                A = rng.normal(size=(k, nc))
                act0 = A @ x0
                lo = np.where(rng.random(k) < 0.5,
                              act0 - rng.uniform(0.05, 1, k), -np.inf)
                hi = np.where(np.isneginf(lo),
                              act0 + rng.uniform(0.05, 1, k), np.inf)
                live += b1.add_rows(A, lo, hi)
                b2.add_rows(A, lo, hi)
                s1, s2 = b1.solve(), b2.solve()
                assert s1.objective == pytest.approx(
                    s2.objective, abs=1e-6 * max(1, abs(s2.objective)))
                if len(live) > 2:
                    acts = b1.activities(live)
                    drop = [h for h, _ in zip(live, acts)
                            if rng.random() < 0.3]
                    if drop:
                        b1.remove_rows(drop)
                        b2.remove_rows(drop)
                        live = [h for h in live if h not in drop]
                        s1, s2 = b1.solve(), b2.solve()
                        assert s1.objective == pytest.approx(
                            s2.objective,
                            abs=1e-6 * max(1, abs(s2.objective)))

    def test_detects_infeasible(self):
        be = DenseSimplexBackend()
        be.load(np.array([1.0]), np.zeros(1), np.ones(1))
        be.add_rows(np.array([[1.0]]), [2.0], [np.inf])   # x >= 2, x <= 1
        assert be.solve().status == INFEASIBLE

    def test_fixed_columns(self):
        be = DenseSimplexBackend()
        be.load(np.array([1.0, 1.0]), np.array([0.5, 0.0]),
                np.array([0.5, 1.0]))
        be.add_rows(np.array([[1.0, 1.0]]), [-np.inf], [1.2])
        sol = be.solve()
        assert sol.x[0] == 0.5
        assert sol.objective == pytest.approx(1.2, abs=1e-9)

    def test_row_count_and_handle_errors(self):
        be = DenseSimplexBackend()
        be.load(np.ones(2), np.zeros(2), np.ones(2))
        h = be.add_rows(np.ones((1, 2)), [-np.inf], [1.0])
        assert be.num_rows == 1
        be.remove_rows(h)
        assert be.num_rows == 0
        with pytest.raises(LpError):
            be.remove_rows(h)
        with pytest.raises(LpError):
            be.add_rows(np.ones((1, 3)), [-np.inf], [1.0])
        with pytest.raises(LpError):
            be.activities([0])

    def test_free_row_rejected(self):
        be = DenseSimplexBackend()
        be.load(np.ones(2), np.zeros(2), np.ones(2))
        with pytest.raises(LpError):
            be.add_rows(np.ones((1, 2)), [-np.inf], [np.inf])

    def test_equality_rows(self):
        be = DenseSimplexBackend()
        be.load(np.array([1.0, -1.0]), np.zeros(2), np.ones(2))
        be.add_rows(np.array([[1.0, 1.0]]), [1.0], [1.0])
        sol = be.solve()
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(1.0, abs=1e-9)
        assert sum(sol.x) == pytest.approx(1.0, abs=1e-9)


def test_make_backend():
    assert isinstance(make_backend("simplex"), DenseSimplexBackend)
    assert isinstance(make_backend("scipy"), ScipyLinprogBackend)
    with pytest.raises(ValueError):
        make_backend("cplex")
