import numpy as np
import pytest
from scipy.optimize import linprog

from puredp.simplex import LpStatus, solve_lp


class TestAgainstScipy:
    @pytest.mark.parametrize("trial", range(60))
    def test_random_lps_match_highs(self, trial):
        gen = np.random.Generator(np.random.Philox(key=np.array([trial, 1], np.uint64)))
        m = int(gen.integers(2, 12))
        n = int(gen.integers(2, 12))
        c = gen.uniform(-1, 2, size=n)
        A = gen.uniform(-1, 1, size=(m, n))
        b = gen.uniform(-0.5, 1.5, size=m)
        ours = solve_lp(c, A, b)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        if ref.status == 0:
            assert ours.status is LpStatus.OPTIMAL
            assert ours.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
            # feasibility of the returned point
            assert np.all(A @ ours.x <= b + 1e-7)
            assert np.all(ours.x >= -1e-9)
        elif ref.status == 2:
            assert ours.status is LpStatus.INFEASIBLE
        elif ref.status == 3:
            assert ours.status is LpStatus.UNBOUNDED


class TestEdgeCases:
    def test_infeasible(self):
        # x <= -1 with x >= 0
        res = solve_lp(np.array([1.0]), np.array([[1.0]]), np.array([-1.0]))
        assert res.status is LpStatus.INFEASIBLE

    def test_unbounded(self):
        res = solve_lp(np.array([-1.0]), np.array([[-1.0]]), np.array([0.0]))
        assert res.status is LpStatus.UNBOUNDED

    def test_degenerate_vertex(self):
        # several constraints meet at the optimum; must still terminate
        c = np.array([-1.0, -1.0])
        A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
        b = np.array([1.0, 1.0, 2.0, 2.0])
        res = solve_lp(c, A, b)
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == pytest.approx(-2.0, abs=1e-9)

    def test_zero_objective(self):
        res = solve_lp(np.zeros(2), np.array([[1.0, 1.0]]), np.array([1.0]))
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_lp(np.zeros(3), np.zeros((2, 2)), np.zeros(2))
