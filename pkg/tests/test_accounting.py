import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from puredp.accounting import (
    discrete_delta_threshold,
    purify_hyperparams_sgd,
    sgd_hyperparams,
    subsampled_gaussian_zcdp,
    zcdp_to_dp,
)


class TestZcdpToDp:
    def test_plug_in(self):
        assert zcdp_to_dp(0.01, 1e-6) == pytest.approx(0.7533844377699678, rel=1e-12)

    def test_delta_near_one_collapses_to_rho(self):
        assert zcdp_to_dp(0.37, 1 - 1e-12) == pytest.approx(0.37, abs=1e-5)

    def test_unit_case(self):
        assert zcdp_to_dp(1.0, math.exp(-1.0)) == pytest.approx(3.0, rel=1e-12)

    @given(
        st.floats(1e-4, 10.0),
        st.floats(1e-4, 10.0),
        st.floats(-30.0, -1e-3),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_rho_and_log_inv_delta(self, rho, bump, log_delta):
        base = zcdp_to_dp(rho, log_delta=log_delta)
        assert zcdp_to_dp(rho + bump, log_delta=log_delta) > base
        assert zcdp_to_dp(rho, log_delta=log_delta - 1.0) > base


class TestSubsampledGaussian:
    def test_plug_in(self):
        rho, _ = subsampled_gaussian_zcdp(0.5, 0.1, 10)
        assert rho == pytest.approx(0.65, rel=1e-12)

    def test_gamma_one_rejected(self):
        with pytest.raises(ValueError):
            subsampled_gaussian_zcdp(0.5, 1.0, 10)

    def test_linear_in_T(self):
        r1, _ = subsampled_gaussian_zcdp(0.2, 0.05, 7)
        r2, _ = subsampled_gaussian_zcdp(0.2, 0.05, 14)
        assert r2 == pytest.approx(2.0 * r1, rel=1e-12)

    def test_alpha_range_check_with_target(self):
        _, ok = subsampled_gaussian_zcdp(0.001, 0.01, 100, delta_target=1e-6)
        assert ok is True or ok is False  # boolean form when a target is given


class TestSgdHyperparams:
    def test_plug_in_instance(self):
        h = sgd_hyperparams(1000, 10, 1.0, delta=1e-5, L=1.0, C=1.0)
        assert h.gamma == pytest.approx(0.021459660262893473, rel=1e-12)
        assert h.sigma2 == pytest.approx(4789.376993427615, rel=1e-12)
        assert h.T == 8685
        assert h.eta == pytest.approx(1.0469455381684542e-06, rel=1e-9)
        assert h.valid

    def test_validity_flag(self):
        h = sgd_hyperparams(1000, 10, 100.0 * math.log(1e5), delta=1e-5)
        assert not h.valid

    def test_strongly_convex_schedule(self):
        h = sgd_hyperparams(100, 2, 1.0, delta=1e-5, lam=0.5)
        assert h.strongly_convex
        assert h.step_size(0, 100) == pytest.approx(2.0 / (100 * 0.5 * 1))
        assert h.step_size(4, 100) == pytest.approx(2.0 / (100 * 0.5 * 5))

    def test_batch_size_rounding(self):
        h = sgd_hyperparams(1000, 10, 1.0, delta=1e-5)
        assert h.batch_size(1000) == round(h.gamma * 1000)
        assert h.batch_size(1) == 1


class TestPurifyHyperparams:
    def test_exact_plug_in(self):
        omega, delta, _ = purify_hyperparams_sgd(10, 2, 1.0)
        assert omega == 0.01
        assert delta == 1.953125e-9  # 0.02 / 3200^2, bit-exact

    def test_log_space_agrees_where_direct_survives(self):
        for d in range(1, 21):
            _, delta, log_delta = purify_hyperparams_sgd(50, d, 1.0)
            if delta > 0:
                assert math.log(delta) == pytest.approx(log_delta, rel=1e-12)

    def test_delta_monotone_decreasing_in_d(self):
        logs = [purify_hyperparams_sgd(10, d, 1.0)[2] for d in range(1, 12)]
        assert all(a > b for a, b in zip(logs, logs[1:]))

    def test_underflow_regime_keeps_log(self):
        delta, log_delta = purify_hyperparams_sgd(1000, 200, 1.0)[1:]
        assert delta == 0.0
        assert math.isfinite(log_delta)


class TestDiscreteDeltaThreshold:
    def test_small_d(self):
        assert discrete_delta_threshold(1, 1.0)[0] == 0.125
        assert discrete_delta_threshold(2, 1.0)[0] == 1.0 / 4096

    def test_d8(self):
        thr, log_thr = discrete_delta_threshold(8, 1.0)
        assert thr == pytest.approx(16.0**-24, rel=1e-12)
        assert log_thr == pytest.approx(-24.0 * math.log(16.0), rel=1e-12)

    def test_underflow_regime(self):
        thr, log_thr = discrete_delta_threshold(200, 0.5)
        assert thr == 0.0
        assert math.isfinite(log_thr)
