import math

import numpy as np
import pytest

from puredp.audit import (
    estimate_max_divergence,
    estimate_tv_discrete,
    laplace_l1_bound,
    laplace_l1_tail_check,
    tightness_check,
)
from puredp.core import RngStream


def _uniform_sampler(k):
    def sampler(stream, n):
        return stream.generator().integers(0, k, size=n)

    return sampler


class TestTvEstimator:
    def test_identical_samplers_near_zero(self):
        rep = estimate_tv_discrete(
            _uniform_sampler(8), _uniform_sampler(8), range(8), 50000, RngStream(1)
        )
        assert rep.estimate <= rep.conf_radius + 0.01

    def test_disjoint_support_near_one(self):
        def low(stream, n):
            return stream.generator().integers(0, 4, size=n)

        def high(stream, n):
            return stream.generator().integers(4, 8, size=n)

        rep = estimate_tv_discrete(low, high, range(8), 20000, RngStream(2))
        assert rep.estimate == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_in_samplers(self):
        def skew(stream, n):
            gen = stream.generator()
            return np.where(gen.uniform(size=n) < 0.7, 0, gen.integers(1, 4, size=n))

        a = estimate_tv_discrete(skew, _uniform_sampler(4), range(4), 30000, RngStream(3))
        b = estimate_tv_discrete(_uniform_sampler(4), skew, range(4), 30000, RngStream(3))
        # swapping the arms swaps which stream feeds which sampler, so the
        # estimates differ only by Monte Carlo noise
        assert abs(a.estimate - b.estimate) <= a.conf_radius + b.conf_radius

    def test_out_of_set_value_rejected(self):
        with pytest.raises(ValueError):
            estimate_tv_discrete(
                _uniform_sampler(8), _uniform_sampler(8), range(4), 1000, RngStream(4)
            )


class TestMaxDivergence:
    def test_dataset_independent_mechanism(self):
        def mech(dataset, stream, n):
            return stream.generator().integers(0, 8, size=n)

        rep = estimate_max_divergence(mech, 0, 1, 100000, RngStream(5))
        assert rep.estimate <= rep.conf_radius + 0.05
        assert rep.details["one_sided_support"] == 0

    def test_randomized_response_ln3(self):
        # keep the bit w.p. 3/4: exactly ln(3)-DP on single-bit datasets
        def mech(bit, stream, n):
            keep = stream.generator().uniform(size=n) < 0.75
            return np.where(keep, bit, 1 - bit)

        rep = estimate_max_divergence(mech, 0, 1, 400000, RngStream(6))
        assert rep.estimate == pytest.approx(math.log(3.0), abs=3.0 * rep.conf_radius)
        assert rep.details["eps_ab"] == pytest.approx(
            rep.details["eps_ba"], abs=2.0 * rep.conf_radius
        )

    def test_degenerate_flagged(self):
        def mech(dataset, stream, n):
            return np.full(n, dataset)

        rep = estimate_max_divergence(mech, 0, 1, 1000, RngStream(7))
        assert rep.details["degenerate"]
        assert rep.details["one_sided_support"] == 2


class TestTightness:
    @pytest.mark.parametrize("d", [1, 2])
    def test_example_pair(self, d):
        tv, w8 = tightness_check(d, 0.5, 40000, RngStream(8 + d))
        assert tv.estimate == pytest.approx(0.5**d, abs=0.03)
        assert w8.estimate <= 0.5 + w8.conf_radius
        assert not w8.violated

    def test_delta_near_one_tv_near_one(self):
        tv, _ = tightness_check(1, 0.99, 20000, RngStream(10))
        assert tv.estimate > 0.95

    def test_rejects_large_d(self):
        with pytest.raises(ValueError):
            tightness_check(5, 0.5, 100, RngStream(0))


class TestLaplaceTail:
    def test_bound_plug_in(self):
        assert laplace_l1_bound(10, 1.0, math.exp(-1.0)) == pytest.approx(22.0)

    def test_scale_homogeneity(self):
        assert laplace_l1_bound(10, 2.0, 0.05) == pytest.approx(
            2.0 * laplace_l1_bound(10, 1.0, 0.05)
        )

    def test_exceedance_within_level(self):
        rep = laplace_l1_tail_check(10, 1.0, 0.05, 100000, RngStream(11))
        assert not rep.violated
        se = math.sqrt(0.05 * 0.95 / 100000)
        assert rep.estimate <= 0.05 + 3.0 * se
