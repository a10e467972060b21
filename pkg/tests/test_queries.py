import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from puredp.core import RngStream
from puredp.queries import (
    AliasTable,
    HistogramDataset,
    QueryWorkload,
    alias_sample,
    decode_tuple,
    encode_tuple,
    eval_queries,
    exponential_mechanism,
    mwem,
    pure_mwem,
)


def _instance(cells=16, K=3, n=100, seed=1):
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, 0], np.uint64)))
    values = gen.uniform(size=(K, cells))
    counts = gen.multinomial(n, np.full(cells, 1.0 / cells))
    return HistogramDataset(counts=counts), QueryWorkload(values=values)


class TestEvalQueries:
    def test_constant_query(self):
        dataset, _ = _instance()
        workload = QueryWorkload(values=np.ones((1, 16)))
        assert eval_queries(workload, dataset)[0] == pytest.approx(1.0)

    def test_point_mass(self):
        counts = np.zeros(16, dtype=int)
        counts[5] = 7
        dataset = HistogramDataset(counts=counts)
        _, workload = _instance()
        np.testing.assert_allclose(
            eval_queries(workload, dataset), workload.values[:, 5]
        )

    def test_against_double_loop(self):
        dataset, workload = _instance(K=3)
        p = dataset.distribution
        expected = [
            sum(workload.values[k, x] * p[x] for x in range(16)) for k in range(3)
        ]
        np.testing.assert_allclose(eval_queries(workload, dataset), expected, atol=1e-15)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            QueryWorkload(values=np.ones((1, 6)))


class TestExponentialMechanism:
    def test_equal_scores_uniform(self):
        counts = np.zeros(5)
        for t in range(100000):
            counts[exponential_mechanism(np.ones(5), 1.0, 1.0, RngStream(2, t))] += 1
        assert np.max(np.abs(counts / 100000 - 0.2)) < 0.01

    def test_large_eps_selects_argmax(self):
        scores = np.array([0.1, 0.9, 0.5])
        hits = sum(
            exponential_mechanism(scores, 1000.0, 1.0, RngStream(3, t)) == 1
            for t in range(1000)
        )
        assert hits >= 999

    def test_two_item_odds_ratio(self):
        eps0, gap, sens = 2.0, 0.6, 1.0
        wins = sum(
            exponential_mechanism(np.array([gap, 0.0]), eps0, sens, RngStream(4, t)) == 0
            for t in range(200000)
        )
        odds = math.exp(eps0 * gap / (2 * sens))
        expected = odds / (1.0 + odds)
        assert wins / 200000 == pytest.approx(expected, abs=0.005)

    def test_shift_invariance(self):
        # log-space max subtraction: shifting all scores changes nothing
        scores = np.array([0.1, 0.7, 0.3])
        a = [exponential_mechanism(scores, 1.0, 1.0, RngStream(5, t)) for t in range(50)]
        b = [
            exponential_mechanism(scores + 123.0, 1.0, 1.0, RngStream(5, t))
            for t in range(50)
        ]
        assert a == b

    def test_all_neg_inf_rejected(self):
        with pytest.raises(ValueError):
            exponential_mechanism(np.full(3, -np.inf), 1.0, 1.0, RngStream(0))


class TestMwem:
    def test_output_distributions_normalized(self):
        dataset, workload = _instance(cells=32, K=5, n=200)
        res = mwem(dataset, workload, 10, 0.5, RngStream(6))
        assert np.sum(res.synthetic) / dataset.n == pytest.approx(1.0, abs=1e-12)
        assert np.sum(res.p_final) == pytest.approx(1.0, abs=1e-12)
        assert np.all(res.synthetic >= 0)

    def test_one_step_tilt_direction(self):
        # 4-cell universe, one query; noise off: p tilts toward high-q cells
        # exactly when q(D) > q(p_0)
        counts = np.array([10, 0, 0, 0])
        dataset = HistogramDataset(counts=counts)
        q = np.array([[1.0, 0.0, 0.0, 0.0]])
        workload = QueryWorkload(values=q)
        res = mwem(dataset, workload, 1, 0.5, RngStream(7), noise_override=0.0)
        # q(D)=1 > q(p0)=0.25, so cell 0 must gain mass over uniform
        assert res.p_final[0] > 0.25
        assert np.all(res.p_final[1:] < 0.25)

    def test_selects_worst_query_under_high_budget(self):
        counts = np.array([20, 0, 0, 0])
        dataset = HistogramDataset(counts=counts)
        values = np.array([[0.5, 0.5, 0.5, 0.5], [1.0, 0.0, 0.0, 0.0]])
        workload = QueryWorkload(values=values)
        res = mwem(dataset, workload, 1, 10000.0, RngStream(8), noise_override=0.0)
        assert res.selected == (1,)  # the constant query has zero error


class TestAlias:
    def test_point_mass(self):
        p = np.zeros(8)
        p[3] = 1.0
        draws = alias_sample(p, 1000, RngStream(9))
        assert np.all(draws == 3)

    def test_uniform_tv(self):
        draws = alias_sample(np.full(4, 0.25), 100000, RngStream(10))
        freq = np.bincount(draws, minlength=4) / 100000
        assert 0.5 * np.sum(np.abs(freq - 0.25)) <= 0.01

    def test_preprocessing_touches_each_cell_once(self):
        gen = np.random.Generator(np.random.Philox(key=np.array([11, 0], np.uint64)))
        p = gen.exponential(size=37)
        p /= p.sum()
        assert AliasTable(p).touches == 37

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_reconstruction_matches_input(self, raw):
        p = np.array(raw)
        p /= p.sum()
        table = AliasTable(p)
        np.testing.assert_allclose(table.reconstructed(), p, atol=1e-12)

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            AliasTable(np.array([1.2, -0.2]))


class TestTupleEncoding:
    def test_round_trip_example(self):
        cells = np.array([3, 11, 6])
        u = encode_tuple(cells, 4)
        np.testing.assert_array_equal(decode_tuple(u, 3, 4), cells)

    @given(
        st.integers(1, 5),
        st.integers(1, 6),
        st.integers(0, 10**9),
    )
    @settings(max_examples=100, deadline=None)
    def test_round_trip_random(self, m, dim, seed):
        gen = np.random.Generator(np.random.Philox(key=np.array([seed, 7], np.uint64)))
        cells = gen.integers(0, 2**dim, size=m)
        assert np.array_equal(decode_tuple(encode_tuple(cells, dim), m, dim), cells)

    def test_out_of_range_cell_rejected(self):
        with pytest.raises(ValueError):
            encode_tuple(np.array([4]), 2)


class TestPureMwem:
    def test_outputs_valid_universe_indices(self):
        dataset, workload = _instance(cells=16, K=4, n=80)
        res = pure_mwem(dataset, workload, 1.0, RngStream(12))
        assert np.all((res.elements >= 0) & (res.elements < 16))
        assert res.elements.shape == (res.m,)
        assert res.distribution().sum() == pytest.approx(1.0, abs=1e-12)

    def test_bit_budget_enforced(self):
        gen = np.random.Generator(np.random.Philox(key=np.array([13, 0], np.uint64)))
        values = gen.uniform(size=(3, 1024))
        counts = gen.multinomial(100000, np.full(1024, 1.0 / 1024))
        dataset = HistogramDataset(counts=counts)
        workload = QueryWorkload(values=values)
        with pytest.raises(ValueError, match="bit budget"):
            pure_mwem(dataset, workload, 1.0, RngStream(14))

    def test_deterministic_under_seed(self):
        dataset, workload = _instance(cells=16, K=4, n=80)
        a = pure_mwem(dataset, workload, 1.0, RngStream(15, 2))
        b = pure_mwem(dataset, workload, 1.0, RngStream(15, 2))
        np.testing.assert_array_equal(a.elements, b.elements)
