import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whsboost.data import uniform_weights
from whsboost.distance import build_vdm_table
from whsboost.sampling import (
    allocate_synthesis_counts,
    hybrid_sample_baseline,
    random_undersample,
    random_undersample_keep,
    smote_baseline,
    wsmote,
    wusample,
    wusample_keep,
)

from conftest import cont_dataset, random_mixed

weights_st = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30).filter(lambda w: sum(w) > 1e-6)


class TestAllocation:
    def test_exact_rounding(self):
        assert list(allocate_synthesis_counts([0.5, 0.3, 0.2], 10).counts) == [5, 3, 2]

    def test_deficit_goes_to_top_weight(self):
        assert list(allocate_synthesis_counts([0.34, 0.33, 0.33], 10).counts) == [4, 3, 3]

    def test_surplus_index_tie_break(self):
        assert list(allocate_synthesis_counts([0.5, 0.5], 1).counts) == [1, 0]

    def test_uniform_four_anchors_six(self):
        assert list(allocate_synthesis_counts(uniform_weights(4), 6).counts) == [2, 2, 1, 1]

    def test_uniform_even(self):
        assert list(allocate_synthesis_counts(uniform_weights(4), 8).counts) == [2, 2, 2, 2]

    def test_zero(self):
        assert allocate_synthesis_counts([0.2, 0.8], 0).total == 0

    def test_surplus_skips_zero_counts(self):
        # the lowest weight rounds to 0 and must not go negative
        plan = allocate_synthesis_counts([0.45, 0.45, 0.1], 3)
        assert plan.total == 3 and np.all(plan.counts >= 0)

    @settings(max_examples=200, deadline=None)
    @given(weights_st, st.integers(0, 500))
    def test_total_exact(self, w, n_syn):
        w = np.array(w) / np.sum(w)
        plan = allocate_synthesis_counts(w, n_syn)
        assert plan.total == n_syn
        assert np.all(plan.counts >= 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 40), st.integers(0, 300))
    def test_uniform_within_one_of_even(self, n, n_syn):
        c = allocate_synthesis_counts(uniform_weights(n), n_syn).counts
        assert np.all(np.abs(c - n_syn / n) <= 1)


class TestWsmote:
    def test_identity_when_no_synthesis(self, rng):
        d = random_mixed(rng, 6, 1)
        m = d.subset(np.flatnonzero(d.y == 1))
        assert wsmote(m, uniform_weights(m.n), m.n, 3, None, 0).equals(m)

    def test_two_points(self):
        m = cont_dataset([0.0, 10.0], [1, 1])
        out = wsmote(m, [1.0, 0.0], 3, 1, None, 0)
        assert out.n == 3
        assert 0.0 < out.X[2, 0] < 10.0
        assert out.y[2] == 1

    def test_literal_formula_extrapolates(self):
        m = cont_dataset([0.0, 10.0], [1, 1])
        out = wsmote(m, [1.0, 0.0], 3, 1, None, 0, literal_formula=True)
        assert -10.0 < out.X[2, 0] < 0.0

    def test_errors(self):
        m = cont_dataset([0.0, 10.0], [1, 1])
        with pytest.raises(ValueError):
            wsmote(m.subset([0]), [1.0], 3, 1, None)
        with pytest.raises(ValueError):
            wsmote(m, [0.5, 0.5], 1, 1, None)

    def test_weights_steer_anchors(self, rng):
        m = cont_dataset(rng.normal(size=(5, 2)), [1] * 5)
        w = np.array([0.7, 0.1, 0.1, 0.1, 0.0])
        _, anchors, _ = wsmote(m, w, 15, 2, None, 1, return_origin=True)
        assert list(np.bincount(anchors, minlength=5)) == [7, 1, 1, 1, 0]

    def test_matches_smote_plan_for_uniform(self, rng):
        m = cont_dataset(rng.normal(size=(6, 2)), [1] * 6)
        a = wsmote(m, uniform_weights(6), 20, 3, None, 4)
        b = smote_baseline(m, 20, 3, None, 4)
        assert a.equals(b)

    def test_with_replacement_when_count_exceeds_k(self):
        m = cont_dataset([[0.0], [1.0], [5.0]], [1, 1, 1])
        out, anchors, partners = wsmote(m, [1.0, 0.0, 0.0], 13, 2, None, 0, return_origin=True)
        assert out.n == 13 and set(partners) <= {1, 2}

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 15), st.integers(0, 40), st.integers(1, 6), st.integers(0, 2**31))
    def test_coordinates_between_anchor_and_neighbor(self, n, extra, k, seed):
        r = np.random.default_rng(seed)
        m = cont_dataset(r.normal(size=(n, 3)), [1] * n)
        w = r.dirichlet(np.ones(n))
        out, anchors, partners = wsmote(m, w, n + extra, k, None, seed, return_origin=True)
        assert out.n == n + extra
        assert np.all(out.y == 1)
        syn = out.X[n:]
        lo = np.minimum(m.X[anchors], m.X[partners])
        hi = np.maximum(m.X[anchors], m.X[partners])
        assert np.all((syn >= lo - 1e-12) & (syn <= hi + 1e-12))

    def test_categorical_vote(self, rng):
        d = random_mixed(rng, 12, 12, n_cont=1, vocab_sizes=(3,))
        vdm = build_vdm_table(d)
        m = d.subset(np.flatnonzero(d.y == 1))
        out = wsmote(m, uniform_weights(m.n), 36, 3, vdm, 5)
        assert set(out.X[m.n:, 1]) <= {0.0, 1.0, 2.0}
        # one synthetic per anchor: the single drawn neighbor wins the vote
        o, _, p = wsmote(m, uniform_weights(m.n), 24, 3, vdm, 5, return_origin=True)
        assert np.array_equal(o.X[m.n:, 1], m.X[p, 1])

    def test_deterministic(self, rng):
        m = cont_dataset(rng.normal(size=(8, 2)), [1] * 8)
        w = rng.dirichlet(np.ones(8))
        assert wsmote(m, w, 30, 3, None, 11).equals(wsmote(m, w, 30, 3, None, 11))


class TestWusample:
    def test_c0_removes_lowest(self):
        maj = cont_dataset([[0.0], [1.0], [2.0], [3.0]], [-1] * 4)
        out = wusample(maj, [0.1, 0.2, 0.3, 0.4], 2, c=0.0, seed=0)
        assert list(out.X[:, 0]) == [2.0, 3.0]

    def test_identity(self):
        maj = cont_dataset([[0.0], [1.0]], [-1, -1])
        assert wusample(maj, [0.5, 0.5], 2).equals(maj)

    def test_bounds(self):
        maj = cont_dataset([[0.0], [1.0]], [-1, -1])
        for bad in (0, 3):
            with pytest.raises(ValueError):
                wusample(maj, [0.5, 0.5], bad)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 40), st.floats(0, 1), st.integers(0, 2**31))
    def test_rows_outside_pool_survive(self, n, c, seed):
        r = np.random.default_rng(seed)
        w = r.dirichlet(np.ones(n))
        n_keep = int(r.integers(1, n + 1))
        keep = wusample_keep(w, n_keep, c, np.random.default_rng(seed))
        assert keep.size == n_keep and np.all(np.diff(keep) > 0)
        n_elim = n - n_keep
        pool = np.argsort(w, kind="stable")[:min(n, int(np.floor((1 + c) * n_elim + 0.5)))]
        outside = np.setdiff1d(np.arange(n), pool)
        assert np.all(np.isin(outside, keep))

    def test_index_tie_break_in_pool(self):
        keep = wusample_keep(np.full(4, 0.25), 2, 0.0, np.random.default_rng(0))
        assert list(keep) == [2, 3]


class TestBaselines:
    def test_random_undersample_identity(self):
        maj = cont_dataset([[0.0], [1.0], [2.0]], [-1] * 3)
        assert random_undersample(maj, 3, 0).equals(maj)

    def test_random_undersample_deterministic(self):
        maj = cont_dataset([[0.0], [1.0], [2.0]], [-1] * 3)
        assert random_undersample(maj, 1, 4).equals(random_undersample(maj, 1, 4))

    def test_random_undersample_uniform(self):
        counts = np.zeros(5)
        r = np.random.default_rng(0)
        for _ in range(10000):
            counts[np.setdiff1d(np.arange(5), random_undersample_keep(5, 3, r))] += 1
        # each row eliminated with probability 2/5
        sd = np.sqrt(10000 * 0.4 * 0.6)
        assert np.all(np.abs(counts - 4000) < 3 * sd)

    @pytest.mark.parametrize("n_per_class,syn", [(50, 40), (10, 0), (90, 80)])
    def test_hybrid_sizes(self, rng, n_per_class, syn):
        d = cont_dataset(rng.normal(size=(100, 2)), [1] * 10 + [-1] * 90)
        out = hybrid_sample_baseline(d, n_per_class, 3, None, 0)
        assert (out.n_positive, out.n_negative) == (n_per_class, n_per_class)
        # the real minority rows are kept in front of the synthetic ones
        assert np.array_equal(out.X[:10], d.X[:10])

    def test_hybrid_out_of_range(self, rng):
        d = cont_dataset(rng.normal(size=(100, 2)), [1] * 10 + [-1] * 90)
        with pytest.raises(ValueError):
            hybrid_sample_baseline(d, 95, 3, None, 0)
