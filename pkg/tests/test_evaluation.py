import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from whsboost.classifiers import ClassifierSpec, train_classifier
from whsboost.data import DataError, stratified_split
from whsboost.ensemble import BoostConfig
from whsboost.evaluation import (
    ConfusionMatrix,
    Pipeline,
    SimulationSpec,
    compute_metrics,
    confusion_matrix,
    derive_seed,
    f_beta_score,
    grid_search_tune,
    paired_values,
    roc_auc,
    run_experiment,
    simulate_dataset,
    simulation_pool,
    wilcoxon_signed_rank,
)

from conftest import cont_dataset, imbalanced_blobs

KNN3 = ClassifierSpec(kind="knn", k=3)


def brute_auc(scores, truths):
    pos = [s for s, t in zip(scores, truths) if t == 1]
    neg = [s for s, t in zip(scores, truths) if t != 1]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_all_correct(self):
        y = [1, 1, -1, -1, -1]
        assert confusion_matrix(y, y) == ConfusionMatrix(2, 0, 0, 3)

    def test_all_positive(self):
        assert confusion_matrix([1] * 5, [1, 1, -1, -1, -1]) == ConfusionMatrix(2, 0, 3, 0)

    def test_mixed(self):
        assert confusion_matrix([1, -1, 1], [1, 1, -1]) == ConfusionMatrix(1, 1, 1, 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion_matrix([1], [1, -1])


class TestMetrics:
    def test_f3_example(self):
        rep = compute_metrics(ConfusionMatrix(50, 50, 0, 100), beta=3)
        assert rep.recall == 0.5 and rep.precision == 1.0
        assert rep.f_beta == pytest.approx(10 * 0.5 / 9.5, abs=1e-12)
        assert rep.f_beta == pytest.approx(0.52632, abs=1e-5)
        assert rep.accuracy == pytest.approx(0.75)

    def test_perfect(self):
        rep = compute_metrics(ConfusionMatrix(4, 0, 0, 6), auc=1.0)
        assert (rep.accuracy, rep.recall, rep.precision, rep.f_beta, rep.auc) == (1.0,) * 5

    def test_f1_symmetry(self):
        assert f_beta_score(0.37, 0.37, beta=1) == pytest.approx(0.37)

    def test_zero_conventions(self):
        rep = compute_metrics(ConfusionMatrix(0, 5, 0, 5))
        assert rep.precision == 0.0 and rep.f_beta == 0.0

    def test_absent_class(self):
        with pytest.raises(ValueError):
            compute_metrics(ConfusionMatrix(0, 0, 1, 3))

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 1), st.floats(1e-3, 1), st.floats(0.1, 5))
    def test_f_between_recall_and_precision(self, r, p, beta):
        f = f_beta_score(r, p, beta)
        assert min(r, p) - 1e-12 <= f <= max(r, p) + 1e-12


class TestAuc:
    def test_examples(self):
        assert roc_auc([0.9, 0.8, 0.1], [1, 1, -1]) == 1.0
        assert roc_auc([0.3] * 4, [1, -1, 1, -1]) == 0.5
        assert roc_auc([0.8, 0.5, 0.5], [1, 1, -1]) == pytest.approx(0.75)

    def test_single_class(self):
        with pytest.raises(ValueError):
            roc_auc([0.1, 0.2], [1, 1])

    def test_matches_pair_counting(self):
        r = np.random.default_rng(0)
        for _ in range(500):
            n = int(r.integers(2, 40))
            y = r.choice([1, -1], n)
            y[0], y[1] = 1, -1
            s = r.integers(0, 5, n).astype(float)  # coarse grid for ties
            assert abs(roc_auc(s, y) - brute_auc(s, y)) <= 1e-12


class TestWilcoxon:
    def test_three_positive(self):
        res = wilcoxon_signed_rank([1, 2, 3], [0, 0, 0])
        assert (res.W_plus, res.W_minus) == (6.0, 0.0)
        assert res.p_two_sided == 0.25 and res.method == "exact"
        assert res.marker == "b"

    def test_single_difference(self):
        res = wilcoxon_signed_rank([1, 2, 3.5], [1, 2, 3])
        assert res.n_effective == 1 and res.p_two_sided == 1.0

    def test_antisymmetry(self, rng):
        a, b = rng.normal(size=20), rng.normal(size=20)
        x, y = wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(b, a)
        assert x.p_two_sided == y.p_two_sided
        assert {x.rank_basis, y.rank_basis} == {"negative", "positive"}

    def test_errors(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1, 2], [1, 2])
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1, 2], [1])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(-6, 6), min_size=1, max_size=30).filter(lambda v: any(v)))
    def test_rank_sum_identity(self, d):
        res = wilcoxon_signed_rank(d, [0] * len(d))
        n = res.n_effective
        assert res.W_plus + res.W_minus == pytest.approx(n * (n + 1) / 2)
        assert 0.0 <= res.p_two_sided <= 1.0

    def test_exact_matches_scipy_without_ties(self):
        r = np.random.default_rng(1)
        for _ in range(30):
            n = int(r.integers(3, 13))
            d = r.permutation(np.arange(1, n + 1)) * r.choice([1, -1], n)
            ours = wilcoxon_signed_rank(d, np.zeros(n)).p_two_sided
            ref = stats.wilcoxon(d, method="exact").pvalue
            assert ours == pytest.approx(ref, abs=1e-12)

    def test_normal_matches_scipy(self):
        r = np.random.default_rng(2)
        for _ in range(30):
            d = r.integers(-5, 6, 40).astype(float)  # ties and zeros
            for corr in (False, True):
                ours = wilcoxon_signed_rank(d, np.zeros(40), exact=False, correction=corr)
                ref = stats.wilcoxon(d, zero_method="wilcox", correction=corr, method="approx")
                assert ours.p_two_sided == pytest.approx(ref.pvalue, rel=1e-9)

    def test_uncorrected_z_formula(self):
        d = np.array([1.0, 2.0, 3.0, -4.0, 5.0])
        res = wilcoxon_signed_rank(d, np.zeros(5), correction=False)
        # W- = 4, mean 7.5, variance 5*6*11/24
        assert res.Z == pytest.approx((4 - 7.5) / math.sqrt(13.75))

    def test_exact_and_normal_agree_at_twelve(self):
        r = np.random.default_rng(3)
        for _ in range(100):
            d = r.normal(size=12)
            res = wilcoxon_signed_rank(d, np.zeros(12))
            assert res.n_effective == 12
            assert abs(res.p_two_sided - res.p_normal) <= 0.03


class TestSimulation:
    def test_counts(self):
        d = simulate_dataset(SimulationSpec(seed=1))
        assert (d.n, d.m, d.n_positive) == (1000, 25, 100)
        assert simulate_dataset(SimulationSpec(minority_fraction=0.45, seed=1)).n_positive == 450

    def test_labels_follow_stored_beta(self):
        for seed in range(5):
            d = simulate_dataset(SimulationSpec(minority_fraction=0.2, seed=seed))
            beta = np.array(d.meta["beta"])
            assert np.array_equal(np.where(d.X @ beta >= 0, 1, -1), d.y)

    def test_effective_features(self):
        d = simulate_dataset(SimulationSpec(seed=2))
        beta = np.array(d.meta["beta"])
        assert np.sum(beta == 0) == 17
        assert sorted(np.flatnonzero(beta)) == d.meta["effective_features"]

    def test_pool_means(self):
        spec = SimulationSpec(seed=3)
        X = simulation_pool(spec)[0]
        assert np.all(np.abs(X.mean(axis=0)) <= 4 / math.sqrt(spec.oversample_pool))

    def test_deterministic(self):
        a, b = simulate_dataset(SimulationSpec(seed=5)), simulate_dataset(SimulationSpec(seed=5))
        assert a.equals(b)

    def test_pool_too_small(self):
        with pytest.raises(DataError):
            simulate_dataset(SimulationSpec(n_total=1000, oversample_pool=1000, minority_fraction=0.5, seed=0))

    @pytest.mark.parametrize("bad", [dict(p0=30), dict(minority_fraction=0.6), dict(oversample_pool=10)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            SimulationSpec(**bad)


def noisy_fixture(seed=0):
    r = np.random.default_rng(seed)
    d = imbalanced_blobs(r, 80, 120, shift=1.2)
    flip = r.random(d.n) < 0.15
    return cont_dataset(d.X, np.where(flip, -d.y, d.y))


class TestGridSearch:
    def test_singleton(self):
        assert grid_search_tune(noisy_fixture(), [KNN3]) == KNN3

    def test_tie_first_entry(self):
        a = ClassifierSpec(kind="knn", k=3)
        b = ClassifierSpec(kind="knn", k=3, hidden_units=7)  # same model, different spec
        assert grid_search_tune(noisy_fixture(), [b, a]) == b

    def test_smoother_k_wins_on_noise(self):
        d = noisy_fixture()
        k1, k3 = ClassifierSpec(kind="knn", k=1), ClassifierSpec(kind="knn", k=3)
        # k=1 is listed first, so winning the tie rule is not enough: k=3 must score strictly higher
        assert grid_search_tune(d, [k1, k3], seed=0) == k3

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            grid_search_tune(noisy_fixture(), [])


PIPES = [Pipeline("knn", "none", BoostConfig(base=KNN3)),
         Pipeline("whs", "whsboost", BoostConfig(T=3, base=KNN3))]


class TestRunExperiment:
    def test_single_plain_repetition(self):
        d = noisy_fixture(1)
        res = run_experiment(d, PIPES[:1], repetitions=1, seed=4, normalize=False)
        split = stratified_split(d, 0.7, derive_seed(4, 0, 0))
        h = train_classifier(KNN3, d.subset(split.train_indices), None)
        test = d.subset(split.test_indices)
        cm = confusion_matrix(h.predict(test.X), test.y)
        assert res.rows[0]["recall"] == compute_metrics(cm).recall
        assert res.rows[0]["f_beta"] == compute_metrics(cm).f_beta

    def test_pairing(self):
        res = run_experiment(noisy_fixture(), PIPES, repetitions=3, seed=2)
        seeds = {}
        for r in res.rows:
            seeds.setdefault(r["repetition"], set()).add(r["split_seed"])
        assert all(len(s) == 1 for s in seeds.values())
        a, b = paired_values(res.rows, "knn", "whs")
        assert a.size == b.size == 3

    def test_deterministic(self):
        a = run_experiment(noisy_fixture(), PIPES, repetitions=2, seed=7)
        b = run_experiment(noisy_fixture(), PIPES, repetitions=2, seed=7)
        assert repr(a.rows) == repr(b.rows) and a.summary == b.summary

    def test_failure_is_recorded(self):
        bad = Pipeline("bad", "whsboost", BoostConfig(T=2, N=1, base=KNN3))
        res = run_experiment(noisy_fixture(), PIPES[:1] + [bad], repetitions=2, seed=0)
        assert all(r["error"] == "" for r in res.rows if r["pipeline"] == "knn")
        assert all("N=1" in r["error"] for r in res.rows if r["pipeline"] == "bad")
        s = res.summary["pipelines"]
        assert s["bad"]["failures"] == 2 and s["bad"]["f_beta_mean"] is None
        assert s["knn"]["failures"] == 0

    def test_simulation_metadata_in_summary(self):
        d = simulate_dataset(SimulationSpec(n_total=200, oversample_pool=1000, seed=0))
        res = run_experiment(d, PIPES[:1], repetitions=1)
        assert res.summary["simulation"]["beta"] == d.meta["beta"]

    def test_unpaired_detected(self):
        a = run_experiment(noisy_fixture(), PIPES[:1], repetitions=2, seed=1).rows
        b = run_experiment(noisy_fixture(), [PIPES[1]], repetitions=2, seed=2).rows
        with pytest.raises(ValueError):
            paired_values(a + b, "knn", "whs")

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            run_experiment(noisy_fixture(), PIPES, repetitions=0)
        with pytest.raises(ValueError):
            run_experiment(noisy_fixture(), [PIPES[0], PIPES[0]], repetitions=1)
