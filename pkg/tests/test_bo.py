import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactfp.bo import BoConfig, IncrementalGp, auc_best_observed, expected_improvement, run_bo
from exactfp.fingerprints import SparseFingerprint, fold
from exactfp.gp import default_hyperparams
from exactfp.kernel import GpHyperparams, TanimotoIndex, tanimoto_matrix

PHI0 = 1 / math.sqrt(2 * math.pi)


def dense_posterior(T_all, obs, y_obs, h):
    K = h.amplitude_sq * T_all[np.ix_(obs, obs)] + h.noise_sq * np.eye(len(obs))
    Ks = h.amplitude_sq * T_all[:, obs]
    mean = h.mean_const + Ks @ np.linalg.solve(K, y_obs - h.mean_const)
    var = h.amplitude_sq * np.diag(T_all) - np.einsum("ij,ji->i", Ks, np.linalg.solve(K, Ks.T))
    return mean, var


# -- expected improvement -------------------------------------------------------


def test_ei_degenerate_cases():
    assert expected_improvement(1.0, 0.0, 0.5) == 0.0
    assert expected_improvement(0.2, 0.0, 0.5) == pytest.approx(0.3, abs=1e-15)
    assert expected_improvement(0.8, 0.0, 0.5, "maximize") == pytest.approx(0.3, abs=1e-15)
    assert expected_improvement(0.2, 0.0, 0.5, "maximize") == 0.0


def test_ei_at_incumbent():
    assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(PHI0, abs=1e-15)
    draws = np.random.default_rng(0).standard_normal(1_000_000)
    assert abs(np.maximum(-draws, 0).mean() - PHI0) < 1e-3


def test_ei_vectorized_and_validated():
    ei = expected_improvement(np.array([0.0, 1.0, -1.0]), np.array([1.0, 0.0, 0.25]), 0.0)
    assert ei.shape == (3,) and ei[1] == 0.0 and ei[2] > 1.0
    with pytest.raises(ValueError):
        expected_improvement(0.0, -1e-3, 0.0)
    with pytest.raises(ValueError):
        expected_improvement(0.0, 1.0, 0.0, "sideways")


@settings(max_examples=300, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 4), st.floats(-5, 5))
def test_ei_properties(mean, var, best):
    lo = expected_improvement(mean, var, best)
    assert lo >= 0
    assert lo >= max(best - mean, 0) - 1e-12  # Jensen
    assert expected_improvement(-mean, var, -best, "maximize") == pytest.approx(lo, abs=1e-12)
    assert expected_improvement(mean, var + 0.5, best) >= lo - 1e-12


# -- AUC -------------------------------------------------------------------------


def test_auc_examples():
    assert auc_best_observed([-3.0, -3.0], -3.0, 2.0) == 1.0
    assert auc_best_observed([2.0, 2.0, 2.0], -3.0, 2.0) == 0.0
    assert auc_best_observed([2.0, -3.0], -3.0, 2.0) == 0.5
    assert auc_best_observed([0.0, 5.0], 5.0, 0.0) == 0.5
    with pytest.raises(ValueError):
        auc_best_observed([1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        auc_best_observed([], 0.0, 1.0)


# -- config ----------------------------------------------------------------------


def test_config_validation():
    assert BoConfig(direction="max").direction == "maximize"
    assert BoConfig().init_size == 1000 and BoConfig().budget == 1000 and BoConfig().init_percentile == 0.8
    assert BoConfig().refit_hyperparams is False
    for bad in [dict(init_size=0), dict(budget=0), dict(init_percentile=0.0), dict(init_percentile=1.2), dict(direction="up")]:
        with pytest.raises(ValueError):
            BoConfig(**bad)


def test_pool_too_small():
    fps = [SparseFingerprint({i: 1}) for i in range(5)]
    with pytest.raises(ValueError, match="too small"):
        run_bo(fps, np.arange(5.0), BoConfig(init_size=3, budget=3))
    with pytest.raises(ValueError):
        run_bo(fps, np.arange(4.0), BoConfig(init_size=1, budget=1))
    with pytest.raises(ValueError):
        run_bo(fps, [0.0, 1.0, math.nan, 3.0, 4.0], BoConfig(init_size=1, budget=1))


# -- surrogate -------------------------------------------------------------------


def test_low_variance_duplicate_loses_to_unexplored():
    observed = SparseFingerprint({1: 2, 2: 1})
    pool = [observed, observed, SparseFingerprint({7: 1}), SparseFingerprint({8: 3})]
    h = GpHyperparams(1.0, 1e-6, 0.0)
    gp = IncrementalGp(TanimotoIndex(pool), h, [0], [0.0])
    mean, var = gp.posterior()
    ei = expected_improvement(mean[1:], var[1:], 0.0)
    assert var[1] < 1e-5 and var[2] == 1.0
    assert ei[0] < ei[1] and int(np.argmax(ei)) == 1
    assert ei[1] == pytest.approx(PHI0, abs=1e-12)


def test_budget_one_matches_hand_posterior():
    pool = [SparseFingerprint({1: 1, 2: 1}), SparseFingerprint({1: 1}), SparseFingerprint({2: 2, 3: 1}), SparseFingerprint({4: 1})]
    values = np.array([5.0, 1.0, 2.0, 3.0])
    h = GpHyperparams(2.0, 0.1, 3.0)
    traj = run_bo(pool, values, BoConfig(init_size=1, budget=1, init_percentile=0.25, seed=7), h=h)
    assert traj.init_indices == [0]
    T = tanimoto_matrix(pool)
    mean, var = dense_posterior(T, [0], values[[0]], h)
    ei = expected_improvement(mean[1:], var[1:], 5.0)
    assert traj.acquired[0][1] == 1 + int(np.argmax(ei))
    assert traj.best_curve.tolist() == [values[traj.acquired[0][1]]]


def test_tie_breaks_to_lowest_index():
    pool = [SparseFingerprint({1: 1})] + [SparseFingerprint({10 + i: 1}) for i in range(4)]
    values = np.array([9.0, 1.0, 2.0, 3.0, 4.0])
    traj = run_bo(pool, values, BoConfig(init_size=1, budget=2, init_percentile=0.2), h=GpHyperparams(1.0, 0.01, 0.0))
    assert [a[1] for a in traj.acquired] == [1, 2]


def test_incremental_matches_refit(corpus_fps, corpus):
    fps = corpus_fps[:50]
    y = corpus[2][:50]
    index = TanimotoIndex(fps)
    T = tanimoto_matrix(fps)
    h = default_hyperparams(y[:8])
    order = list(range(8))
    gp = IncrementalGp(index, h, order, y[order])
    for j in range(8, 40):
        mean, var = gp.posterior()
        ref_mean, ref_var = dense_posterior(T, order, y[order], h)
        np.testing.assert_allclose(mean, ref_mean, atol=1e-6, rtol=0)
        np.testing.assert_allclose(var, np.maximum(ref_var, 0), atol=1e-6, rtol=0)
        gp.add(j, y[j])
        order.append(j)


def small_run(corpus_fps, corpus, seed, direction="minimize", encoder=None, **kw):
    fps = corpus_fps[:300]
    if encoder:
        fps = [encoder(f) for f in fps]
    cfg = BoConfig(init_size=20, budget=30, init_percentile=0.8, direction=direction, seed=seed, **kw)
    return run_bo(fps, corpus[2][:300], cfg)


@pytest.mark.parametrize("direction", ["minimize", "maximize"])
def test_trajectory_invariants(corpus_fps, corpus, direction):
    for seed in range(3):
        traj = small_run(corpus_fps, corpus, seed, direction)
        curve = traj.best_curve
        assert len(curve) == 30
        steps = np.diff(curve)
        assert np.all(steps <= 0) if direction == "minimize" else np.all(steps >= 0)
        picked = [a[1] for a in traj.acquired]
        assert len(set(picked)) == len(picked) and not set(picked) & set(traj.init_indices)
        assert len(set(traj.init_indices)) == 20
        assert [a[0] for a in traj.acquired] == list(range(1, 31))
        assert 0.0 <= traj.auc <= 1.0
        values = corpus[2][:300]
        worst = set(np.argsort(-values if direction == "minimize" else values, kind="stable")[:240].tolist())
        assert set(traj.init_indices) <= worst


def test_bit_reproducible(corpus_fps, corpus):
    a = small_run(corpus_fps, corpus, 4)
    b = small_run(corpus_fps, corpus, 4)
    assert a.acquired == b.acquired and np.array_equal(a.best_curve, b.best_curve) and a.auc == b.auc
    c = small_run(corpus_fps, corpus, 5)
    assert c.init_indices != a.init_indices


def test_runs_on_folded_encoding(corpus_fps, corpus):
    traj = small_run(corpus_fps, corpus, 0, encoder=lambda f: fold(f, 512))
    assert len(traj.acquired) == 30


def test_refit_mode_runs(corpus_fps, corpus):
    traj = small_run(corpus_fps, corpus, 1, refit_hyperparams=True)
    fixed = small_run(corpus_fps, corpus, 1)
    assert traj.init_indices == fixed.init_indices
    assert len(traj.acquired) == 30


def test_auc_one_iff_best_found_immediately():
    pool = [SparseFingerprint({i: 1, 100: 1}) for i in range(6)]
    values = np.array([4.0, 3.0, 5.0, 0.0, 6.0, 2.0])
    # full-pool initial design contains the global best
    traj = run_bo(pool, values, BoConfig(init_size=5, budget=1, init_percentile=1.0, seed=0))
    assert (traj.auc == 1.0) == (3 in traj.init_indices or traj.acquired[0][1] == 3)
    # bottom half cannot contain the best; AUC is 1 only if it is acquired first
    for seed in range(4):
        traj = run_bo(pool, values, BoConfig(init_size=2, budget=3, init_percentile=0.5, seed=seed))
        assert 3 not in traj.init_indices
        assert (traj.auc == 1.0) == (traj.acquired[0][1] == 3)
