import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactfp.analysis import collision_study, pair_statistics, pairwise_collisions, regression_metrics, summarize_pairs
from exactfp.fingerprints import SparseFingerprint
from exactfp.smiles import parse_smiles

sparse_fps = st.dictionaries(st.integers(0, 10**6), st.integers(1, 5), max_size=30).map(SparseFingerprint)


def fp_of(ids):
    return SparseFingerprint({i: 1 for i in ids})


def test_collision_examples():
    assert pairwise_collisions(fp_of([5, 70]), fp_of([37]), 32) == 1
    assert pairwise_collisions(fp_of([5]), fp_of([5]), 32) == 0
    assert pairwise_collisions(fp_of([0, 32]), fp_of([64]), 32) == 3
    with pytest.raises(ValueError):
        pairwise_collisions(fp_of([1]), fp_of([2]), 0)


def test_identical_pairs_report():
    mols = [parse_smiles(s) for s in ["CCO", "c1ccccc1N", "CC(=O)OC1=CC=CC=C1C(=O)O"]]
    reports = collision_study([(m, m) for m in mols], [32, 512])
    for r in reports:
        assert r.mean_exact_tanimoto == 1.0 and r.mean_folded_tanimoto == 1.0 and r.mean_overestimation == 0.0
        assert r.pair_count == 3
    with pytest.raises(ValueError):
        collision_study([], [32])


def test_study_on_corpus(corpus_fps):
    rng = np.random.default_rng(1)
    pairs = [tuple(rng.choice(len(corpus_fps), 2, replace=False)) for _ in range(300)]
    stats = pair_statistics([(corpus_fps[i], corpus_fps[j]) for i, j in pairs], [512, 1024, 2048, 4096])
    reports = summarize_pairs(stats)
    assert [r.dim for r in reports] == [512, 1024, 2048, 4096]
    assert len({r.mean_exact_tanimoto for r in reports}) == 1
    for r in reports:
        assert abs(r.mean_overestimation - (r.mean_folded_tanimoto - r.mean_exact_tanimoto)) <= 1e-12
        assert r.mean_overestimation >= 0
    collisions = [r.mean_pairwise_collisions for r in reports]
    assert collisions == sorted(collisions, reverse=True)
    assert all(s.overestimation >= -1e-12 for s in stats)


@settings(max_examples=200, deadline=None)
@given(sparse_fps, sparse_fps, st.sampled_from([(2, 4), (32, 512), (512, 1024), (1024, 4096)]))
def test_collisions_monotone_under_divisibility(a, b, dims):
    d1, d2 = dims
    assert pairwise_collisions(a, b, d1) >= pairwise_collisions(a, b, d2)


def test_regression_examples():
    y = np.array([0.0, 1.0, 2.0])
    assert regression_metrics(y, y) == {"r2": 1.0, "mse": 0.0, "mae": 0.0}
    assert regression_metrics(y, np.full(3, 1.0))["r2"] == 0.0
    m = regression_metrics(y, [0.0, 1.0, 1.0])
    assert m["mse"] == pytest.approx(1 / 3, abs=1e-15) and m["mae"] == pytest.approx(1 / 3, abs=1e-15)
    assert m["r2"] == pytest.approx(0.5, abs=1e-15)


def test_regression_errors():
    with pytest.raises(ValueError):
        regression_metrics([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        regression_metrics([1.0], [1.0])
    with pytest.raises(ValueError):
        regression_metrics([2.0, 2.0], [1.0, 3.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=40))
def test_r2_identity(pairs):
    y = np.array([p[0] for p in pairs])
    yhat = np.array([p[1] for p in pairs])
    if np.var(y) < 1e-6:
        return
    m = regression_metrics(y, yhat)
    assert m["r2"] == pytest.approx(1 - m["mse"] / np.var(y), abs=1e-12)
    assert m["mae"] <= np.sqrt(m["mse"]) + 1e-12
