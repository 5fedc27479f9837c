import numpy as np
import pytest

from cfscore.core import EvalDataset
from cfscore.crossfit import crossfit_nuisances, make_folds
from cfscore.errors import BadFoldCount, InsufficientObservedRows
from cfscore.nuisance import ClipBounds, LearnerSpec, nuisance_profile
from cfscore.simulation import SimConfig, simulate_paired


def test_balanced_two_folds():
    f = make_folds(4, 2, seed=1)
    parts = [set(f.indices(k).tolist()) for k in range(2)]
    assert all(len(p) == 2 for p in parts)
    assert parts[0].isdisjoint(parts[1]) and parts[0] | parts[1] == {0, 1, 2, 3}


def test_leave_one_out():
    f = make_folds(5, 5, seed=0)
    assert sorted(f.fold_of.tolist()) == [0, 1, 2, 3, 4]


def test_bad_fold_count():
    with pytest.raises(BadFoldCount):
        make_folds(3, 4, seed=0)
    with pytest.raises(BadFoldCount):
        make_folds(3, 1, seed=0)


@pytest.mark.parametrize("n,K", [(10, 3), (101, 7), (2000, 2)])
def test_folds_partition_and_balance(n, K):
    f = make_folds(n, K, seed=n)
    sizes = f.sizes()
    assert sizes.sum() == n and sizes.max() - sizes.min() <= 1
    assert np.array_equal(f.fold_of, make_folds(n, K, seed=n).fold_of)


def _constant_dataset(c=0.7, n=60):
    x = np.random.default_rng(0).random((n, 2))
    return EvalDataset.from_arrays(x, np.zeros(n, dtype=int), np.full(n, c))


@pytest.mark.parametrize("profile", ["linear", "random_forest", "super_learner"])
def test_constant_scores_fully_observed(profile):
    ds = _constant_dataset()
    pi, mu = nuisance_profile(profile, 1)
    clip = ClipBounds()
    nuis = crossfit_nuisances(ds, pi, mu, K=3, clip=clip, seed=2)
    assert np.max(np.abs(nuis.mu0_hat - 0.7)) < 1e-8
    assert np.all(nuis.pi_hat <= clip.hi)
    if profile == "linear":
        assert np.all(nuis.pi_hat < 0.05)


def test_all_abstained_is_unfittable():
    ds = EvalDataset.from_arrays(np.zeros((10, 1)), np.ones(10, dtype=int), [None] * 10)
    with pytest.raises(InsufficientObservedRows):
        crossfit_nuisances(ds, LearnerSpec("logistic"), LearnerSpec("ridge"), K=2)


def test_mcar_propensity_near_half():
    pds, _ = simulate_paired(SimConfig(n=2000, epsilon=0.5, seed=4), truth=_dummy_truth())
    nuis = crossfit_nuisances(pds.a, LearnerSpec("logistic"), LearnerSpec("ridge"), K=5, seed=1)
    assert 0.45 <= nuis.pi_hat.mean() <= 0.55


def _dummy_truth():
    from cfscore.simulation import SimTruth
    return SimTruth(0.0, 0.0, 0.0, "analytic")


def test_out_of_fold_discipline():
    pds, _ = simulate_paired(SimConfig(n=300, seed=5), truth=_dummy_truth())
    ds = pds.a
    pi, mu = nuisance_profile("random_forest", 3)
    folds = make_folds(ds.n, 3, seed=9)
    base = crossfit_nuisances(ds, pi, mu, folds=folds, seed=9)
    # rewrite the labels of fold 0 only; predictions on fold 0 must not move
    idx = folds.indices(0)
    r = ds.r.copy()
    s = np.ma.filled(ds.s, np.nan).copy()
    r[idx] = 1
    s[idx] = np.nan
    changed = EvalDataset.from_arrays(ds.x, r, s)
    again = crossfit_nuisances(changed, pi, mu, folds=folds, seed=9)
    assert np.array_equal(again.pi_hat[idx], base.pi_hat[idx])
    assert np.array_equal(again.mu0_hat[idx], base.mu0_hat[idx])
    assert not np.array_equal(again.pi_hat, base.pi_hat)


def test_clip_bounds_hold_and_determinism():
    pds, _ = simulate_paired(SimConfig(n=400, seed=6), truth=_dummy_truth())
    pi, mu = nuisance_profile("super_learner", 2)
    clip = ClipBounds(0.05, 0.8)
    a = crossfit_nuisances(pds.b, pi, mu, K=2, clip=clip, seed=3)
    b = crossfit_nuisances(pds.b, pi, mu, K=2, clip=clip, seed=3)
    assert np.all((a.pi_hat >= 0.05) & (a.pi_hat <= 0.8))
    assert np.array_equal(a.pi_hat, b.pi_hat) and np.array_equal(a.mu0_hat, b.mu0_hat)
    assert sum(a.observed_per_fold) == int(pds.b.observed.sum())
