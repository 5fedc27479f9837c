import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfscore.asympcs import (
    AsympCSParams,
    asympcs_boundary,
    boundary_factor,
    choose_rho,
    prefixes,
    watch_asympcs,
    watch_asympcs_difference,
)
from cfscore.core import EvalDataset
from cfscore.crossfit import crossfit_nuisances
from cfscore.estimators import confidence_interval, estimate_dr
from cfscore.nuisance import LearnerSpec, nuisance_profile

# Frozen from a 30-digit mpmath evaluation of the boundary formula
# (scalar value) and from root-finding its derivative in log(rho).
HALF_WIDTH_N100_RHO1 = 0.3264907041443751
RHO_OPT = {100: 0.205596524018, 1000: 0.0650153294911, 10000: 0.0205596524018}


def test_boundary_scalar_oracle():
    lo, hi = asympcs_boundary(0.0, 1.0, 100, AsympCSParams(1.0, 0.05))
    assert hi == pytest.approx(HALF_WIDTH_N100_RHO1, abs=1e-12)
    assert lo == -hi
    assert abs(hi - 0.32653) < 1e-4


def test_zero_variance_is_a_point():
    assert asympcs_boundary(0.3, 0.0, 50, AsympCSParams(0.5)) == (0.3, 0.3)


def test_params_validated():
    with pytest.raises(ValueError):
        AsympCSParams(0.0)
    with pytest.raises(ValueError):
        AsympCSParams(1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-6, 100), st.integers(1, 10**7), st.floats(-9, 4.5))
def test_dominates_fixed_n_interval(var, n, log_rho):
    params = AsympCSParams(math.exp(log_rho), 0.05)
    _, hi_cs = asympcs_boundary(0.0, var, n, params)
    _, hi_ci = confidence_interval(0.0, var, n, 0.05)
    assert hi_cs > hi_ci


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**6), st.floats(-9, 4.5), st.floats(0.001, 0.2))
def test_boundary_decreasing_in_n(n, log_rho, alpha):
    rho = math.exp(log_rho)
    assert boundary_factor(n + 1, rho, alpha) < boundary_factor(n, rho, alpha)


@pytest.mark.parametrize("n_opt", [100, 1000, 10000])
def test_choose_rho_matches_oracle(n_opt):
    rho = choose_rho(n_opt)
    assert rho == pytest.approx(RHO_OPT[n_opt], rel=1e-6)
    w = boundary_factor(n_opt, rho, 0.05)
    assert math.isfinite(w) and w > 0
    assert w <= boundary_factor(n_opt, rho / 2, 0.05)
    assert w <= boundary_factor(n_opt, 2 * rho, 0.05)


def test_choose_rho_monotone():
    for n in (10, 100, 1000, 10**4, 10**5):
        assert choose_rho(10 * n) < choose_rho(n)


def _periodic(n):
    # constant features; scores alternate so the EIF variance barely moves with n
    x = np.zeros((n, 1))
    s = (np.arange(n) % 2).astype(float)
    return EvalDataset.from_arrays(x, np.zeros(n, dtype=int), s)


def test_watch_half_widths_decrease():
    params = AsympCSParams(choose_rho(1000))
    points = list(watch_asympcs(prefixes(_periodic(3000), 500), LearnerSpec("logistic"),
                                LearnerSpec("ridge"), params, K=5, seed=1))
    assert [p.n for p in points] == [500, 1000, 1500, 2000, 2500, 3000]
    widths = [p.half_width for p in points]
    assert all(b < a for a, b in zip(widths, widths[1:]))
    assert {p.rho for p in points} == {params.rho}


def test_single_snapshot_matches_batch_path():
    rng = np.random.default_rng(2)
    n = 400
    r = (rng.random(n) < 0.3).astype(int)
    ds = EvalDataset.from_arrays(rng.random((n, 2)), r, np.where(r == 1, np.nan, rng.random(n)))
    pi, mu = nuisance_profile("linear", 0)
    params = AsympCSParams(0.1)
    (point,) = watch_asympcs([ds], pi, mu, params, K=5, seed=4)
    rep = estimate_dr(ds, crossfit_nuisances(ds, pi, mu, K=5, seed=4))
    assert (point.lo, point.hi) == asympcs_boundary(rep.psi_hat, rep.if_variance, rep.n, params)


def test_failed_snapshot_is_skipped():
    n = 40
    r = np.r_[np.zeros(2, dtype=int), np.ones(n - 2, dtype=int)]
    s = np.where(r == 1, np.nan, 1.0)
    ds = EvalDataset.from_arrays(np.arange(n, dtype=float)[:, None], r, s)
    points = list(watch_asympcs([ds.head(20), ds], LearnerSpec("logistic"), LearnerSpec("ridge"),
                                AsympCSParams(0.1), K=2))
    assert all(p.skipped and p.lo is None for p in points)
    assert "non-abstained" in points[0].reason


def test_difference_sequence_combines_arms():
    from cfscore.simulation import SimConfig, SimTruth, simulate_paired
    pds, _ = simulate_paired(SimConfig(n=600, seed=3), truth=SimTruth(0, 0, 0, "analytic"))
    pi, mu = nuisance_profile("linear", 0)
    params = AsympCSParams(0.1, 0.05)
    (p,) = watch_asympcs_difference([pds], pi, mu, params, K=2, seed=1)
    half = AsympCSParams(0.1, 0.025)
    ra = estimate_dr(pds.a, crossfit_nuisances(pds.a, pi, mu, K=2, seed=1))
    rb = estimate_dr(pds.b, crossfit_nuisances(pds.b, pi, mu, K=2, seed=1))
    la, ua = asympcs_boundary(ra.psi_hat, ra.if_variance, ra.n, half)
    lb, ub = asympcs_boundary(rb.psi_hat, rb.if_variance, rb.n, half)
    assert (p.lo, p.hi) == (la - ub, ua - lb)
    assert p.estimate == pytest.approx(ra.psi_hat - rb.psi_hat)
