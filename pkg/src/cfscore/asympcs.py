"""Asymptotic confidence sequences for monitoring a DR estimate over time.

The boundary at sample size ``n`` with free parameter ``rho > 0`` is

    psi_hat +/- sqrt(var) * sqrt((2 n rho^2 + 1) / (n^2 rho^2)
                                 * log(sqrt(n rho^2 + 1) / alpha)),

valid uniformly over ``n`` in the asymptotic sense.
"""

import math
from dataclasses import dataclass
from typing import Optional

from .crossfit import crossfit_nuisances
from .errors import CFScoreError
from .estimators import estimate_dr
from .nuisance import ClipBounds

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AsympCSParams:
    rho: float
    alpha: float = 0.05

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def boundary_factor(n, rho, alpha):
    """Half-width of the boundary per unit standard deviation."""
    nr2 = n * rho * rho
    return math.sqrt((2.0 * nr2 + 1.0) / (n * nr2) * math.log(math.sqrt(nr2 + 1.0) / alpha))


def asympcs_boundary(psi_hat, if_variance, n, params):
    if n < 1:
        raise ValueError("n must be at least 1")
    half = math.sqrt(if_variance) * boundary_factor(n, params.rho, params.alpha)
    return (psi_hat - half, psi_hat + half)


def choose_rho(n_opt=1000, alpha=0.05, iterations=200):
    """``rho`` minimizing the boundary width at ``n_opt``.

    Golden-section search over ``log(rho)`` in ``[-6, 2]``.
    """
    if n_opt < 1:
        raise ValueError("n_opt must be at least 1")

    def width(log_rho):
        return boundary_factor(n_opt, math.exp(log_rho), alpha)

    a, b = -6.0, 2.0
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = width(c), width(d)
    for _ in range(iterations):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = width(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = width(d)
    return math.exp(0.5 * (a + b))


@dataclass(frozen=True)
class WatchPoint:
    """One emission of a monitored confidence sequence.

    ``skipped`` marks a snapshot whose nuisances could not be fitted; the
    interval fields are ``None`` then.
    """

    n: int
    estimate: Optional[float]
    lo: Optional[float]
    hi: Optional[float]
    rho: float
    skipped: bool = False
    reason: str = ""

    @property
    def half_width(self):
        return None if self.skipped else 0.5 * (self.hi - self.lo)

    def to_dict(self):
        return {"n": self.n, "estimate": self.estimate, "lo": self.lo, "hi": self.hi,
                "rho": self.rho, "skipped": self.skipped, "reason": self.reason}


def _dr_snapshot(ds, pi_spec, mu_spec, K, clip, seed):
    nuis = crossfit_nuisances(ds, pi_spec, mu_spec, K=K, clip=clip, seed=seed)
    return estimate_dr(ds, nuis)


def watch_asympcs(snapshots, pi_spec, mu_spec, params, K=5, clip=ClipBounds(), seed=0):
    """Recompute the cross-fitted DR estimate on each growing prefix and
    yield its confidence-sequence interval. ``rho`` stays fixed throughout."""
    for ds in snapshots:
        try:
            rep = _dr_snapshot(ds, pi_spec, mu_spec, K, clip, seed)
        except CFScoreError as exc:
            yield WatchPoint(ds.n, None, None, None, params.rho, skipped=True, reason=str(exc))
            continue
        lo, hi = asympcs_boundary(rep.psi_hat, rep.if_variance, rep.n, params)
        yield WatchPoint(ds.n, rep.psi_hat, lo, hi, params.rho)


def watch_asympcs_difference(snapshots, pi_spec, mu_spec, params, K=5, clip=ClipBounds(), seed=0):
    """Confidence sequence for ``psi_A - psi_B`` over growing paired prefixes.

    Each arm gets a level ``1 - alpha/2`` sequence; the two are combined as
    ``(L_A - U_B, U_A - L_B)``.
    """
    half = AsympCSParams(params.rho, params.alpha / 2.0)
    for pds in snapshots:
        try:
            ra = _dr_snapshot(pds.a, pi_spec, mu_spec, K, clip, seed)
            rb = _dr_snapshot(pds.b, pi_spec, mu_spec, K, clip, seed)
        except CFScoreError as exc:
            yield WatchPoint(pds.n, None, None, None, params.rho, skipped=True, reason=str(exc))
            continue
        la, ua = asympcs_boundary(ra.psi_hat, ra.if_variance, ra.n, half)
        lb, ub = asympcs_boundary(rb.psi_hat, rb.if_variance, rb.n, half)
        yield WatchPoint(pds.n, ra.psi_hat - rb.psi_hat, la - ub, ua - lb, params.rho)


def prefixes(data, batch):
    """Growing prefixes ``data[:batch], data[:2*batch], ..., data``."""
    n = len(data)
    stops = list(range(batch, n, batch)) + [n]
    for stop in stops:
        yield data.head(stop)
