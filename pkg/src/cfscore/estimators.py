"""Point estimates and confidence intervals for counterfactual scores.

Three estimators of ``psi = E[S]`` (the score a classifier would attain had it
never abstained) are provided: plug-in, inverse probability weighting and the
doubly robust (DR) estimator, which averages the uncentered efficient
influence function

    IF(x, r, s) = mu0(x) + (1 - r) / (1 - pi(x)) * (s - mu0(x)).

Each estimator is a mean of per-row terms, so differences between two
classifiers are means of per-row differences and every interval has the
Wald form ``mean +/- z_{alpha/2} * sqrt(var / n)`` with the population-style
(divide by ``n``) variance.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ExpertAlignmentError, MissingScore, ScoreRangeViolation

METHODS = ("plugin", "ipw", "dr")


def z_quantile(alpha):
    """Upper ``alpha/2`` quantile of the standard normal."""
    return float(ndtri(1.0 - alpha / 2.0))


def empirical_variance(values):
    """Variance with divisor ``n``; exactly 0 for constant input."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0 or np.ptp(values) == 0:
        return 0.0
    return float(np.var(values))


def confidence_interval(psi_hat, if_variance, n, alpha=0.05):
    """Wald interval ``psi_hat +/- z_{alpha/2} * sqrt(if_variance / n)``."""
    if if_variance < 0 or n < 1 or not 0 < alpha < 1:
        raise ValueError("need if_variance >= 0, n >= 1 and 0 < alpha < 1")
    half = z_quantile(alpha) * math.sqrt(if_variance / n)
    return (psi_hat - half, psi_hat + half)


@dataclass(frozen=True)
class EstimateReport:
    method: str
    psi_hat: float
    if_variance: float
    n: int
    alpha: float
    ci: tuple
    degenerate_flag: bool

    @property
    def width(self):
        return self.ci[1] - self.ci[0]

    @property
    def std_error(self):
        return math.sqrt(self.if_variance / self.n)

    def to_dict(self):
        out = asdict(self)
        out["ci"] = list(self.ci)
        return out


def report_from_terms(method, terms, alpha=0.05):
    """Summarize per-row terms whose mean is the estimate."""
    terms = np.asarray(terms, dtype=np.float64)
    n = terms.size
    var = empirical_variance(terms)
    # a constant stream has an exact mean; np.mean may be off by an ulp
    psi = float(terms[0]) if var == 0.0 else float(np.mean(terms))
    return EstimateReport(method=method, psi_hat=psi, if_variance=var, n=n, alpha=alpha,
                          ci=confidence_interval(psi, var, n, alpha), degenerate_flag=var == 0.0)


def eif_uncentered(mu0, pi, r, s=None):
    """Uncentered efficient influence function for one row (``0/0 := 0``)."""
    if r == 1:
        return float(mu0)
    if s is None or (isinstance(s, float) and math.isnan(s)):
        raise MissingScore("a non-abstained row needs a score")
    return float(mu0 + (s - mu0) / (1.0 - pi))


def eif_terms(ds, nuis):
    """Vectorized :func:`eif_uncentered` over a dataset."""
    observed = ds.observed
    s = ds.scores_or_zero()
    correction = np.zeros(ds.n)
    correction[observed] = (s[observed] - nuis.mu0_hat[observed]) / (1.0 - nuis.pi_hat[observed])
    return nuis.mu0_hat + correction


def ipw_terms(ds, nuis):
    observed = ds.observed
    out = np.zeros(ds.n)
    out[observed] = ds.scores_or_zero()[observed] / (1.0 - nuis.pi_hat[observed])
    return out


def plugin_terms(ds, nuis):
    return np.asarray(nuis.mu0_hat, dtype=np.float64)


_TERMS = {"plugin": plugin_terms, "ipw": ipw_terms, "dr": eif_terms}


def per_row_terms(method, ds, nuis):
    try:
        return _TERMS[method](ds, nuis)
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None


def _check_lengths(ds, nuis):
    if nuis.n != ds.n:
        raise ValueError(f"nuisance estimates cover {nuis.n} rows, dataset has {ds.n}")


def estimate_plugin(ds, nuis, alpha=0.05):
    """Mean of the fitted score regression over all rows. Biased in general."""
    _check_lengths(ds, nuis)
    return report_from_terms("plugin", plugin_terms(ds, nuis), alpha)


def estimate_ipw(ds, nuis, alpha=0.05):
    """Inverse probability weighting: ``mean((1 - R) S / (1 - pi_hat))``."""
    _check_lengths(ds, nuis)
    return report_from_terms("ipw", ipw_terms(ds, nuis), alpha)


def estimate_dr(ds, nuis, alpha=0.05):
    """Doubly robust estimate: the empirical mean of the estimated EIF.

    A zero empirical variance collapses the interval onto the point estimate
    and sets ``degenerate_flag``.
    """
    _check_lengths(ds, nuis)
    return report_from_terms("dr", eif_terms(ds, nuis), alpha)


def estimate(method, ds, nuis, alpha=0.05):
    return {"plugin": estimate_plugin, "ipw": estimate_ipw, "dr": estimate_dr}[method](ds, nuis, alpha)


@dataclass(frozen=True)
class ComparisonReport:
    """Inference on ``psi_A - psi_B`` from per-row term differences."""

    method: str
    delta_hat: float
    if_variance: float
    n: int
    alpha: float
    ci: tuple
    reject_null: bool
    degenerate_flag: bool
    report_a: EstimateReport
    report_b: EstimateReport

    @property
    def width(self):
        return self.ci[1] - self.ci[0]

    def to_dict(self):
        out = {k: getattr(self, k) for k in ("method", "delta_hat", "if_variance", "n", "alpha",
                                             "reject_null", "degenerate_flag")}
        out["ci"] = list(self.ci)
        out["arm_a"] = self.report_a.to_dict()
        out["arm_b"] = self.report_b.to_dict()
        return out


def estimate_difference(pds, nuis_a, nuis_b, alpha=0.05, method="dr"):
    """Estimate ``psi_A - psi_B`` with the chosen per-row terms."""
    _check_lengths(pds.a, nuis_a)
    _check_lengths(pds.b, nuis_b)
    ta = per_row_terms(method, pds.a, nuis_a)
    tb = per_row_terms(method, pds.b, nuis_b)
    diff = report_from_terms(method, ta - tb, alpha)
    lo, hi = diff.ci
    return ComparisonReport(method=method, delta_hat=diff.psi_hat, if_variance=diff.if_variance,
                            n=diff.n, alpha=alpha, ci=diff.ci, reject_null=not lo <= 0.0 <= hi,
                            degenerate_flag=diff.degenerate_flag,
                            report_a=report_from_terms(method, ta, alpha),
                            report_b=report_from_terms(method, tb, alpha))


def estimate_difference_dr(pds, nuis_a, nuis_b, alpha=0.05):
    """Doubly robust inference on the counterfactual score difference.

    The per-row influence values are ``IF_A - IF_B``; ``reject_null`` is true
    when the interval excludes zero.
    """
    return estimate_difference(pds, nuis_a, nuis_b, alpha, method="dr")


@dataclass(frozen=True)
class TestDecision:
    reject: bool
    p_value: float
    statistic: float
    alpha: float

    def to_dict(self):
        return asdict(self)


def two_sided_test(cr: ComparisonReport) -> TestDecision:
    """Test ``H0: psi_A = psi_B`` by inverting the comparison interval."""
    se = math.sqrt(cr.if_variance / cr.n)
    if se == 0.0:
        stat = 0.0 if cr.delta_hat == 0.0 else math.copysign(math.inf, cr.delta_hat)
        p = 1.0 if cr.delta_hat == 0.0 else 0.0
    else:
        stat = cr.delta_hat / se
        p = float(2.0 * (1.0 - ndtr(abs(stat))))
    lo, hi = cr.ci
    return TestDecision(reject=not lo <= 0.0 <= hi, p_value=p, statistic=stat, alpha=cr.alpha)


@dataclass(frozen=True)
class CondessaReport:
    """Classification quality score, optionally with an expert on abstentions."""

    theta_hat: float
    psi_report: EstimateReport
    theta_expert_hat: Optional[float] = None
    observable_sum: float = field(default=math.nan)

    def to_dict(self):
        return {"theta_hat": self.theta_hat, "theta_expert_hat": self.theta_expert_hat,
                "observable_sum": self.observable_sum, "psi": self.psi_report.to_dict()}


def _align_expert(ds, expert):
    e = np.ma.filled(np.ma.asarray(expert, dtype=np.float64), np.nan) \
        if not isinstance(expert, (list, tuple)) else \
        np.array([np.nan if v is None else v for v in expert], dtype=np.float64)
    abstained = ds.r == 1
    if e.shape == (ds.n,):
        present = ~np.isnan(e)
        if not np.array_equal(present, abstained):
            raise ExpertAlignmentError("expert scores must be present exactly on abstained rows")
        return np.where(abstained, e, 0.0)
    if e.shape == (int(abstained.sum()),) and not np.isnan(e).any():
        full = np.zeros(ds.n)
        full[abstained] = e
        return full
    raise ExpertAlignmentError(
        f"expected {ds.n} aligned expert values or {int(abstained.sum())} values on abstentions")


def estimate_condessa(ds, psi_report, expert=None):
    """Classification quality score by subtraction.

    Since ``theta + psi = 2 E[(1 - R) S] + P(R = 1)`` is observable,
    ``theta_hat`` subtracts the counterfactual score estimate from its
    empirical version. With expert scores ``E`` on abstained rows,
    ``theta_E = theta + E[R (E - 1)]``. Scores must lie in ``[0, 1]``.
    """
    s = ds.scores_or_zero()
    if np.any(s[ds.observed] < 0) or np.any(s[ds.observed] > 1):
        raise ScoreRangeViolation("the classification quality score needs scores in [0, 1]")
    r = ds.r.astype(np.float64)
    observable = 2.0 * float(np.mean((1.0 - r) * s)) + float(np.mean(r))
    theta = observable - psi_report.psi_hat
    theta_e = None
    if expert is not None:
        e = _align_expert(ds, expert)
        theta_e = theta + float(np.mean(r * (e - 1.0)))
    return CondessaReport(theta_hat=theta, psi_report=psi_report, theta_expert_hat=theta_e,
                          observable_sum=observable)
