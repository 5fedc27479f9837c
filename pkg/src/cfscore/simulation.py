"""Synthetic binary task with two abstaining classifiers and a truth oracle.

Inputs are uniform on the unit square and the clean label is
``1{x0 + x1 >= 1}``, flipped independently with probability ``noise``.

Scenarios
---------
paper_ab
    A is the logistic oracle ``sigmoid(x0 + x1 - 1)``; B has the curved
    boundary ``clip(0.5 (x0^2 + x1^2) + 0.1, 0, 1)``. Each abstains with
    probability ``1 - eps`` inside a band around its own boundary and ``eps``
    elsewhere.
power_linear
    B is A's boundary shifted diagonally, ``sigmoid(x0 + x1 - 1 - mu)``; both
    arms abstain through A's band.
shared_base_null
    Both arms reveal the same scores from A. Arm A abstains through A's band,
    arm B with probability ``1 - sum_c f_c^2`` clipped to ``[eps, 1 - eps]``.
    The counterfactual scores are identical by construction.

Randomness is drawn from four dedicated streams (features, label flips, arm A
abstention, arm B abstention), so changing one arm's mechanism leaves every
other draw untouched and the first ``m`` rows do not depend on ``n``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit

from ._seeding import rng_for
from .core import ACCURACY_RANGE, BRIER_RANGE, PairedDataset
from .scoring import binary_probs, score

SCENARIOS = ("paper_ab", "power_linear", "shared_base_null")
STREAM_X, STREAM_NOISE, STREAM_RA, STREAM_RB = 0, 1, 2, 3
TRUTH_STREAM = 0x7A17
DEFAULT_MC_N = 1_000_000
B_RADIUS = math.sqrt(0.8)
B_BAND_FACTOR = 0.8


@dataclass(frozen=True)
class SimConfig:
    n: int
    noise: float = 0.15
    epsilon: float = 0.2
    delta_band: float = 0.17
    mu_shift: float = 0.0
    scenario: str = "paper_ab"
    seed: int = 0
    score_rule: str = "accuracy"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in (0, 0.5]")
        if not self.delta_band > 0:
            raise ValueError("delta_band must be positive")
        if not self.mu_shift >= 0:
            raise ValueError("mu_shift must be non-negative")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.score_rule not in ("accuracy", "brier"):
            raise ValueError("score_rule must be 'accuracy' or 'brier'")

    def replace(self, **changes):
        return SimConfig(**{**asdict(self), **changes})

    def to_dict(self):
        return asdict(self)

    @property
    def score_range(self):
        return ACCURACY_RANGE if self.score_rule == "accuracy" else BRIER_RANGE


@dataclass(frozen=True)
class SimTruth:
    psi_a: float
    psi_b: float
    delta: float
    method: str
    mc_n: int = 0

    def to_dict(self):
        return asdict(self)


def f_a(x):
    """``P(Y = 1 | x)`` for classifier A."""
    return expit(x[:, 0] + x[:, 1] - 1.0)


def f_b_curved(x):
    return np.clip(0.5 * (x[:, 0] ** 2 + x[:, 1] ** 2) + 0.1, 0.0, 1.0)


def f_b_shifted(x, mu):
    return expit(x[:, 0] + x[:, 1] - 1.0 - mu)


def in_band_a(x, delta):
    return np.abs(x[:, 0] + x[:, 1] - 1.0) / math.sqrt(2.0) < delta


def in_band_b(x, delta):
    return np.abs(np.hypot(x[:, 0], x[:, 1]) - B_RADIUS) < B_BAND_FACTOR * delta


def band_propensity(in_band, eps):
    return np.where(in_band, 1.0 - eps, eps)


def gini_propensity(p1, eps):
    """Abstain with probability ``1 - sum_c p_c^2``, clipped to ``[eps, 1 - eps]``."""
    return np.clip(1.0 - (p1 ** 2 + (1.0 - p1) ** 2), eps, 1.0 - eps)


def _classifiers(cfg):
    """Return ``(f_a, f_b)`` as functions of ``x``."""
    if cfg.scenario == "paper_ab":
        return f_a, f_b_curved
    if cfg.scenario == "power_linear":
        return f_a, lambda x: f_b_shifted(x, cfg.mu_shift)
    return f_a, f_a


def propensities(cfg, x):
    """True abstention probabilities ``(pi_a, pi_b)`` at ``x``."""
    eps = cfg.epsilon
    pi_a = band_propensity(in_band_a(x, cfg.delta_band), eps)
    if cfg.scenario == "paper_ab":
        pi_b = band_propensity(in_band_b(x, cfg.delta_band), eps)
    elif cfg.scenario == "power_linear":
        pi_b = pi_a.copy()
    else:
        pi_b = gini_propensity(f_a(x), eps)
    return pi_a, pi_b


def draw_inputs(seed, n, noise):
    x = rng_for(seed, STREAM_X).random((n, 2))
    flip = rng_for(seed, STREAM_NOISE).random(n) < noise
    clean = x[:, 0] + x[:, 1] >= 1.0
    y = np.where(clean ^ flip, 2, 1)  # 1-based labels
    return x, y


def _scores(rule, p1, y):
    return score(rule, binary_probs(p1), y)


def uncensored_scores(cfg: SimConfig):
    """Features and both arms' scores before any abstention."""
    x, y = draw_inputs(cfg.seed, cfg.n, cfg.noise)
    fa, fb = _classifiers(cfg)
    s_a = _scores(cfg.score_rule, fa(x), y)
    s_b = s_a if cfg.scenario == "shared_base_null" else _scores(cfg.score_rule, fb(x), y)
    return x, s_a, s_b


def simulate_paired(cfg: SimConfig, truth=None, mc_n=DEFAULT_MC_N):
    """Draw a paired evaluation log and its ground truth.

    Parameters
    ----------
    cfg : SimConfig
    truth : SimTruth, optional
        Reuse a precomputed truth (it depends on ``cfg`` only through the
        classifiers and the noise level). Computed with ``true_delta``
        otherwise.

    Returns
    -------
    (PairedDataset, SimTruth)
    """
    x, s_a, s_b = uncensored_scores(cfg)
    pi_a, pi_b = propensities(cfg, x)
    r_a = (rng_for(cfg.seed, STREAM_RA).random(cfg.n) < pi_a).astype(np.int8)
    r_b = (rng_for(cfg.seed, STREAM_RB).random(cfg.n) < pi_b).astype(np.int8)
    pds = PairedDataset.from_arrays(x, r_a, np.where(r_a == 1, np.nan, s_a),
                                    r_b, np.where(r_b == 1, np.nan, s_b), cfg.score_range)
    if truth is None:
        truth = shared_base_truth(cfg) if cfg.scenario == "shared_base_null" else true_delta(cfg, mc_n)
    return pds, truth


def _expected_scores(rule, p1, x, noise):
    """Scores averaged over the label flip given ``x``."""
    clean = np.where(x[:, 0] + x[:, 1] >= 1.0, 2, 1)
    flipped = 3 - clean
    return (1.0 - noise) * _scores(rule, p1, clean) + noise * _scores(rule, p1, flipped)


def true_delta(cfg: SimConfig, mc_n=DEFAULT_MC_N) -> SimTruth:
    """Monte Carlo counterfactual scores of both base classifiers.

    Draws ``mc_n`` fresh inputs (no abstention) and averages each
    classifier's expected score given ``x``, integrating the label flip
    exactly. Abstention parameters do not enter. Deterministic given
    ``cfg.seed``; identical classifiers give ``delta == 0`` exactly.
    """
    if mc_n < 100_000:
        raise ValueError("mc_n must be at least 1e5")
    x = rng_for(cfg.seed, TRUTH_STREAM).random((mc_n, 2))
    fa, fb = _classifiers(cfg)
    ea = _expected_scores(cfg.score_rule, fa(x), x, cfg.noise)
    eb = ea if cfg.scenario == "shared_base_null" else _expected_scores(cfg.score_rule, fb(x), x, cfg.noise)
    psi_a = float(np.mean(ea))
    psi_b = float(np.mean(eb))
    return SimTruth(psi_a, psi_b, float(np.mean(ea - eb)), "monte_carlo", mc_n)


def shared_base_truth(cfg: SimConfig) -> SimTruth:
    """Truth for the shared-base scenario: both arms score identically."""
    if cfg.score_rule != "accuracy":
        return true_delta(cfg)
    # A predicts the clean label everywhere, so only the flips cost accuracy
    psi = 1.0 - cfg.noise
    return SimTruth(psi, psi, 0.0, "analytic")


def shared_base_null(cfg: SimConfig):
    """Paired log whose arms share one base classifier (``delta = 0``)."""
    return simulate_paired(cfg.replace(scenario="shared_base_null"))
