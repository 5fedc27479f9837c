"""Learners for the abstention propensity and the observed-score regression."""

from .learners import (
    DEFAULTS,
    KINDS,
    PROFILES,
    ClipBounds,
    FittedPredictor,
    LearnerSpec,
    clip_propensity,
    exponentiated_gradient,
    fit_learner,
    fit_super_learner,
    nuisance_profile,
    super_learner_spec,
)

__all__ = [
    "DEFAULTS",
    "KINDS",
    "PROFILES",
    "ClipBounds",
    "FittedPredictor",
    "LearnerSpec",
    "clip_propensity",
    "exponentiated_gradient",
    "fit_learner",
    "fit_super_learner",
    "nuisance_profile",
    "super_learner_spec",
]
