"""Counterfactual scores for abstaining classifiers."""

__version__ = "0.1.0"
