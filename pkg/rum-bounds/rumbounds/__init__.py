"""Counterfactual demand bounds for the nonparametric random utility model."""

__version__ = "0.1.0"
