"""Frozen percolation on the triangular lattice: N-parameter dynamics,
arm-event detectors, and near-critical Monte Carlo estimators."""

__version__ = "0.1.0"
