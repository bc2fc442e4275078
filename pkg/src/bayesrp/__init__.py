"""Bayesian revealed-preference tests for rationally inattentive choice.

Modules:
    dataset     ingestion, featurization, maximum-likelihood estimation
    revealed    posteriors, cross expected utilities, attention/choice split
    solvers     in-repo simplex (with exact-arithmetic fallback) and QP engine
    niasniac    switch/cycle feasibility test, utility and cost recovery
    infocost    order-beta mutual information and structured-cost tests
    forward     synthetic rational agents (the oracle for the inverse tests)
    robustness  pass/fail margins R1, R2, R3
    predict     behavior prediction and variance-penalized recommendation
    cli         end-to-end command-line pipeline
"""

from . import dataset, forward, infocost, niasniac, predict, revealed, robustness, solvers

__all__ = [
    "dataset",
    "forward",
    "infocost",
    "niasniac",
    "predict",
    "revealed",
    "robustness",
    "solvers",
]

__version__ = "0.1.0"
