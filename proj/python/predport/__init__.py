"""Prediction-based mean-variance-skewness portfolio optimization."""

from ._predport import (
    Error,
    config_keys,
    decode_weights,
    evaluate,
    frontier,
    ks_normality_test,
    l27,
    mvs_cost,
    optimize,
    run_stage,
)

__all__ = [
    "Error",
    "config_keys",
    "decode_weights",
    "evaluate",
    "frontier",
    "ks_normality_test",
    "l27",
    "mvs_cost",
    "optimize",
    "run_stage",
]
