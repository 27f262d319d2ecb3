"""Simulation-based constrained optimization of divergences and Bregman distances."""

from . import (
    checks,
    constraints,
    distributions,
    divergences,
    engine,
    estimators,
    generators,
    oracle,
    transforms,
)

__all__ = [
    "checks",
    "constraints",
    "distributions",
    "divergences",
    "engine",
    "estimators",
    "generators",
    "oracle",
    "transforms",
]

__version__ = "0.1.0"
