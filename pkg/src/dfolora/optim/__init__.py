"""Derivative-free optimizers behind a uniform ask/tell interface."""

from .base import AskBatch
from .benchmarks import (
    BENCH_BOUNDS,
    BenchmarkObjective,
    make_optimizer,
    minimize,
    random_search,
    rastrigin,
    rosenbrock,
    sphere,
)
from .cma import CmaEs
from .fwa import LoserOutFwa, allocate_sparks

__all__ = [
    "AskBatch",
    "BENCH_BOUNDS",
    "BenchmarkObjective",
    "CmaEs",
    "LoserOutFwa",
    "allocate_sparks",
    "make_optimizer",
    "minimize",
    "random_search",
    "rastrigin",
    "rosenbrock",
    "sphere",
]
