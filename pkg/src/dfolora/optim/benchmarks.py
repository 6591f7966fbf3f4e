"""Benchmark objectives and a budgeted minimize loop for optimizer validation."""

from dataclasses import dataclass, field

import numpy as np

from .cma import CmaEs
from .fwa import LoserOutFwa

BENCH_BOUNDS = (-5.0, 5.0)


def sphere(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x))


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return float(10.0 * len(x) + np.sum(x * x - 10.0 * np.cos(2 * np.pi * x)))


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return float(
        np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2)
    )


_FUNCTIONS = {"sphere": sphere, "rastrigin": rastrigin, "rosenbrock": rosenbrock}


@dataclass
class BenchmarkObjective:
    """Named test function with a known global minimum of 0."""

    name: str
    dim: int
    calls: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.name not in _FUNCTIONS:
            raise ValueError(f"unknown objective {self.name!r}; pick one of {sorted(_FUNCTIONS)}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dim},)")
        self.calls += 1
        return _FUNCTIONS[self.name](x)


def make_optimizer(kind, dim, seed, population=None, max_evals=None,
                   spark_budget=20):
    """Build a benchmark-configured optimizer with a seeded start."""
    rng = np.random.default_rng(seed)
    if kind == "cma":
        if population is None:
            population = 4 + int(3 * np.log(dim))
        start = rng.uniform(-4.0, 4.0, dim)
        return CmaEs(dim, population, initial_mean=start, initial_sigma=2.0,
                     seed=rng.integers(2**31))
    if kind == "fwa":
        if population is None:
            population = 5
        gen_cost = population + spark_budget
        horizon = None if max_evals is None else max(1, max_evals // gen_cost)
        return LoserOutFwa(dim, population, spark_budget,
                           search_bounds=BENCH_BOUNDS,
                           max_generations=horizon, seed=rng.integers(2**31))
    raise ValueError(f"unknown optimizer {kind!r}; pick 'cma' or 'fwa'")


def minimize(optimizer, objective, max_evals, seed, population=None):
    """Run ask/tell until the evaluation budget cannot fit another generation.

    Returns (best point, best fitness, trace) where trace has one
    (generation, evals_used, best_fitness) row per generation. Never calls
    the objective more than ``max_evals`` times.
    """
    if isinstance(optimizer, str):
        optimizer = make_optimizer(optimizer, objective.dim, seed,
                                   population=population, max_evals=max_evals)
    if max_evals < 1:
        raise ValueError(f"max_evals must be positive, got {max_evals}")

    evals_used = 0
    best_x = None
    best_f = np.inf
    trace = []
    while True:
        batch = optimizer.ask()
        if evals_used + len(batch) > max_evals:
            if not trace:
                raise ValueError(
                    f"budget {max_evals} is below one generation ({len(batch)} evaluations)"
                )
            break
        fitnesses = np.array([objective(x) for x in batch.candidates])
        optimizer.tell(batch, fitnesses)
        evals_used += len(batch)
        gen_best = int(np.argmin(fitnesses))
        if fitnesses[gen_best] < best_f:
            best_f = float(fitnesses[gen_best])
            best_x = np.array(batch.candidates[gen_best])
        trace.append((batch.generation, evals_used, best_f))
    return best_x, best_f, trace


def random_search(objective, max_evals, seed, bounds=BENCH_BOUNDS):
    """Uniform random sampling baseline over the benchmark box."""
    rng = np.random.default_rng(seed)
    best_x, best_f = None, np.inf
    for _ in range(max_evals):
        x = rng.uniform(bounds[0], bounds[1], objective.dim)
        f = objective(x)
        if f < best_f:
            best_x, best_f = x, f
    return best_x, best_f
