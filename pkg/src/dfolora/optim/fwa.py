"""Loser-out tournament fireworks algorithm, ask/tell style.

Each firework explodes into sparks sampled uniformly in a per-coordinate
amplitude box. Sparks are allocated to fireworks in inverse proportion to
fitness rank, amplitudes grow on improvement and shrink on stagnation, and a
firework whose extrapolated progress cannot catch the global best before the
generation horizon runs out is restarted at a fresh uniform position.
"""

import numpy as np

from .base import AskBatch, check_fitnesses

AMPLITUDE_GROW = 1.2
AMPLITUDE_SHRINK = 0.9


def allocate_sparks(ranks, budget, lo, hi):
    """Split ``budget`` sparks over fireworks, weight 1/rank, bounds [lo, hi].

    ``ranks`` are 1-based fitness ranks (1 = best). Returns integer counts
    summing exactly to ``budget``; ties and rounding are resolved
    deterministically (largest remainder, then rank order).
    """
    n = len(ranks)
    if not n * lo <= budget <= n * hi:
        raise ValueError(
            f"spark budget {budget} infeasible for {n} fireworks with bounds ({lo}, {hi})"
        )
    weights = 1.0 / np.asarray(ranks, dtype=float)
    ideal = budget * weights / weights.sum()
    counts = np.floor(ideal).astype(int)
    # Largest fractional remainders get the leftover sparks.
    remainder_order = np.lexsort((np.arange(n), -(ideal - counts)))
    for i in remainder_order[: budget - counts.sum()]:
        counts[i] += 1
    counts = np.clip(counts, lo, hi)
    # Clipping can break the total; repair by nudging non-saturated entries,
    # best-ranked first for surplus, worst-ranked first for deficit.
    by_rank = np.argsort(ranks, kind="stable")
    while counts.sum() < budget:
        for i in by_rank:
            if counts.sum() == budget:
                break
            if counts[i] < hi:
                counts[i] += 1
    while counts.sum() > budget:
        for i in by_rank[::-1]:
            if counts.sum() == budget:
                break
            if counts[i] > lo:
                counts[i] -= 1
    return counts


class LoserOutFwa:
    """Fireworks minimizer with elitist selection and a loser-out tournament.

    ``ask`` returns each firework's sparks followed by the firework positions
    themselves (re-evaluated every generation); ``tell`` replaces each
    firework with the best point of its own cluster, adapts its amplitude,
    and restarts provable losers. ``max_generations`` is the horizon used by
    the loser extrapolation; with None the tournament is disabled.
    """

    def __init__(self, dim, n_fireworks, spark_budget, spark_bounds=None,
                 amplitude_bounds=None, search_bounds=(-5.0, 5.0),
                 max_generations=None, seed=0):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if n_fireworks < 1:
            raise ValueError(f"n_fireworks must be >= 1, got {n_fireworks}")
        if spark_budget < n_fireworks:
            raise ValueError(
                f"spark_budget {spark_budget} must be >= n_fireworks {n_fireworks}"
            )

        self.dim = int(dim)
        self.n_fireworks = int(n_fireworks)
        self.spark_budget = int(spark_budget)

        bounds = np.asarray(search_bounds, dtype=float)
        if bounds.shape == (2,):
            bounds = np.tile(bounds, (dim, 1))
        if bounds.shape != (dim, 2) or not np.all(bounds[:, 0] < bounds[:, 1]):
            raise ValueError("search_bounds must be a well-ordered (lo, hi) per coordinate")
        self.bounds = bounds

        if spark_bounds is None:
            spark_bounds = (1, spark_budget)
        lo, hi = int(spark_bounds[0]), int(spark_bounds[1])
        if not (1 <= lo <= hi):
            raise ValueError(f"malformed spark_bounds {spark_bounds}")
        if not n_fireworks * lo <= spark_budget <= n_fireworks * hi:
            raise ValueError(
                f"spark_bounds {spark_bounds} cannot absorb budget {spark_budget}"
            )
        self.spark_bounds = (lo, hi)

        span = float(np.max(bounds[:, 1] - bounds[:, 0]))
        if amplitude_bounds is None:
            amplitude_bounds = (1e-10 * span, span)
        if not 0 < amplitude_bounds[0] <= amplitude_bounds[1]:
            raise ValueError(f"malformed amplitude_bounds {amplitude_bounds}")
        self.amplitude_bounds = (float(amplitude_bounds[0]), float(amplitude_bounds[1]))

        self.max_generations = max_generations
        self.generation = 0
        self.evaluations = 0
        self.rng = np.random.default_rng(seed)

        n = self.n_fireworks
        self.positions = self._uniform_positions(n)
        self.fitness = np.full(n, np.inf)
        self.amplitudes = np.full(n, self.amplitude_bounds[1])
        self.personal_best = np.full(n, np.inf)
        self.progress_rate = np.zeros(n)
        self.age = np.zeros(n, dtype=int)
        self.best_position = self.positions[0].copy()
        self.best_fitness = np.inf

    def ask(self) -> AskBatch:
        """Emit sparks around every firework plus the fireworks themselves."""
        ranks = self._fitness_ranks()
        counts = allocate_sparks(
            ranks, self.spark_budget, self.spark_bounds[0], self.spark_bounds[1]
        )
        chunks = []
        owners = []
        for i in range(self.n_fireworks):
            offsets = self.rng.uniform(
                -self.amplitudes[i], self.amplitudes[i], (counts[i], self.dim)
            )
            sparks = np.clip(
                self.positions[i] + offsets, self.bounds[:, 0], self.bounds[:, 1]
            )
            chunks.append(sparks)
            owners.extend([i] * counts[i])
        chunks.append(self.positions.copy())
        owners.extend(range(self.n_fireworks))
        return AskBatch(
            candidates=np.vstack(chunks),
            generation=self.generation,
            owners=np.asarray(owners),
        )

    def tell(self, batch: AskBatch, fitnesses) -> None:
        """Elitist per-cluster selection, amplitude adaptation, loser-out."""
        fit = check_fitnesses(batch, fitnesses)
        if batch.owners is None or len(batch.owners) != len(batch):
            raise ValueError("batch is missing per-candidate owners")
        self.evaluations += len(fit)

        candidates = np.asarray(batch.candidates, dtype=float)
        improved = np.zeros(self.n_fireworks, dtype=bool)
        for i in range(self.n_fireworks):
            cluster = np.flatnonzero(batch.owners == i)
            best = cluster[np.argmin(fit[cluster])]  # ties: first candidate wins
            new_fit = float(fit[best])
            self.positions[i] = candidates[best]
            self.fitness[i] = new_fit

            if new_fit < self.personal_best[i]:
                gain = self.personal_best[i] - new_fit
                if np.isfinite(gain):
                    self.age[i] += 1
                    self.progress_rate[i] += (gain - self.progress_rate[i]) / self.age[i]
                improved[i] = True
                self.personal_best[i] = new_fit
                self.amplitudes[i] *= AMPLITUDE_GROW
            else:
                self.age[i] += 1
                self.progress_rate[i] -= self.progress_rate[i] / self.age[i]
                self.amplitudes[i] *= AMPLITUDE_SHRINK
            self.amplitudes[i] = np.clip(self.amplitudes[i], *self.amplitude_bounds)

            if new_fit < self.best_fitness:
                self.best_fitness = new_fit
                self.best_position = candidates[best].copy()

        self.generation += 1
        self._restart_losers(improved)

    def _restart_losers(self, improved) -> None:
        if self.max_generations is None:
            return
        remaining = self.max_generations - self.generation
        if remaining <= 0:
            return
        for i in range(self.n_fireworks):
            if improved[i]:
                continue  # a firework still making progress is never a loser
            reachable = self.personal_best[i] - self.progress_rate[i] * remaining
            if reachable > self.best_fitness:
                self.positions[i] = self._uniform_positions(1)[0]
                self.fitness[i] = np.inf
                self.personal_best[i] = np.inf
                self.amplitudes[i] = self.amplitude_bounds[1]
                self.progress_rate[i] = 0.0
                self.age[i] = 0

    def _fitness_ranks(self):
        # Unevaluated (inf) fireworks rank worst; ties broken by index.
        order = np.argsort(self.fitness, kind="stable")
        ranks = np.empty(self.n_fireworks, dtype=int)
        ranks[order] = np.arange(1, self.n_fireworks + 1)
        return ranks

    def _uniform_positions(self, count):
        return self.rng.uniform(
            self.bounds[:, 0], self.bounds[:, 1], (count, self.dim)
        )
