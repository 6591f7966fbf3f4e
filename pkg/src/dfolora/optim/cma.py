"""CMA-ES: covariance matrix adaptation evolution strategy, ask/tell style.

Standard (mu/mu_w, lambda) scheme with rank-one plus rank-mu covariance
update, cumulative step-size adaptation, and positive log-rank recombination
weights. Learning rates are the usual dimension-dependent defaults.
"""

import numpy as np

from .base import AskBatch, check_fitnesses


class CmaEs:
    """Minimizer maintaining a multivariate normal search distribution.

    Usage: repeatedly call ``ask()`` for a batch of ``population`` candidates,
    evaluate them (lower fitness is better), then ``tell(batch, fitnesses)``.
    State is mutated only by ``tell``; ``ask`` only advances the RNG.
    """

    def __init__(self, dim, population, initial_mean=None, initial_sigma=1.0,
                 seed=0):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if population < 2:
            raise ValueError(f"population must be >= 2, got {population}")
        if not initial_sigma > 0:
            raise ValueError(f"initial_sigma must be positive, got {initial_sigma}")

        self.dim = int(dim)
        self.population = int(population)
        if initial_mean is None:
            initial_mean = np.zeros(dim)
        self.mean = np.array(initial_mean, dtype=float)
        if self.mean.shape != (dim,):
            raise ValueError(
                f"initial_mean has shape {self.mean.shape}, expected ({dim},)"
            )
        self.sigma = float(initial_sigma)

        # Selection: mu best of lambda, log-rank weights summing to 1.
        n, lam = self.dim, self.population
        self.mu = lam // 2
        w = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)

        # Adaptation constants (canonical defaults as functions of dim).
        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1,
            2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff),
        )
        self.damps = (
            1 + 2 * max(0.0, np.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        )
        self.chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

        # Dynamic state.
        self.cov = np.eye(n)
        self.path_sigma = np.zeros(n)
        self.path_c = np.zeros(n)
        self.generation = 0
        self.evaluations = 0
        self.rng = np.random.default_rng(seed)

        # Eigensystem of cov, refreshed lazily (cost O(dim^3)); sampling
        # between refreshes uses the last decomposition.
        self._eigvecs = np.eye(n)
        self._eigsqrt = np.ones(n)
        self._evals_at_decomposition = 0
        self._decompose_gap = 0.5 * lam / ((self.c1 + self.cmu) * n)

    def ask(self) -> AskBatch:
        """Sample ``population`` candidates from N(mean, sigma^2 * cov)."""
        self._refresh_eigensystem()
        z = self.rng.standard_normal((self.population, self.dim))
        candidates = self.mean + self.sigma * (z * self._eigsqrt) @ self._eigvecs.T
        return AskBatch(candidates=candidates, generation=self.generation)

    def tell(self, batch: AskBatch, fitnesses) -> None:
        """Update mean, step size, and covariance from ranked candidates."""
        fit = check_fitnesses(batch, fitnesses)
        x = np.asarray(batch.candidates, dtype=float)
        if x.shape[1] != self.dim:
            raise ValueError(f"candidates have dim {x.shape[1]}, expected {self.dim}")
        n = self.dim
        self.evaluations += len(fit)

        order = np.argsort(fit, kind="stable")  # ties broken by candidate index
        elite = x[order[: self.mu]]

        old_mean = self.mean
        self.mean = self.weights @ elite
        y = (self.mean - old_mean) / self.sigma

        # C^{-1/2} y via the eigensystem of the sampling distribution.
        c_invsqrt_y = self._eigvecs @ ((self._eigvecs.T @ y) / self._eigsqrt)
        self.path_sigma = (1 - self.cs) * self.path_sigma + np.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * c_invsqrt_y

        ps_norm = np.linalg.norm(self.path_sigma)
        expected = np.sqrt(
            1 - (1 - self.cs) ** (2 * self.evaluations / self.population)
        )
        hsig = float(ps_norm / expected / self.chi_n < 1.4 + 2 / (n + 1))
        self.path_c = (1 - self.cc) * self.path_c + hsig * np.sqrt(
            self.cc * (2 - self.cc) * self.mueff
        ) * y

        dx = (elite - old_mean) / self.sigma
        rank_mu = dx.T @ (self.weights[:, None] * dx)
        self.cov = (
            (1 - self.c1 - self.cmu) * self.cov
            + self.c1
            * (
                np.outer(self.path_c, self.path_c)
                + (1 - hsig) * self.cc * (2 - self.cc) * self.cov
            )
            + self.cmu * rank_mu
        )
        self.cov = (self.cov + self.cov.T) / 2  # keep exactly symmetric

        self.sigma *= np.exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1))
        if not self.sigma > 0:
            raise FloatingPointError(f"step size collapsed to {self.sigma}")

        self.generation += 1

    def check_valid(self, symmetry_tol=1e-12) -> None:
        """Strict state audit: symmetric SPD covariance and positive sigma.

        Runs a fresh eigendecomposition, so it costs O(dim^3); call it from
        tests, not from the hot loop.
        """
        if not self.sigma > 0:
            raise FloatingPointError(f"sigma = {self.sigma} is not positive")
        asym = np.max(np.abs(self.cov - self.cov.T))
        if asym >= symmetry_tol:
            raise FloatingPointError(f"covariance asymmetry {asym:.3e}")
        min_eig = np.linalg.eigvalsh(self.cov)[0]
        if not min_eig > 0:
            raise FloatingPointError(f"covariance minimum eigenvalue {min_eig:.3e}")

    def _refresh_eigensystem(self) -> None:
        if self.evaluations - self._evals_at_decomposition < self._decompose_gap:
            return  # identity at start; later, last decomposition still close
        eigvals, eigvecs = np.linalg.eigh(self.cov)
        if not eigvals[0] > 0:
            raise FloatingPointError(
                f"covariance lost positive definiteness (min eigenvalue {eigvals[0]:.3e})"
            )
        self._eigsqrt = np.sqrt(eigvals)
        self._eigvecs = eigvecs
        self._evals_at_decomposition = self.evaluations
