"""Shared pieces of the ask/tell optimizer interface."""

from dataclasses import dataclass

import numpy as np


@dataclass
class AskBatch:
    """One generation of candidate points.

    ``candidates`` is an (n, dim) array. For the fireworks optimizer,
    ``owners[i]`` is the index of the firework that candidate i belongs to
    (fireworks themselves are included for re-evaluation and own themselves).
    """

    candidates: np.ndarray
    generation: int
    owners: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.candidates)


def check_fitnesses(batch: AskBatch, fitnesses) -> np.ndarray:
    """Validate a fitness vector against its batch. Lower is better."""
    fit = np.asarray(fitnesses, dtype=float)
    if fit.ndim != 1 or len(fit) != len(batch):
        raise ValueError(
            f"expected {len(batch)} fitness values, got shape {fit.shape}"
        )
    if not np.all(np.isfinite(fit)):
        bad = np.flatnonzero(~np.isfinite(fit))
        raise ValueError(f"non-finite fitness at candidate indices {bad.tolist()}")
    return fit
