"""Derivative-free low-rank adaptation of frozen transformer weights.

Search vectors live in a small random subspace, get projected into low-rank
matrix pairs added to frozen attention weights, and are optimized
layer-by-layer with CMA-ES or a loser-out fireworks algorithm under a fixed
forward-call budget.
"""

# from .estimator import DfoLoraClassifier   # wired up below as modules land
# from .orchestrator import RunConfig, run, synth_task

__all__: list[str] = []
__version__ = "0.1.0"
