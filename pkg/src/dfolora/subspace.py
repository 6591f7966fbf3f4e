"""Random projections from the intrinsic-dimension subspace to low-rank pairs.

Each adapted attention slot gets two frozen projection matrices, one per
low-rank factor: a (r*k x d) matrix producing the A factor and a (D*r x d)
matrix producing the B factor. A search vector m in R^d maps to a factor by
matrix-vector product and row-major reshape. Projection entries are sampled
i.i.d. normal with mean zero and a std tied to the layer's observed
hidden-state scale ("ril" mode) or fixed at 0.5 ("ri" mode).
"""

from dataclasses import dataclass, field

import numpy as np

from .backbone import LowRankPair

INIT_MODES = ("ril", "ri")
RI_SIGMA = 0.5


def projection_sigma(sigma_hat, sigma_z, alpha, d, mode="ril") -> float:
    """Entry std for a projection matrix: alpha*sigma_hat/(sqrt(d)*sigma_z)."""
    if mode not in INIT_MODES:
        raise ValueError(f"init mode must be one of {INIT_MODES}, got {mode!r}")
    if mode == "ri":
        return RI_SIGMA
    for name, value in (("sigma_hat", sigma_hat), ("sigma_z", sigma_z),
                        ("alpha", alpha), ("d", d)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    return alpha * sigma_hat / (np.sqrt(d) * sigma_z)


@dataclass
class ProjectionTensor:
    """Frozen (rows x d) random matrix mapping subspace vectors to a factor."""

    entries: np.ndarray
    sigma: float

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def init_projection(rows, d, sigma_hat, sigma_z=1.0, alpha=1.0, seed=0,
                    mode="ril") -> ProjectionTensor:
    if rows < 1 or d < 1:
        raise ValueError(f"rows and d must be positive, got {rows}, {d}")
    sigma = projection_sigma(sigma_hat, sigma_z, alpha, d, mode=mode)
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((rows, d)) * sigma
    return ProjectionTensor(entries=entries, sigma=float(sigma))


def project(tensor: ProjectionTensor, m, shape) -> np.ndarray:
    """G @ m reshaped row-major to ``shape``; G is never modified."""
    m = np.asarray(m, dtype=float)
    if m.shape != (tensor.dim,):
        raise ValueError(f"vector has shape {m.shape}, expected ({tensor.dim},)")
    p, q = shape
    if p * q != tensor.rows:
        raise ValueError(f"target shape {shape} does not match {tensor.rows} rows")
    return (tensor.entries @ m).reshape(p, q)


@dataclass
class LayerSubspace:
    """One layer's projection tensors and subspace slices, one (A, B) pair
    per adapted target weight.

    The layer's search vector is the concatenation of one d-vector per
    factor: (A, B) for each target in order, so len = 2 * n_targets * d
    (4d for the default Q/K target set).
    """

    layer: int
    d: int
    rank: int
    attention_size: int   # k: columns of the A factor
    hidden_size: int      # D: rows of the B factor
    targets: tuple = ("q", "k")
    projections: dict = field(default_factory=dict)  # (target, factor) -> ProjectionTensor

    @property
    def flat_dim(self) -> int:
        return 2 * len(self.targets) * self.d

    def roles(self):
        """Factor roles in flat-vector order: (q,a), (q,b), (k,a), (k,b), ..."""
        return [(t, f) for t in self.targets for f in ("a", "b")]

    def split(self, flat) -> dict:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.flat_dim,):
            raise ValueError(
                f"candidate has shape {flat.shape}, expected ({self.flat_dim},)"
            )
        return {
            role: flat[i * self.d:(i + 1) * self.d]
            for i, role in enumerate(self.roles())
        }

    def materialize(self, flat) -> list[LowRankPair]:
        """Project a flat search vector into one LowRankPair per target."""
        parts = self.split(flat)
        pairs = []
        for target in self.targets:
            a = project(self.projections[(target, "a")], parts[(target, "a")],
                        (self.rank, self.attention_size))
            b = project(self.projections[(target, "b")], parts[(target, "b")],
                        (self.hidden_size, self.rank))
            pairs.append(LowRankPair(a=a, b=b, layer=self.layer, target=target))
        return pairs


def build_layer_subspace(layer, d, rank, attention_size, hidden_size,
                         sigma_hat, sigma_z=1.0, alpha=1.0, seed=0,
                         mode="ril", targets=("q", "k")) -> LayerSubspace:
    """Sample the layer's projection tensors, one independent G per factor."""
    sub = LayerSubspace(layer=layer, d=d, rank=rank,
                        attention_size=attention_size,
                        hidden_size=hidden_size, targets=tuple(targets))
    seeds = np.random.SeedSequence(seed).spawn(len(sub.roles()))
    for role, child in zip(sub.roles(), seeds):
        target, factor = role
        rows = rank * attention_size if factor == "a" else hidden_size * rank
        rng = np.random.default_rng(child)
        sigma = projection_sigma(sigma_hat, sigma_z, alpha, d, mode=mode)
        entries = rng.standard_normal((rows, d)) * sigma
        sub.projections[role] = ProjectionTensor(entries=entries, sigma=float(sigma))
    return sub
