"""Minimal frozen transformer encoder with low-rank injection points.

The encoder is a stand-in for a pretrained masked language model at toy
scale: pre-layer-norm blocks, (multi-)head self-attention, GELU feed-forward,
learned position embeddings, and a readout tied to the token embedding table.
All weights are drawn once from a seeded normal distribution and then frozen
(the arrays are write-protected); adaptation happens exclusively through
per-call low-rank deltas on the attention weights.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStatsError

LN_EPS = 1e-5
TARGETS = ("q", "k", "v")

# Init scales keep per-layer hidden stds around 0.3-0.5, so subspace
# projections calibrated to the hidden scale produce low-rank deltas on the
# same order as the attention weights themselves.
EMBED_SCALE = 0.2
ATTN_OUT_SCALE = 0.25
FFN_OUT_SCALE = 0.25


@dataclass(frozen=True)
class ModelConfig:
    num_layers: int
    hidden_size: int
    vocab_size: int
    max_seq_len: int
    num_heads: int = 1
    attention_size: int | None = None  # defaults to hidden_size
    seed: int = 0

    def __post_init__(self):
        k = self.attention_size if self.attention_size is not None else self.hidden_size
        object.__setattr__(self, "attention_size", k)
        for name in ("num_layers", "hidden_size", "vocab_size", "max_seq_len",
                     "num_heads", "attention_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError("hidden_size must be divisible by num_heads")
        if k % self.num_heads != 0:
            raise ValueError("attention_size must be divisible by num_heads")


@dataclass
class LowRankPair:
    """Rank-r additive delta B @ A for one (layer, target) attention slot."""

    a: np.ndarray  # (r, k)
    b: np.ndarray  # (D, r)
    layer: int
    target: str

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.ndim != 2 or self.b.ndim != 2 or self.a.shape[0] != self.b.shape[1]:
            raise ValueError(
                f"incompatible low-rank factors {self.b.shape} @ {self.a.shape}"
            )
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")

    @property
    def rank(self) -> int:
        return self.a.shape[0]


@dataclass
class TokenBatch:
    """Padded token id matrix with one mask position per sequence."""

    tokens: np.ndarray          # (batch, seq) int
    lengths: np.ndarray         # (batch,) int
    mask_positions: np.ndarray  # (batch,) int

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        self.lengths = np.asarray(self.lengths, dtype=np.int64)
        self.mask_positions = np.asarray(self.mask_positions, dtype=np.int64)
        b, t = self.tokens.shape
        if self.lengths.shape != (b,) or self.mask_positions.shape != (b,):
            raise ValueError("lengths and mask_positions must have one entry per sequence")
        if np.any(self.lengths < 1) or np.any(self.lengths > t):
            raise ValueError("sequence lengths must be in [1, seq]")
        if np.any(self.mask_positions < 0) or np.any(self.mask_positions >= self.lengths):
            raise ValueError("each sequence needs exactly one mask position inside it")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class HiddenStats:
    """Per-layer standard deviation of hidden-state entries."""

    layer_std: np.ndarray  # (num_layers,)
    sample_count: int


@dataclass
class FrozenModel:
    config: ModelConfig
    embed: np.ndarray
    pos: np.ndarray
    layers: list = field(default_factory=list)  # list of dicts of weight arrays
    final_ln_g: np.ndarray = None
    final_ln_b: np.ndarray = None

    def named_tensors(self):
        """All weights as (name, array) in a fixed order."""
        out = [("embed", self.embed), ("pos", self.pos)]
        for i, layer in enumerate(self.layers):
            for name in sorted(layer):
                out.append((f"layer{i}.{name}", layer[name]))
        out.append(("final_ln_g", self.final_ln_g))
        out.append(("final_ln_b", self.final_ln_b))
        return out

    def checksum(self) -> str:
        """SHA-256 over all weights; used by the frozen-weight audit."""
        digest = hashlib.sha256()
        for name, arr in self.named_tensors():
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()


def build_model(config: ModelConfig) -> FrozenModel:
    """Sample a frozen model from the config seed; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    d, k, v = config.hidden_size, config.attention_size, config.vocab_size
    ff = 4 * d

    def normal(shape, scale):
        arr = rng.standard_normal(shape) * scale
        arr.setflags(write=False)
        return arr

    def frozen(arr):
        arr.setflags(write=False)
        return arr

    embed = normal((v, d), EMBED_SCALE)
    pos = normal((config.max_seq_len, d), EMBED_SCALE)
    layers = []
    for _ in range(config.num_layers):
        layers.append({
            "wq": normal((d, k), 1 / np.sqrt(d)),
            "wk": normal((d, k), 1 / np.sqrt(d)),
            "wv": normal((d, k), 1 / np.sqrt(d)),
            "wo": normal((k, d), ATTN_OUT_SCALE / np.sqrt(k)),
            "ln1_g": frozen(np.ones(d)),
            "ln1_b": frozen(np.zeros(d)),
            "ln2_g": frozen(np.ones(d)),
            "ln2_b": frozen(np.zeros(d)),
            "w1": normal((d, ff), 1 / np.sqrt(d)),
            "b1": frozen(np.zeros(ff)),
            "w2": normal((ff, d), FFN_OUT_SCALE / np.sqrt(ff)),
            "b2": frozen(np.zeros(d)),
        })
    return FrozenModel(
        config=config,
        embed=embed,
        pos=pos,
        layers=layers,
        final_ln_g=frozen(np.ones(d)),
        final_ln_b=frozen(np.zeros(d)),
    )


def effective_weight(weight: np.ndarray, pair: LowRankPair) -> np.ndarray:
    """W + B @ A without mutating W."""
    delta = pair.b @ pair.a
    if delta.shape != weight.shape:
        raise ValueError(
            f"delta shape {delta.shape} does not match weight shape {weight.shape}"
        )
    return weight + delta


def _layer_norm(x, gamma, beta):
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + LN_EPS) * gamma + beta


def _gelu(x):
    # tanh approximation; x*x*x instead of x**3 (numpy pow is slow)
    return 0.5 * x * (1 + np.tanh(np.sqrt(2 / np.pi) * (x + 0.044715 * (x * x * x))))


def _index_deltas(model: FrozenModel, deltas) -> dict:
    slots = {}
    for pair in deltas:
        if not 0 <= pair.layer < model.config.num_layers:
            raise ValueError(
                f"delta layer {pair.layer} out of range for {model.config.num_layers}-layer model"
            )
        key = (pair.layer, pair.target)
        if key in slots:
            raise ValueError(f"duplicate delta for slot {key}")
        weight = model.layers[pair.layer]["w" + pair.target]
        if pair.a.shape[1] != weight.shape[1] or pair.b.shape[0] != weight.shape[0]:
            raise ValueError(
                f"factors ({pair.b.shape} @ {pair.a.shape}) do not fit weight {weight.shape} at slot {key}"
            )
        slots[key] = pair
    return slots


def _forward_states(model: FrozenModel, deltas, batch: TokenBatch):
    """Run the encoder; returns (mask features, per-layer hidden states)."""
    cfg = model.config
    tokens = batch.tokens
    if np.any(tokens < 0) or np.any(tokens >= cfg.vocab_size):
        raise ValueError("token id out of vocabulary range")
    bsz, seq = tokens.shape
    if seq > cfg.max_seq_len:
        raise ValueError(f"sequence length {seq} exceeds max {cfg.max_seq_len}")
    slots = _index_deltas(model, deltas)

    h = model.embed[tokens] + model.pos[:seq]
    valid = np.arange(seq) < batch.lengths[:, None]  # (bsz, seq)
    key_mask = np.where(valid, 0.0, -np.inf)[:, None, None, :]  # broadcast over heads/queries

    heads = cfg.num_heads
    head_dim = cfg.attention_size // heads
    hidden = []
    for li, layer in enumerate(model.layers):
        x = _layer_norm(h, layer["ln1_g"], layer["ln1_b"])
        wq, wk, wv = layer["wq"], layer["wk"], layer["wv"]
        if (li, "q") in slots:
            wq = effective_weight(wq, slots[(li, "q")])
        if (li, "k") in slots:
            wk = effective_weight(wk, slots[(li, "k")])
        if (li, "v") in slots:
            wv = effective_weight(wv, slots[(li, "v")])
        q = (x @ wq).reshape(bsz, seq, heads, head_dim).transpose(0, 2, 1, 3)
        kk = (x @ wk).reshape(bsz, seq, heads, head_dim).transpose(0, 2, 1, 3)
        vv = (x @ wv).reshape(bsz, seq, heads, head_dim).transpose(0, 2, 1, 3)
        scores = q @ kk.transpose(0, 1, 3, 2) / np.sqrt(head_dim) + key_mask
        scores = scores - scores.max(axis=-1, keepdims=True)
        probs = np.exp(scores)
        probs /= probs.sum(axis=-1, keepdims=True)
        attn = (probs @ vv).transpose(0, 2, 1, 3).reshape(bsz, seq, cfg.attention_size)
        h = h + attn @ layer["wo"]

        x2 = _layer_norm(h, layer["ln2_g"], layer["ln2_b"])
        h = h + _gelu(x2 @ layer["w1"] + layer["b1"]) @ layer["w2"] + layer["b2"]
        hidden.append(h)

    final = _layer_norm(h, model.final_ln_g, model.final_ln_b)
    features = final[np.arange(bsz), batch.mask_positions]
    return features, hidden


def forward(model: FrozenModel, deltas, batch: TokenBatch) -> np.ndarray:
    """Mask-position vocabulary logits; pure in (model, deltas, batch)."""
    features, _ = _forward_states(model, deltas, batch)
    return features @ model.embed.T


def mask_features(model: FrozenModel, deltas, batch: TokenBatch) -> np.ndarray:
    """Final hidden state at the mask position (what the readout consumes)."""
    features, _ = _forward_states(model, deltas, batch)
    return features


def collect_hidden_stats(model: FrozenModel, batch: TokenBatch) -> HiddenStats:
    """Std of each layer's output entries over non-pad positions.

    Population standard deviation over all (position, dimension) entries of
    the layer output, computed with zero deltas on a calibration batch.
    """
    if len(batch) == 0:
        raise ValueError("calibration batch is empty")
    _, hidden = _forward_states(model, [], batch)
    seq = batch.tokens.shape[1]
    valid = np.arange(seq) < batch.lengths[:, None]
    stds = []
    for h in hidden:
        entries = h[valid]  # (n_valid_positions, hidden)
        stds.append(entries.std())
    stds = np.asarray(stds)
    if np.any(stds < 1e-9):
        raise DegenerateStatsError(
            f"degenerate hidden-state statistics (layer stds {stds.tolist()})"
        )
    return HiddenStats(layer_std=stds, sample_count=int(valid.sum()) * model.config.hidden_size)
