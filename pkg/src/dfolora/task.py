"""Few-shot data handling, template/verbalizer rendering, loss and metrics.

Corpora are TSV files (header ``label\ttext`` or ``label\ttext1\ttext2``).
Tokenization is whitespace + lowercase over a vocabulary built from the
corpus, with reserved <pad>/<unk>/<mask> tokens; verbalizer words and pattern
literals are guaranteed into the vocabulary. Classification restricts the
mask-position vocabulary logits to the verbalizer columns.
"""

from dataclasses import dataclass, field

import numpy as np

from .backbone import TokenBatch
from .errors import CorpusFormatError

PAD, UNK, MASK = "<pad>", "<unk>", "<mask>"
SLOT_NAMES = ("text", "text1", "text2")


@dataclass(frozen=True)
class Instance:
    label: int
    fields: tuple  # one entry for single-sentence, two for sentence-pair


class Tokenizer:
    """Whitespace + lowercase tokenizer over a fixed corpus vocabulary."""

    def __init__(self, texts, extra_words=()):
        words = sorted({w for text in texts for w in text.lower().split()}
                       | {w.lower() for w in extra_words})
        self.vocab = {PAD: 0, UNK: 1, MASK: 2}
        for w in words:
            if w not in self.vocab:
                self.vocab[w] = len(self.vocab)
        self.pad_id, self.unk_id, self.mask_id = 0, 1, 2

    def __len__(self) -> int:
        return len(self.vocab)

    def encode_word(self, word: str) -> int:
        return self.vocab.get(word.lower(), self.unk_id)

    def encode(self, text: str) -> list[int]:
        return [self.encode_word(w) for w in text.lower().split()]


@dataclass(frozen=True)
class Pattern:
    """Ordered literals and slots; exactly one <mask> slot."""

    segments: tuple

    def __post_init__(self):
        masks = sum(1 for s in self.segments if s == MASK)
        if masks != 1:
            raise ValueError(f"pattern needs exactly one {MASK} slot, found {masks}")

    @property
    def slots(self):
        return tuple(s for s in self.segments if s in SLOT_NAMES)

    def literal_words(self):
        return [w for s in self.segments
                if s != MASK and s not in SLOT_NAMES for w in s.split()]


class Verbalizer:
    """Injective map from class id to a single vocabulary token."""

    def __init__(self, words: dict, tokenizer: Tokenizer):
        items = sorted((int(c), w) for c, w in words.items())
        if [c for c, _ in items] != list(range(len(items))):
            raise ValueError(f"class ids must be 0..{len(items) - 1}, got {[c for c, _ in items]}")
        token_ids = []
        for c, w in items:
            if len(w.split()) != 1:
                raise ValueError(f"verbalizer for class {c} must be a single token, got {w!r}")
            tid = tokenizer.vocab.get(w.lower())
            if tid is None:
                raise ValueError(f"verbalizer word {w!r} is not in the vocabulary")
            token_ids.append(tid)
        if len(set(token_ids)) != len(token_ids):
            raise ValueError("verbalizer must map classes to distinct tokens")
        self.words = {c: w for c, w in items}
        self.token_ids = np.asarray(token_ids)

    @property
    def n_classes(self) -> int:
        return len(self.token_ids)


@dataclass
class FewShotSplit:
    train: list
    dev: list
    n_per_class: int
    n_classes: int
    train_indices: np.ndarray = None
    dev_indices: np.ndarray = None


@dataclass
class EvalResult:
    loss: float
    accuracy: float
    f1: float | None
    eval_count: int


def load_corpus(path, schema, n_classes=None) -> list[Instance]:
    """Parse a TSV corpus; malformed rows are reported with line numbers."""
    if schema not in ("single", "pair"):
        raise ValueError(f"schema must be 'single' or 'pair', got {schema!r}")
    n_fields = 1 if schema == "single" else 2
    expected = ["label"] + (["text"] if schema == "single" else ["text1", "text2"])
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorpusFormatError(f"{path}: empty file")
    header = lines[0].split("\t")
    if header != expected:
        raise CorpusFormatError(f"{path}: header {header} does not match {expected}")

    instances = []
    bad = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != n_fields + 1 or any(not p.strip() for p in parts):
            bad.append(lineno)
            continue
        try:
            label = int(parts[0])
        except ValueError:
            bad.append(lineno)
            continue
        if label < 0 or (n_classes is not None and label >= n_classes):
            raise CorpusFormatError(
                f"{path}: unknown label {parts[0]!r} on line {lineno}"
            )
        instances.append(Instance(label=label, fields=tuple(parts[1:])))
    if bad:
        raise CorpusFormatError(f"{path}: malformed rows at lines {bad}")
    return instances


def sample_few_shot(corpus, n_per_class, seed) -> FewShotSplit:
    """Disjoint class-balanced train/dev with n instances per class each."""
    labels = sorted({inst.label for inst in corpus})
    n_classes = len(labels)
    if labels != list(range(n_classes)):
        raise ValueError(f"class ids must be contiguous from 0, got {labels}")
    rng = np.random.default_rng(seed)
    train_idx, dev_idx = [], []
    for label in labels:
        pool = np.asarray([i for i, inst in enumerate(corpus) if inst.label == label])
        if len(pool) < 2 * n_per_class:
            raise ValueError(
                f"class {label} has {len(pool)} instances, needs {2 * n_per_class}"
            )
        picked = rng.permutation(pool)[: 2 * n_per_class]
        train_idx.extend(picked[:n_per_class])
        dev_idx.extend(picked[n_per_class:])
    train_idx = np.asarray(sorted(train_idx))
    dev_idx = np.asarray(sorted(dev_idx))
    return FewShotSplit(
        train=[corpus[i] for i in train_idx],
        dev=[corpus[i] for i in dev_idx],
        n_per_class=n_per_class,
        n_classes=n_classes,
        train_indices=train_idx,
        dev_indices=dev_idx,
    )


def holdout(corpus, split: FewShotSplit) -> list[Instance]:
    """Corpus instances outside the few-shot split (a test set, if any)."""
    used = set(split.train_indices.tolist()) | set(split.dev_indices.tolist())
    return [inst for i, inst in enumerate(corpus) if i not in used]


def render(instance: Instance, pattern: Pattern, tokenizer: Tokenizer,
           max_len: int):
    """Token ids plus the mask position; text fields truncate from the right."""
    slots = pattern.slots
    if len(slots) != len(instance.fields):
        raise ValueError(
            f"pattern has {len(slots)} text slots but instance has {len(instance.fields)} fields"
        )
    fields = dict(zip(slots, instance.fields))
    pieces = []
    for seg in pattern.segments:
        if seg == MASK:
            pieces.append(("mask", [tokenizer.mask_id]))
        elif seg in SLOT_NAMES:
            pieces.append(("text", tokenizer.encode(fields[seg])))
        else:
            pieces.append(("literal", tokenizer.encode(seg)))
    fixed = sum(len(ids) for kind, ids in pieces if kind != "text")
    if fixed > max_len:
        raise ValueError(
            f"pattern literals alone take {fixed} tokens, over the {max_len} limit"
        )
    overflow = sum(len(ids) for _, ids in pieces) - max_len
    while overflow > 0:
        # drop from the right of the currently longest text field
        longest = max((ids for kind, ids in pieces if kind == "text" and ids), key=len)
        longest.pop()
        overflow -= 1
    tokens = []
    mask_pos = None
    for kind, ids in pieces:
        if kind == "mask":
            mask_pos = len(tokens)
        tokens.extend(ids)
    return tokens, mask_pos


def make_token_batch(instances, pattern: Pattern, tokenizer: Tokenizer,
                     max_len: int):
    """Render and pad a list of instances; returns (TokenBatch, labels)."""
    rendered = [render(inst, pattern, tokenizer, max_len) for inst in instances]
    width = max(len(tokens) for tokens, _ in rendered)
    tokens = np.full((len(rendered), width), tokenizer.pad_id, dtype=np.int64)
    lengths = np.empty(len(rendered), dtype=np.int64)
    mask_positions = np.empty(len(rendered), dtype=np.int64)
    for i, (ids, mask_pos) in enumerate(rendered):
        tokens[i, : len(ids)] = ids
        lengths[i] = len(ids)
        mask_positions[i] = mask_pos
    labels = np.asarray([inst.label for inst in instances], dtype=np.int64)
    batch = TokenBatch(tokens=tokens, lengths=lengths, mask_positions=mask_positions)
    return batch, labels


def class_logits(logits, verbalizer: Verbalizer) -> np.ndarray:
    """Restrict vocabulary logits to the verbalizer columns."""
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 2:
        raise ValueError(f"logits must be (batch, vocab), got shape {logits.shape}")
    return logits[:, verbalizer.token_ids]


def loss_and_metrics(logits, labels, verbalizer: Verbalizer,
                     loss="cross_entropy", with_f1=False) -> EvalResult:
    """Mean loss over verbalizer-restricted logits, accuracy, optional F1."""
    labels = np.asarray(labels)
    scores = class_logits(logits, verbalizer)
    if len(labels) != len(scores):
        raise ValueError(f"{len(labels)} labels for {len(scores)} rows")
    if np.any(labels < 0) or np.any(labels >= verbalizer.n_classes):
        raise ValueError("label outside verbalizer classes")

    rows = np.arange(len(labels))
    if loss == "cross_entropy":
        shifted = scores - scores.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        losses = logz - shifted[rows, labels]
    elif loss == "hinge":
        margin = scores.copy()
        margin[rows, labels] = -np.inf
        losses = np.maximum(0.0, 1.0 + margin.max(axis=1) - scores[rows, labels])
    else:
        raise ValueError(f"loss must be 'cross_entropy' or 'hinge', got {loss!r}")

    predictions = scores.argmax(axis=1)
    accuracy = float((predictions == labels).mean())
    f1 = binary_f1(predictions, labels) if with_f1 else None
    return EvalResult(
        loss=float(losses.mean()),
        accuracy=accuracy,
        f1=f1,
        eval_count=len(labels),
    )


def binary_f1(predictions, labels, positive=1) -> float:
    """F1 of the positive class; 0.0 when it is never predicted or present."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    tp = int(np.sum((predictions == positive) & (labels == positive)))
    fp = int(np.sum((predictions == positive) & (labels != positive)))
    fn = int(np.sum((predictions != positive) & (labels == positive)))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)
