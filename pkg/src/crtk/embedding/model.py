from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from functools import cached_property

import numpy as np

from ..errors import (
    DataError,
    DegenerateVectorError,
    EmptyVocabularyError,
    OOVError,
    ResourceError,
    UndefinedAccuracyError,
    ValidationError,
)
from . import sgns
from .vocab import Vocabulary, build_vocab

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    vector_size: int = 300
    window: int = 20
    min_count: int = 2
    epochs: int = 5
    negatives: int = 5
    initial_lr: float = 0.025
    final_lr: float = 0.0001
    subsample_t: float = 1e-3
    seed: int = 1
    workers: int = 1
    memory_budget: int = 4 << 30

    def __post_init__(self):
        for name in ("vector_size", "window", "min_count", "workers"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("epochs", "negatives"):
            if int(getattr(self, name)) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.initial_lr > 0:
            raise ValidationError("initial_lr must be positive")
        if not 0 <= self.final_lr <= self.initial_lr:
            raise ValidationError("final_lr must lie in [0, initial_lr]")
        if self.subsample_t < 0:
            raise ValidationError("subsample_t must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown training options: {sorted(unknown)}")
        return cls(**data)

    def with_overrides(self, **overrides) -> "TrainConfig":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValidationError(f"unknown training options: {sorted(unknown)}")
        return replace(self, **overrides)


class EmbeddingModel:
    """Vocabulary plus input (query) and output (context) vectors.

    Queries only ever use ``input_vectors``.
    """

    def __init__(self, vocab: Vocabulary, input_vectors, output_vectors, config: TrainConfig):
        input_vectors = np.asarray(input_vectors)
        output_vectors = np.asarray(output_vectors)
        if input_vectors.shape != output_vectors.shape:
            raise ValueError("input and output matrices differ in shape")
        if input_vectors.shape[0] != len(vocab):
            raise ValueError("matrix rows do not match vocabulary size")
        self.vocab = vocab
        self.input_vectors = input_vectors
        self.output_vectors = output_vectors
        self.config = config

    def __repr__(self):
        return f"EmbeddingModel(|V|={len(self.vocab)}, d={self.dim})"

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def index(self, token: str) -> int:
        try:
            return self.vocab.index[token]
        except KeyError:
            raise OOVError(token) from None

    def __contains__(self, token):
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        return self.input_vectors[self.index(token)]

    @cached_property
    def _unit(self) -> np.ndarray:
        v = self.input_vectors.astype(np.float64)
        norms = np.linalg.norm(v, axis=1)
        norms[norms == 0] = 1.0
        return v / norms[:, None]

    def similarity(self, a: str, b: str) -> float:
        return similarity(self, a, b)

    def most_similar(self, positive=(), negative=(), k: int = 10):
        return most_similar(self, positive, negative, k)


def cosine(a, b) -> float:
    """A.B / (|A| |B|) in double precision, clipped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aa = float(np.dot(a, a))
    bb = float(np.dot(b, b))
    if aa == 0.0 or bb == 0.0:
        raise DegenerateVectorError("cosine similarity of a zero vector is undefined")
    # sqrt(x*x) == x in IEEE arithmetic, so identical vectors give exactly 1
    c = float(np.dot(a, b)) / math.sqrt(aa * bb)
    return min(1.0, max(-1.0, c))


def similarity(model: EmbeddingModel, a: str, b: str) -> float:
    va, vb = model.vector(a), model.vector(b)
    try:
        return cosine(va, vb)
    except DegenerateVectorError:
        raise DegenerateVectorError(f"zero vector for {a!r} or {b!r}") from None


def most_similar(model: EmbeddingModel, positive=(), negative=(), k: int = 10):
    """Top-k tokens by cosine to mean(unit positives) - mean(unit negatives).

    Query tokens are never returned. Equal scores keep vocabulary order.
    """
    positive = [positive] if isinstance(positive, str) else list(positive)
    negative = [negative] if isinstance(negative, str) else list(negative)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if not positive:
        raise ValidationError("most_similar needs at least one positive token")
    pos_idx = [model.index(t) for t in positive]
    neg_idx = [model.index(t) for t in negative]
    unit = model._unit
    query = unit[pos_idx].mean(axis=0)
    if neg_idx:
        query = query - unit[neg_idx].mean(axis=0)
    qn = np.linalg.norm(query)
    if qn == 0:
        raise DegenerateVectorError(f"query vector is zero for +{positive} -{negative}")
    scores = unit @ (query / qn)
    excluded = np.zeros(len(scores), dtype=bool)
    excluded[pos_idx + neg_idx] = True
    candidates = np.flatnonzero(~excluded)
    order = candidates[np.argsort(-scores[candidates], kind="stable")][:k]
    return [(model.vocab.tokens[i], float(scores[i])) for i in order]


@dataclass(frozen=True)
class AnalogyResult:
    accuracy: float
    correct: int
    evaluated: int
    skipped: int

    def __float__(self):
        return self.accuracy


def analogy_eval(model: EmbeddingModel, quads) -> AnalogyResult:
    """3CosAdd accuracy over (a, b, c, d) quads: is d the top answer to b - a + c?

    Quads with any out-of-vocabulary token are skipped and counted.
    """
    quads = list(quads)
    correct = evaluated = skipped = 0
    for a, b, c, d in quads:
        if not all(t in model.vocab for t in (a, b, c, d)):
            skipped += 1
            continue
        evaluated += 1
        top = most_similar(model, [b, c], [a], 1)
        if top and top[0][0] == d:
            correct += 1
    if evaluated == 0:
        raise UndefinedAccuracyError(
            f"accuracy undefined: all {len(quads)} analogy quads were skipped as out of vocabulary"
        )
    return AnalogyResult(correct / evaluated, correct, evaluated, skipped)


def initial_vectors(n: int, d: int, seed: int):
    """Inputs uniform in [-0.5/d, 0.5/d] from ``numpy.random.default_rng(seed)``; outputs zero."""
    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(n, d)).astype(np.float32)
    return w_in, np.zeros((n, d), dtype=np.float32)


def keep_probabilities(counts: np.ndarray, t: float) -> np.ndarray:
    """Probability of keeping each token under frequent-word subsampling.

    Drop probability is 1 - sqrt(t / f) with f the relative frequency, so
    tokens with f <= t are always kept.
    """
    if t <= 0:
        return np.ones(len(counts))
    f = counts / counts.sum()
    return np.minimum(1.0, np.sqrt(t / f))


def noise_table(counts: np.ndarray, power: float = 0.75) -> np.ndarray:
    return np.cumsum(counts.astype(np.float64) ** power)


def _flatten(streams, vocab: Vocabulary):
    ids = []
    starts = [0]
    index = vocab.index
    for s in streams:
        for sent in s.sentences:
            row = [index[t] for t in sent if t in index]
            if len(row) > 1:
                ids.extend(row)
                starts.append(len(ids))
    return np.asarray(ids, dtype=np.int64), np.asarray(starts, dtype=np.int64)


def _partition(starts: np.ndarray, parts: int) -> np.ndarray:
    """Sentence boundaries splitting the corpus into ``parts`` runs of similar token count."""
    n_sent = len(starts) - 1
    parts = max(1, min(parts, n_sent))
    targets = np.linspace(0, starts[-1], parts + 1)
    bounds = np.searchsorted(starts, targets[1:-1], side="left")
    return np.concatenate([[0], bounds, [n_sent]]).astype(np.int64)


def train(streams, config: TrainConfig | None = None, vocab: Vocabulary | None = None) -> EmbeddingModel:
    """Train skip-gram with negative sampling.

    With ``workers == 1`` the result is a deterministic function of the
    streams and config. With more workers, each takes a contiguous share of
    sentences and updates the shared matrices without locking.
    """
    config = config or TrainConfig()
    streams = list(streams)
    if vocab is None:
        vocab = build_vocab(streams, config.min_count)
    if len(vocab) == 0:
        raise EmptyVocabularyError("vocabulary is empty")
    n, d = len(vocab), config.vector_size
    need = 2 * n * d * 4
    if need > config.memory_budget:
        raise ResourceError(
            f"embedding matrices need {need} bytes for |V|={n}, d={d}; budget is {config.memory_budget}"
        )
    w_in, w_out = initial_vectors(n, d, config.seed)
    counts = vocab.count_array()
    ids, starts = _flatten(streams, vocab)
    if config.epochs == 0 or len(starts) < 2:
        if config.epochs:
            log.warning("no sentence has two in-vocabulary tokens; model left at initialization")
        return EmbeddingModel(vocab, w_in, w_out, config)

    keep = keep_probabilities(counts, config.subsample_t)
    cum = noise_table(counts)
    args = (keep, cum, config.window, config.negatives, config.initial_lr, config.final_lr, config.epochs)
    if config.workers == 1:
        pairs, loss = sgns.train_range(w_in, w_out, ids, starts, 0, len(starts) - 1, *args, config.seed)
    else:
        bounds = _partition(starts, config.workers)
        seeds = (np.arange(len(bounds) - 1, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
                 + np.uint64(config.seed))
        pairs, loss = sgns.train_parallel(w_in, w_out, ids, starts, bounds, *args, seeds)
    log.info("trained %d pairs, mean loss %.4f", pairs, loss / max(pairs, 1))
    if not (np.isfinite(w_in).all() and np.isfinite(w_out).all()):
        raise DataError("training diverged: non-finite values in the embedding matrices")
    return EmbeddingModel(vocab, w_in, w_out, config)
