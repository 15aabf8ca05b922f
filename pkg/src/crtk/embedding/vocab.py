from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInputError, EmptyVocabularyError


@dataclass(frozen=True)
class Vocabulary:
    """Tokens ordered by descending frequency, ties broken lexicographically."""

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})
        if len(self.index) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    @property
    def frequency(self) -> dict[str, int]:
        return dict(zip(self.tokens, self.counts))

    @property
    def total_tokens(self) -> int:
        return sum(self.counts)

    def count_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


def count_tokens(streams) -> Counter:
    counts: Counter = Counter()
    for s in streams:
        for sent in s.sentences:
            counts.update(sent)
    return counts


def build_vocab(streams, min_count: int = 2) -> Vocabulary:
    """Keep the tokens seen at least ``min_count`` times."""
    streams = list(streams)
    if not streams:
        raise EmptyInputError("no token streams to build a vocabulary from")
    counts = count_tokens(streams)
    kept = sorted(((t, n) for t, n in counts.items() if n >= min_count), key=lambda x: (-x[1], x[0]))
    if not kept:
        raise EmptyVocabularyError(
            f"no token occurs at least min_count={min_count} times ({len(counts)} distinct tokens seen)"
        )
    return Vocabulary(tuple(t for t, _ in kept), tuple(n for _, n in kept))
