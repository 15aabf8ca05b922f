"""Category expansion, synonym grouping and cross-category similarity matrices."""

from __future__ import annotations

import logging
import subprocess
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .embedding import EmbeddingModel, most_similar
from .errors import EmptyMatrixError, InputFileError, OOVError, ValidationError
from .lexicon import CategoryLexicon, SynonymGroup

log = logging.getLogger(__name__)

MATRIX_FORMAT = "crtk-matrix-1"


@dataclass(frozen=True)
class Candidate:
    token: str
    score: float
    seed: str


def expand_category(model: EmbeddingModel, lexicon: CategoryLexicon, k: int = 100) -> list[Candidate]:
    """Union of each seed's top-k neighbours, minus the seeds.

    Each candidate records its best similarity to any seed and that seed.
    Seeds missing from the vocabulary are skipped with a warning.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    seeds = list(dict.fromkeys(lexicon.seeds))
    known = [s for s in seeds if s in model.vocab]
    missing = [s for s in seeds if s not in model.vocab]
    if not known:
        raise OOVError(", ".join(missing) or "<no seeds>", f"category {lexicon.name!r}: every seed is unknown")
    if missing:
        log.warning("category %s: seeds not in vocabulary: %s", lexicon.name, ", ".join(missing))
    seed_set = set(seeds)
    best: dict[str, Candidate] = {}
    for s in known:
        for tok, score in most_similar(model, [s], [], k):
            if tok in seed_set:
                continue
            prev = best.get(tok)
            if prev is None or score > prev.score:
                best[tok] = Candidate(tok, score, s)
    return sorted(best.values(), key=lambda c: (-c.score, c.token))


@dataclass(frozen=True)
class DecisionList:
    """Explicit keep/drop decisions; tokens in neither set stay but are flagged."""

    keep: frozenset[str] = frozenset()
    drop: frozenset[str] = frozenset()

    @classmethod
    def load(cls, path) -> "DecisionList":
        """Lines of ``keep TOKEN`` or ``drop TOKEN``; '#' starts a comment."""
        keep, drop = set(), set()
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise InputFileError(f"cannot read decision list {path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or parts[0] not in ("keep", "drop"):
                raise ValidationError(f"{path}:{lineno}: expected 'keep TOKEN' or 'drop TOKEN'")
            (keep if parts[0] == "keep" else drop).add(parts[1])
        return cls(frozenset(keep), frozenset(drop))

    def decide(self, tokens):
        return [
            "drop" if t in self.drop else ("keep" if t in self.keep else None) for t in tokens
        ]


@dataclass(frozen=True)
class ExternalClassifier:
    """Child process fed one token per line; it answers ``keep`` or ``drop`` per line, in order."""

    command: tuple[str, ...]
    batch_size: int = 256
    timeout: float = 300.0

    def decide(self, tokens):
        out = []
        for i in range(0, len(tokens), self.batch_size):
            batch = tokens[i : i + self.batch_size]
            proc = subprocess.run(
                list(self.command),
                input="".join(t + "\n" for t in batch),
                capture_output=True,
                text=True,
                timeout=self.timeout,
                check=False,
            )
            if proc.returncode != 0:
                raise RuntimeError(
                    f"classifier exited with status {proc.returncode}: {proc.stderr.strip()[:200]}"
                )
            answers = [ln.strip().lower() for ln in proc.stdout.splitlines() if ln.strip()]
            if len(answers) != len(batch):
                raise RuntimeError(f"classifier returned {len(answers)} answers for {len(batch)} tokens")
            bad = [a for a in answers if a not in ("keep", "drop")]
            if bad:
                raise RuntimeError(f"classifier returned unknown answer {bad[0]!r}")
            out.extend(answers)
        return out


@dataclass(frozen=True)
class FilterResult:
    kept: list
    dropped: list
    flagged: list[str]
    warnings: list[str] = field(default_factory=list)


def _token(c) -> str:
    return c.token if isinstance(c, Candidate) else c


def filter_candidates(candidates, source=None) -> FilterResult:
    """Apply a DecisionList or ExternalClassifier to candidate tokens.

    Anything the source leaves unresolved is kept and flagged for review.
    If the external classifier fails, every candidate is kept and flagged.
    """
    candidates = list(candidates)
    tokens = [_token(c) for c in candidates]
    warnings = []
    if source is None:
        decisions = [None] * len(tokens)
    else:
        try:
            decisions = source.decide(tokens)
        except (OSError, RuntimeError, subprocess.SubprocessError) as exc:
            msg = f"candidate classifier failed ({exc}); keeping all {len(tokens)} candidates"
            log.warning("!!! %s", msg)
            warnings.append(msg)
            decisions = [None] * len(tokens)
    kept, dropped, flagged = [], [], []
    for cand, tok, dec in zip(candidates, tokens, decisions):
        if dec == "drop":
            dropped.append(cand)
        else:
            kept.append(cand)
            if dec is None:
                flagged.append(tok)
    return FilterResult(kept, dropped, flagged, warnings)


def _surface_key(token: str) -> str:
    return token.replace("_", "").replace("-", "").casefold()


def group_synonyms(tokens, model: EmbeddingModel, threshold: float = 0.7) -> list[SynonymGroup]:
    """Single-linkage groups over cosine >= threshold, plus spelling variants.

    Tokens equal after dropping '_' and '-' and case-folding always share a
    group. The representative is the most frequent member (ties:
    lexicographically smallest). Groups appear in order of their first
    token in the input; members keep input order.
    """
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    tokens = list(dict.fromkeys(tokens))
    if not tokens:
        return []
    idx = [model.index(t) for t in tokens]
    parent = list(range(len(tokens)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    unit = model._unit[idx]
    sims = unit @ unit.T
    ii, jj = np.nonzero(np.triu(sims >= threshold, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        union(i, j)
    first_by_key: dict[str, int] = {}
    for i, t in enumerate(tokens):
        key = _surface_key(t)
        if key in first_by_key:
            union(first_by_key[key], i)
        else:
            first_by_key[key] = i

    members: dict[int, list[str]] = {}
    for i, t in enumerate(tokens):
        members.setdefault(find(i), []).append(t)
    freq = model.vocab.frequency
    groups = []
    for root in sorted(members):
        mem = members[root]
        rep = min(mem, key=lambda t: (-freq.get(t, 0), t))
        groups.append(SynonymGroup(rep, tuple(mem)))
    return groups


@dataclass(frozen=True)
class SimilarityMatrix:
    """Mean cosine similarity between two lists of synonym groups.

    ``row_order``/``col_order`` record the permutation applied by ordering
    (indices into the pre-ordering axes); ``row_clusters``/``col_clusters``
    give each displayed row's/column's cluster number.
    """

    row_groups: tuple[SynonymGroup, ...]
    col_groups: tuple[SynonymGroup, ...]
    values: np.ndarray
    row_order: tuple[int, ...] | None = None
    col_order: tuple[int, ...] | None = None
    row_clusters: tuple[int, ...] | None = None
    col_clusters: tuple[int, ...] | None = None
    row_category: str = ""
    col_category: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "row_groups", tuple(self.row_groups))
        object.__setattr__(self, "col_groups", tuple(self.col_groups))
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.row_groups), len(self.col_groups)):
            raise ValueError(
                f"values shape {values.shape} does not match {len(self.row_groups)} x {len(self.col_groups)} groups"
            )
        object.__setattr__(self, "values", values)
        for name, n in (("row_order", len(self.row_groups)), ("col_order", len(self.col_groups))):
            order = getattr(self, name)
            if order is not None and sorted(order) != list(range(n)):
                raise ValueError(f"{name} is not a permutation of 0..{n - 1}")
        for name, n in (("row_clusters", len(self.row_groups)), ("col_clusters", len(self.col_groups))):
            cl = getattr(self, name)
            if cl is not None and len(cl) != n:
                raise ValueError(f"{name} has {len(cl)} entries for {n} groups")

    def __eq__(self, other):
        if not isinstance(other, SimilarityMatrix):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f)) if f == "values" else getattr(self, f) == getattr(other, f)
            for f in self.__dataclass_fields__
        )

    __hash__ = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def row_labels(self) -> list[str]:
        return [g.representative for g in self.row_groups]

    @property
    def col_labels(self) -> list[str]:
        return [g.representative for g in self.col_groups]

    def transpose(self) -> "SimilarityMatrix":
        return SimilarityMatrix(
            self.col_groups, self.row_groups, self.values.T.copy(),
            self.col_order, self.row_order, self.col_clusters, self.row_clusters,
            self.col_category, self.row_category, self.flags,
        )

    def to_json(self) -> dict:
        def opt(x):
            return None if x is None else list(x)

        return {
            "format": MATRIX_FORMAT,
            "row_category": self.row_category,
            "col_category": self.col_category,
            "row_groups": [g.to_json() for g in self.row_groups],
            "col_groups": [g.to_json() for g in self.col_groups],
            "values": [[float(v) for v in row] for row in self.values],
            "row_order": opt(self.row_order),
            "col_order": opt(self.col_order),
            "row_clusters": opt(self.row_clusters),
            "col_clusters": opt(self.col_clusters),
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SimilarityMatrix":
        if data.get("format") != MATRIX_FORMAT:
            raise ValidationError(f"unsupported matrix format {data.get('format')!r}")

        def groups(items):
            return tuple(SynonymGroup(g["representative"], tuple(g["members"])) for g in items)

        def opt(x):
            return None if x is None else tuple(x)

        rows, cols = groups(data["row_groups"]), groups(data["col_groups"])
        values = np.array(data["values"], dtype=np.float64).reshape(len(rows), len(cols))
        return cls(
            rows, cols, values,
            opt(data.get("row_order")), opt(data.get("col_order")),
            opt(data.get("row_clusters")), opt(data.get("col_clusters")),
            data.get("row_category", ""), data.get("col_category", ""),
            tuple(data.get("flags", ())),
        )


def _member_indices(model, groups, axis):
    out = []
    for g in groups:
        ids = []
        for m in g.members:
            if m not in model.vocab:
                raise OOVError(m, f"{axis} group {g.representative!r}")
            ids.append(model.vocab.index[m])
        out.append(ids)
    return out


def relation_matrix(model: EmbeddingModel, groups_a, groups_b, row_category="", col_category="") -> SimilarityMatrix:
    """value[i][j] = mean cosine over every (member of row group i, member of column group j)."""
    groups_a, groups_b = tuple(groups_a), tuple(groups_b)
    ia = _member_indices(model, groups_a, "row")
    ib = _member_indices(model, groups_b, "column")
    unit = model._unit
    values = np.empty((len(groups_a), len(groups_b)))
    for i, ra in enumerate(ia):
        block = unit[ra] @ unit[np.concatenate(ib)].T if ib else np.empty((len(ra), 0))
        start = 0
        for j, rb in enumerate(ib):
            values[i, j] = block[:, start : start + len(rb)].mean()
            start += len(rb)
    np.clip(values, -1.0, 1.0, out=values)
    shared = sorted({g.representative for g in groups_a} & {g.representative for g in groups_b})
    flags = tuple(f"self-relation: {r!r} appears on both axes" for r in shared)
    for f in flags:
        log.warning(f)
    return SimilarityMatrix(groups_a, groups_b, values, row_category=row_category,
                            col_category=col_category, flags=flags)


def prune_nonpositive(matrix: SimilarityMatrix, axis: str = "rows") -> SimilarityMatrix:
    """Drop rows (or columns) whose largest value is below zero.

    Ordering and cluster annotations are cleared; order after pruning.
    """
    if axis not in ("rows", "cols"):
        raise ValidationError(f"axis must be 'rows' or 'cols', got {axis!r}")
    if axis == "cols":
        return prune_nonpositive(matrix.transpose(), "rows").transpose()
    if matrix.values.shape[1] == 0:
        raise EmptyMatrixError("matrix has no columns to judge rows against")
    keep = matrix.values.max(axis=1) >= 0
    if not keep.any():
        raise EmptyMatrixError("pruning removed every row")
    rows = tuple(g for g, k in zip(matrix.row_groups, keep) if k)
    return replace(
        matrix, row_groups=rows, values=matrix.values[keep],
        row_order=None, col_order=None, row_clusters=None, col_clusters=None,
    )
