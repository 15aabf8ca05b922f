"""Concept categories, synonym groups and the compound-phrase dictionary."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import InputFileError, ValidationError

log = logging.getLogger(__name__)

_WORD = re.compile(r"[^\W_]+")


def phrase_words(phrase: str) -> tuple[str, ...]:
    """Case-fold a phrase and split it into words.

    Hyphens, underscores and other punctuation all act as separators, so
    "Smart-Grid", "smart_grid" and "smart grid." give the same words.
    """
    return tuple(_WORD.findall(phrase.casefold()))


@dataclass(frozen=True)
class CompoundDictionary:
    """Multi-word phrases and the single underscore-joined token replacing each."""

    entries: dict[tuple[str, ...], str] = field(default_factory=dict)

    def __post_init__(self):
        for words, token in self.entries.items():
            if len(words) < 2:
                raise ValidationError(f"compound phrase needs at least 2 words: {words!r}")
            if token != "_".join(words):
                raise ValidationError(f"merged token {token!r} does not match phrase {words!r}")

    @classmethod
    def from_phrases(cls, phrases: Iterable[str]) -> "CompoundDictionary":
        entries = {}
        for p in phrases:
            words = phrase_words(p)
            if len(words) >= 2:
                entries[words] = "_".join(words)
        return cls(entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, words):
        return tuple(words) in self.entries

    @property
    def max_words(self) -> int:
        return max((len(w) for w in self.entries), default=0)

    def phrases(self) -> list[tuple[str, ...]]:
        return sorted(self.entries)

    def to_json(self) -> list[list[str]]:
        return [list(w) for w in self.phrases()]


@dataclass(frozen=True)
class SynonymGroup:
    representative: str
    members: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(set(self.members)) != len(self.members):
            raise ValidationError(f"group {self.representative!r} has repeated members")
        if self.representative not in self.members:
            raise ValidationError(
                f"representative {self.representative!r} is not among its members {list(self.members)}"
            )

    @classmethod
    def singleton(cls, token: str) -> "SynonymGroup":
        return cls(token, (token,))

    def to_json(self) -> dict:
        return {"representative": self.representative, "members": list(self.members)}


@dataclass(frozen=True)
class CategoryLexicon:
    name: str
    seeds: tuple[str, ...] = ()
    groups: tuple[SynonymGroup, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "groups", tuple(self.groups))
        for s in self.seeds:
            if not s or any(c.isspace() for c in s):
                raise ValidationError(f"category {self.name!r}: seed {s!r} contains whitespace")
        reps = set()
        for g in self.groups:
            if g.representative in reps:
                raise ValidationError(
                    f"category {self.name!r}: duplicate representative {g.representative!r}"
                )
            reps.add(g.representative)

    def terms(self) -> list[str]:
        """Seeds followed by group members not already listed, first occurrence order."""
        out = list(dict.fromkeys(self.seeds))
        for g in self.groups:
            for m in g.members:
                if m not in out:
                    out.append(m)
        return out


def _parse_category(obj, where) -> CategoryLexicon:
    if not isinstance(obj, dict) or "name" not in obj:
        raise ValidationError(f"{where}: category must be an object with a 'name'")
    groups = []
    for j, g in enumerate(obj.get("groups", [])):
        try:
            groups.append(SynonymGroup(g["representative"], tuple(g["members"])))
        except (KeyError, TypeError):
            raise ValidationError(
                f"{where}, group {j}: needs 'representative' and 'members'"
            ) from None
    return CategoryLexicon(str(obj["name"]), tuple(obj.get("seeds", [])), tuple(groups))


def load_lexicons(path) -> list[CategoryLexicon]:
    """Load categories from a JSON array of {name, seeds, groups} objects."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFileError(f"cannot read lexicon file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, list):
        raise ValidationError(f"{path}: top level must be an array of categories")
    if not data:
        log.warning("%s: no categories defined", path)
        return []
    cats = [_parse_category(obj, f"{path}, category {i}") for i, obj in enumerate(data)]
    names = [c.name for c in cats]
    if len(set(names)) != len(names):
        raise ValidationError(f"{path}: duplicate category names")
    return cats


@dataclass(frozen=True)
class SynonymPairList:
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((a, b) for a, b in self.pairs))
        if not self.pairs:
            raise ValidationError("synonym pair list is empty")
        for a, b in self.pairs:
            if a == b:
                raise ValidationError(f"synonym pair ({a!r}, {b!r}) repeats one token")

    @property
    def count(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


def load_synonym_pairs(path) -> SynonymPairList:
    """Two whitespace-separated tokens per line; '#' starts a comment."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputFileError(f"cannot read synonym pair file {path}: {exc}") from exc
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected two tokens, got {len(parts)}")
        pairs.append((parts[0], parts[1]))
    return SynonymPairList(tuple(pairs))


def build_compound_dictionary(corpus) -> CompoundDictionary:
    """Collect every keyword phrase of two or more words across the corpus."""
    phrases = [kw for art in corpus for kw in art.keywords]
    if not phrases:
        log.warning("no keywords in corpus; compound dictionary is empty")
    return CompoundDictionary.from_phrases(phrases)
