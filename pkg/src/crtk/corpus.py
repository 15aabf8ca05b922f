"""Article ingestion, deduplication and corpus summaries."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyInputError, InputFileError, ValidationError

log = logging.getLogger(__name__)

FIELDS = ("id", "title", "abstract", "keywords", "year", "journal", "body")


@dataclass(frozen=True)
class Article:
    id: str
    title: str = ""
    abstract: str = ""
    keywords: tuple[str, ...] = ()
    year: int = 0
    journal: str = ""
    body: str = ""

    def to_record(self) -> dict:
        rec = {name: getattr(self, name) for name in FIELDS}
        rec["keywords"] = list(self.keywords)
        return rec


@dataclass(frozen=True)
class Rejection:
    path: str
    line: int
    reason: str


@dataclass(frozen=True)
class IngestReport:
    records_seen: int = 0
    rejections: tuple[Rejection, ...] = ()
    duplicate_ids: int = 0
    duplicate_titles: int = 0

    @property
    def rejected(self) -> int:
        return len(self.rejections)

    @property
    def duplicates(self) -> int:
        return self.duplicate_ids + self.duplicate_titles


@dataclass(frozen=True)
class Corpus:
    articles: tuple[Article, ...]
    source_manifest: tuple[tuple[str, str], ...] = ()
    report: IngestReport = field(default_factory=IngestReport, compare=False)

    def __len__(self):
        return len(self.articles)

    def __iter__(self):
        return iter(self.articles)

    def ids(self) -> list[str]:
        return [a.id for a in self.articles]

    def digest(self) -> str:
        """Content digest over the canonical serialization of the articles."""
        h = hashlib.sha256()
        for art in self.articles:
            h.update(_canonical_json(art.to_record()).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


_WS = re.compile(r"\s+")


def title_key(title: str, year: int) -> tuple[str, int]:
    return _WS.sub(" ", title).strip().casefold(), year


def _read_records(path: Path) -> list[tuple[int, object]]:
    """Return (line number, decoded object) pairs for a JSON-lines or JSON-array file.

    For arrays the "line number" is the 1-based position in the array.
    Lines that fail to decode come back as (line, exception).
    """
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputFileError(f"cannot read corpus file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputFileError(f"cannot parse JSON array in {path}: {exc}") from exc
        return list(enumerate(items, start=1))
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            out.append((lineno, exc))
    return out


def _as_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        return " ".join(str(v) for v in value)
    return str(value)


def _as_keywords(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        parts = value.split(";")
    else:
        parts = [str(v) for v in value]
    return tuple(p.strip() for p in parts if p.strip())


def _to_article(obj, schema: Mapping[str, str]) -> Article:
    """Build an Article or raise ValueError with the rejection reason."""
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")

    def get(name):
        return obj.get(schema.get(name, name))

    raw_id = get("id")
    if raw_id is None or str(raw_id).strip() == "":
        raise ValueError("missing id")
    body = _as_text(get("body"))
    if not body.strip():
        raise ValueError("missing or empty body")
    raw_year = get("year")
    try:
        year = int(raw_year) if raw_year not in (None, "") else 0
    except (TypeError, ValueError):
        raise ValueError(f"bad year {raw_year!r}") from None
    return Article(
        id=str(raw_id).strip(),
        title=_as_text(get("title")),
        abstract=_as_text(get("abstract")),
        keywords=_as_keywords(get("keywords")),
        year=year,
        journal=_as_text(get("journal")),
        body=body,
    )


def ingest(paths: Sequence, schema: Mapping[str, str] | None = None) -> Corpus:
    """Read, validate and deduplicate articles from JSON files.

    ``schema`` maps logical field names (id, title, abstract, keywords, year,
    journal, body) to the field names used in the files. Bad records are
    logged and counted in ``corpus.report``; only unreadable files are fatal.
    Duplicates (same id, or same case-folded title and year) keep the first
    occurrence in input order.
    """
    schema = dict(schema or {})
    unknown = set(schema) - set(FIELDS)
    if unknown:
        raise ValidationError(f"unknown logical fields in schema: {sorted(unknown)}")

    manifest = []
    kept: list[Article] = []
    seen_ids: set[str] = set()
    seen_titles: set[tuple[str, int]] = set()
    rejections = []
    seen = dup_ids = dup_titles = 0

    for p in paths:
        path = Path(p)
        records = _read_records(path)
        manifest.append((str(path), file_digest(path)))
        for lineno, obj in records:
            seen += 1
            if isinstance(obj, Exception):
                reason = f"invalid JSON: {obj.msg}"
                art = None
            else:
                try:
                    art = _to_article(obj, schema)
                    reason = None
                except ValueError as exc:
                    art, reason = None, str(exc)
            if art is None:
                log.warning("%s:%d: rejected record (%s)", path, lineno, reason)
                rejections.append(Rejection(str(path), lineno, reason))
                continue
            if art.id in seen_ids:
                dup_ids += 1
                continue
            key = title_key(art.title, art.year)
            if key[0] and key in seen_titles:
                dup_titles += 1
                continue
            seen_ids.add(art.id)
            if key[0]:
                seen_titles.add(key)
            kept.append(art)

    kept.sort(key=lambda a: (a.year, a.id))
    report = IngestReport(seen, tuple(rejections), dup_ids, dup_titles)
    log.info(
        "ingested %d articles from %d records (%d rejected, %d duplicates)",
        len(kept), seen, report.rejected, report.duplicates,
    )
    return Corpus(tuple(kept), tuple(manifest), report)


def write_corpus(corpus: Corpus | Iterable[Article], path) -> None:
    """Serialize articles as JSON lines; ``ingest`` reads the result back unchanged."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for art in corpus:
            fh.write(_canonical_json(art.to_record()))
            fh.write("\n")


def corpus_stats(corpus: Corpus) -> list[tuple[tuple[str, int], int]]:
    """Article counts per (journal, year), most frequent first, then by journal name."""
    if len(corpus) == 0:
        raise EmptyInputError("corpus is empty")
    counts = Counter((a.journal, a.year) for a in corpus)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))


def stats_to_csv(stats) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["journal", "year", "count"])
    for (journal, year), n in stats:
        writer.writerow([journal, year, n])
    return buf.getvalue()
