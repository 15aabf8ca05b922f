"""Grid search over training settings, scored by mean synonym-pair similarity."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

from .embedding import EmbeddingModel, TrainConfig, similarity, train
from .errors import CrtkError, DataError, InputFileError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveResult:
    value: float
    used: int
    skipped: int

    def __float__(self):
        return self.value


def synonym_objective(model: EmbeddingModel, pairs) -> ObjectiveResult:
    """Mean cosine similarity over the synonym pairs both of whose tokens are known.

    Out-of-vocabulary pairs are skipped and counted.
    """
    sims = []
    skipped = 0
    for a, b in pairs:
        if a in model.vocab and b in model.vocab:
            sims.append(similarity(model, a, b))
        else:
            skipped += 1
    if not sims:
        raise DataError(f"all {skipped} synonym pairs are out of vocabulary")
    return ObjectiveResult(math.fsum(sims) / len(sims), len(sims), skipped)


@dataclass(frozen=True)
class TuningRow:
    config: TrainConfig
    objective: float | None
    pairs_used: int
    pairs_skipped: int
    wall_time: float
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class TuningReport:
    rows: tuple[TuningRow, ...]
    best: int

    @property
    def best_config(self) -> TrainConfig:
        return self.rows[self.best].config

    @property
    def best_objective(self) -> float:
        return self.rows[self.best].objective

    def to_json(self, include_timing: bool = True) -> dict:
        rows = []
        for r in self.rows:
            row = {
                "config": r.config.to_dict(),
                "objective": r.objective,
                "pairs_used": r.pairs_used,
                "pairs_skipped": r.pairs_skipped,
                "error": r.error,
            }
            if include_timing:
                row["wall_time"] = r.wall_time
            rows.append(row)
        return {"format": "crtk-tuning-1", "best": self.best, "rows": rows}

    def to_csv(self, include_timing: bool = True) -> str:
        keys = list(TrainConfig().to_dict())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["cell", *keys, "objective", "pairs_used", "pairs_skipped", "status"]
        if include_timing:
            header.append("wall_time")
        w.writerow(header)
        for i, r in enumerate(self.rows):
            cfg = r.config.to_dict()
            row = [i, *(cfg[k] for k in keys),
                   "" if r.objective is None else repr(r.objective),
                   r.pairs_used, r.pairs_skipped,
                   "best" if i == self.best else ("failed: " + r.error if r.failed else "ok")]
            if include_timing:
                row.append(f"{r.wall_time:.3f}")
            w.writerow(row)
        return buf.getvalue()


def grid_search(streams, grid, pairs, on_model=None) -> TuningReport:
    """Train one model per config in ``grid`` and score each with ``synonym_objective``.

    A cell that fails (empty vocabulary, all pairs unknown, ...) is kept in
    the report with its error; the search fails only if every cell does.
    ``on_model(i, model)`` is called for each successfully trained cell.
    """
    grid = list(grid)
    if not grid:
        raise ValidationError("tuning grid is empty")
    streams = list(streams)
    rows = []
    for i, cfg in enumerate(grid):
        t0 = time.perf_counter()
        try:
            model = train(streams, cfg)
            res = synonym_objective(model, pairs)
        except CrtkError as exc:
            log.warning("grid cell %d failed: %s", i, exc)
            rows.append(TuningRow(cfg, None, 0, 0, time.perf_counter() - t0, str(exc)))
            continue
        if on_model is not None:
            on_model(i, model)
        rows.append(TuningRow(cfg, res.value, res.used, res.skipped, time.perf_counter() - t0))
        log.info("grid cell %d: objective %.4f", i, res.value)
    ok = [i for i, r in enumerate(rows) if not r.failed]
    if not ok:
        raise DataError("every tuning grid cell failed: " + "; ".join(r.error for r in rows))
    best = ok[0]
    for i in ok[1:]:
        if rows[i].objective > rows[best].objective:
            best = i
    return TuningReport(tuple(rows), best)


def load_grid(path, base: TrainConfig) -> list[TrainConfig]:
    """A JSON array of partial overrides, each applied on top of ``base``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFileError(f"cannot read grid file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, list) or not all(isinstance(d, dict) for d in data):
        raise ValidationError(f"{path}: grid must be a JSON array of objects")
    return [base.with_overrides(**cell) for cell in data]


def product_grid(base: TrainConfig, **axes) -> list[TrainConfig]:
    """Cartesian product of the given option values, first axis varying slowest."""
    cells = [{}]
    for name, values in axes.items():
        cells = [{**c, name: v} for c in cells for v in values]
    return [base.with_overrides(**c) for c in cells]
