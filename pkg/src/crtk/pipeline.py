"""Config-driven pipeline with content-addressed stage caching.

Every stage records, in ``manifest.json`` under the output directory, the
digests of the files it read, a digest of its parameters and the digests
of the files it wrote. A stage whose recorded inputs and parameters match
and whose outputs are intact is skipped as "unchanged".
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cluster as cl
from . import viz
from .corpus import file_digest, ingest, stats_to_csv, corpus_stats, write_corpus
from .embedding import TrainConfig, load_model, save_model, train
from .errors import InputFileError, MissingArtifactError, ValidationError
from .lexicon import (
    CategoryLexicon,
    CompoundDictionary,
    SynonymGroup,
    build_compound_dictionary,
    load_lexicons,
    load_synonym_pairs,
)
from .preprocess import (
    DEFAULT_METADATA_TERMS,
    DEFAULT_STOPWORDS,
    PreprocessConfig,
    normalize_term,
    preprocess_corpus,
    read_cache,
    write_cache,
)
from .relations import (
    DecisionList,
    ExternalClassifier,
    expand_category,
    filter_candidates,
    group_synonyms,
    prune_nonpositive,
    relation_matrix,
)
from .tuning import grid_search, load_grid

log = logging.getLogger(__name__)

STAGES = ("ingest", "preprocess", "tune", "train", "relate", "cluster", "render")
MANIFEST = "manifest.json"

DEFAULTS: dict = {
    "corpus": {"paths": [], "schema": {}},
    "preprocess": {
        "stopwords": None,
        "metadata_terms": None,
        "extra_metadata_terms": [],
        "compounds": "keywords",
        "text_fields": ["title", "abstract", "body"],
    },
    "train": {},
    "tuning": {"grid": None, "pairs": None, "apply_best": False},
    "lexicon": None,
    "relations": {
        "pairs": [],
        "expand_k": 100,
        "threshold": 0.7,
        "decisions": None,
        "classifier": None,
        "prune": "rows",
    },
    "cluster": {"k": {}, "default_k": 3, "normalize": False},
    "render": {"value_range": "observed", "cell_size": 18, "label_font_size": 10, "show_values": False},
    "output": "out",
}

_PATH_KEYS = (
    ("preprocess", "stopwords"),
    ("preprocess", "metadata_terms"),
    ("tuning", "grid"),
    ("tuning", "pairs"),
    ("lexicon",),
)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def digest_obj(obj) -> str:
    return hashlib.sha256(_canonical(obj)).hexdigest()


def parse_override(text: str) -> tuple[list[str], object]:
    """``a.b.c=value``; the value is read as JSON when possible, else as a string."""
    if "=" not in text:
        raise ValidationError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


@dataclass
class PipelineConfig:
    data: dict
    base_dir: Path

    @classmethod
    def load(cls, path=None, overrides=(), data: dict | None = None, base_dir=None) -> "PipelineConfig":
        raw: dict = {}
        if path is not None:
            path = Path(path)
            try:
                raw = json.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise InputFileError(f"cannot read config {path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
            base_dir = path.parent
        if data is not None:
            raw = _merge(raw, data)
        merged = _merge(DEFAULTS, raw)
        for keys, value in overrides:
            node = merged
            for k in keys[:-1]:
                node = node.setdefault(k, {})
                if not isinstance(node, dict):
                    raise ValidationError(f"--set {'.'.join(keys)}: {k} is not a section")
            node[keys[-1]] = value
        return cls(merged, Path(base_dir or ".").resolve())

    def path(self, value) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        return self.path(self.data["output"])

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_dict(self.data["train"])

    def decision_paths(self) -> dict[str, Path]:
        """``relations.decisions`` as {category: path}; a single path applies to every category ("*")."""
        dec = self.data["relations"]["decisions"]
        if dec is None:
            return {}
        if isinstance(dec, str):
            return {"*": self.path(dec)}
        if not isinstance(dec, dict):
            raise ValidationError("config: relations.decisions must be a path or a {category: path} mapping")
        return {k: self.path(v) for k, v in sorted(dec.items())}

    def digest(self) -> str:
        """Digest of everything except the output location."""
        d = dict(self.data)
        d.pop("output", None)
        return digest_obj(d)

    def validate(self) -> list[CategoryLexicon]:
        d = self.data
        if not d["corpus"]["paths"]:
            raise ValidationError("config: corpus.paths is empty")
        for p in d["corpus"]["paths"]:
            if not self.path(p).is_file():
                raise ValidationError(f"config: corpus file not found: {p}")
        for keys in _PATH_KEYS:
            node = d
            for k in keys:
                node = node.get(k) if isinstance(node, dict) else None
            if node is not None and not self.path(node).is_file():
                raise ValidationError(f"config: {'.'.join(keys)} file not found: {node}")
        for p in self.decision_paths().values():
            if not p.is_file():
                raise ValidationError(f"config: decision list not found: {p}")
        comp = d["preprocess"]["compounds"]
        if comp not in (None, "keywords") and not self.path(comp).is_file():
            raise ValidationError(f"config: preprocess.compounds file not found: {comp}")
        self.train_config()
        if d["relations"]["prune"] not in ("rows", "cols", "both", "none"):
            raise ValidationError("config: relations.prune must be rows, cols, both or none")
        lexicons = load_lexicons(self.path(d["lexicon"])) if d["lexicon"] else []
        names = {c.name for c in lexicons}
        for pair in d["relations"]["pairs"]:
            if len(pair) != 2:
                raise ValidationError(f"config: relation pair {pair!r} must name two categories")
            for name in pair:
                if name not in names:
                    raise ValidationError(f"config: relation pair uses undeclared category {name!r}")
        if d["relations"]["pairs"] and not lexicons:
            raise ValidationError("config: relation pairs need a lexicon")
        return lexicons


@dataclass
class RunResult:
    status: dict[str, str] = field(default_factory=dict)
    output_dir: Path | None = None

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / MANIFEST


class Pipeline:
    def __init__(self, config: PipelineConfig, echo=print):
        self.config = config
        self.out = config.output_dir
        self.echo = echo
        self.lexicons = config.validate()
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = self._load_manifest()
        self.result = RunResult(output_dir=self.out)

    # manifest handling -------------------------------------------------

    def _load_manifest(self) -> dict:
        p = self.out / MANIFEST
        fresh = {"format": "crtk-manifest-1", "stages": {}}
        if not p.exists():
            return fresh
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            log.warning("unreadable manifest; starting over")
            return fresh
        return data if data.get("format") == fresh["format"] else fresh

    def _save_manifest(self) -> None:
        self.manifest["config_digest"] = self.config.digest()
        stages = self.manifest["stages"]
        self.manifest["stages"] = {k: stages[k] for k in STAGES if k in stages}
        text = json.dumps(self.manifest, indent=1, sort_keys=True) + "\n"
        (self.out / MANIFEST).write_text(text, encoding="utf-8", newline="\n")

    def _rel(self, p: Path) -> str:
        return p.relative_to(self.out).as_posix()

    def _require(self, name: str, producer: str) -> Path:
        p = self.out / name
        if not p.exists():
            raise MissingArtifactError(name, producer)
        return p

    def _stage(self, name: str, inputs: dict[str, Path], params, fn) -> None:
        """Run ``fn`` unless the recorded inputs, params and outputs all still match.

        ``fn`` returns (outputs, volatile): paths whose digests are recorded,
        and paths written but excluded from the digest set (e.g. timings).
        """
        in_dig = {k: file_digest(p) for k, p in sorted(inputs.items())}
        par_dig = digest_obj(params)
        prev = self.manifest["stages"].get(name)
        if prev and prev.get("inputs") == in_dig and prev.get("params") == par_dig:
            intact = all(
                (self.out / rel).exists() and file_digest(self.out / rel) == dig
                for rel, dig in prev.get("outputs", {}).items()
            )
            if intact:
                self.echo(f"{name}: unchanged")
                self.result.status[name] = "unchanged"
                return
        if prev:
            self.echo(f"{name}: inputs or parameters changed; rebuilding")
        outputs, volatile = fn()
        self.manifest["stages"][name] = {
            "inputs": in_dig,
            "params": par_dig,
            "outputs": {self._rel(p): file_digest(p) for p in sorted(outputs)},
            "volatile": sorted(self._rel(p) for p in volatile),
        }
        self._save_manifest()
        self.echo(f"{name}: done ({len(outputs)} artifacts)")
        self.result.status[name] = "built"

    def _stage_outputs(self, name: str) -> list[Path]:
        entry = self.manifest["stages"].get(name, {})
        return [self.out / rel for rel in entry.get("outputs", {})]

    # stages --------------------------------------------------------------

    def ingest(self):
        c = self.config
        paths = [c.path(p) for p in c.data["corpus"]["paths"]]
        inputs = {f"corpus[{i}]": p for i, p in enumerate(paths)}
        params = {"schema": c.data["corpus"]["schema"]}

        def run():
            corpus = ingest(paths, c.data["corpus"]["schema"])
            out_corpus = self.out / "corpus.jsonl"
            write_corpus(corpus, out_corpus)
            stats = self.out / "corpus_stats.csv"
            stats.write_text(stats_to_csv(corpus_stats(corpus)), encoding="utf-8", newline="\n")
            rep = corpus.report
            report = self.out / "ingest_report.json"
            report.write_text(json.dumps({
                "articles": len(corpus),
                "records_seen": rep.records_seen,
                "rejected": [{"path": Path(r.path).name, "line": r.line, "reason": r.reason} for r in rep.rejections],
                "duplicate_ids": rep.duplicate_ids,
                "duplicate_titles": rep.duplicate_titles,
            }, indent=1) + "\n", encoding="utf-8")
            return [out_corpus, stats, report], []

        self._stage("ingest", inputs, params, run)

    def _preprocess_config(self, corpus) -> PreprocessConfig:
        pp = self.config.data["preprocess"]

        def read_list(p, default):
            if p is None:
                return default
            text = self.config.path(p).read_text(encoding="utf-8")
            return frozenset(ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))

        stop = read_list(pp["stopwords"], DEFAULT_STOPWORDS)
        meta = read_list(pp["metadata_terms"], DEFAULT_METADATA_TERMS) | frozenset(pp["extra_metadata_terms"])
        comp = pp["compounds"]
        if comp is None:
            compounds = CompoundDictionary()
        elif comp == "keywords":
            compounds = build_compound_dictionary(corpus)
        else:
            lines = self.config.path(comp).read_text(encoding="utf-8").splitlines()
            compounds = CompoundDictionary.from_phrases(ln for ln in lines if ln.strip() and not ln.startswith("#"))
        return PreprocessConfig(stop, meta, compounds)

    def preprocess(self):
        corpus_path = self._require("corpus.jsonl", "ingest")
        pp = self.config.data["preprocess"]
        inputs = {"corpus": corpus_path}
        for key in ("stopwords", "metadata_terms"):
            if pp[key]:
                inputs[key] = self.config.path(pp[key])
        if pp["compounds"] not in (None, "keywords"):
            inputs["compounds"] = self.config.path(pp["compounds"])

        def run():
            corpus = ingest([corpus_path])
            cfg = self._preprocess_config(corpus)
            streams = preprocess_corpus(corpus, cfg, tuple(pp["text_fields"]))
            cache = self.out / "tokens.crtk"
            write_cache(streams, cache, corpus.digest(), cfg.digest())
            comp = self.out / "compounds.json"
            comp.write_text(json.dumps(["_".join(p) for p in cfg.compounds.phrases()], indent=0) + "\n",
                            encoding="utf-8")
            return [cache, comp], []

        self._stage("preprocess", inputs, {k: pp[k] for k in ("extra_metadata_terms", "compounds", "text_fields")}, run)

    def _streams(self):
        return read_cache(self._require("tokens.crtk", "preprocess"))

    def tune(self):
        t = self.config.data["tuning"]
        if not t["grid"] or not t["pairs"]:
            self.echo("tune: skipped (no tuning.grid / tuning.pairs configured)")
            self.result.status["tune"] = "skipped"
            return
        tokens = self._require("tokens.crtk", "preprocess")
        grid_path, pairs_path = self.config.path(t["grid"]), self.config.path(t["pairs"])
        base = self.config.train_config()
        inputs = {"tokens": tokens, "grid": grid_path, "pairs": pairs_path}

        def run():
            pairs = load_synonym_pairs(pairs_path)
            norm = [(normalize_term(a), normalize_term(b)) for a, b in pairs]
            report = grid_search(self._streams(), load_grid(grid_path, base), norm)
            js, csvp = self.out / "tuning.json", self.out / "tuning.csv"
            js.write_text(json.dumps(report.to_json(include_timing=False), indent=1) + "\n", encoding="utf-8")
            csvp.write_text(report.to_csv(include_timing=False), encoding="utf-8", newline="\n")
            timing = self.out / "tuning_timings.json"
            timing.write_text(json.dumps([r.wall_time for r in report.rows]) + "\n", encoding="utf-8")
            self.echo(f"tune: best cell {report.best}, objective {report.best_objective:.4f}")
            return [js, csvp], [timing]

        self._stage("tune", inputs, base.to_dict(), run)

    def _effective_train_config(self):
        cfg = self.config.train_config()
        inputs = {"tokens": self._require("tokens.crtk", "preprocess")}
        if self.config.data["tuning"]["apply_best"]:
            tj = self._require("tuning.json", "tune")
            report = json.loads(tj.read_text(encoding="utf-8"))
            best = report["rows"][report["best"]]["config"]
            cfg = TrainConfig.from_dict(best)
            inputs["tuning"] = tj
        return cfg, inputs

    def train(self):
        cfg, inputs = self._effective_train_config()

        def run():
            model = train(self._streams(), cfg)
            path = self.out / "model.crem"
            save_model(model, path)
            return [path], []

        self._stage("train", inputs, cfg.to_dict(), run)

    def _normalized_lexicons(self) -> dict[str, CategoryLexicon]:
        out = {}
        for lex in self.lexicons:
            seeds = tuple(dict.fromkeys(normalize_term(s) for s in lex.seeds))
            groups = []
            for g in lex.groups:
                members = tuple(dict.fromkeys(normalize_term(m) for m in g.members))
                groups.append(SynonymGroup(normalize_term(g.representative), members))
            out[lex.name] = CategoryLexicon(lex.name, seeds, tuple(groups))
        return out

    def _category_groups(self, model, lex: CategoryLexicon, rel: dict, source) -> tuple[list[SynonymGroup], dict]:
        vocab = model.vocab
        report: dict = {"category": lex.name}
        candidates = []
        if rel["expand_k"] and any(s in vocab for s in lex.seeds):
            candidates = expand_category(model, lex, int(rel["expand_k"]))
        filt = filter_candidates(candidates, source)
        report["candidates"] = [{"token": c.token, "score": c.score, "seed": c.seed} for c in candidates]
        report["dropped"] = [c.token for c in filt.dropped]
        report["flagged_for_review"] = filt.flagged
        report["warnings"] = filt.warnings
        groups, taken = [], set()
        freq = vocab.frequency
        for g in lex.groups:
            members = tuple(m for m in g.members if m in vocab and m not in taken)
            if not members:
                continue
            rep = g.representative if g.representative in members else min(members, key=lambda t: (-freq[t], t))
            groups.append(SynonymGroup(rep, members))
            taken.update(members)
        loose = [s for s in lex.seeds if s in vocab] + [c.token for c in filt.kept]
        loose = [t for t in dict.fromkeys(loose) if t not in taken]
        groups.extend(group_synonyms(loose, model, float(rel["threshold"])))
        report["missing_terms"] = sorted(
            {s for s in lex.seeds if s not in vocab} | {m for g in lex.groups for m in g.members if m not in vocab}
        )
        report["groups"] = [g.to_json() for g in groups]
        return groups, report

    def relate(self):
        rel = self.config.data["relations"]
        if not rel["pairs"]:
            self.echo("relate: skipped (no relations.pairs configured)")
            self.result.status["relate"] = "skipped"
            return
        model_path = self._require("model.crem", "train")
        inputs = {"model": model_path, "lexicon": self.config.path(self.config.data["lexicon"])}
        decision_paths = self.config.decision_paths()
        for cat, p in decision_paths.items():
            inputs[f"decisions[{cat}]"] = p

        def run():
            model = load_model(model_path)
            lists = {cat: DecisionList.load(p) for cat, p in decision_paths.items()}
            classifier = ExternalClassifier(tuple(rel["classifier"])) if rel["classifier"] else None
            lexicons = self._normalized_lexicons()
            needed = list(dict.fromkeys(name for pair in rel["pairs"] for name in pair))
            outputs, groups = [], {}
            for name in needed:
                source = lists.get(name, lists.get("*", classifier))
                groups[name], report = self._category_groups(model, lexicons[name], rel, source)
                p = self.out / f"category_{name}.json"
                p.write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
                outputs.append(p)
            for a, b in rel["pairs"]:
                m = relation_matrix(model, groups[a], groups[b], a, b)
                if rel["prune"] in ("rows", "both"):
                    m = prune_nonpositive(m, "rows")
                if rel["prune"] in ("cols", "both"):
                    m = prune_nonpositive(m, "cols")
                stem = self.out / f"matrix_{a}__{b}"
                viz.export_matrix(m, stem.with_suffix(".json"), "json")
                viz.export_matrix(m, stem.with_suffix(".csv"), "delimited")
                outputs += [stem.with_suffix(".json"), stem.with_suffix(".csv")]
            return outputs, []

        self._stage("relate", inputs, rel, run)

    def _k_for(self, category: str, n: int) -> int:
        c = self.config.data["cluster"]
        k = int(c["k"].get(category, c["default_k"]))
        return max(1, min(k, n))

    def _group_vectors(self, model, groups, normalize):
        unit = model._unit if normalize else model.input_vectors.astype(np.float64)
        return [(g.representative, unit[[model.vocab.index[m] for m in g.members]].mean(axis=0)) for g in groups]

    def cluster(self):
        rel = self.config.data["relations"]
        if not rel["pairs"]:
            self.echo("cluster: skipped (no relations.pairs configured)")
            self.result.status["cluster"] = "skipped"
            return
        model_path = self._require("model.crem", "train")
        mats = {(a, b): self._require(f"matrix_{a}__{b}.json", "relate") for a, b in rel["pairs"]}
        inputs = {"model": model_path, **{f"matrix_{a}__{b}": p for (a, b), p in mats.items()}}
        params = self.config.data["cluster"]

        def run():
            model = load_model(model_path)
            normalize = bool(params["normalize"])
            outputs = []
            for (a, b), path in mats.items():
                m = viz.import_matrix(path)
                dendros = {}
                for axis, groups, cat in (("rows", m.row_groups, a), ("cols", m.col_groups, b)):
                    if len(groups) >= 2:
                        d = cl.hac_ward(self._group_vectors(model, groups, normalize))
                        p = self.out / f"dendrogram_{a}__{b}_{axis}.json"
                        d.save(p)
                        outputs.append(p)
                        dendros[axis] = (d, self._k_for(cat, len(groups)))
                    else:
                        dendros[axis] = (None, None)
                (rd, rk), (cd, ck) = dendros["rows"], dendros["cols"]
                ordered = cl.order_matrix(m, rd, cd, rk, ck)
                summary = cl.summarize_by_cluster(ordered)
                for tag, mat in (("ordered", ordered), ("summary", summary)):
                    stem = self.out / f"{tag}_{a}__{b}"
                    viz.export_matrix(mat, stem.with_suffix(".json"), "json")
                    viz.export_matrix(mat, stem.with_suffix(".csv"), "delimited")
                    outputs += [stem.with_suffix(".json"), stem.with_suffix(".csv")]
            return outputs, []

        self._stage("cluster", inputs, params, run)

    def render(self):
        rel = self.config.data["relations"]
        if not rel["pairs"]:
            self.echo("render: skipped (no relations.pairs configured)")
            self.result.status["render"] = "skipped"
            return
        inputs = {}
        for a, b in rel["pairs"]:
            for tag in ("ordered", "summary"):
                inputs[f"{tag}_{a}__{b}"] = self._require(f"{tag}_{a}__{b}.json", "cluster")
            for axis in ("rows", "cols"):
                p = self.out / f"dendrogram_{a}__{b}_{axis}.json"
                if p.exists():
                    inputs[p.stem] = p
        r = self.config.data["render"]
        style = viz.RenderStyle(
            cell_size=float(r["cell_size"]), label_font_size=float(r["label_font_size"]),
            show_values=bool(r["show_values"]), value_range=r["value_range"],
        )

        def run():
            outputs = []
            for name, path in sorted(inputs.items()):
                svg = self.out / f"{name}.svg"
                if name.startswith("dendrogram_"):
                    viz.render_dendrogram(cl.Dendrogram.load(path), style, svg)
                else:
                    viz.render_heatmap(viz.import_matrix(path), style, svg)
                outputs.append(svg)
            return outputs, []

        self._stage("render", inputs, r, run)

    def run(self, subcommand: str) -> RunResult:
        if subcommand == "all":
            for s in STAGES:
                getattr(self, s)()
        elif subcommand in STAGES:
            getattr(self, subcommand)()
        else:
            raise ValidationError(f"unknown subcommand {subcommand!r}")
        return self.result


def run(subcommand: str, config: PipelineConfig, echo=print) -> RunResult:
    """Run one pipeline stage, or ``all`` of them in order, writing under the output directory."""
    return Pipeline(config, echo).run(subcommand)
