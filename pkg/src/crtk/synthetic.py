"""Synthetic corpora for tests, demos and the bundled toy pipeline."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .preprocess import TokenStream, normalize_term


def analogy_corpus(n_entities: int = 8, reps: int = 40, n_context: int = 3, seed: int = 0):
    """Token streams in which ``x{i} : y{i}`` is the same relation for every ``i``.

    Entity ``i`` owns context words ``e{i}c*``; role ``x`` or ``y`` adds
    marker words ``xm*``/``ym*``. Each sentence is one word with its entity
    context and role markers, shuffled, so ``y{j} - x{j} + x{i}`` lands on
    ``y{i}``. Returns (streams, quads) with every ordered pair i != j.
    """
    rng = np.random.default_rng(seed)
    sents = []
    for _ in range(reps):
        for i in range(n_entities):
            for role in ("x", "y"):
                toks = [f"{role}{i}"]
                toks += [f"e{i}c{k}" for k in range(n_context)]
                toks += [f"{role}m{k}" for k in range(n_context)]
                rng.shuffle(toks)
                sents.append(tuple(toks))
    order = rng.permutation(len(sents))
    streams = [TokenStream(tuple(sents[i] for i in order), "analogy")]
    quads = [
        (f"x{j}", f"y{j}", f"x{i}", f"y{i}")
        for i in range(n_entities)
        for j in range(n_entities)
        if i != j
    ]
    return streams, quads


# Toy building-interaction domain: each theme ties input data to objectives
# and recommender types, with theme-specific context words.
TOY_THEMES = {
    "comfort": {
        "input_data": ["indoor temperature", "relative humidity", "thermal feedback"],
        "objective": ["thermal comfort"],
        "recommender_system": ["context-aware recommender"],
        "context": ["warm", "cool", "setpoint", "thermostat", "clothing", "sensation"],
    },
    "energy": {
        "input_data": ["energy consumption", "occupancy schedule", "smart meter data"],
        "objective": ["energy saving", "peak reduction"],
        "recommender_system": ["reinforcement learning recommender"],
        "context": ["kwh", "tariff", "load", "demand", "appliance", "bill"],
    },
    "health": {
        "input_data": ["heart rate", "activity pattern", "step count"],
        "objective": ["sedentary behavior", "physical activity"],
        "recommender_system": ["jitai"],
        "context": ["wearable", "nudge", "sitting", "walking", "prompt", "break"],
    },
    "air": {
        "input_data": ["co2 concentration", "ventilation rate", "particulate level"],
        "objective": ["indoor air quality"],
        "recommender_system": ["knowledge-based recommender"],
        "context": ["window", "pollutant", "fresh", "purifier", "exhaust", "stale"],
    },
    "light": {
        "input_data": ["illuminance", "glare index", "daylight availability"],
        "objective": ["visual comfort"],
        "recommender_system": ["collaborative filtering"],
        "context": ["lamp", "dimmer", "blind", "lux", "brightness", "shading"],
    },
}

# surface variants used in some sentences instead of the canonical phrase
TOY_VARIANTS = {
    "heart rate": "hr",
    "co2 concentration": "carbon dioxide level",
    "indoor temperature": "room temperature",
}

_FILLER = (
    "the study proposes a new approach for occupants in office buildings and the results "
    "show clear improvements across several field experiments with participants over weeks"
).split()

_TEMPLATES = (
    "The {i} data is used to improve {o} through a {r}.",
    "We collected {i} and {i2} to support {o} in the building.",
    "A {r} that learns from {i} can promote {o}.",
    "Changes in {i} were strongly linked to {o} among occupants.",
    "Our {r} combines {i} with {c} and {c2} signals.",
    "Participants reported {c} and {c2} conditions while {i} was monitored.",
    "Improving {o} requires reliable {i} and timely {c} cues.",
)

_JOURNALS = ("Energy and Buildings", "Building and Environment", "Applied Energy", "Sensors")


def _title_case(s: str) -> str:
    return s[:1].upper() + s[1:]


def toy_articles(n: int = 210, seed: int = 7) -> list[dict]:
    """Deterministic synthetic article records, with a few defective ones appended.

    The defects: one repeated id, one republished title with a new id, one
    empty body and one record without an id.
    """
    rng = np.random.default_rng(seed)
    names = sorted(TOY_THEMES)
    records = []
    for k in range(n):
        themes = [names[k % len(names)]]
        if rng.random() < 0.35:
            themes.append(names[int(rng.integers(len(names)))])
        sentences = []
        keywords = []
        for _ in range(int(rng.integers(10, 16))):
            th = TOY_THEMES[themes[int(rng.integers(len(themes)))]]
            i, i2 = (str(x) for x in rng.choice(th["input_data"], 2, replace=False))
            if i in TOY_VARIANTS and rng.random() < 0.3:
                i = TOY_VARIANTS[i]
            c, c2 = (str(x) for x in rng.choice(th["context"], 2, replace=False))
            o, r = str(rng.choice(th["objective"])), str(rng.choice(th["recommender_system"]))
            t = _TEMPLATES[int(rng.integers(len(_TEMPLATES)))]
            s = t.format(i=i, i2=i2, o=o, r=r, c=c, c2=c2)
            filler = " ".join(str(w) for w in rng.choice(_FILLER, 3))
            sentences.append(f"{s[:-1]} {filler}.")
            keywords.extend([i, i2, o, r])
        sentences.insert(int(rng.integers(len(sentences))), f"Figure {k % 9 + 1} shows the results.")
        if k % 5 == 0:
            sentences.append(f"Data available at https://example.org/data/{k} under ID S{1000000 + k}X.")
        th0 = TOY_THEMES[themes[0]]
        keywords += [th0["objective"][0], th0["recommender_system"][0]]
        records.append({
            "id": f"toy-{k:04d}",
            "title": f"{_title_case(th0['objective'][0])} with {th0['input_data'][0]} study {k}",
            "abstract": sentences[0],
            "keywords": sorted(set(keywords)),
            "year": 2015 + k % 10,
            "journal": _JOURNALS[int(rng.integers(len(_JOURNALS)))],
            "body": " ".join(sentences),
        })
    records.append(dict(records[3]))
    dup = dict(records[10])
    dup["id"] = "toy-republished"
    records.append(dup)
    records.append({**records[20], "id": "toy-empty", "title": "Empty body", "body": ""})
    records.append({"title": "No identifier", "body": "Text without an id.", "year": 2020})
    return records


def toy_lexicons() -> list[dict]:
    cats = []
    for cat in ("input_data", "objective", "recommender_system"):
        seeds = []
        for name in sorted(TOY_THEMES):
            seeds.extend(TOY_THEMES[name][cat])
        seeds = [s.replace(" ", "_").replace("-", "_") for s in seeds]
        groups = []
        if cat == "input_data":
            groups = [
                {"representative": "heart_rate", "members": ["heart_rate", "hr"]},
                {"representative": "co2_concentration", "members": ["co2_concentration", "carbon_dioxide_level"]},
                {"representative": "indoor_temperature", "members": ["indoor_temperature", "room_temperature"]},
            ]
        cats.append({"name": cat, "seeds": seeds, "groups": groups})
    return cats


def toy_synonym_pairs() -> list[tuple[str, str]]:
    pairs = [(a.replace(" ", "_"), b.replace(" ", "_")) for a, b in TOY_VARIANTS.items()]
    for th in TOY_THEMES.values():
        a, b = th["input_data"][:2]
        pairs.append((a.replace(" ", "_"), b.replace(" ", "_")))
    return pairs


def _toy_token(phrase: str) -> str:
    return normalize_term(phrase.replace(" ", "_").replace("-", "_"))


def toy_decisions() -> dict[str, list[str]]:
    """Per-category review verdicts: keep the category's own terms, drop every other known term."""
    every = {_toy_token(w) for w in _FILLER} | {_toy_token(w) for th in TOY_THEMES.values() for w in th["context"]}
    every |= {_toy_token(w) for w in TOY_VARIANTS.values()}
    own = {}
    for cat in ("input_data", "objective", "recommender_system"):
        terms = {_toy_token(w) for th in TOY_THEMES.values() for w in th[cat]}
        if cat == "input_data":
            terms |= {_toy_token(w) for w in TOY_VARIANTS.values()}
        own[cat] = terms
        every |= terms
    return {
        cat: [f"keep {t}" for t in sorted(terms)] + [f"drop {t}" for t in sorted(every - terms)]
        for cat, terms in own.items()
    }


def write_toy_bundle(directory) -> None:
    """Write the toy articles, lexicons, synonym pairs and per-category decision lists into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "articles.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for rec in toy_articles():
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    (d / "lexicons.json").write_text(json.dumps(toy_lexicons(), indent=1) + "\n", encoding="utf-8")
    lines = ["# Illustrative synonym pairs for the toy corpus (not a published list)."]
    lines += [f"{a} {b}" for a, b in toy_synonym_pairs()]
    (d / "synonym_pairs.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for cat, verdicts in toy_decisions().items():
        text = "\n".join([f"# review verdicts for {cat} candidates", *verdicts]) + "\n"
        (d / f"decisions_{cat}.txt").write_text(text, encoding="utf-8")
