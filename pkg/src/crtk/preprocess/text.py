"""Compound merging, blocklist cleaning, sentence tokenization and stemming."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from nltk.stem.porter import PorterStemmer

from ..lexicon import CompoundDictionary

# A "word" for phrase matching: letters/digits only.
_WORD = re.compile(r"[^\W_]+")
# Characters allowed between two words of one phrase.
_JOINER = re.compile(r"[\s\-_]+")
_SENTENCE_END = re.compile(r"[.!?]+(?=\s|$)")
_EDGE_PUNCT = re.compile(r"^\W+|\W+$")
_HAS_ALNUM = re.compile(r"[^\W_]")
_ID = re.compile(r"^(?=.*\d)[^\W_]{8,}$")
_URL_PREFIXES = ("http://", "https://", "www.")

_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def _load_list(name: str) -> frozenset[str]:
    text = resources.files("crtk").joinpath("data", name).read_text(encoding="utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


DEFAULT_STOPWORDS = _load_list("stopwords_en.txt")
DEFAULT_METADATA_TERMS = _load_list("metadata_terms.txt")


@lru_cache(maxsize=1 << 16)
def stem(token: str) -> str:
    """Porter-stem a single lower-case token; compounds ("_" or "-") pass through."""
    if "_" in token or "-" in token:
        return token
    return _stemmer.stem(token, to_lowercase=False)


def merge_compounds(text: str, dictionary: CompoundDictionary) -> str:
    """Replace each dictionary phrase in ``text`` with its underscored token.

    Matching is case-insensitive and greedy from the left, longest phrase
    first. Words may be separated by whitespace, hyphens or underscores;
    any other punctuation breaks a phrase. Text outside matches is kept
    byte for byte.
    """
    if not len(dictionary):
        return text
    words = list(_WORD.finditer(text))
    if not words:
        return text
    # linked[i]: word i and word i+1 may belong to the same phrase
    linked = [
        _JOINER.fullmatch(text, words[i].end(), words[i + 1].start()) is not None
        for i in range(len(words) - 1)
    ]
    maxlen = dictionary.max_words
    pieces = []
    cursor = 0
    i = 0
    while i < len(words):
        run = 1
        while run < maxlen and i + run < len(words) and linked[i + run - 1]:
            run += 1
        match = 0
        for n in range(run, 1, -1):
            key = tuple(w.group().casefold() for w in words[i : i + n])
            if key in dictionary.entries:
                match = n
                break
        if match:
            start, end = words[i].start(), words[i + match - 1].end()
            pieces.append(text[cursor:start])
            pieces.append(dictionary.entries[key])
            cursor = end
            i += match
        else:
            i += 1
    pieces.append(text[cursor:])
    return "".join(pieces)


def _is_url(token: str) -> bool:
    low = token.casefold()
    return low.startswith(_URL_PREFIXES)


def clean(text: str, stopwords=DEFAULT_STOPWORDS, metadata_terms=DEFAULT_METADATA_TERMS) -> str:
    """Drop stopwords, metadata terms, hyperlinks and ID-like tokens.

    Tokens are compared case-folded with surrounding punctuation stripped.
    A dropped token that ended a sentence leaves its terminal punctuation
    behind so sentence boundaries survive.
    """
    blocked = frozenset(stopwords) | frozenset(metadata_terms)
    out = []
    for tok in text.split():
        if _is_url(tok):
            drop = True
        else:
            core = _EDGE_PUNCT.sub("", tok).casefold()
            drop = core in blocked or _ID.match(core) is not None
        if not drop:
            out.append(tok)
            continue
        tail = re.search(r"[.!?]+$", tok)
        if tail and out:
            out.append(tail.group())
    return " ".join(out)


@dataclass(frozen=True)
class TokenStream:
    sentences: tuple[tuple[str, ...], ...]
    provenance: str = ""

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self):
        for s in self.sentences:
            yield from s


def _sentences(text: str) -> list[list[str]]:
    out = []
    pos = 0
    for m in _SENTENCE_END.finditer(text):
        out.append(text[pos : m.start()])
        pos = m.end()
    out.append(text[pos:])
    result = []
    for chunk in out:
        toks = []
        for raw in chunk.split():
            core = _EDGE_PUNCT.sub("", raw).casefold()
            if core and _HAS_ALNUM.search(core):
                toks.append(stem(core))
        if toks:
            result.append(toks)
    return result


def tokenize(text: str, provenance: str = "") -> TokenStream:
    """Split on sentence punctuation, then whitespace; case-fold and stem each token.

    Sentence ends are '.', '!' or '?' followed by whitespace or end of text,
    so decimals such as 3.5 do not split a sentence.
    """
    return TokenStream(tuple(tuple(s) for s in _sentences(text)), provenance)


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    metadata_terms: frozenset[str] = DEFAULT_METADATA_TERMS
    compounds: CompoundDictionary = field(default_factory=CompoundDictionary)

    def digest(self) -> str:
        h = hashlib.sha256(b"preprocess-v1\n")
        for name, items in (
            ("stop", sorted(self.stopwords)),
            ("meta", sorted(self.metadata_terms)),
            ("comp", ["_".join(p) for p in self.compounds.phrases()]),
        ):
            h.update(name.encode())
            for it in items:
                h.update(b"\x00" + it.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


def preprocess_text(text: str, config: PreprocessConfig, provenance: str = "") -> TokenStream:
    """Merge compounds, clean and tokenize one document.

    Stems that happen to land on a blocklisted word are also removed, so the
    stream never carries a blocked token.
    """
    merged = merge_compounds(text, config.compounds)
    cleaned = clean(merged, config.stopwords, config.metadata_terms)
    stream = tokenize(cleaned, provenance)
    blocked = config.stopwords | config.metadata_terms
    sentences = tuple(
        s for s in (tuple(t for t in sent if t not in blocked) for sent in stream.sentences) if s
    )
    return TokenStream(sentences, provenance)


def normalize_term(term: str) -> str:
    """Map a lexicon term onto the token the pipeline would produce for it."""
    core = _EDGE_PUNCT.sub("", term).casefold()
    return stem(core) if core else core


def preprocess_corpus(corpus, config: PreprocessConfig, text_fields=("title", "abstract", "body")):
    """One TokenStream per article, in corpus order."""
    streams = []
    for art in corpus:
        text = ". ".join(getattr(art, f) for f in text_fields if getattr(art, f))
        streams.append(preprocess_text(text, config, art.id))
    return streams
