from .cache import StaleCacheError, read_cache, write_cache
from .text import (
    DEFAULT_METADATA_TERMS,
    DEFAULT_STOPWORDS,
    PreprocessConfig,
    TokenStream,
    clean,
    merge_compounds,
    normalize_term,
    preprocess_corpus,
    preprocess_text,
    stem,
    tokenize,
)

__all__ = [
    "DEFAULT_METADATA_TERMS",
    "DEFAULT_STOPWORDS",
    "PreprocessConfig",
    "StaleCacheError",
    "TokenStream",
    "clean",
    "merge_compounds",
    "normalize_term",
    "preprocess_corpus",
    "preprocess_text",
    "read_cache",
    "stem",
    "tokenize",
    "write_cache",
]
