"""Mine relationships between concept categories from a document corpus.

Articles are ingested and preprocessed into sentence token streams, a
skip-gram model with negative sampling is trained on them, and curated
category lexicons are expanded, grouped and compared through mean cosine
similarity matrices that are clustered (Ward) and rendered as SVG.
"""

from .cluster import Dendrogram, Merge, cut, hac_ward, order_matrix, summarize_by_cluster
from .corpus import Article, Corpus, ingest
from .embedding import (
    EmbeddingModel,
    TrainConfig,
    Vocabulary,
    analogy_eval,
    build_vocab,
    cosine,
    load_model,
    most_similar,
    save_model,
    similarity,
    train,
)
from .errors import CrtkError, DataError, InputFileError, OOVError, ValidationError
from .lexicon import (
    CategoryLexicon,
    CompoundDictionary,
    SynonymGroup,
    SynonymPairList,
    build_compound_dictionary,
    load_lexicons,
    load_synonym_pairs,
)
from .preprocess import PreprocessConfig, TokenStream, preprocess_corpus, preprocess_text
from .relations import (
    SimilarityMatrix,
    expand_category,
    filter_candidates,
    group_synonyms,
    prune_nonpositive,
    relation_matrix,
)
from .tuning import grid_search, synonym_objective
from .viz import RenderStyle, export_matrix, render_dendrogram, render_heatmap

__version__ = "0.1.0"

__all__ = [
    "Article",
    "CategoryLexicon",
    "CompoundDictionary",
    "Corpus",
    "CrtkError",
    "DataError",
    "Dendrogram",
    "EmbeddingModel",
    "InputFileError",
    "Merge",
    "OOVError",
    "PreprocessConfig",
    "RenderStyle",
    "SimilarityMatrix",
    "SynonymGroup",
    "SynonymPairList",
    "TokenStream",
    "TrainConfig",
    "ValidationError",
    "Vocabulary",
    "analogy_eval",
    "build_compound_dictionary",
    "build_vocab",
    "cosine",
    "cut",
    "expand_category",
    "export_matrix",
    "filter_candidates",
    "grid_search",
    "group_synonyms",
    "hac_ward",
    "ingest",
    "load_lexicons",
    "load_model",
    "load_synonym_pairs",
    "most_similar",
    "order_matrix",
    "preprocess_corpus",
    "preprocess_text",
    "prune_nonpositive",
    "relation_matrix",
    "render_dendrogram",
    "render_heatmap",
    "save_model",
    "similarity",
    "summarize_by_cluster",
    "synonym_objective",
    "train",
]
