from .io import load_model, save_model
from .model import (
    AnalogyResult,
    EmbeddingModel,
    TrainConfig,
    analogy_eval,
    cosine,
    most_similar,
    similarity,
    train,
)
from .sgns import sgns_grad, sgns_loss
from .vocab import Vocabulary, build_vocab

__all__ = [
    "AnalogyResult",
    "EmbeddingModel",
    "TrainConfig",
    "Vocabulary",
    "analogy_eval",
    "build_vocab",
    "cosine",
    "load_model",
    "most_similar",
    "save_model",
    "sgns_grad",
    "sgns_loss",
    "similarity",
    "train",
]
