"""AMR-to-text generation with a graph-state LSTM encoder and a copy-aware attention decoder."""

from .amr import AmrGraph, AmrParseError, linearize, parse_penman, read_corpus
from .bleu import corpus_bleu
from .model import Model, ModelConfig, build_vocabularies
from .training import TrainConfig, checkpoint_load, checkpoint_save, train

__version__ = "0.1.0"

__all__ = [
    "AmrGraph",
    "AmrParseError",
    "Model",
    "ModelConfig",
    "TrainConfig",
    "build_vocabularies",
    "checkpoint_load",
    "checkpoint_save",
    "corpus_bleu",
    "linearize",
    "parse_penman",
    "read_corpus",
    "train",
    "__version__",
]
