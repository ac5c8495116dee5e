"""Cross-lingual natural language inference through shared word-embedding spaces."""

from .core import (
    LABELS,
    Dictionary,
    EmbeddingSpace,
    Label,
    LinearMap,
    NliExample,
    ParallelCorpus,
    SentencePair,
    Vocabulary,
    parse_label,
)

__version__ = "0.1.0"

__all__ = [
    "LABELS", "Dictionary", "EmbeddingSpace", "Label", "LinearMap", "NliExample", "ParallelCorpus",
    "SentencePair", "Vocabulary", "parse_label",
]
