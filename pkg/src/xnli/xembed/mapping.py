"""Translation-matrix alignment of monolingual spaces through a bilingual dictionary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dictionary, EmbeddingSpace, LinearMap, concat_spaces
from ..errors import DimMismatch, NoUsablePairs
from ..numkit import solve_least_squares


@dataclass(frozen=True)
class MapFit:
    map: LinearMap
    pairs_used: int
    ridge: bool


def fit_translation_matrix(tgt_space: EmbeddingSpace, src_space: EmbeddingSpace, dictionary: Dictionary,
                           tgt_lang: str = "tgt", src_lang: str = "eng") -> MapFit:
    """Least-squares W with tgt_vec @ W ~= src_vec over in-vocabulary dictionary entries.

    Dictionary entries are (src_word, tgt_word); the map runs target -> source.
    """
    xs, zs = [], []
    for src_word, tgt_word in dictionary.entries:
        i = tgt_space.vocab.get(tgt_word)
        j = src_space.vocab.get(src_word)
        if i >= 0 and j >= 0:
            xs.append(i)
            zs.append(j)
    if not xs:
        raise NoUsablePairs("no dictionary entry has both words in vocabulary")
    X = tgt_space.matrix[xs]
    Z = src_space.matrix[zs]
    res = solve_least_squares(X, Z)
    return MapFit(LinearMap(res.W, tgt_lang, src_lang), len(xs), res.ridge)


def apply_map(linear_map: LinearMap, space: EmbeddingSpace) -> EmbeddingSpace:
    W = linear_map.matrix
    if space.dim != W.shape[0]:
        raise DimMismatch(f"space has dim {space.dim}, map expects {W.shape[0]}")
    return EmbeddingSpace(space.vocab, space.matrix @ W)


def embed_map(src_space: EmbeddingSpace, tgt_space: EmbeddingSpace, dictionary: Dictionary,
              src_lang: str, tgt_lang: str) -> tuple[EmbeddingSpace, MapFit]:
    """Shared space: English vectors as-is plus mapped target vectors, both language-prefixed."""
    fit = fit_translation_matrix(tgt_space, src_space, dictionary, tgt_lang, src_lang)
    mapped = apply_map(fit.map, tgt_space)
    return concat_spaces([src_space.with_prefix(src_lang), mapped.with_prefix(tgt_lang)]), fit


def nearest_neighbors(queries: np.ndarray, space: EmbeddingSpace, k: int = 1) -> np.ndarray:
    """Indices of the k cosine-nearest rows of ``space`` for each query row (ties: lowest index)."""
    def unit(A):
        n = np.linalg.norm(A, axis=1, keepdims=True)
        return A / np.where(n > 0, n, 1.0)

    sims = unit(np.atleast_2d(queries)) @ unit(space.matrix).T
    return np.argsort(-sims, axis=1, kind="stable")[:, :k]


def precision_at_1(pairs, src: EmbeddingSpace, tgt: EmbeddingSpace) -> float:
    """Fraction of (src_word, tgt_word) pairs where tgt_word is the nearest target neighbour of src_word."""
    pairs = [(a, b) for a, b in pairs if a in src and b in tgt]
    if not pairs:
        raise NoUsablePairs("no evaluable pairs")
    q = np.array([src.vector(a) for a, _ in pairs])
    nn = nearest_neighbors(q, tgt, 1)[:, 0]
    return float(np.mean([tgt.vocab.token_of(i) == b for i, (_, b) in zip(nn, pairs)]))
