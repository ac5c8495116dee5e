"""Inverted-index embeddings: words as sentence-ID indicator rows, reduced by truncated SVD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..core import EmbeddingSpace, ParallelCorpus, Vocabulary, prefixed
from ..errors import EmptyCorpus, LengthMismatch, RankTooLarge
from ..numkit import truncated_svd


@dataclass(frozen=True)
class InvertConfig:
    k: int = 300
    weighting: str = "binary"
    sigma_power: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.weighting not in ("binary", "count"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if not 0.0 <= self.sigma_power <= 1.0:
            raise ValueError("sigma_power must lie in [0, 1]")


@dataclass(frozen=True)
class InvertedIndex:
    vocab: Vocabulary
    matrix: sp.csr_matrix  # word types x sentence IDs


def build_inverted_index(corpora, weighting: str = "binary") -> InvertedIndex:
    """Stack every language side of ``corpora`` over a shared sentence-ID column space.

    All corpora must have the same number of pairs; pair i of each corpus is
    sentence ID i. A language present in several corpora is indexed from its
    first occurrence only.
    """
    if isinstance(corpora, ParallelCorpus):
        corpora = [corpora]
    corpora = list(corpora)
    if not corpora:
        raise EmptyCorpus("no corpora given")
    n = len(corpora[0])
    if any(len(c) != n for c in corpora):
        raise LengthMismatch(f"corpora have pair counts {[len(c) for c in corpora]}")
    if n == 0:
        raise EmptyCorpus("corpora are empty")

    sides: dict[str, list] = {}
    for c in corpora:
        for lang in c.languages:
            if lang not in sides:
                sides[lang] = c.side(lang)

    index: dict[str, int] = {}
    counts: list[int] = []
    rows, cols, vals = [], [], []
    for lang, sentences in sides.items():
        for sid, sent in enumerate(sentences):
            seen: dict[int, int] = {}
            for tok in sent:
                key = prefixed(lang, tok)
                r = index.get(key)
                if r is None:
                    r = index[key] = len(counts)
                    counts.append(0)
                counts[r] += 1
                seen[r] = seen.get(r, 0) + 1
            for r, c in seen.items():
                rows.append(r)
                cols.append(sid)
                vals.append(1.0 if weighting == "binary" else float(c))
    M = sp.csr_matrix((vals, (rows, cols)), shape=(len(counts), n), dtype=np.float64)
    M.sort_indices()
    return InvertedIndex(Vocabulary(list(index), counts), M)


def embed_invert(index: InvertedIndex, cfg: InvertConfig = InvertConfig()) -> EmbeddingSpace:
    """Word vectors U diag(S^p), computed as M V diag(S^(p-1)).

    The second form makes words with identical index rows bit-identical.
    """
    M = index.matrix
    if cfg.k > min(M.shape):
        raise RankTooLarge(f"k={cfg.k} exceeds min{M.shape}")
    res = truncated_svd(M, cfg.k, seed=cfg.seed)
    S = res.S
    scale = np.zeros_like(S)
    nz = S > S[0] * 1e-12 if S[0] > 0 else np.zeros_like(S, dtype=bool)
    scale[nz] = S[nz] ** (cfg.sigma_power - 1.0)
    vectors = np.asarray(M @ res.V) * scale
    return EmbeddingSpace(index.vocab, vectors)
