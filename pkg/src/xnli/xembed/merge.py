"""Bilingual pseudo-sentences from aligned sentence pairs."""

from __future__ import annotations

import numpy as np

from ..core import ParallelCorpus, SentencePair, prefixed
from ..errors import EmptySide


def _sides(pair: SentencePair) -> tuple[list[str], list[str]]:
    if not pair.src_tokens or not pair.tgt_tokens:
        raise EmptySide("both sides must be non-empty")
    return ([prefixed(pair.src_lang, t) for t in pair.src_tokens],
            [prefixed(pair.tgt_lang, t) for t in pair.tgt_tokens])


def merge_random(pair: SentencePair, rng: np.random.Generator) -> list[str]:
    """Uniformly shuffled union of both prefixed sides (Fisher-Yates driven by ``rng``)."""
    src, tgt = _sides(pair)
    tokens = src + tgt
    for i in range(len(tokens) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        tokens[i], tokens[j] = tokens[j], tokens[i]
    return tokens


def merge_ratio(pair: SentencePair) -> list[str]:
    """Interleave so both sides advance at their length ratio.

    Emit from whichever side has the smaller emitted fraction (i/m vs j/n);
    ties go to the source side.
    """
    src, tgt = _sides(pair)
    m, n = len(src), len(tgt)
    i = j = 0
    out = []
    while i < m or j < n:
        # i/m <= j/n  <=>  i*n <= j*m, exact in integers
        if j == n or (i < m and i * n <= j * m):
            out.append(src[i])
            i += 1
        else:
            out.append(tgt[j])
            j += 1
    return out


def merge_corpus(parallel: ParallelCorpus, method: str, rng: np.random.Generator | None = None) -> list[list[str]]:
    """Merged corpus, built once per run (no per-epoch reshuffle)."""
    if method == "random":
        if rng is None:
            raise ValueError("merge method 'random' needs an rng")
        return [merge_random(p, rng) for p in parallel.pairs]
    if method == "ratio":
        return [merge_ratio(p) for p in parallel.pairs]
    raise ValueError(f"unknown merge method {method!r}")


def write_merged(sentences, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in sentences:
            f.write(" ".join(s) + "\n")
