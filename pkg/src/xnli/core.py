"""Domain types shared by every other module.

All types here are treated as immutable once built; numpy arrays held by
them are flagged read-only so they can be shared between workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimMismatch,
    DuplicateToken,
    EmptySide,
    InvalidLanguage,
    InvalidToken,
    UnknownLabel,
    XnliError,
)

PREFIX_SEP = ":"


class Label(enum.IntEnum):
    """NLI relation label; the integer value is the fixed report order."""

    contradiction = 0
    entailment = 1
    neutral = 2

    def render(self) -> str:
        return self.name

    def __str__(self) -> str:
        return self.name


LABELS: tuple[Label, ...] = (Label.contradiction, Label.entailment, Label.neutral)


def parse_label(text: str) -> Label:
    try:
        return Label[text.strip().lower()]
    except KeyError:
        raise UnknownLabel(f"unknown label {text!r}") from None


def check_lang(code: str) -> str:
    if not code or any(ch.isspace() for ch in code) or PREFIX_SEP in code:
        raise InvalidLanguage(f"invalid language tag {code!r}")
    if code != code.lower():
        raise InvalidLanguage(f"language tag must be lowercase: {code!r}")
    return code


def prefixed(lang: str, token: str) -> str:
    return f"{lang}{PREFIX_SEP}{token}"


def split_prefix(token: str) -> tuple[str | None, str]:
    lang, sep, word = token.partition(PREFIX_SEP)
    if not sep or not lang:
        return None, token
    return lang, word


class Vocabulary:
    """Token <-> index bijection with per-token counts."""

    def __init__(self, tokens: Iterable[str] = (), counts: Iterable[int] | None = None):
        self._tokens: list[str] = []
        self._index: dict[str, int] = {}
        self._counts: list[int] = []
        tokens = list(tokens)
        counts = [1] * len(tokens) if counts is None else list(counts)
        if len(counts) != len(tokens):
            raise XnliError("tokens and counts differ in length")
        for tok, cnt in zip(tokens, counts):
            if not tok or any(ch.isspace() for ch in tok):
                raise InvalidToken(f"invalid token {tok!r}")
            if tok in self._index:
                raise DuplicateToken(f"duplicate token {tok!r}")
            if cnt < 1:
                raise XnliError(f"count for {tok!r} must be >= 1")
            self._index[tok] = len(self._tokens)
            self._tokens.append(tok)
            self._counts.append(int(cnt))

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sequence[str]], min_count: int = 1) -> "Vocabulary":
        """Count tokens; keep those seen >= min_count, in first-occurrence order."""
        counts: dict[str, int] = {}
        for sent in sentences:
            for tok in sent:
                counts[tok] = counts.get(tok, 0) + 1
        kept = [(t, c) for t, c in counts.items() if c >= min_count]
        return cls([t for t, _ in kept], [c for _, c in kept])

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __iter__(self):
        return iter(self._tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def index_of(self, token: str) -> int:
        return self._index[token]

    def get(self, token: str, default: int = -1) -> int:
        return self._index.get(token, default)

    def token_of(self, i: int) -> str:
        return self._tokens[i]

    def count_of(self, token: str) -> int:
        return self._counts[self._index[token]]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def counts(self) -> np.ndarray:
        return np.array(self._counts, dtype=np.int64)


class EmbeddingSpace:
    """A vocabulary with one dense row vector per token."""

    def __init__(self, vocab: Vocabulary, matrix: np.ndarray):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimMismatch("embedding matrix must be 2-d")
        if matrix.shape[0] != len(vocab):
            raise DimMismatch(f"{matrix.shape[0]} rows for {len(vocab)} tokens")
        if matrix.shape[1] < 1:
            raise DimMismatch("embedding dimension must be >= 1")
        if not np.all(np.isfinite(matrix)):
            raise XnliError("embedding matrix contains non-finite values")
        matrix.flags.writeable = False
        self.vocab = vocab
        self.matrix = matrix

    @classmethod
    def from_dict(cls, vectors: dict[str, Sequence[float]]) -> "EmbeddingSpace":
        return cls(Vocabulary(vectors.keys()), np.array(list(vectors.values()), dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self.vocab.index_of(token)]

    def indices(self, tokens: Sequence[str], lang: str | None = None) -> np.ndarray:
        """Row index per token, -1 for OOV. With ``lang`` tokens are looked up as ``lang:token``."""
        if lang is None:
            return np.array([self.vocab.get(t) for t in tokens], dtype=np.int64)
        return np.array([self.vocab.get(prefixed(lang, t)) for t in tokens], dtype=np.int64)

    def lookup(self, tokens: Sequence[str], lang: str | None = None) -> np.ndarray:
        """Stack vectors for ``tokens``; OOV tokens get the zero vector."""
        idx = self.indices(tokens, lang)
        out = np.zeros((len(idx), self.dim))
        hit = idx >= 0
        out[hit] = self.matrix[idx[hit]]
        return out

    def languages(self) -> list[str]:
        seen: dict[str, None] = {}
        for tok in self.vocab:
            lang, _ = split_prefix(tok)
            if lang is not None:
                seen.setdefault(lang, None)
        return list(seen)

    def with_prefix(self, lang: str) -> "EmbeddingSpace":
        check_lang(lang)
        vocab = Vocabulary([prefixed(lang, t) for t in self.vocab], self.vocab.counts)
        return EmbeddingSpace(vocab, self.matrix)

    def restrict(self, lang: str) -> "EmbeddingSpace":
        """Sub-space of one language's prefixed tokens."""
        rows = [i for i, t in enumerate(self.vocab) if split_prefix(t)[0] == lang]
        vocab = Vocabulary([self.vocab.token_of(i) for i in rows], self.vocab.counts[rows])
        return EmbeddingSpace(vocab, self.matrix[rows].reshape(len(rows), self.dim))


def concat_spaces(spaces: Sequence[EmbeddingSpace]) -> EmbeddingSpace:
    """Union of spaces with disjoint vocabularies and equal dimension."""
    dims = {s.dim for s in spaces}
    if len(dims) != 1:
        raise DimMismatch(f"cannot merge spaces of dimensions {sorted(dims)}")
    tokens: list[str] = []
    counts: list[int] = []
    for s in spaces:
        tokens.extend(s.vocab)
        counts.extend(s.vocab.counts.tolist())
    return EmbeddingSpace(Vocabulary(tokens, counts), np.vstack([s.matrix for s in spaces]))


@dataclass(frozen=True)
class NliExample:
    premise: tuple[str, ...]
    hypothesis: tuple[str, ...]
    gold: Label

    def __post_init__(self):
        if not self.premise or not self.hypothesis:
            raise XnliError("premise and hypothesis must be non-empty")


@dataclass(frozen=True)
class SentencePair:
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]
    src_lang: str
    tgt_lang: str

    def __post_init__(self):
        if not self.src_tokens or not self.tgt_tokens:
            raise EmptySide("both sides of a sentence pair must be non-empty")


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: tuple[SentencePair, ...]
    languages: tuple[str, str]
    dropped: int = 0

    def __post_init__(self):
        src, tgt = self.languages
        check_lang(src)
        check_lang(tgt)
        for p in self.pairs:
            if (p.src_lang, p.tgt_lang) != self.languages:
                raise InvalidLanguage(
                    f"pair tagged {p.src_lang}-{p.tgt_lang} in a {src}-{tgt} corpus"
                )

    @classmethod
    def from_token_lists(
        cls, src: Sequence[Sequence[str]], tgt: Sequence[Sequence[str]], src_lang: str, tgt_lang: str
    ) -> "ParallelCorpus":
        pairs = tuple(
            SentencePair(tuple(a), tuple(b), src_lang, tgt_lang) for a, b in zip(src, tgt, strict=True)
        )
        return cls(pairs, (src_lang, tgt_lang))

    def __len__(self) -> int:
        return len(self.pairs)

    def head(self, n: int) -> "ParallelCorpus":
        return ParallelCorpus(self.pairs[:n], self.languages)

    def side(self, lang: str) -> list[tuple[str, ...]]:
        if lang == self.languages[0]:
            return [p.src_tokens for p in self.pairs]
        if lang == self.languages[1]:
            return [p.tgt_tokens for p in self.pairs]
        raise InvalidLanguage(f"{lang} is not a side of this corpus")


@dataclass(frozen=True)
class Dictionary:
    entries: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for src, tgt in self.entries:
            if not src or not tgt:
                raise XnliError("dictionary words must be non-empty")
            if (src, tgt) in seen:
                raise DuplicateToken(f"duplicate dictionary entry {src!r} -> {tgt!r}")
            seen.add((src, tgt))

    @classmethod
    def dedup(cls, entries: Iterable[tuple[str, str]]) -> "Dictionary":
        return cls(tuple(dict.fromkeys(entries)))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class LinearMap:
    """Maps row vectors of ``from_lang`` into the space of ``to_lang``: v -> v @ matrix."""

    matrix: np.ndarray
    from_lang: str
    to_lang: str

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or not np.all(np.isfinite(m)):
            raise XnliError("map matrix must be a finite 2-d array")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
