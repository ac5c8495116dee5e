"""Tokenizer and readers/writers for the external text formats.

Formats (all UTF-8; LF line endings, CR stripped, trailing LF optional):

* word vectors: ``V d`` header, then ``token v1 ... vd`` per line
* SNLI TSV: ``gold_label<TAB>sentence1<TAB>sentence2`` (optional header row)
* parallel text: one sentence per line, line i of both files aligned
* dictionary TSV: ``src_word<TAB>tgt_word``
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .core import (
    Dictionary,
    EmbeddingSpace,
    NliExample,
    ParallelCorpus,
    SentencePair,
    Vocabulary,
    check_lang,
    parse_label,
)
from .errors import (
    DuplicateToken,
    HeaderMismatch,
    LineCountMismatch,
    MalformedRow,
    ParseError,
    UnknownLabel,
)


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    split_punctuation: bool = True


DEFAULT_TOKENIZER = TokenizerConfig()


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> list[str]:
    """Whitespace split, then isolate every maximal run of punctuation.

    >>> tokenize("Football players practice.")
    ['football', 'players', 'practice', '.']
    """
    if cfg.lowercase:
        text = text.lower()
    out: list[str] = []
    for chunk in text.split():
        if not cfg.split_punctuation:
            out.append(chunk)
            continue
        start = 0
        for i in range(1, len(chunk) + 1):
            if i == len(chunk) or _is_punct(chunk[i]) != _is_punct(chunk[start]):
                out.append(chunk[start:i])
                start = i
    return out


def _lines(path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8", newline="") as f:
        data = f.read()
    if data.endswith("\n"):
        data = data[:-1]
    if not data:
        return
    for i, line in enumerate(data.split("\n"), start=1):
        yield i, line.replace("\r", "")


def read_snli(path, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> list[NliExample]:
    examples = []
    for lineno, line in _lines(path):
        cols = line.split("\t")
        if lineno == 1 and cols[0] == "gold_label":
            continue
        if len(cols) != 3:
            raise MalformedRow(f"expected 3 columns, got {len(cols)}", path, lineno)
        gold, s1, s2 = cols
        if gold.strip() == "-":
            continue
        try:
            label = parse_label(gold)
        except UnknownLabel as e:
            raise UnknownLabel(f"{path}:{lineno}: {e}") from None
        premise, hypothesis = tokenize(s1, cfg), tokenize(s2, cfg)
        if not premise or not hypothesis:
            raise MalformedRow("empty premise or hypothesis", path, lineno)
        examples.append(NliExample(tuple(premise), tuple(hypothesis), label))
    return examples


def write_snli(examples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("gold_label\tsentence1\tsentence2\n")
        for ex in examples:
            f.write(f"{ex.gold.name}\t{' '.join(ex.premise)}\t{' '.join(ex.hypothesis)}\n")


def _parse_float(text: str, path, lineno) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad number {text!r}", path, lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", path, lineno)
    return value


def read_embeddings(path, headerless: bool = False) -> EmbeddingSpace:
    lines = _lines(path)
    declared = None
    if not headerless:
        try:
            lineno, header = next(lines)
        except StopIteration:
            raise HeaderMismatch("empty file, missing 'V d' header", path) from None
        parts = header.split(" ")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError(f"bad header {header!r}", path, lineno)
        declared = (int(parts[0]), int(parts[1]))

    tokens: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim = declared[1] if declared else None
    for lineno, line in lines:
        parts = line.rstrip(" ").split(" ")
        if dim is None:
            dim = len(parts) - 1
        if len(parts) != dim + 1 or not parts[0]:
            raise HeaderMismatch(f"expected {dim} values, got {len(parts) - 1}", path, lineno)
        tok = parts[0]
        if tok in seen:
            raise DuplicateToken(f"{path}:{lineno}: duplicate token {tok!r}")
        seen.add(tok)
        tokens.append(tok)
        rows.append([_parse_float(p, path, lineno) for p in parts[1:]])
    if declared is not None and len(tokens) != declared[0]:
        raise HeaderMismatch(f"header declares {declared[0]} rows, body has {len(tokens)}", path)
    if dim is None or dim < 1:
        raise ParseError("no vectors found", path)
    matrix = np.array(rows, dtype=np.float64).reshape(len(tokens), dim)
    return EmbeddingSpace(Vocabulary(tokens), matrix)


def format_float(x: float) -> str:
    # repr is the shortest string that round-trips to the same double
    return repr(float(x))


def write_embeddings(space: EmbeddingSpace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(space)} {space.dim}\n")
        for tok, row in zip(space.vocab, space.matrix):
            f.write(tok + " " + " ".join(map(format_float, row.tolist())) + "\n")


def read_lines(path, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> list[list[str]]:
    return [tokenize(line, cfg) for _, line in _lines(path)]


def read_parallel(src_path, tgt_path, src_lang: str, tgt_lang: str,
                  cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> ParallelCorpus:
    check_lang(src_lang)
    check_lang(tgt_lang)
    src = [line for _, line in _lines(src_path)]
    tgt = [line for _, line in _lines(tgt_path)]
    if len(src) != len(tgt):
        raise LineCountMismatch(f"{len(src)} lines vs {len(tgt)} in {tgt_path}", src_path)
    pairs = []
    dropped = 0
    for a, b in zip(src, tgt):
        ta, tb = tokenize(a, cfg), tokenize(b, cfg)
        if not ta or not tb:
            dropped += 1
            continue
        pairs.append(SentencePair(tuple(ta), tuple(tb), src_lang, tgt_lang))
    return ParallelCorpus(tuple(pairs), (src_lang, tgt_lang), dropped)


def read_dictionary(path) -> Dictionary:
    entries = []
    for lineno, line in _lines(path):
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0] or not cols[1]:
            raise MalformedRow(f"expected 2 non-empty columns, got {cols!r}", path, lineno)
        entries.append((cols[0], cols[1]))
    return Dictionary.dedup(entries)


def write_dictionary(dictionary: Dictionary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt in dictionary.entries:
            f.write(f"{src}\t{tgt}\n")


def write_lines(sentences, path) -> None:
    Path(path).write_text("".join(" ".join(s) + "\n" for s in sentences), encoding="utf-8")
