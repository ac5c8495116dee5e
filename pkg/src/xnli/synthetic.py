"""Synthetic cipher-language data for end-to-end transfer experiments.

A source language of ``n_words`` words is split into topics and every word
gets a handful of preferred successors, mostly from its own topic. Source
sentences are random walks over that successor graph, so each word has a
distinctive context profile. The target language is a one-to-one cipher of
the source (every source word w has its own target spelling); the target
side of a pair ciphers each word and applies a few seeded adjacent swaps so
word order is not identical.

The NLI task is decided by token overlap alone: with k = number of distinct
hypothesis words found in the premise and m = hypothesis length,
k = m -> entailment, k = 0 -> contradiction, otherwise neutral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dictionary, Label, NliExample, ParallelCorpus, SentencePair
from .numkit import derive_seed, make_rng


@dataclass(frozen=True)
class CipherConfig:
    n_words: int = 600
    n_topics: int = 30
    successors: int = 4
    topic_stay: float = 0.8
    sent_len: tuple[int, int] = (6, 10)
    swap_prob: float = 0.2
    premise_len: int = 6
    hypothesis_len: int = 3
    src_lang: str = "eng"
    tgt_lang: str = "fra"
    seed: int = 0


def _spell(i: int, alphabet: str) -> str:
    s = ""
    i += len(alphabet)
    while i:
        i, r = divmod(i, len(alphabet))
        s = alphabet[r] + s
    return s


class CipherWorld:
    def __init__(self, cfg: CipherConfig = CipherConfig()):
        self.cfg = cfg
        rng = make_rng(derive_seed(cfg.seed, "cipher-world"))
        self.src_words = [f"w{_spell(i, 'aeiou')}" for i in range(cfg.n_words)]
        perm = rng.permutation(cfg.n_words)
        self.tgt_words = [f"q{_spell(int(perm[i]), 'bcdfg')}" for i in range(cfg.n_words)]
        self.cipher = dict(zip(self.src_words, self.tgt_words))
        self.topic_of = rng.integers(0, cfg.n_topics, cfg.n_words)
        self.topics = [np.flatnonzero(self.topic_of == t) for t in range(cfg.n_topics)]
        self.topics = [t for t in self.topics if len(t) >= cfg.premise_len + cfg.hypothesis_len]
        self.next_words = np.empty((cfg.n_words, cfg.successors), dtype=np.int64)
        for i in range(cfg.n_words):
            own = np.flatnonzero(self.topic_of == self.topic_of[i])
            for j in range(cfg.successors):
                pool = own if rng.random() < cfg.topic_stay else np.arange(cfg.n_words)
                self.next_words[i, j] = pool[int(rng.integers(len(pool)))]

    def encipher(self, tokens):
        return tuple(self.cipher[t] for t in tokens)

    def parallel(self, n: int, seed: int = 0) -> ParallelCorpus:
        cfg = self.cfg
        rng = make_rng(derive_seed(seed, "cipher-parallel"))
        pairs = []
        lo, hi = cfg.sent_len
        for _ in range(n):
            length = int(rng.integers(lo, hi + 1))
            walk = [int(rng.integers(cfg.n_words))]
            while len(walk) < length:
                walk.append(int(self.next_words[walk[-1], int(rng.integers(cfg.successors))]))
            words = [self.src_words[i] for i in walk]
            tgt = list(self.encipher(words))
            for i in range(len(tgt) - 1):
                if rng.random() < cfg.swap_prob:
                    tgt[i], tgt[i + 1] = tgt[i + 1], tgt[i]
            pairs.append(SentencePair(tuple(words), tuple(tgt), cfg.src_lang, cfg.tgt_lang))
        return ParallelCorpus(tuple(pairs), (cfg.src_lang, cfg.tgt_lang))

    def nli(self, n: int, seed: int = 0) -> list[NliExample]:
        """Balanced source-language examples; the label follows from overlap only.

        Premises are topic-coherent; non-premise hypothesis words are drawn
        from the whole vocabulary.
        """
        cfg = self.cfg
        rng = make_rng(derive_seed(seed, "cipher-nli"))
        out = []
        m = cfg.hypothesis_len
        for i in range(n):
            label = (Label.entailment, Label.contradiction, Label.neutral)[i % 3]
            topic = self.topics[int(rng.integers(len(self.topics)))]
            premise = rng.choice(topic, size=cfg.premise_len, replace=False)
            others = rng.choice(np.setdiff1d(np.arange(cfg.n_words), premise), size=m, replace=False)
            if label is Label.entailment:
                k = m
            elif label is Label.contradiction:
                k = 0
            else:
                k = int(rng.integers(1, m))
            hyp = np.concatenate([rng.choice(premise, size=k, replace=False), others[: m - k]])
            rng.shuffle(hyp)
            ex = NliExample(tuple(self.src_words[j] for j in premise), tuple(self.src_words[j] for j in hyp), label)
            assert overlap_label(ex.premise, ex.hypothesis) is label
            out.append(ex)
        return out

    def encipher_examples(self, examples):
        return [NliExample(self.encipher(ex.premise), self.encipher(ex.hypothesis), ex.gold) for ex in examples]

    def dictionary(self, n: int, seed: int = 0) -> tuple[Dictionary, Dictionary]:
        """(train, held-out) dictionaries: n random (src, tgt) word pairs and the remainder."""
        rng = make_rng(derive_seed(seed, "cipher-dict"))
        order = rng.permutation(self.cfg.n_words)
        entries = [(self.src_words[i], self.tgt_words[i]) for i in order]
        return Dictionary(tuple(entries[:n])), Dictionary(tuple(entries[n:]))


def overlap_label(premise, hypothesis) -> Label:
    hyp = set(hypothesis)
    k = len(hyp & set(premise))
    if k == len(hyp):
        return Label.entailment
    if k == 0:
        return Label.contradiction
    return Label.neutral
