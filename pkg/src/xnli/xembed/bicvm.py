"""Bilingual compositional vectors: additive sentence sums trained with a margin loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import EmbeddingSpace, ParallelCorpus, Vocabulary, concat_spaces
from ..errors import EmptyCorpus
from ..numkit import derive_seed, make_rng


@dataclass(frozen=True)
class BicvmConfig:
    dim: int = 300
    margin: float = 1.0
    negatives: int = 1
    epochs: int = 5
    lr: float = 0.01
    l2: float = 1e-4
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")


@dataclass
class BicvmModel:
    src_lang: str
    tgt_lang: str
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    E_src: np.ndarray
    E_tgt: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def space(self) -> EmbeddingSpace:
        return concat_spaces([
            EmbeddingSpace(self.src_vocab, self.E_src).with_prefix(self.src_lang),
            EmbeddingSpace(self.tgt_vocab, self.E_tgt).with_prefix(self.tgt_lang),
        ])


def hinge_loss(E_src, E_tgt, a, b, b_neg, margin, l2) -> float:
    """max(0, m + |f(a)-g(b)|^2 - |f(a)-g(b')|^2) + l2 * |touched rows|^2.

    a, b, b_neg are index arrays; f, g sum rows of E_src, E_tgt.
    """
    fa = E_src[a].sum(0)
    r = fa - E_tgt[b].sum(0)
    rn = fa - E_tgt[b_neg].sum(0)
    ua = np.unique(a)
    ut = np.unique(np.concatenate([b, b_neg]))
    reg = l2 * (np.sum(E_src[ua] ** 2) + np.sum(E_tgt[ut] ** 2))
    return float(max(0.0, margin + r @ r - rn @ rn) + reg)


def hinge_grad(E_src, E_tgt, a, b, b_neg, margin, l2):
    """Dense gradients of ``hinge_loss`` w.r.t. (E_src, E_tgt)."""
    gs = np.zeros_like(E_src)
    gt = np.zeros_like(E_tgt)
    fa = E_src[a].sum(0)
    r = fa - E_tgt[b].sum(0)
    rn = fa - E_tgt[b_neg].sum(0)
    if margin + r @ r - rn @ rn > 0:
        np.add.at(gs, a, 2.0 * (r - rn))
        np.add.at(gt, b, -2.0 * r)
        np.add.at(gt, b_neg, 2.0 * rn)
    ua = np.unique(a)
    ut = np.unique(np.concatenate([b, b_neg]))
    gs[ua] += 2.0 * l2 * E_src[ua]
    gt[ut] += 2.0 * l2 * E_tgt[ut]
    return gs, gt


def _encode(sentences, vocab):
    return [np.array([vocab.index_of(t) for t in s], dtype=np.int64) for s in sentences]


def init_bicvm(parallel: ParallelCorpus, cfg: BicvmConfig) -> BicvmModel:
    if len(parallel) == 0:
        raise EmptyCorpus("parallel corpus is empty")
    src_lang, tgt_lang = parallel.languages
    sv = Vocabulary.from_sentences(parallel.side(src_lang))
    tv = Vocabulary.from_sentences(parallel.side(tgt_lang))
    rng = make_rng(derive_seed(cfg.seed, "bicvm-init"))
    E_src = cfg.init_scale * rng.standard_normal((len(sv), cfg.dim))
    E_tgt = cfg.init_scale * rng.standard_normal((len(tv), cfg.dim))
    return BicvmModel(src_lang, tgt_lang, sv, tv, E_src, E_tgt)


def fit_bicvm(parallel: ParallelCorpus, cfg: BicvmConfig = BicvmConfig()) -> BicvmModel:
    model = init_bicvm(parallel, cfg)
    src = _encode(parallel.side(model.src_lang), model.src_vocab)
    tgt = _encode(parallel.side(model.tgt_lang), model.tgt_vocab)
    n = len(src)
    rng = make_rng(derive_seed(cfg.seed, "bicvm"))
    E_s, E_t = model.E_src, model.E_tgt
    for _ in range(cfg.epochs):
        total = 0.0
        for i in rng.permutation(n):
            a, b = src[i], tgt[i]
            fa = E_s[a].sum(0)
            r = fa - E_t[b].sum(0)
            for _neg in range(cfg.negatives):
                j = int(rng.integers(0, n - 1)) if n > 1 else 0
                if n > 1 and j >= i:
                    j += 1
                bn = tgt[j]
                rn = fa - E_t[bn].sum(0)
                loss = cfg.margin + r @ r - rn @ rn
                ua = np.unique(a)
                ut = np.unique(np.concatenate([b, bn]))
                total += max(0.0, loss) + cfg.l2 * (np.sum(E_s[ua] ** 2) + np.sum(E_t[ut] ** 2))
                # one SGD step on the pre-update gradient of both terms
                gs_reg = 2.0 * cfg.l2 * E_s[ua]
                gt_reg = 2.0 * cfg.l2 * E_t[ut]
                E_s[ua] -= cfg.lr * gs_reg
                E_t[ut] -= cfg.lr * gt_reg
                if loss > 0:
                    np.add.at(E_s, a, -cfg.lr * 2.0 * (r - rn))
                    np.add.at(E_t, b, cfg.lr * 2.0 * r)
                    np.add.at(E_t, bn, -cfg.lr * 2.0 * rn)
                fa = E_s[a].sum(0)
                r = fa - E_t[b].sum(0)
        model.loss_history.append(total / max(1, n * cfg.negatives))
    return model


def train_bicvm(parallel: ParallelCorpus, cfg: BicvmConfig = BicvmConfig()) -> EmbeddingSpace:
    """Shared prefixed space of both languages' word vectors."""
    return fit_bicvm(parallel, cfg).space()
