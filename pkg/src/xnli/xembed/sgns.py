"""Skip-gram with negative sampling.

The training loop is a numba kernel doing plain sequential SGD, one
(center, context) pair at a time, word2vec style. Random draws come from a
splitmix64 stream seeded per (seed, epoch, sentence), so the deterministic
mode is bit-reproducible and the opt-in parallel mode only differs in
update interleaving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..core import EmbeddingSpace, Vocabulary
from ..errors import DegenerateVocabulary, EmptyCorpus
from ..numkit import derive_seed, log_sigmoid, sigmoid


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_count: int = 1
    subsample: float = 0.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window and negatives must be >= 1")


# ---------------------------------------------------------------------------
# reference loss, used for gradient checks and kernel tests

def sgns_pair_loss(v_c: np.ndarray, u_o: np.ndarray, u_neg: np.ndarray) -> float:
    """-log s(u_o.v_c) - sum_i log s(-u_neg_i.v_c)."""
    return float(-log_sigmoid(u_o @ v_c) - np.sum(log_sigmoid(-(u_neg @ v_c))))


def sgns_pair_grad(v_c, u_o, u_neg):
    """Gradients of ``sgns_pair_loss`` w.r.t. (v_c, u_o, u_neg)."""
    gp = sigmoid(u_o @ v_c) - 1.0
    gn = sigmoid(u_neg @ v_c)
    d_vc = gp * u_o + gn @ u_neg
    d_uo = gp * v_c
    d_un = gn[:, None] * v_c[None, :]
    return d_vc, d_uo, d_un


# ---------------------------------------------------------------------------
# kernel

@numba.njit(cache=True, inline="always")
def _splitmix(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = z ^ (z >> np.uint64(31))
    return state, z


@numba.njit(cache=True, inline="always")
def _uniform(state):
    state, z = _splitmix(state)
    return state, (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, inline="always")
def _log_sigmoid(x):
    if x >= 0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


@numba.njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True)
def _train_sentence(tokens, W_in, W_out, cum, keep_prob, window, k, lr, state, buf, grad):
    n = 0
    for t in range(tokens.shape[0]):
        state, u = _uniform(state)
        if u < keep_prob[tokens[t]]:
            buf[n] = tokens[t]
            n += 1
    loss = 0.0
    pairs = 0
    dim = W_in.shape[1]
    V = cum.shape[0]
    for c in range(n):
        wc = buf[c]
        lo = max(0, c - window)
        hi = min(n, c + window + 1)
        for o in range(lo, hi):
            if o == c:
                continue
            wo = buf[o]
            for d in range(dim):
                grad[d] = 0.0
            for s in range(k + 1):
                if s == 0:
                    target = wo
                    label = 1.0
                else:
                    state, u = _uniform(state)
                    target = np.searchsorted(cum, u * cum[V - 1], side="right")
                    if target >= V:
                        target = V - 1
                    if target == wo:
                        continue
                    label = 0.0
                dot = 0.0
                for d in range(dim):
                    dot += W_in[wc, d] * W_out[target, d]
                if label == 1.0:
                    loss -= _log_sigmoid(dot)
                else:
                    loss -= _log_sigmoid(-dot)
                g = _sigmoid(dot) - label
                for d in range(dim):
                    grad[d] += g * W_out[target, d]
                    W_out[target, d] -= lr * g * W_in[wc, d]
            for d in range(dim):
                W_in[wc, d] -= lr * grad[d]
            pairs += 1
    return loss, pairs


@numba.njit(cache=True)
def _sentence_state(seed, epoch, sent):
    st = np.uint64(seed)
    st, a = _splitmix(st ^ np.uint64(epoch) * np.uint64(0x632BE59BD9B4E019))
    st, b = _splitmix(a ^ np.uint64(sent) * np.uint64(0x8CB92BA72F3D8DD7))
    return b


@numba.njit(cache=True)
def _train_epoch(flat, offsets, W_in, W_out, cum, keep_prob, window, k, lr0, done0, total, seed, epoch):
    maxlen = 1
    for s in range(offsets.shape[0] - 1):
        maxlen = max(maxlen, offsets[s + 1] - offsets[s])
    buf = np.empty(maxlen, dtype=np.int64)
    grad = np.empty(W_in.shape[1])
    loss = 0.0
    pairs = 0
    done = done0
    for s in range(offsets.shape[0] - 1):
        lr = lr0 * max(1e-4, 1.0 - done / total)
        state = _sentence_state(seed, epoch, s)
        l, p = _train_sentence(flat[offsets[s]:offsets[s + 1]], W_in, W_out, cum, keep_prob,
                               window, k, lr, state, buf, grad)
        loss += l
        pairs += p
        done += offsets[s + 1] - offsets[s]
    return loss, pairs


@numba.njit(cache=True, parallel=True)
def _train_epoch_parallel(flat, offsets, W_in, W_out, cum, keep_prob, window, k, lr0, done0, total, seed, epoch):
    nsent = offsets.shape[0] - 1
    maxlen = 1
    for s in range(nsent):
        maxlen = max(maxlen, offsets[s + 1] - offsets[s])
    losses = np.zeros(nsent)
    counts = np.zeros(nsent, dtype=np.int64)
    for s in numba.prange(nsent):
        buf = np.empty(maxlen, dtype=np.int64)
        grad = np.empty(W_in.shape[1])
        lr = lr0 * max(1e-4, 1.0 - (done0 + offsets[s]) / total)
        state = _sentence_state(seed, epoch, s)
        l, p = _train_sentence(flat[offsets[s]:offsets[s + 1]], W_in, W_out, cum, keep_prob,
                               window, k, lr, state, buf, grad)
        losses[s] = l
        counts[s] = p
    return losses.sum(), counts.sum()


# ---------------------------------------------------------------------------
# driver

@dataclass
class SgnsModel:
    vocab: Vocabulary
    W_in: np.ndarray
    W_out: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def space(self) -> EmbeddingSpace:
        return EmbeddingSpace(self.vocab, self.W_in)


def encode(sentences, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Flatten sentences to index arrays, dropping out-of-vocabulary tokens."""
    flat: list[int] = []
    offsets = [0]
    for sent in sentences:
        flat.extend(i for i in (vocab.get(t) for t in sent) if i >= 0)
        offsets.append(len(flat))
    return np.array(flat, dtype=np.int64), np.array(offsets, dtype=np.int64)


def noise_cdf(counts: np.ndarray, power: float = 0.75) -> np.ndarray:
    return np.cumsum(counts.astype(np.float64) ** power)


def init_sgns(vocab: Vocabulary, cfg: SgnsConfig) -> SgnsModel:
    rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, "sgns-init")))
    W_in = (rng.random((len(vocab), cfg.dim)) - 0.5) / cfg.dim
    W_out = np.zeros((len(vocab), cfg.dim))
    return SgnsModel(vocab, W_in, W_out)


def corpus_loss(model: SgnsModel, flat, offsets, cfg: SgnsConfig, epoch: int = 0) -> float:
    """Mean pair loss over the corpus with the epoch's negative draws and no update (lr=0)."""
    W_in, W_out = model.W_in.copy(), model.W_out.copy()
    cum = noise_cdf(model.vocab.counts)
    keep = np.ones(len(model.vocab))
    loss, pairs = _train_epoch(flat, offsets, W_in, W_out, cum, keep, cfg.window, cfg.negatives,
                               0.0, 0, max(1, flat.size), np.uint64(derive_seed(cfg.seed, "sgns")), epoch)
    return loss / max(1, pairs)


def train_sgns(sentences, cfg: SgnsConfig = SgnsConfig()) -> EmbeddingSpace:
    """Input ("v") vectors of an SGNS model trained on ``sentences``; context vectors are discarded."""
    return fit_sgns(sentences, cfg).space()


def fit_sgns(sentences, cfg: SgnsConfig = SgnsConfig()) -> SgnsModel:
    """Train SGNS input/output vectors on token sentences (bilingual merged or monolingual)."""
    sentences = [list(s) for s in sentences]
    if not any(sentences):
        raise EmptyCorpus("no tokens to train on")
    vocab = Vocabulary.from_sentences(sentences, cfg.min_count)
    if len(vocab) == 0:
        raise EmptyCorpus("nothing survives min_count filtering")
    if len(vocab) < 2:
        raise DegenerateVocabulary(f"only {len(vocab)} token type survives filtering")
    flat, offsets = encode(sentences, vocab)
    model = init_sgns(vocab, cfg)

    counts = vocab.counts.astype(np.float64)
    cum = noise_cdf(vocab.counts)
    if cfg.subsample > 0:
        f = counts / counts.sum()
        keep = np.minimum(1.0, (np.sqrt(f / cfg.subsample) + 1.0) * cfg.subsample / f)
    else:
        keep = np.ones(len(vocab))
    seed = np.uint64(derive_seed(cfg.seed, "sgns"))
    total = float(max(1, cfg.epochs * flat.size))
    kernel = _train_epoch_parallel if cfg.workers > 1 else _train_epoch
    for epoch in range(cfg.epochs):
        loss, pairs = kernel(flat, offsets, model.W_in, model.W_out, cum, keep, cfg.window,
                             cfg.negatives, cfg.lr, epoch * flat.size, total, seed, epoch)
        model.loss_history.append(loss / max(1, pairs))
    return model
