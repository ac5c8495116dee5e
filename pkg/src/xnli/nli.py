"""Decomposable attention classifier over frozen word vectors.

Pipeline per sentence pair (a = premise, b = hypothesis, vectors projected to width h):

    e_ij  = F(a_i) . F(b_j)
    beta  = softmax_j(e_i.) @ b          alpha = softmax_i(e_.j) @ a
    v1_i  = G([a_i, beta_i])              v2_j = G([b_j, alpha_j])
    y     = out(H([sum_i v1_i, sum_j v2_j]))

F, G, H are two-layer ReLU networks; ``out`` is a plain affine layer to the
three labels. Sentences in a batch are zero-padded and masked. The model
only ever sees vectors, never token strings, which is what lets a model
trained on one language run on another language's half of a shared space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import LABELS, EmbeddingSpace, Label, NliExample
from .errors import EmptyDataset, EmptySentence, FormatError, LengthMismatch, ParseError
from .ingest import format_float
from .numkit import Optimizer, derive_seed, make_rng, softmax

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 32
    hidden: int = 200
    dropout: float = 0.2
    optimizer: str = "adagrad"
    lr: float = 0.05
    seed: int = 0
    freeze_embeddings: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.batch_size < 1 or self.hidden < 1:
            raise ValueError("batch_size and hidden must be >= 1")


# ---------------------------------------------------------------------------
# building blocks

def _relu(x):
    return np.maximum(x, 0.0)


def ff_forward(params, name, x, rng=None, dropout=0.0):
    """Two affine+ReLU layers; dropout (inverted) on each layer's input when rng is given."""
    cache = {}
    if rng is not None and dropout > 0:
        m1 = (rng.random(x.shape) >= dropout) / (1.0 - dropout)
        x = x * m1
        cache["m1"] = m1
    z1 = x @ params[f"{name}.W1"] + params[f"{name}.b1"]
    h1 = _relu(z1)
    if rng is not None and dropout > 0:
        m2 = (rng.random(h1.shape) >= dropout) / (1.0 - dropout)
        h1d = h1 * m2
        cache["m2"] = m2
    else:
        h1d = h1
    z2 = h1d @ params[f"{name}.W2"] + params[f"{name}.b2"]
    cache.update(x=x, z1=z1, h1d=h1d, z2=z2)
    return _relu(z2), cache


def _sum_leading(a):
    return a.reshape(-1, a.shape[-1]).sum(0)


def _outer_leading(x, g):
    return x.reshape(-1, x.shape[-1]).T @ g.reshape(-1, g.shape[-1])


def ff_backward(params, name, dout, cache, grads):
    dz2 = dout * (cache["z2"] > 0)
    grads[f"{name}.W2"] += _outer_leading(cache["h1d"], dz2)
    grads[f"{name}.b2"] += _sum_leading(dz2)
    dh1 = dz2 @ params[f"{name}.W2"].T
    if "m2" in cache:
        dh1 = dh1 * cache["m2"]
    dz1 = dh1 * (cache["z1"] > 0)
    grads[f"{name}.W1"] += _outer_leading(cache["x"], dz1)
    grads[f"{name}.b1"] += _sum_leading(dz1)
    dx = dz1 @ params[f"{name}.W1"].T
    if "m1" in cache:
        dx = dx * cache["m1"]
    return dx


def _masked_softmax(E, mask, axis):
    Em = np.where(mask, E, -np.inf)
    Em = Em - Em.max(axis=axis, keepdims=True)
    Z = np.exp(Em)
    return Z / Z.sum(axis=axis, keepdims=True)


# ---------------------------------------------------------------------------
# model

@dataclass
class AttentionTrace:
    scores: np.ndarray         # |premise| x |hypothesis|
    premise_weights: np.ndarray  # rows: softmax over hypothesis tokens
    hypothesis_weights: np.ndarray  # columns: softmax over premise tokens
    beta: np.ndarray           # aligned hypothesis phrase per premise token
    alpha: np.ndarray          # aligned premise phrase per hypothesis token


@dataclass
class NliModel:
    dim: int
    hidden: int
    params: dict[str, np.ndarray]
    dropout: float = 0.2
    freeze_embeddings: bool = True
    labels: tuple[Label, ...] = LABELS

    @classmethod
    def init(cls, dim: int, hidden: int, seed: int = 0, dropout: float = 0.2,
             freeze_embeddings: bool = True) -> "NliModel":
        rng = make_rng(derive_seed(seed, "nli-init"))
        h = hidden
        p = {"proj": rng.standard_normal((dim, h)) / np.sqrt(dim)}
        for name, fan_in in (("F", h), ("G", 2 * h), ("H", 2 * h)):
            p[f"{name}.W1"] = rng.standard_normal((fan_in, h)) * np.sqrt(2.0 / fan_in)
            p[f"{name}.b1"] = np.zeros(h)
            p[f"{name}.W2"] = rng.standard_normal((h, h)) * np.sqrt(2.0 / h)
            p[f"{name}.b2"] = np.zeros(h)
        p["out.W"] = rng.standard_normal((h, len(LABELS))) / np.sqrt(h)
        p["out.b"] = np.zeros(len(LABELS))
        return cls(dim, hidden, p, dropout, freeze_embeddings)

    def copy(self) -> "NliModel":
        return NliModel(self.dim, self.hidden, {k: v.copy() for k, v in self.params.items()},
                        self.dropout, self.freeze_embeddings, self.labels)

    def param_names(self) -> list[str]:
        return list(self.params)


# ---------------------------------------------------------------------------
# single-pair operations (unbatched views of the same computation)

def _project(model, vecs):
    vecs = np.asarray(vecs, dtype=np.float64)
    if vecs.ndim != 2 or vecs.shape[0] == 0:
        raise EmptySentence("sentence has no tokens")
    return vecs @ model.params["proj"]


def attend(premise_vecs, hypothesis_vecs, model: NliModel) -> AttentionTrace:
    """Soft-align each premise token with the hypothesis and vice versa."""
    a = _project(model, premise_vecs)
    b = _project(model, hypothesis_vecs)
    fa, _ = ff_forward(model.params, "F", a)
    fb, _ = ff_forward(model.params, "F", b)
    e = fa @ fb.T
    wp = softmax(e, axis=1)
    wh = softmax(e, axis=0)
    return AttentionTrace(e, wp, wh, wp @ b, wh.T @ a)


def compare(vecs, aligned, model: NliModel) -> np.ndarray:
    """G applied to [vec_i, aligned_i] for every position (inputs already projected)."""
    vecs = np.atleast_2d(np.asarray(vecs, dtype=np.float64))
    aligned = np.atleast_2d(np.asarray(aligned, dtype=np.float64))
    if vecs.shape[0] != aligned.shape[0]:
        raise LengthMismatch(f"{vecs.shape[0]} vectors vs {aligned.shape[0]} aligned phrases")
    out, _ = ff_forward(model.params, "G", np.concatenate([vecs, aligned], axis=1))
    return out


def aggregate(cmp_premise, cmp_hypothesis, model: NliModel) -> np.ndarray:
    """Class scores from summed (not averaged) comparison vectors."""
    cp = np.asarray(cmp_premise, dtype=np.float64)
    ch = np.asarray(cmp_hypothesis, dtype=np.float64)
    if cp.shape[0] == 0 or ch.shape[0] == 0:
        raise EmptySentence("aggregate needs at least one comparison vector per sentence")
    # correctly rounded column sums: bit-identical under any reordering of the rows
    v = np.array([math.fsum(col) for col in cp.T] + [math.fsum(col) for col in ch.T])
    hh, _ = ff_forward(model.params, "H", v)
    return hh @ model.params["out.W"] + model.params["out.b"]


# ---------------------------------------------------------------------------
# batched forward / backward

@dataclass
class Batch:
    premise: np.ndarray     # B x Lp token rows (index into the extended table)
    hypothesis: np.ndarray  # B x Lh
    pmask: np.ndarray       # B x Lp bool
    hmask: np.ndarray       # B x Lh bool
    labels: np.ndarray | None = None


def make_batch(p_idx: Sequence[np.ndarray], h_idx: Sequence[np.ndarray], labels=None, pad: int = 0) -> Batch:
    def padded(seqs):
        if any(len(s) == 0 for s in seqs):
            raise EmptySentence("empty sentence in batch")
        L = max(len(s) for s in seqs)
        out = np.full((len(seqs), L), pad, dtype=np.int64)
        mask = np.zeros((len(seqs), L), dtype=bool)
        for i, s in enumerate(seqs):
            out[i, : len(s)] = s
            mask[i, : len(s)] = True
        return out, mask

    p, pm = padded(p_idx)
    h, hm = padded(h_idx)
    lab = None if labels is None else np.asarray(labels, dtype=np.int64)
    return Batch(p, h, pm, hm, lab)


def extended_table(space: EmbeddingSpace) -> np.ndarray:
    """Embedding matrix with one extra all-zero row (index V) for OOV and padding."""
    return np.vstack([space.matrix, np.zeros((1, space.dim))])


def encode_tokens(space: EmbeddingSpace, tokens: Sequence[str], lang: str | None = None) -> np.ndarray:
    idx = space.indices(tokens, lang)
    idx[idx < 0] = len(space)
    return idx


def forward_batch(model: NliModel, table: np.ndarray, batch: Batch, rng=None, want_cache=False):
    """Class probabilities (B x 3). With ``rng`` dropout is active (training mode)."""
    P = model.params
    dp = model.dropout
    Xa = table[batch.premise]
    Xb = table[batch.hypothesis]
    A = Xa @ P["proj"]
    Bv = Xb @ P["proj"]
    FA, cFA = ff_forward(P, "F", A, rng, dp)
    FB, cFB = ff_forward(P, "F", Bv, rng, dp)
    E = FA @ FB.transpose(0, 2, 1)
    pm = batch.pmask[:, :, None]
    hm = batch.hmask[:, None, :]
    Wb = _masked_softmax(E, hm, axis=2)  # over hypothesis tokens, per premise token
    Wa = _masked_softmax(E, pm, axis=1)  # over premise tokens, per hypothesis token
    beta = Wb @ Bv
    alpha = Wa.transpose(0, 2, 1) @ A
    V1, cG1 = ff_forward(P, "G", np.concatenate([A, beta], axis=2), rng, dp)
    V2, cG2 = ff_forward(P, "G", np.concatenate([Bv, alpha], axis=2), rng, dp)
    v1 = (V1 * batch.pmask[:, :, None]).sum(1)
    v2 = (V2 * batch.hmask[:, :, None]).sum(1)
    hH, cH = ff_forward(P, "H", np.concatenate([v1, v2], axis=1), rng, dp)
    scores = hH @ P["out.W"] + P["out.b"]
    probs = softmax(scores, axis=1)
    if not want_cache:
        return probs
    cache = dict(Xa=Xa, Xb=Xb, A=A, Bv=Bv, FA=FA, FB=FB, cFA=cFA, cFB=cFB, Wa=Wa, Wb=Wb,
                 cG1=cG1, cG2=cG2, cH=cH, hH=hH, scores=scores)
    return probs, cache


def loss_and_grads(model: NliModel, table: np.ndarray, batch: Batch, rng=None, embed_grad: bool = False):
    """Mean cross-entropy over the batch and its gradient for every parameter block.

    With ``embed_grad`` also returns the gradient w.r.t. ``table`` rows.
    """
    P = model.params
    probs, c = forward_batch(model, table, batch, rng, want_cache=True)
    n = probs.shape[0]
    y = batch.labels
    loss = float(-np.mean(np.log(probs[np.arange(n), y])))
    g = {k: np.zeros_like(v) for k, v in P.items()}

    dscores = probs.copy()
    dscores[np.arange(n), y] -= 1.0
    dscores /= n
    g["out.W"] += c["hH"].T @ dscores
    g["out.b"] += dscores.sum(0)
    dv = ff_backward(P, "H", dscores @ P["out.W"].T, c["cH"], g)
    h = model.hidden
    dv1, dv2 = dv[:, :h], dv[:, h:]
    dV1 = dv1[:, None, :] * batch.pmask[:, :, None]
    dV2 = dv2[:, None, :] * batch.hmask[:, :, None]
    dG1 = ff_backward(P, "G", dV1, c["cG1"], g)
    dG2 = ff_backward(P, "G", dV2, c["cG2"], g)
    dA = dG1[:, :, :h].copy()
    dbeta = dG1[:, :, h:]
    dB = dG2[:, :, :h].copy()
    dalpha = dG2[:, :, h:]

    A, Bv, Wa, Wb = c["A"], c["Bv"], c["Wa"], c["Wb"]
    dWb = dbeta @ Bv.transpose(0, 2, 1)
    dB += Wb.transpose(0, 2, 1) @ dbeta
    dWa = A @ dalpha.transpose(0, 2, 1)
    dA += Wa @ dalpha
    dE = Wb * (dWb - (dWb * Wb).sum(2, keepdims=True))
    dE += Wa * (dWa - (dWa * Wa).sum(1, keepdims=True))
    dFA = dE @ c["FB"]
    dFB = dE.transpose(0, 2, 1) @ c["FA"]
    dA += ff_backward(P, "F", dFA, c["cFA"], g)
    dB += ff_backward(P, "F", dFB, c["cFB"], g)
    g["proj"] += _outer_leading(c["Xa"], dA) + _outer_leading(c["Xb"], dB)
    if not embed_grad:
        return loss, g
    dtable = np.zeros_like(table)
    np.add.at(dtable, batch.premise.reshape(-1), (dA @ P["proj"].T).reshape(-1, table.shape[1]))
    np.add.at(dtable, batch.hypothesis.reshape(-1), (dB @ P["proj"].T).reshape(-1, table.shape[1]))
    return loss, g, dtable


# ---------------------------------------------------------------------------
# prediction

def forward(model: NliModel, embeddings: EmbeddingSpace, premise: Sequence[str], hypothesis: Sequence[str],
            lang: str | None = None, trace: bool = False):
    """Label distribution for one pair (dropout off); optionally with the attention trace."""
    if not premise or not hypothesis:
        raise EmptySentence("premise and hypothesis must be non-empty")
    table = extended_table(embeddings)
    batch = make_batch([encode_tokens(embeddings, premise, lang)],
                       [encode_tokens(embeddings, hypothesis, lang)], pad=len(embeddings))
    probs = forward_batch(model, table, batch)[0]
    if not trace:
        return probs
    return probs, attend(embeddings.lookup(premise, lang), embeddings.lookup(hypothesis, lang), model)


def label_of(probs) -> Label:
    """Argmax; exact ties resolve in label order contradiction < entailment < neutral."""
    return LABELS[int(np.argmax(np.asarray(probs)))]


def predict(model: NliModel, embeddings: EmbeddingSpace, premise, hypothesis, lang: str | None = None):
    probs = forward(model, embeddings, premise, hypothesis, lang)
    return label_of(probs), probs


def predict_examples(model: NliModel, embeddings: EmbeddingSpace, examples: Sequence[NliExample],
                     lang: str | None = None, batch_size: int = 256) -> np.ndarray:
    """Probabilities for many examples (N x 3), batched."""
    table = extended_table(embeddings)
    out = []
    for s in range(0, len(examples), batch_size):
        chunk = examples[s : s + batch_size]
        batch = make_batch([encode_tokens(embeddings, ex.premise, lang) for ex in chunk],
                           [encode_tokens(embeddings, ex.hypothesis, lang) for ex in chunk],
                           pad=len(embeddings))
        out.append(forward_batch(model, table, batch))
    return np.vstack(out) if out else np.zeros((0, len(LABELS)))


# ---------------------------------------------------------------------------
# training

@dataclass
class TrainResult:
    model: NliModel
    history: list[float] = field(default_factory=list)
    embeddings: EmbeddingSpace | None = None


def train_nli(train: Sequence[NliExample], embeddings: EmbeddingSpace, cfg: TrainConfig = TrainConfig(),
              lang: str | None = None) -> TrainResult:
    """Mini-batch training of the classifier on ``train``; history holds the mean loss per epoch."""
    if not train:
        raise EmptyDataset("no training examples")
    model = NliModel.init(embeddings.dim, cfg.hidden, cfg.seed, cfg.dropout, cfg.freeze_embeddings)
    table = extended_table(embeddings)
    p_idx = [encode_tokens(embeddings, ex.premise, lang) for ex in train]
    h_idx = [encode_tokens(embeddings, ex.hypothesis, lang) for ex in train]
    labels = np.array([int(ex.gold) for ex in train])
    opt = Optimizer(cfg.optimizer, cfg.lr)
    order_rng = make_rng(derive_seed(cfg.seed, "nli-order"))
    drop_rng = make_rng(derive_seed(cfg.seed, "nli-dropout")) if cfg.dropout > 0 else None
    emb_opt = Optimizer(cfg.optimizer, cfg.lr)
    params = model.params
    result = TrainResult(model)
    n = len(train)
    for epoch in range(cfg.epochs):
        order = order_rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            sel = order[s : s + cfg.batch_size]
            batch = make_batch([p_idx[i] for i in sel], [h_idx[i] for i in sel], labels[sel], pad=len(embeddings))
            if cfg.freeze_embeddings:
                loss, grads = loss_and_grads(model, table, batch, drop_rng)
            else:
                loss, grads, dtable = loss_and_grads(model, table, batch, drop_rng, embed_grad=True)
                dtable[-1] = 0.0  # the OOV/pad row stays zero
                emb_opt.step({"table": table}, {"table": dtable})
            opt.step(params, grads)
            total += loss * len(sel)
        result.history.append(total / n)
        logger.info("epoch %d loss %.4f", epoch + 1, result.history[-1])
    result.embeddings = embeddings if cfg.freeze_embeddings else EmbeddingSpace(embeddings.vocab, table[:-1])
    return result


# ---------------------------------------------------------------------------
# serialization

MAGIC = "xnli-nli-model 1"


def write_model(model: NliModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(MAGIC + "\n")
        f.write(f"dim {model.dim}\n")
        f.write(f"hidden {model.hidden}\n")
        f.write("labels " + " ".join(l.name for l in model.labels) + "\n")
        f.write(f"dropout {format_float(model.dropout)}\n")
        f.write(f"freeze_embeddings {int(model.freeze_embeddings)}\n")
        f.write(f"params {len(model.params)}\n")
        for name, arr in model.params.items():
            m = arr.reshape(arr.shape[0], -1) if arr.ndim == 2 else arr.reshape(1, -1)
            f.write(f"param {name} {arr.ndim} {m.shape[0]} {m.shape[1]}\n")
            for row in m:
                f.write(" ".join(map(format_float, row.tolist())) + "\n")


def read_model(path) -> NliModel:
    with open(path, encoding="utf-8") as f:
        lines = [l.rstrip("\r\n") for l in f]
    if not lines or lines[0] != MAGIC:
        raise FormatError("not an xnli model file", path, 1)
    header = {}
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("params "):
        key, _, value = lines[pos].partition(" ")
        header[key] = value
        pos += 1
    try:
        nparams = int(lines[pos].split()[1])
        dim, hidden = int(header["dim"]), int(header["hidden"])
        labels = tuple(Label[x] for x in header["labels"].split())
        dropout = float(header["dropout"])
        freeze = bool(int(header["freeze_embeddings"]))
    except (IndexError, KeyError, ValueError) as e:
        raise ParseError(f"bad model header: {e}", path) from None
    if labels != LABELS:
        raise ParseError(f"unsupported label order {labels}", path)
    pos += 1
    params = {}
    for _ in range(nparams):
        try:
            _, name, ndim, rows, cols = lines[pos].split()
            ndim, rows, cols = int(ndim), int(rows), int(cols)
            block = np.array([[float(x) for x in lines[pos + 1 + r].split(" ")] for r in range(rows)])
        except (IndexError, ValueError) as e:
            raise ParseError(f"bad parameter block: {e}", path, pos + 1) from None
        if block.shape != (rows, cols):
            raise ParseError(f"parameter {name} has shape {block.shape}, header says {(rows, cols)}", path, pos + 1)
        params[name] = block if ndim == 2 else block.reshape(-1)
        pos += 1 + rows
    return NliModel(dim, hidden, params, dropout, freeze, labels)
