"""Metrics, system evaluation and the corpus-size learning curve."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import LABELS, EmbeddingSpace, Label, NliExample, ParallelCorpus
from .errors import EmptyInput, EmptySizes, LengthMismatch, OutOfRange, SizeOutOfRange
from .nli import label_of, predict_examples
from .numkit import derive_seed, make_rng


def _check_pair(preds, golds):
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} gold labels")
    if len(golds) == 0:
        raise EmptyInput("no labels to score")


def accuracy(preds: Sequence[Label], golds: Sequence[Label]) -> float:
    _check_pair(preds, golds)
    return sum(p == g for p, g in zip(preds, golds)) / len(golds)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # [gold, predicted] in LABELS order

    @classmethod
    def from_labels(cls, preds, golds) -> "ConfusionMatrix":
        _check_pair(preds, golds)
        m = np.zeros((len(LABELS), len(LABELS)), dtype=np.int64)
        for p, g in zip(preds, golds):
            m[int(g), int(p)] += 1
        return cls(m)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class LabelScore:
    precision: float
    recall: float
    f1: float


def per_label_f1(preds, golds) -> tuple[dict[Label, LabelScore], ConfusionMatrix]:
    """One-vs-rest precision/recall/F1 per label; any 0/0 is taken as 0."""
    cm = ConfusionMatrix.from_labels(preds, golds)
    m = cm.counts
    scores = {}
    for lab in LABELS:
        k = int(lab)
        tp = m[k, k]
        pred_k = m[:, k].sum()
        gold_k = m[k, :].sum()
        p = tp / pred_k if pred_k else 0.0
        r = tp / gold_k if gold_k else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        scores[lab] = LabelScore(float(p), float(r), float(f))
    return scores, cm


def micro_f1(cm: ConfusionMatrix) -> float:
    m = cm.counts
    tp = int(np.trace(m))
    fp = fn = cm.total - tp  # every miss is one false positive and one false negative
    return 2 * tp / (2 * tp + fp + fn) if tp + fp else 0.0


# ---------------------------------------------------------------------------
# BLEU

@dataclass(frozen=True)
class BleuReport:
    precisions: tuple[float, ...]
    matches: tuple[int, ...]
    totals: tuple[int, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    score: float


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses, references, max_n: int = 4) -> BleuReport:
    """Corpus BLEU, single reference, uniform weights, no smoothing, scaled to [0, 100]."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise EmptyInput("no sentences")
    matches = [0] * max_n
    totals = [0] * max_n
    h_len = r_len = 0
    for hyp, ref in zip(hypotheses, references):
        h_len += len(hyp)
        r_len += len(ref)
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(hyp, n), _ngrams(ref, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(0, len(hyp) - n + 1)
    precisions = tuple(m / t if t else 0.0 for m, t in zip(matches, totals))
    if h_len == 0:
        bp = 0.0
    else:
        bp = 1.0 if h_len > r_len else math.exp(1.0 - r_len / h_len)
    if min(precisions) > 0:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    else:
        score = 0.0
    return BleuReport(precisions, tuple(matches), tuple(totals), bp, h_len, r_len, score)


# ---------------------------------------------------------------------------
# system evaluation

@dataclass
class SystemReport:
    accuracy: float
    scores: dict[Label, LabelScore]
    confusion: ConfusionMatrix
    oov_rate: float
    n: int
    predictions: list[Label]


def evaluate_predictions(preds, golds, oov_rate: float = 0.0) -> SystemReport:
    scores, cm = per_label_f1(preds, golds)
    return SystemReport(accuracy(preds, golds), scores, cm, oov_rate, len(golds), list(preds))


def oov_rate(embeddings: EmbeddingSpace, examples: Sequence[NliExample], lang: str | None = None) -> float:
    oov = total = 0
    for ex in examples:
        for sent in (ex.premise, ex.hypothesis):
            idx = embeddings.indices(sent, lang)
            oov += int(np.sum(idx < 0))
            total += len(idx)
    return oov / total if total else 0.0


def evaluate_system(model, embeddings: EmbeddingSpace, test: Sequence[NliExample],
                    lang: str | None = None) -> SystemReport:
    if not test:
        raise EmptyInput("empty test set")
    probs = predict_examples(model, embeddings, test, lang)
    preds = [label_of(p) for p in probs]
    return evaluate_predictions(preds, [ex.gold for ex in test], oov_rate(embeddings, test, lang))


def proxy_gap(acc_manual: float, acc_machine_translated: float) -> float:
    """Machine-translated minus manual accuracy, in absolute percentage points."""
    for a in (acc_manual, acc_machine_translated):
        if not 0.0 <= a <= 1.0:
            raise OutOfRange(f"accuracy {a} outside [0, 1]")
    return 100.0 * (acc_machine_translated - acc_manual)


# ---------------------------------------------------------------------------
# learning curve

@dataclass(frozen=True)
class CurvePoint:
    size: int
    accuracy: float


def learning_curve(parallel: ParallelCorpus, sizes: Sequence[int],
                   embed: Callable[[ParallelCorpus], EmbeddingSpace],
                   train: Callable[[EmbeddingSpace], object],
                   test: Sequence[NliExample], test_lang: str | None,
                   subsample_seed: int | None = None) -> list[CurvePoint]:
    """Accuracy on ``test`` as a function of the number of parallel pairs used for embedding.

    ``embed`` builds a space from a corpus; ``train`` fits an NLI model on a
    space. Sizes take corpus prefixes unless ``subsample_seed`` is given, in
    which case each size draws a seeded random subset (kept in corpus order).
    """
    sizes = list(sizes)
    if not sizes:
        raise EmptySizes("no corpus sizes given")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise SizeOutOfRange(f"sizes must be strictly ascending: {sizes}")
    if sizes[0] < 1 or sizes[-1] > len(parallel):
        raise SizeOutOfRange(f"sizes must lie in [1, {len(parallel)}]: {sizes}")
    points = []
    for s in sizes:
        if subsample_seed is None:
            sub = parallel.head(s)
        else:
            rng = make_rng(derive_seed(subsample_seed, f"curve-{s}"))
            keep = np.sort(rng.choice(len(parallel), size=s, replace=False))
            sub = ParallelCorpus(tuple(parallel.pairs[i] for i in keep), parallel.languages)
        space = embed(sub)
        model = train(space)
        rep = evaluate_system(model, space, test, test_lang)
        points.append(CurvePoint(s, rep.accuracy))
    return points


# ---------------------------------------------------------------------------
# rendering

def _fmt(x: float) -> str:
    return f"{x:.4f}"


def report_rows(rep: SystemReport) -> list[tuple[str, str]]:
    rows = [("n", str(rep.n)), ("accuracy", _fmt(rep.accuracy)), ("oov_rate", _fmt(rep.oov_rate))]
    for lab in LABELS:
        s = rep.scores[lab]
        rows += [(f"{lab.name}.precision", _fmt(s.precision)), (f"{lab.name}.recall", _fmt(s.recall)),
                 (f"{lab.name}.f1", _fmt(s.f1))]
    for g in LABELS:
        for p in LABELS:
            rows.append((f"confusion.{g.name}.{p.name}", str(int(rep.confusion.counts[int(g), int(p)]))))
    return rows


def render_tsv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    return "\t".join(header) + "\n" + "".join("\t".join(map(str, r)) + "\n" for r in rows)


def render_table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()
             for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_report(rep: SystemReport) -> tuple[str, str]:
    """(TSV, human-readable) renderings of a system report."""
    tsv = render_tsv(("metric", "value"), report_rows(rep))
    header = ("label", "precision", "recall", "f1")
    rows = [(lab.name, _fmt(rep.scores[lab].precision), _fmt(rep.scores[lab].recall), _fmt(rep.scores[lab].f1))
            for lab in LABELS]
    text = (f"accuracy {_fmt(rep.accuracy)}  (n={rep.n}, oov rate {_fmt(rep.oov_rate)})\n\n"
            + render_table(header, rows) + "\n"
            + render_table(("gold \\ pred",) + tuple(l.name for l in LABELS),
                           [(g.name,) + tuple(int(rep.confusion.counts[int(g), int(p)]) for p in LABELS)
                            for g in LABELS]))
    return tsv, text


def render_curve(points: Sequence[CurvePoint]) -> str:
    return render_tsv(("parallel_sentences", "accuracy"), [(p.size, _fmt(p.accuracy)) for p in points])


def render_bleu(rep: BleuReport) -> tuple[str, str]:
    rows = [("bleu", f"{rep.score:.4f}"), ("brevity_penalty", f"{rep.brevity_penalty:.6f}"),
            ("hyp_len", rep.hyp_len), ("ref_len", rep.ref_len)]
    rows += [(f"p{n + 1}", f"{p:.6f}") for n, p in enumerate(rep.precisions)]
    return render_tsv(("metric", "value"), rows), render_table(("metric", "value"), rows)
