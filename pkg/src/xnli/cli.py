"""Command-line front end: ``xnli <command> [flags]``.

Every command accepts ``--seed``, ``--config`` (flat ``key = value`` file
whose keys are the command's long flag names), ``--deterministic`` and
``--workers``. Flags given on the command line override the config file;
the seed falls back to ``XNLI_SEED`` and then to 0. The resolved settings are
printed to stderr in the config-file format, so a run can be replayed with
``--config``.

Exit codes: 0 success, 1 runtime error (one-line diagnostic on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .core import LABELS, ParallelCorpus
from .errors import XnliError
from .evaluation import bleu, evaluate_system, learning_curve, render_bleu, render_curve, render_report
from .ingest import (
    TokenizerConfig,
    read_dictionary,
    read_embeddings,
    read_lines,
    read_parallel,
    read_snli,
    write_embeddings,
    write_lines,
)
from .nli import TrainConfig, label_of, predict_examples, read_model, train_nli, write_model
from .numkit import derive_seed, make_rng
from .xembed import (
    METHODS,
    BicvmConfig,
    InvertConfig,
    SgnsConfig,
    build_inverted_index,
    embed_invert,
    embed_map,
    merge_corpus,
    train_bicvm,
    train_sgns,
    write_merged,
)

log = logging.getLogger("xnli")

# flags that are plumbing, not settings, and never appear in a config file
_NOT_CONFIG = {"help", "config", "command", "func"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parser

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run")
    g.add_argument("--seed", type=int, default=None, help="global seed (fallback: $XNLI_SEED, then 0)")
    g.add_argument("--config", default=None, help="flat 'key = value' settings file; flags override it")
    g.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                   help="single-threaded, bit-reproducible training")
    g.add_argument("--workers", type=int, default=1, help="SGNS worker threads (ignored when deterministic)")
    g.add_argument("--verbose", action="store_true", default=False, help="log progress to stderr")


def _sgns_flags(p):
    p.add_argument("--dim", type=int, default=300, help="embedding dimensionality (SVD rank for invert)")
    p.add_argument("--epochs", type=int, default=5, help="embedding training epochs")
    p.add_argument("--window", type=int, default=5, help="SGNS context window")
    p.add_argument("--negatives", type=int, default=5, help="SGNS negative samples per pair")
    p.add_argument("--sgns-lr", type=float, default=0.025, help="SGNS initial learning rate")
    p.add_argument("--min-count", type=int, default=1, help="SGNS minimum token count")
    p.add_argument("--weighting", choices=("binary", "count"), default="binary", help="invert index weighting")
    p.add_argument("--sigma-power", type=float, default=0.5, help="invert singular value power")
    p.add_argument("--margin", type=float, default=1.0, help="bicvm hinge margin")
    p.add_argument("--bicvm-lr", type=float, default=0.01, help="bicvm learning rate")
    p.add_argument("--l2", type=float, default=1e-4, help="bicvm l2 weight")


def _parallel_flags(p):
    p.add_argument("--src", default=None, help="source-side sentences, one per line")
    p.add_argument("--tgt", default=None, help="target-side sentences, line-aligned with --src")
    p.add_argument("--src-lang", default="eng", help="source language code")
    p.add_argument("--tgt-lang", default="fra", help="target language code")


def _nli_flags(p):
    p.add_argument("--nli-epochs", type=int, default=15, help="classifier training epochs")
    p.add_argument("--hidden", type=int, default=200, help="hidden width of F, G and H")
    p.add_argument("--batch-size", type=int, default=32, help="mini-batch size")
    p.add_argument("--dropout", type=float, default=0.2, help="dropout on feed-forward inputs")
    p.add_argument("--optimizer", choices=("adagrad", "sgd"), default="adagrad", help="optimizer")
    p.add_argument("--lr", type=float, default=0.05, help="classifier learning rate")
    p.add_argument("--limit", type=int, default=0, help="use only the first N training examples (0 = all)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="xnli", description="Cross-lingual NLI through shared embedding spaces.",
                                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("embed", help="build a shared bilingual embedding space", formatter_class=fmt)
    p.add_argument("--method", choices=METHODS, default=None, help="space construction method")
    _parallel_flags(p)
    p.add_argument("--dict", default=None, help="map: bilingual dictionary TSV (source word, target word)")
    p.add_argument("--src-embeddings", default=None, help="map: source monolingual vectors (else trained on --src)")
    p.add_argument("--tgt-embeddings", default=None, help="map: target monolingual vectors (else trained on --tgt)")
    p.add_argument("--headerless", action="store_true", default=False,
                   help="embedding files have no 'V d' header line")
    p.add_argument("--write-merged", default=None, help="random/ratio: also write the merged corpus here")
    p.add_argument("--out", default=None, help="output embedding file")
    _sgns_flags(p)
    _common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train-nli", help="train the NLI classifier", formatter_class=fmt)
    p.add_argument("--train", default=None, help="training set (SNLI-style TSV)")
    p.add_argument("--embeddings", default=None, help="embedding file")
    p.add_argument("--headerless", action="store_true", default=False,
                   help="embedding file has no 'V d' header line")
    p.add_argument("--lang", default=None, help="language prefix for token lookup (none: raw tokens)")
    p.add_argument("--train-embeddings", action="store_true", default=False, help="fine-tune the embeddings")
    p.add_argument("--out-embeddings", default=None, help="write fine-tuned embeddings here")
    p.add_argument("--out", default=None, help="output model file")
    _nli_flags(p)
    _common(p)
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (("predict", cmd_predict, "label an NLI test file"),
                                 ("evaluate", cmd_evaluate, "score a model on a labelled test file")):
        p = sub.add_parser(name, help=helptext, formatter_class=fmt)
        p.add_argument("--model", default=None, help="model file from train-nli")
        p.add_argument("--embeddings", default=None, help="embedding file")
        p.add_argument("--headerless", action="store_true", default=False,
                       help="embedding file has no 'V d' header line")
        p.add_argument("--test", default=None, help="test set (SNLI-style TSV)")
        p.add_argument("--lang", default=None, help="language prefix for token lookup (none: raw tokens)")
        p.add_argument("--out", default=None, help="output TSV (default: stdout)")
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("learning-curve", help="accuracy against parallel corpus size", formatter_class=fmt)
    p.add_argument("--method", choices=[m for m in METHODS if m != "map"], default="random",
                   help="space construction method")
    _parallel_flags(p)
    p.add_argument("--train", default=None, help="source-language NLI training set")
    p.add_argument("--test", default=None, help="target-language NLI test set")
    p.add_argument("--sizes", default=None, help="comma-separated ascending corpus sizes")
    p.add_argument("--out", default=None, help="output TSV (default: stdout)")
    _sgns_flags(p)
    _nli_flags(p)
    _common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("bleu", help="corpus BLEU of tokenized hypotheses against references", formatter_class=fmt)
    p.add_argument("--hyp", default=None, help="hypotheses, one sentence per line")
    p.add_argument("--ref", default=None, help="references, line-aligned with --hyp")
    p.add_argument("--max-n", type=int, default=4, help="highest n-gram order")
    p.add_argument("--out", default=None, help="output TSV (default: stdout)")
    _common(p)
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("tokenize", help="tokenize a text file line by line", formatter_class=fmt)
    p.add_argument("--input", default=None, help="input text file")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=True, help="lowercase tokens")
    p.add_argument("--split-punctuation", action=argparse.BooleanOptionalAction, default=True,
                   help="split off punctuation runs")
    _common(p)
    p.set_defaults(func=cmd_tokenize)
    return parser


# ---------------------------------------------------------------------------
# config

def _truthy(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment line; keys use flag spelling with '-' or '_'."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def apply_config(sub: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest not in _NOT_CONFIG}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0 or isinstance(action, argparse.BooleanOptionalAction):
            defaults[key] = _truthy(text)
        elif text.lower() in ("", "none"):
            defaults[key] = None
        else:
            try:
                value = action.type(text) if action.type else text
            except ValueError as e:
                raise UsageError(f"config key {key!r}: {e}") from None
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
            defaults[key] = value
    sub.set_defaults(**defaults)


def render_config(args) -> str:
    keys = sorted(k for k in vars(args) if k not in _NOT_CONFIG)
    return "".join(f"{k} = {getattr(args, k)}\n" for k in keys)


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) in (None, "")]
    if missing:
        raise UsageError(f"{args.command}: missing required {', '.join(missing)}")


# ---------------------------------------------------------------------------
# helpers

def _sgns_cfg(args, seed) -> SgnsConfig:
    return SgnsConfig(dim=args.dim, window=args.window, negatives=args.negatives, epochs=args.epochs,
                      lr=args.sgns_lr, min_count=args.min_count, seed=seed,
                      workers=1 if args.deterministic else args.workers)


def _embed_parallel(args, parallel: ParallelCorpus, merged_out=None):
    seed = args.seed
    if args.method in ("random", "ratio"):
        rng = make_rng(derive_seed(seed, "merge-random")) if args.method == "random" else None
        sents = merge_corpus(parallel, args.method, rng)
        if merged_out:
            write_merged(sents, merged_out)
        return train_sgns(sents, _sgns_cfg(args, derive_seed(seed, "sgns")))
    if args.method == "invert":
        cfg = InvertConfig(k=args.dim, weighting=args.weighting, sigma_power=args.sigma_power,
                           seed=derive_seed(seed, "invert"))
        return embed_invert(build_inverted_index(parallel, cfg.weighting), cfg)
    if args.method == "bicvm":
        cfg = BicvmConfig(dim=args.dim, margin=args.margin, epochs=args.epochs, lr=args.bicvm_lr, l2=args.l2,
                          seed=derive_seed(seed, "bicvm"))
        return train_bicvm(parallel, cfg)
    raise UsageError(f"method {args.method!r} does not build from a parallel corpus")


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(epochs=args.nli_epochs, batch_size=args.batch_size, hidden=args.hidden,
                       dropout=args.dropout, optimizer=args.optimizer, lr=args.lr,
                       seed=derive_seed(args.seed, "nli"),
                       freeze_embeddings=not getattr(args, "train_embeddings", False))


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands

def cmd_embed(args):
    _need(args, "method", "out")
    if args.method == "map":
        _need(args, "dict")
        if args.src_embeddings:
            src_space = read_embeddings(args.src_embeddings, args.headerless)
        else:
            _need(args, "src")
            src_space = train_sgns(read_lines(args.src), _sgns_cfg(args, derive_seed(args.seed, "sgns-src")))
        if args.tgt_embeddings:
            tgt_space = read_embeddings(args.tgt_embeddings, args.headerless)
        else:
            _need(args, "tgt")
            tgt_space = train_sgns(read_lines(args.tgt), _sgns_cfg(args, derive_seed(args.seed, "sgns-tgt")))
        space, fit = embed_map(src_space, tgt_space, read_dictionary(args.dict), args.src_lang, args.tgt_lang)
        log.info("map fitted on %d dictionary pairs%s", fit.pairs_used, " (ridge fallback)" if fit.ridge else "")
    else:
        _need(args, "src", "tgt")
        parallel = read_parallel(args.src, args.tgt, args.src_lang, args.tgt_lang)
        if parallel.dropped:
            log.warning("dropped %d pairs with an empty side", parallel.dropped)
        space = _embed_parallel(args, parallel, args.write_merged)
    write_embeddings(space, args.out)
    log.info("wrote %d vectors of dim %d to %s", len(space), space.dim, args.out)


def cmd_train(args):
    _need(args, "train", "embeddings", "out")
    data = read_snli(args.train)
    if args.limit:
        data = data[: args.limit]
    space = read_embeddings(args.embeddings, args.headerless)
    res = train_nli(data, space, _train_cfg(args), args.lang)
    write_model(res.model, args.out)
    if args.out_embeddings:
        write_embeddings(res.embeddings, args.out_embeddings)
    if res.history:
        log.info("final training loss %.6f", res.history[-1])


def _load_for_test(args):
    _need(args, "model", "embeddings", "test")
    return read_model(args.model), read_embeddings(args.embeddings, args.headerless), read_snli(args.test)


def cmd_predict(args):
    model, space, test = _load_for_test(args)
    probs = predict_examples(model, space, test, args.lang)
    rows = ["index\tpredicted\t" + "\t".join(f"p_{l.name}" for l in LABELS) + "\n"]
    for i, p in enumerate(probs):
        rows.append(f"{i}\t{label_of(p).render()}\t" + "\t".join(f"{x:.6f}" for x in p) + "\n")
    _emit("".join(rows), args.out)


def cmd_evaluate(args):
    model, space, test = _load_for_test(args)
    tsv, text = render_report(evaluate_system(model, space, test, args.lang))
    if args.out:
        Path(args.out).write_text(tsv, encoding="utf-8")
    sys.stdout.write(text)


def cmd_curve(args):
    _need(args, "src", "tgt", "train", "test", "sizes")
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be a comma list of integers, got {args.sizes!r}") from None
    parallel = read_parallel(args.src, args.tgt, args.src_lang, args.tgt_lang)
    train = read_snli(args.train)
    if args.limit:
        train = train[: args.limit]
    test = read_snli(args.test)
    tcfg = _train_cfg(args)
    points = learning_curve(parallel, sizes, lambda sub: _embed_parallel(args, sub),
                            lambda space: train_nli(train, space, tcfg, args.src_lang).model,
                            test, args.tgt_lang)
    _emit(render_curve(points), args.out)


def cmd_bleu(args):
    _need(args, "hyp", "ref")
    tsv, text = render_bleu(bleu(read_lines(args.hyp), read_lines(args.ref), args.max_n))
    if args.out:
        Path(args.out).write_text(tsv, encoding="utf-8")
    sys.stdout.write(text)


def cmd_tokenize(args):
    _need(args, "input")
    cfg = TokenizerConfig(lowercase=args.lowercase, split_punctuation=args.split_punctuation)
    sents = read_lines(args.input, cfg)
    if args.out:
        write_lines(sents, args.out)
    else:
        sys.stdout.write("".join(" ".join(s) + "\n" for s in sents))


# ---------------------------------------------------------------------------
# entry point

def _resolve(parser, argv):
    # first pass only to find the command and --config
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        if args.config:
            apply_config(sub, read_config(args.config))
            args = parser.parse_args(argv)
    except UsageError as e:
        sub.error(str(e))
    except OSError as e:
        sub.error(f"cannot read config: {e}")
    if args.seed is None:
        env = os.environ.get("XNLI_SEED")
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            sub.error(f"XNLI_SEED must be an integer, got {env!r}")
    return args, sub


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, sub = _resolve(parser, argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    sys.stderr.write(f"# xnli {args.command}\n" + render_config(args))
    start = time.perf_counter()
    try:
        args.func(args)
    except UsageError as e:
        sub.print_usage(sys.stderr)
        sys.stderr.write(f"xnli {args.command}: error: {e}\n")
        return 2
    except (XnliError, OSError, ValueError) as e:
        sys.stderr.write(f"xnli {args.command}: error: {_one_line(e)}\n")
        return 1
    log.info("done in %.1fs", time.perf_counter() - start)
    return 0


def _one_line(e: Exception) -> str:
    if isinstance(e, OSError) and e.filename is not None:
        msg = f"{e.strerror or e}: {e.filename}"
    else:
        msg = str(e)
    return " ".join(msg.split())


if __name__ == "__main__":
    sys.exit(main())
