"""Shared multilingual embedding spaces."""

from __future__ import annotations

from ..core import ParallelCorpus
from ..numkit import derive_seed, make_rng
from .bicvm import BicvmConfig, BicvmModel, fit_bicvm, hinge_grad, hinge_loss, init_bicvm, train_bicvm
from .invert import InvertConfig, InvertedIndex, build_inverted_index, embed_invert
from .mapping import (
    MapFit,
    apply_map,
    embed_map,
    fit_translation_matrix,
    nearest_neighbors,
    precision_at_1,
)
from .merge import merge_corpus, merge_random, merge_ratio, write_merged
from .sgns import SgnsConfig, SgnsModel, fit_sgns, sgns_pair_grad, sgns_pair_loss, train_sgns

METHODS = ("map", "random", "ratio", "invert", "bicvm")


def embed_random(parallel: ParallelCorpus, cfg: SgnsConfig = SgnsConfig(), rng=None):
    """SGNS over shuffled merged pairs. The shuffle stream defaults to one derived from ``cfg.seed``."""
    if rng is None:
        rng = make_rng(derive_seed(cfg.seed, "merge-random"))
    return train_sgns(merge_corpus(parallel, "random", rng), cfg)


def embed_ratio(parallel: ParallelCorpus, cfg: SgnsConfig = SgnsConfig()):
    return train_sgns(merge_corpus(parallel, "ratio"), cfg)


__all__ = [
    "METHODS", "BicvmConfig", "BicvmModel", "InvertConfig", "InvertedIndex", "MapFit", "SgnsConfig",
    "SgnsModel", "apply_map", "build_inverted_index", "embed_invert", "embed_map", "embed_random",
    "embed_ratio", "fit_bicvm", "fit_sgns", "fit_translation_matrix", "hinge_grad", "hinge_loss",
    "init_bicvm", "merge_corpus", "merge_random", "merge_ratio", "nearest_neighbors", "precision_at_1",
    "sgns_pair_grad", "sgns_pair_loss", "train_bicvm", "train_sgns", "write_merged",
]
