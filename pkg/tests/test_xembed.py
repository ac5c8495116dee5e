import numpy as np
import pytest

from conftest import random_space
from xnli.core import Dictionary, EmbeddingSpace, LinearMap, ParallelCorpus, SentencePair, Vocabulary
from xnli.errors import (
    DegenerateVocabulary,
    DimMismatch,
    EmptyCorpus,
    EmptySide,
    LengthMismatch,
    NoUsablePairs,
    RankTooLarge,
)
from xnli.numkit import grad_check, make_rng
from xnli.synthetic import CipherConfig, CipherWorld
from xnli.xembed import (
    BicvmConfig,
    InvertConfig,
    SgnsConfig,
    apply_map,
    build_inverted_index,
    embed_invert,
    embed_map,
    embed_random,
    embed_ratio,
    fit_bicvm,
    fit_sgns,
    fit_translation_matrix,
    hinge_grad,
    hinge_loss,
    init_bicvm,
    merge_corpus,
    merge_random,
    merge_ratio,
    nearest_neighbors,
    precision_at_1,
    sgns_pair_grad,
    sgns_pair_loss,
    train_sgns,
    write_merged,
)
from xnli.xembed.sgns import corpus_loss, encode


def pair(src, tgt):
    return SentencePair(tuple(src), tuple(tgt), "eng", "fra")


def corpus(pairs):
    return ParallelCorpus(tuple(pair(s, t) for s, t in pairs), ("eng", "fra"))


def small_cipher(n=400, seed=0):
    world = CipherWorld(CipherConfig(n_words=60, n_topics=6, seed=seed))
    return world, world.parallel(n, seed=seed)


# --- translation matrix ---------------------------------------------------------

def test_identity_mapping(rng):
    space = random_space(rng, n=10, d=4)
    d = Dictionary(tuple((t, t) for t in space.vocab.tokens))
    fit = fit_translation_matrix(space, space, d)
    np.testing.assert_allclose(fit.map.matrix, np.eye(4), atol=1e-8)
    assert fit.pairs_used == 10 and not fit.ridge


def test_orthogonal_recovery(rng):
    src = random_space(rng, n=50, d=8, prefix="e")
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    tgt = EmbeddingSpace(Vocabulary([f"t{i}" for i in range(50)]), src.matrix @ Q)
    entries = [(f"e{i}", f"t{i}") for i in range(50)]
    fit = fit_translation_matrix(tgt, src, Dictionary(tuple(entries[:20])))
    np.testing.assert_allclose(fit.map.matrix, Q.T, atol=1e-8)
    mapped = apply_map(fit.map, tgt)
    # held-out: nearest source word of each mapped target word
    assert precision_at_1([(b, a) for a, b in entries[20:]], mapped, src) == 1.0


def test_ridge_fallback_when_underdetermined(rng):
    src = random_space(rng, n=5, d=300, prefix="e")
    tgt = random_space(rng, n=5, d=300, prefix="t")
    fit = fit_translation_matrix(tgt, src, Dictionary(tuple((f"e{i}", f"t{i}") for i in range(5))))
    assert fit.ridge and fit.pairs_used == 5
    assert np.all(np.isfinite(fit.map.matrix))


def test_no_usable_pairs(rng):
    s = random_space(rng)
    with pytest.raises(NoUsablePairs):
        fit_translation_matrix(s, s, Dictionary((("nope", "nada"),)))


def test_apply_map_properties(rng):
    space = random_space(rng, n=15, d=3)
    same = apply_map(LinearMap(np.eye(3), "a", "b"), space)
    assert np.array_equal(same.matrix, space.matrix) and same.vocab == space.vocab
    doubled = apply_map(LinearMap(2 * np.eye(3), "a", "b"), space)
    np.testing.assert_allclose(doubled.matrix, 2 * space.matrix)
    q = rng.standard_normal((4, 3))
    assert np.array_equal(nearest_neighbors(q, space, 5), nearest_neighbors(q, doubled, 5))
    with pytest.raises(DimMismatch):
        apply_map(LinearMap(np.eye(2), "a", "b"), space)


def test_embed_map_builds_prefixed_union(rng):
    src = random_space(rng, n=6, d=3, prefix="e")
    tgt = random_space(rng, n=4, d=3, prefix="t")
    space, fit = embed_map(src, tgt, Dictionary(tuple((f"e{i}", f"t{i}") for i in range(4))), "eng", "fra")
    assert len(space) == 10 and "eng:e5" in space and "fra:t0" in space
    assert fit.pairs_used == 4


# --- merging ------------------------------------------------------------------------

def test_merge_random_multiset_and_determinism():
    p = pair(["a", "b"], ["x"])
    out = merge_random(p, make_rng(3))
    assert sorted(out) == ["eng:a", "eng:b", "fra:x"]
    assert out == merge_random(p, make_rng(3))


def test_merge_random_is_uniform():
    p = pair(["a"], ["x"])
    rng = make_rng(99)
    hits = sum(merge_random(p, rng) == ["eng:a", "fra:x"] for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) <= 0.02


def test_merge_random_longer_permutations_uniform():
    # all 6 orders of a 3-token pair appear with frequency 1/6
    p = pair(["a", "b"], ["x"])
    rng = make_rng(5)
    counts = {}
    for _ in range(12_000):
        key = tuple(merge_random(p, rng))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    assert all(abs(c / 12_000 - 1 / 6) < 0.02 for c in counts.values())


@pytest.mark.parametrize("src,tgt,expected", [
    (["a", "b"], ["x"], ["eng:a", "fra:x", "eng:b"]),
    (["a"], ["x"], ["eng:a", "fra:x"]),
    (["a", "b"], ["x", "y"], ["eng:a", "fra:x", "eng:b", "fra:y"]),
])
def test_merge_ratio_examples(src, tgt, expected):
    assert merge_ratio(pair(src, tgt)) == expected


def test_merge_ratio_preserves_order(rng):
    for _ in range(50):
        m, n = rng.integers(1, 9, size=2)
        src = [f"s{i}" for i in range(m)]
        tgt = [f"t{i}" for i in range(n)]
        out = merge_ratio(pair(src, tgt))
        assert [t for t in out if t.startswith("eng:")] == [f"eng:{s}" for s in src]
        assert [t for t in out if t.startswith("fra:")] == [f"fra:{t}" for t in tgt]


def test_merge_empty_side():
    bad = SentencePair.__new__(SentencePair)
    object.__setattr__(bad, "src_tokens", ())
    object.__setattr__(bad, "tgt_tokens", ("x",))
    object.__setattr__(bad, "src_lang", "eng")
    object.__setattr__(bad, "tgt_lang", "fra")
    with pytest.raises(EmptySide):
        merge_ratio(bad)
    with pytest.raises(EmptySide):
        merge_random(bad, make_rng(0))


def test_write_merged(tmp_path):
    sents = merge_corpus(corpus([(["a", "b"], ["x"])]), "ratio")
    write_merged(sents, tmp_path / "m.txt")
    assert (tmp_path / "m.txt").read_text() == "eng:a fra:x eng:b\n"


# --- SGNS ---------------------------------------------------------------------------

def test_sgns_pair_gradient():
    rng = make_rng(17)
    for _ in range(5):
        v, u, un = rng.normal(0, 0.5, 6), rng.normal(0, 0.5, 6), rng.normal(0, 0.5, (3, 6))
        d_vc, d_uo, d_un = sgns_pair_grad(v, u, un)
        assert grad_check(lambda x: sgns_pair_loss(x, u, un), lambda x: sgns_pair_grad(x, u, un)[0], v) < 1e-3
        assert grad_check(lambda x: sgns_pair_loss(v, x, un), lambda x: sgns_pair_grad(v, x, un)[1], u) < 1e-3
        assert grad_check(lambda x: sgns_pair_loss(v, u, x), lambda x: sgns_pair_grad(v, u, x)[2], un) < 1e-3


def test_sgns_regression_two_word_corpus():
    space = train_sgns([["eng:a", "fra:x"]] * 1000, SgnsConfig(dim=10, window=1, seed=1))
    nn = nearest_neighbors(space.vector("eng:a")[None], space, 2)[0]
    assert space.vocab.token_of(nn[0]) == "eng:a"
    assert space.vocab.token_of(nn[1]) == "fra:x"
    assert np.all(np.isfinite(space.matrix))


def test_sgns_loss_decreases():
    _, par = small_cipher(300)
    sents = merge_corpus(par, "ratio")
    cfg = SgnsConfig(dim=16, epochs=3, seed=2)
    model = fit_sgns(sents, cfg)
    flat, offsets = encode(sents, model.vocab)
    from xnli.xembed.sgns import init_sgns
    before = corpus_loss(init_sgns(model.vocab, cfg), flat, offsets, cfg)
    after = corpus_loss(model, flat, offsets, cfg)
    assert after < before


def test_sgns_deterministic_and_seeded():
    sents = merge_corpus(small_cipher(100)[1], "ratio")
    a = train_sgns(sents, SgnsConfig(dim=8, epochs=1, seed=0))
    b = train_sgns(sents, SgnsConfig(dim=8, epochs=1, seed=0))
    c = train_sgns(sents, SgnsConfig(dim=8, epochs=1, seed=1))
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)


def test_sgns_errors():
    with pytest.raises(EmptyCorpus):
        train_sgns([])
    with pytest.raises(EmptyCorpus):
        train_sgns([[], []])
    with pytest.raises(DegenerateVocabulary):
        train_sgns([["a", "a"]], SgnsConfig(dim=4))
    with pytest.raises(EmptyCorpus):
        train_sgns([["a", "b"]], SgnsConfig(dim=4, min_count=5))
    with pytest.raises(ValueError):
        SgnsConfig(window=0)


def test_sgns_parallel_mode_runs():
    sents = merge_corpus(small_cipher(100)[1], "ratio")
    space = train_sgns(sents, SgnsConfig(dim=8, epochs=1, workers=2))
    assert np.all(np.isfinite(space.matrix))


def test_embed_random_and_ratio():
    one = corpus([(["a", "b"], ["x"])])
    space = embed_ratio(one, SgnsConfig(dim=4, epochs=1))
    assert sorted(space.vocab.tokens) == ["eng:a", "eng:b", "fra:x"]
    _, par = small_cipher(200)
    a = embed_random(par, SgnsConfig(dim=8, epochs=1, seed=0))
    b = embed_random(par, SgnsConfig(dim=8, epochs=1, seed=1))
    assert sorted(a.vocab.tokens) == sorted(b.vocab.tokens)
    assert not np.array_equal(a.matrix, b.matrix)


def test_embed_ratio_aligns_translations():
    world, par = small_cipher(2000)
    space = embed_ratio(par, SgnsConfig(dim=24, epochs=3, seed=0))

    def cos(u, v):
        return u @ v / np.linalg.norm(u) / np.linalg.norm(v)

    words = [w for w in world.src_words if f"eng:{w}" in space]
    aligned = [cos(space.vector(f"eng:{w}"), space.vector(f"fra:{world.cipher[w]}")) for w in words]
    shifted = [cos(space.vector(f"eng:{w}"), space.vector(f"fra:{world.cipher[v]}"))
               for w, v in zip(words, words[7:] + words[:7])]
    assert np.mean(aligned) > np.mean(shifted)


# --- INVERT ---------------------------------------------------------------------------

def test_inverted_index_definition():
    c = corpus([(["a", "b"], ["x"]), (["b", "b"], ["y"])])
    idx = build_inverted_index(c)
    M = idx.matrix.toarray()
    assert M[idx.vocab.index_of("eng:a")].tolist() == [1, 0]
    assert M[idx.vocab.index_of("eng:b")].tolist() == [1, 1]
    cnt = build_inverted_index(c, "count").matrix.toarray()
    assert cnt[idx.vocab.index_of("eng:b"), 1] == 2
    assert np.array_equal(M[idx.vocab.index_of("eng:a")], M[idx.vocab.index_of("fra:x")])


def test_inverted_index_multilingual():
    c1 = corpus([(["a"], ["x"]), (["b"], ["y"])])
    c2 = ParallelCorpus((SentencePair(("a",), ("p",), "eng", "deu"), SentencePair(("b",), ("q",), "eng", "deu")),
                        ("eng", "deu"))
    idx = build_inverted_index([c1, c2])
    assert sorted(idx.vocab.tokens) == ["deu:p", "deu:q", "eng:a", "eng:b", "fra:x", "fra:y"]
    with pytest.raises(LengthMismatch):
        build_inverted_index([c1, c1.head(1)])


def test_invert_identical_rows_identical_vectors():
    c = corpus([(["a", "b"], ["x"]), (["b"], ["y", "x"]), (["c"], ["z"])])
    space = embed_invert(build_inverted_index(c), InvertConfig(k=2))
    # eng:c and fra:z share the signature (0, 0, 1)
    assert np.array_equal(space.vector("eng:c"), space.vector("fra:z"))


def test_invert_one_word_per_side_p_at_1():
    rng = make_rng(4)
    n = 12
    pairs = []
    for i in range(n):
        for _ in range(int(rng.integers(1, 6))):
            pairs.append(([f"w{i}"], [f"c{i}"]))
    space = embed_invert(build_inverted_index(corpus(pairs)), InvertConfig(k=n))
    src = space.restrict("eng")
    tgt = space.restrict("fra")
    assert precision_at_1([(f"eng:w{i}", f"fra:c{i}") for i in range(n)], src, tgt) == 1.0


def test_invert_rank_too_large():
    c = corpus([(["a"], ["x"]), (["b"], ["y"])])
    with pytest.raises(RankTooLarge):
        embed_invert(build_inverted_index(c), InvertConfig(k=3))


# --- BICVM ---------------------------------------------------------------------------

def test_bicvm_zero_epochs_is_init():
    _, par = small_cipher(50)
    cfg = BicvmConfig(dim=8, epochs=0, seed=3)
    m = fit_bicvm(par, cfg)
    init = init_bicvm(par, cfg)
    assert np.array_equal(m.E_src, init.E_src) and np.array_equal(m.E_tgt, init.E_tgt)


def test_hinge_gradient():
    rng = make_rng(21)
    Es, Et = rng.normal(0, 0.3, (6, 4)), rng.normal(0, 0.3, (5, 4))
    a, b, bn = np.array([0, 2, 2]), np.array([1, 3]), np.array([0, 4])
    assert hinge_loss(Es, Et, a, b, bn, 5.0, 0.01) > 0.01  # active side of the hinge
    assert grad_check(lambda x: hinge_loss(x, Et, a, b, bn, 5.0, 0.01),
                      lambda x: hinge_grad(x, Et, a, b, bn, 5.0, 0.01)[0], Es) < 1e-3
    assert grad_check(lambda x: hinge_loss(Es, x, a, b, bn, 5.0, 0.01),
                      lambda x: hinge_grad(Es, x, a, b, bn, 5.0, 0.01)[1], Et) < 1e-3


def test_bicvm_aligned_closer_than_mismatched():
    _, par = small_cipher(500)
    m = fit_bicvm(par, BicvmConfig(dim=16, epochs=5, seed=0))
    space = m.space()
    src = [space.lookup(p.src_tokens, "eng").sum(0) for p in par.pairs]
    tgt = [space.lookup(p.tgt_tokens, "fra").sum(0) for p in par.pairs]
    perm = make_rng(0).permutation(len(par))
    aligned = np.mean([np.linalg.norm(s - t) for s, t in zip(src, tgt)])
    mismatched = np.mean([np.linalg.norm(src[i] - tgt[j]) for i, j in enumerate(perm) if i != j])
    assert aligned < mismatched
    assert m.loss_history[-1] < m.loss_history[0]


def test_bicvm_errors():
    with pytest.raises(EmptyCorpus):
        fit_bicvm(ParallelCorpus((), ("eng", "fra")))
    with pytest.raises(ValueError):
        BicvmConfig(margin=0)
