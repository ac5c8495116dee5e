import numpy as np
import pytest

from xnli.core import (
    LABELS,
    Dictionary,
    EmbeddingSpace,
    Label,
    LinearMap,
    NliExample,
    ParallelCorpus,
    SentencePair,
    Vocabulary,
    check_lang,
    concat_spaces,
    parse_label,
)
from xnli.errors import DuplicateToken, EmptySide, InvalidLanguage, InvalidToken, UnknownLabel, XnliError


def test_parse_label_examples():
    assert parse_label("entailment") is Label.entailment
    assert parse_label("CONTRADICTION") is Label.contradiction
    with pytest.raises(UnknownLabel):
        parse_label("-")


@pytest.mark.parametrize("label", LABELS)
def test_label_round_trip(label):
    assert parse_label(label.render()) is label


def test_label_order_is_fixed():
    assert [l.name for l in LABELS] == ["contradiction", "entailment", "neutral"]


@pytest.mark.parametrize("code", ["", "en g", "e:n", "ENG"])
def test_bad_language_tags(code):
    with pytest.raises(InvalidLanguage):
        check_lang(code)


def test_vocabulary_bijection():
    v = Vocabulary(["a", "b", "c"], [3, 1, 2])
    for i in range(len(v)):
        assert v.index_of(v.token_of(i)) == i
    assert v.count_of("a") == 3
    assert v.get("zzz") == -1


@pytest.mark.parametrize("tokens", [["a", "a"], ["a b"], [""]])
def test_vocabulary_rejects_bad_tokens(tokens):
    with pytest.raises((DuplicateToken, InvalidToken)):
        Vocabulary(tokens)


def test_vocabulary_from_sentences_min_count():
    v = Vocabulary.from_sentences([["a", "b", "a"], ["c", "a", "b"]], min_count=2)
    assert v.tokens == ["a", "b"]
    assert v.counts.tolist() == [3, 2]


def test_embedding_lookup_returns_exact_row():
    m = np.arange(6, dtype=float).reshape(3, 2)
    s = EmbeddingSpace(Vocabulary(["x", "y", "z"]), m)
    for tok in ["x", "y", "z"]:
        assert np.array_equal(s.vector(tok), m[s.vocab.index_of(tok)])
    out = s.lookup(["y", "nope"])
    assert np.array_equal(out, [[2, 3], [0, 0]])


def test_embedding_space_checks():
    with pytest.raises(XnliError):
        EmbeddingSpace(Vocabulary(["a"]), np.array([[np.nan]]))
    with pytest.raises(XnliError):
        EmbeddingSpace(Vocabulary(["a", "b"]), np.zeros((1, 2)))


def test_prefix_and_restrict():
    s = EmbeddingSpace.from_dict({"dog": [1, 0], "cat": [0, 1]})
    t = EmbeddingSpace.from_dict({"chien": [1, 1]})
    u = concat_spaces([s.with_prefix("eng"), t.with_prefix("fra")])
    assert u.vocab.tokens == ["eng:dog", "eng:cat", "fra:chien"]
    assert u.languages() == ["eng", "fra"]
    assert u.restrict("fra").vocab.tokens == ["fra:chien"]
    assert np.array_equal(u.lookup(["chien"], "fra"), [[1, 1]])


def test_examples_and_pairs_reject_empty():
    with pytest.raises(XnliError):
        NliExample((), ("a",), Label.neutral)
    with pytest.raises(EmptySide):
        SentencePair(("a",), (), "eng", "fra")


def test_corpus_language_tags_must_match():
    p = SentencePair(("a",), ("b",), "eng", "spa")
    with pytest.raises(InvalidLanguage):
        ParallelCorpus((p,), ("eng", "fra"))


def test_dictionary_dedup_keeps_first_order():
    d = Dictionary.dedup([("dog", "chien"), ("cat", "chat"), ("dog", "chien")])
    assert d.entries == (("dog", "chien"), ("cat", "chat"))
    with pytest.raises(DuplicateToken):
        Dictionary((("a", "b"), ("a", "b")))


def test_linear_map_is_read_only():
    m = LinearMap(np.eye(2), "fra", "eng")
    with pytest.raises(ValueError):
        m.matrix[0, 0] = 3.0
