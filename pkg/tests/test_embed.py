from __future__ import annotations

import gzip
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import FIXTURES, make_comment
from parley.embed import (
    DocVectorStore,
    EmbeddingTable,
    PoolingOptions,
    Precomputed,
    StaticPooling,
    cosine,
    default_stopwords,
    load_doc_vectors,
    load_table,
    neighbors,
    pool_text,
    write_doc_vectors,
    write_table,
)
from parley.errors import DimensionMismatch, MissingVector, ParseError, UnknownTerm, ZeroVector

vectors = arrays(np.float64, 5, elements=st.floats(-100, 100, allow_nan=False)).filter(lambda v: np.any(v != 0))
NO_STOP = PoolingOptions(remove_stopwords=False)


def test_stopword_list():
    words = default_stopwords()
    assert len(words) == 179
    assert {"the", "and", "wouldn't", "ourselves"} <= words


class TestLoad:
    def test_toy(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("a 1 0\nb 0 1\nc 1 1\n", encoding="utf-8")
        t = load_table(p)
        assert (t.size, t.dimension) == (3, 2)
        assert np.array_equal(t["c"], [1.0, 1.0])

    def test_dimension_mismatch(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("a " + " ".join(["0.1"] * 300) + "\nb " + " ".join(["0.1"] * 301) + "\n", encoding="utf-8")
        with pytest.raises(DimensionMismatch) as err:
            load_table(p)
        assert (err.value.line_no, err.value.expected, err.value.got) == (2, 300, 301)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("a 1 x\n", encoding="utf-8")
        with pytest.raises(ParseError):
            load_table(p)

    def test_word2vec_header_and_gzip(self, tmp_path):
        p = tmp_path / "t.txt.gz"
        with gzip.open(p, "wt", encoding="utf-8") as fh:
            fh.write("2 3\nx 1 2 3\ny 4 5 6\n")
        t = load_table(p)
        assert t.terms == ("x", "y")

    def test_real_fixture(self):
        t = load_table(FIXTURES / "w2v_news_1000.txt.gz")
        assert (t.size, t.dimension) == (1000, 300)

    def test_glove_sample(self):
        t = load_table(FIXTURES / "glove_6b_50d_sample.txt")
        assert t.dimension == 50 and t.size > 50

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        t = EmbeddingTable(["a", "b", "c"], rng.normal(size=(3, 4)))
        back = load_table(write_table(t, tmp_path / "t.txt"))
        assert back.terms == t.terms
        assert np.array_equal(back.vectors, t.vectors)

    def test_unknown_term(self, toy):
        with pytest.raises(UnknownTerm):
            toy["zzz"]


class TestCosine:
    def test_examples(self):
        assert cosine([1, 2, 3], [1, 2, 3]) == 1.0
        assert cosine([1, 0], [0, 1]) == 0.0
        assert abs(cosine([1, 0], [1, 1]) - 1 / math.sqrt(2)) <= 1e-8

    def test_zero(self):
        with pytest.raises(ZeroVector):
            cosine([0, 0], [1, 0])

    @settings(max_examples=200)
    @given(vectors, vectors, st.floats(1e-3, 1e3))
    def test_properties(self, u, v, a):
        c = cosine(u, v)
        assert abs(c) <= 1 + 1e-12
        assert c == cosine(v, u)
        assert abs(cosine(a * u, v) - c) <= 1e-12


class TestNeighbors:
    def test_toy(self, toy):
        got = neighbors(toy, "king", 0.4, 0.6, 1000)
        assert [t for t, _ in got] == ["queen"]
        assert got[0][1] == pytest.approx(0.9 / math.sqrt(0.82), abs=1e-12)

    def test_cap_zero_raises_threshold(self, toy):
        assert neighbors(toy, "king", 0.4, 0.999, 0) == []

    def test_unknown(self, toy):
        with pytest.raises(UnknownTerm):
            neighbors(toy, "zzz")

    def test_tie_break(self):
        t = EmbeddingTable(["q", "b", "a", "c"], [[1.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        assert [x for x, _ in neighbors(t, "q")] == ["a", "b"]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 1000), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, seed, factor):
        rng = np.random.default_rng(seed)
        t = EmbeddingTable([f"w{i}" for i in range(30)], rng.normal(size=(30, 4)))
        a = neighbors(t, "w0", 0.4, 0.6, 5)
        b = neighbors(t.scaled(factor), "w0", 0.4, 0.6, 5)
        assert [x for x, _ in a] == [x for x, _ in b]
        assert np.allclose([s for _, s in a], [s for _, s in b], atol=1e-12)


class TestPooling:
    def test_examples(self, toy):
        assert np.array_equal(pool_text(toy, ["king", "king"], NO_STOP), toy["king"])
        assert np.array_equal(pool_text(toy, ["king", "car"], NO_STOP), [0.5, 0.5])
        assert pool_text(toy, ["zzz", "yyy"], NO_STOP) is None

    def test_stopwords_removed(self):
        t = EmbeddingTable(["the", "king"], [[0.0, 5.0], [1.0, 0.0]])
        assert np.array_equal(pool_text(t, ["the", "king"]), [1.0, 0.0])
        assert pool_text(t, ["the"]) is None

    @settings(max_examples=100)
    @given(st.lists(st.sampled_from(["king", "queen", "car", "zzz"]), min_size=1, max_size=10),
           st.lists(st.sampled_from(["king", "queen", "car", "zzz"]), min_size=1, max_size=10))
    def test_concatenation_is_weighted_mean(self, a, b):
        toy = EmbeddingTable(["king", "queen", "car"], [[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
        pa, pb, pab = (pool_text(toy, x, NO_STOP) for x in (a, b, a + b))
        na = sum(t != "zzz" for t in a)
        nb = sum(t != "zzz" for t in b)
        if na + nb == 0:
            assert pab is None
            return
        parts = [(n, p) for n, p in ((na, pa), (nb, pb)) if n]
        expected = sum(n * p for n, p in parts) / (na + nb)
        assert np.max(np.abs(pab - expected)) <= 1e-12

    def test_static_backend(self, toy):
        comments = [make_comment(0, "king king"), make_comment(1, "car")]
        vec, n = StaticPooling(toy, NO_STOP).pool(comments)
        assert n == 3
        assert np.allclose(vec, [2 / 3, 1 / 3])


class TestDocVectors:
    def test_load(self, tmp_path):
        p = tmp_path / "v.csv"
        p.write_text("id,v1,v2,v3,v4\n0,1,2,3,4\n1,0,0,0,1\n", encoding="utf-8")
        store = load_doc_vectors(p)
        assert store.size == 2 and store.dimension == 4

    def test_ragged(self, tmp_path):
        p = tmp_path / "v.csv"
        p.write_text("id,v1,v2\n0,1,2\n1,1\n", encoding="utf-8")
        with pytest.raises(DimensionMismatch):
            load_doc_vectors(p)

    def test_missing_vector(self):
        store = DocVectorStore(2, {0: np.array([1.0, 0.0])})
        with pytest.raises(MissingVector) as err:
            store.validate([make_comment(0, "a b"), make_comment(5, "c d")])
        assert err.value.comment_id == 5

    def test_precomputed_weighting(self, tmp_path):
        store = DocVectorStore(2, {0: np.array([1.0, 0.0]), 1: np.array([0.0, 1.0])})
        back = load_doc_vectors(write_doc_vectors(store, tmp_path / "v.csv"))
        assert np.array_equal(back[1], store[1])
        vec, n = Precomputed(back).pool([make_comment(0, "aa bb cc"), make_comment(1, "dd")])
        assert n == 4
        assert np.allclose(vec, [0.75, 0.25])
