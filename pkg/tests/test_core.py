import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from vmfmix.core import Corpus, Document, ModelParams, SufficientStats, VariationalState, accumulate_stats


def _naive_stats(docs, pi, K):
    n_ik = np.zeros((len(docs), K))
    r = np.zeros((K, docs[0].shape[1]))
    row = 0
    for i, X in enumerate(docs):
        for x in X:
            for k in range(K):
                n_ik[i, k] += pi[row, k]
                r[k] += pi[row, k] * x
            row += 1
    return n_ik, r


class TestCorpus:
    def test_normalizes_and_counts(self):
        c = Corpus.from_arrays([[[3.0, 4.0], [1.0, 0.0]], [[0.0, 2.0]]])
        assert c.num_normalized == 2
        assert np.allclose(np.linalg.norm(c.X, axis=1), 1.0, atol=1e-12)
        assert np.allclose(c.docs[0].vectors[0], [0.6, 0.8])
        assert c.offsets.tolist() == [0, 2, 3]
        assert c.doc_index.tolist() == [0, 0, 1]

    def test_rejects_zero_vector(self):
        with pytest.raises(ValueError, match="zero"):
            Corpus.from_arrays([[[0.0, 0.0, 0.0]]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Corpus([])
        with pytest.raises(ValueError):
            Corpus([Document("a", np.zeros((0, 3)))])

    def test_rejects_mixed_dimension(self):
        with pytest.raises(ValueError):
            Corpus.from_arrays([[[1.0, 0.0]], [[1.0, 0.0, 0.0]]])

    def test_rejects_one_dimensional_embeddings(self):
        with pytest.raises(ValueError):
            Corpus.from_arrays([[[1.0]]])

    def test_x_is_read_only(self):
        c = Corpus.from_arrays([[[1.0, 0.0]]])
        with pytest.raises(ValueError):
            c.X[0, 0] = 2.0


class TestModelParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ModelParams(0.0, [[1.0, 0.0]], [1.0])
        with pytest.raises(ValueError):
            ModelParams(1.0, [[1.0, 1.0]], [1.0])
        with pytest.raises(ValueError):
            ModelParams(1.0, [[1.0, 0.0]], [-1.0])
        with pytest.raises(ValueError):
            ModelParams(1.0, [[1.0, 0.0]], [2e5])

    def test_concatenate(self):
        a = ModelParams(1.0, [[1.0, 0.0]], [2.0])
        b = ModelParams(1.0, [[0.0, 1.0], [-1.0, 0.0]], [3.0, 4.0])
        c = ModelParams.concatenate([a, b])
        assert c.K == 3 and c.kappa.tolist() == [2.0, 3.0, 4.0]
        with pytest.raises(ValueError):
            ModelParams.concatenate([a, ModelParams(1.0, [[1.0, 0.0, 0.0]], [1.0])])
        with pytest.raises(ValueError):
            ModelParams.concatenate([a, ModelParams(2.0, [[1.0, 0.0]], [1.0])])


class TestAccumulate:
    def test_single_token(self):
        c = Corpus.from_arrays([[[1.0, 0.0, 0.0]]])
        s = accumulate_stats(c, VariationalState(np.array([[1.0, 0.0]]), np.array([[2.0, 1.0]])))
        assert s.n_ik.tolist() == [[1.0, 0.0]]
        assert s.n_k.tolist() == [1.0, 0.0]
        assert s.r_k.tolist() == [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]

    def test_two_orthogonal_tokens(self):
        c = Corpus.from_arrays([[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
        s = accumulate_stats(c, VariationalState(np.array([[1.0, 0.0], [1.0, 0.0]]), np.ones((1, 2))))
        assert s.r_k[0].tolist() == [1.0, 1.0, 0.0]
        assert np.linalg.norm(s.r_k[0]) == pytest.approx(math.sqrt(2))
        assert s.rbar[0] == pytest.approx(math.sqrt(2) / 2)
        assert s.rbar[1] == 0.0

    def test_uniform_responsibilities(self, rng):
        K = 4
        c = Corpus.from_arrays([rng.standard_normal((n, 5)) for n in (3, 7, 2)])
        s = accumulate_stats(c, VariationalState(np.full((12, K), 1 / K), np.ones((3, K))))
        assert np.allclose(s.n_k, 12 / K)

    def test_shape_mismatch(self):
        c = Corpus.from_arrays([[[1.0, 0.0]]])
        with pytest.raises(ValueError):
            accumulate_stats(c, VariationalState(np.ones((2, 1)), np.ones((1, 1))))
        with pytest.raises(ValueError):
            accumulate_stats(c, VariationalState(np.ones((1, 1)), np.ones((2, 1))))

    @settings(max_examples=60, deadline=None)
    @given(
        lengths=st.lists(st.integers(1, 6), min_size=1, max_size=5),
        K=st.integers(1, 4),
        D=st.integers(2, 5),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_matches_naive_loop(self, lengths, K, D, seed):
        rng = np.random.default_rng(seed)
        docs = [rng.standard_normal((n, D)) for n in lengths]
        c = Corpus.from_arrays(docs)
        logits = rng.standard_normal((c.num_tokens, K)) * 3
        pi = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        state = VariationalState(pi, rng.uniform(0.1, 5, (len(lengths), K)))
        for det in (True, False):
            s = accumulate_stats(c, state, deterministic=det)
            n_ik, r = _naive_stats([d.vectors for d in c.docs], pi, K)
            assert np.allclose(s.n_ik, n_ik, atol=1e-12)
            assert np.allclose(s.n_k, s.n_ik.sum(axis=0), atol=1e-8)
            assert s.n_k.sum() == pytest.approx(c.num_tokens, abs=1e-6)
            assert np.allclose(s.r_k, r, atol=1e-12)
            assert np.all(np.linalg.norm(s.r_k, axis=1) <= s.n_k + 1e-8)

    def test_state_check(self):
        c = Corpus.from_arrays([[[1.0, 0.0], [0.0, 1.0]]])
        VariationalState(np.array([[0.5, 0.5], [1.0, 0.0]]), np.ones((1, 2))).check(c)
        with pytest.raises(ValueError):
            VariationalState(np.array([[0.5, 0.6], [1.0, 0.0]]), np.ones((1, 2))).check(c)
        with pytest.raises(ValueError):
            VariationalState(np.array([[0.5, 0.5], [1.0, 0.0]]), np.zeros((1, 2))).check(c)
