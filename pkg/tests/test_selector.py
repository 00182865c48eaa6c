import numpy as np
import pytest

from clide.embedding_store import EmbeddingMatrix, EmbeddingVector
from clide.errors import DegenerateInputError, ValidationError
from clide.selector import cosine_similarity, top_k


def _vec(*values):
    return EmbeddingVector(np.array(values, dtype=np.float64))


class TestCosineSimilarity:
    def test_orthogonal(self):
        assert cosine_similarity(_vec(1, 0), _vec(0, 1)) == 0.0

    def test_scale_invariance(self):
        assert cosine_similarity(_vec(1, 0), _vec(2, 0)) == 1.0

    def test_45_degrees(self):
        assert cosine_similarity(_vec(1, 1), _vec(1, 0)) == pytest.approx(0.7071068, abs=1e-7)

    def test_clamped_to_unit_interval(self):
        assert cosine_similarity(_vec(1e-8, 1e8), _vec(1e-8, 1e8)) <= 1.0

    def test_zero_norm_rejected(self):
        with pytest.raises(DegenerateInputError):
            cosine_similarity(_vec(0, 0), _vec(1, 0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            cosine_similarity(_vec(1, 0), _vec(1, 0, 0))


def _brute_force_order(rep, query):
    sims = []
    for i in range(rep.n):
        sims.append(cosine_similarity(rep.row(i), query))
    return sorted(range(rep.n), key=lambda i: (-sims[i], i)), sims


class TestTopK:
    def test_hand_ordered(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]))
        ns = top_k(rep, _vec(1.0, 0.1), 2)
        assert ns.indices.tolist() == [0, 1]
        assert not ns.truncated

    def test_full_set_in_similarity_order(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]))
        ns = top_k(rep, _vec(1.0, 0.1), 3)
        assert ns.indices.tolist() == [0, 1, 2]
        assert (np.diff(ns.similarities) <= 0).all()

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        rep = EmbeddingMatrix(rng.standard_normal((200, 16)))
        query = EmbeddingVector(rng.standard_normal(16))
        ns = top_k(rep, query, 10)
        oracle_order, _ = _brute_force_order(rep, query)
        assert ns.indices.tolist() == oracle_order[:10]

    def test_oracle_on_many_random_instances(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            n = int(rng.integers(2, 40))
            d = int(rng.integers(2, 8))
            k = int(rng.integers(1, n + 1))
            rep = EmbeddingMatrix(rng.standard_normal((n, d)))
            query = EmbeddingVector(rng.standard_normal(d))
            ns = top_k(rep, query, k)
            oracle_order, _ = _brute_force_order(rep, query)
            assert ns.indices.tolist() == oracle_order[:k]

    def test_ties_break_to_lower_index(self):
        # rows 0 and 2 are identical, so they tie exactly
        rep = EmbeddingMatrix(np.array([[1.0, 1.0], [5.0, 0.0], [1.0, 1.0]]))
        ns = top_k(rep, _vec(1.0, 1.0), 2)
        assert ns.indices.tolist() == [0, 2]

    def test_truncation_when_k_exceeds_n(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
        ns = top_k(rep, _vec(1.0, 0.0), 5)
        assert ns.k_effective == 2
        assert ns.truncated

    def test_determinism(self):
        rng = np.random.default_rng(5)
        rep = EmbeddingMatrix(rng.standard_normal((50, 4)))
        query = EmbeddingVector(rng.standard_normal(4))
        a = top_k(rep, query, 7)
        b = top_k(rep, query, 7)
        assert a.indices.tolist() == b.indices.tolist()
        assert a.similarities.tobytes() == b.similarities.tobytes()

    def test_query_scale_invariance(self):
        rng = np.random.default_rng(6)
        rep = EmbeddingMatrix(rng.standard_normal((100, 8)))
        query = rng.standard_normal(8)
        base = top_k(rep, EmbeddingVector(query), 10).indices.tolist()
        # powers of two rescale exactly; a generic factor on generic data
        # must not reorder either
        for c in (0.25, 2.0, 1024.0, 3.7):
            scaled = top_k(rep, EmbeddingVector(query * c), 10).indices.tolist()
            assert scaled == base

    def test_zero_norm_row_reports_index(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(DegenerateInputError, match="row 1"):
            top_k(rep, _vec(1.0, 0.0), 2)

    def test_zero_norm_query(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0]]))
        with pytest.raises(DegenerateInputError, match="query"):
            top_k(rep, _vec(0.0, 0.0), 1)

    def test_invalid_k(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0]]))
        with pytest.raises(ValidationError):
            top_k(rep, _vec(1.0, 0.0), 0)

    def test_dimension_mismatch(self):
        rep = EmbeddingMatrix(np.array([[1.0, 0.0]]))
        with pytest.raises(ValidationError):
            top_k(rep, _vec(1.0, 0.0, 0.0), 1)
