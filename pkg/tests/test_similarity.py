"""Cosine scores, score matrices, prompt sets."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairproxy.data import EmbeddingMatrix
from fairproxy.errors import ConfigError, DataError, DomainError, FormatError
from fairproxy.similarity import (
    PromptSet,
    ScoreMatrix,
    cosine_similarity,
    ensemble_scores,
    load_prompt_set,
    save_prompt_set,
    similarity_matrix,
)


class TestCosine:
    def test_parallel(self):
        assert cosine_similarity([1.0, 0.0], [2.0, 0.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 3.0]) == pytest.approx(0.0)

    def test_45_degrees(self):
        assert cosine_similarity([1.0, 1.0], [1.0, 0.0]) == pytest.approx(0.70710678, abs=1e-6)

    def test_zero_vector_rejected(self):
        with pytest.raises(DomainError, match="zero-norm"):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_dim_mismatch_rejected(self):
        with pytest.raises(DomainError):
            cosine_similarity([1.0], [1.0, 0.0])

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=6),
           st.floats(0.1, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, vec, scale):
        v = np.array(vec)
        if np.linalg.norm(v) < 1e-6:
            return
        w = np.ones_like(v)
        assert cosine_similarity(v, w) == pytest.approx(cosine_similarity(v * scale, w), abs=1e-9)

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_bounded(self, vec):
        v = np.array(vec)
        if np.linalg.norm(v) < 1e-6:
            return
        w = np.arange(1.0, len(v) + 1.0)
        assert -1.0 - 1e-12 <= cosine_similarity(v, w) <= 1.0 + 1e-12


def emb(values):
    return EmbeddingMatrix(np.asarray(values, dtype=np.float32))


class TestSimilarityMatrix:
    def test_identity_prompts_and_images(self):
        s = similarity_matrix(emb(np.eye(2)), emb(np.eye(2)))
        assert np.allclose(s.values, np.eye(2), atol=1e-6)

    def test_matches_pairwise_cosine(self):
        rng = np.random.default_rng(1)
        texts = emb(rng.standard_normal((3, 5)))
        images = emb(rng.standard_normal((7, 5)))
        s = similarity_matrix(texts, images)
        for i in range(3):
            for j in range(7):
                expect = cosine_similarity(texts.values[i], images.values[j])
                assert s.values[i, j] == pytest.approx(expect, abs=1e-6)

    def test_diagonal_shape(self):
        s = similarity_matrix(emb([[1.0, 1.0]]), emb(np.eye(2)))
        assert s.values.shape == (1, 2)
        assert np.allclose(s.values, [[0.7071, 0.7071]], atol=1e-4)

    def test_image_rescale_leaves_column_unchanged(self):
        rng = np.random.default_rng(2)
        texts = emb(rng.standard_normal((2, 4)))
        images = rng.standard_normal((5, 4)).astype(np.float32)
        s1 = similarity_matrix(texts, emb(images))
        images[3] *= 5.0
        s2 = similarity_matrix(texts, emb(images))
        assert np.allclose(s1.values[:, 3], s2.values[:, 3], atol=1e-6)

    def test_dim_mismatch(self):
        with pytest.raises(DomainError, match="dimension"):
            similarity_matrix(emb([[1.0, 0.0]]), emb([[1.0, 0.0, 0.0]]))

    def test_zero_norm_row_names_index(self):
        with pytest.raises(DomainError, match="row 1"):
            similarity_matrix(emb([[1.0, 0.0], [0.0, 0.0]]), emb([[1.0, 0.0]]))


class TestScoreMatrix:
    def test_rejects_out_of_range(self):
        with pytest.raises(DataError, match=r"\[-1, 1\]"):
            ScoreMatrix(np.array([[1.5]], dtype=np.float32))

    def test_accepts_tiny_overshoot(self):
        ScoreMatrix(np.array([[1.0000001]], dtype=np.float32))

    def test_rejects_nan(self):
        with pytest.raises(DataError):
            ScoreMatrix(np.array([[np.nan]], dtype=np.float32))

    def test_shape_properties(self):
        s = ScoreMatrix(np.zeros((3, 7), dtype=np.float32))
        assert (s.prompts, s.samples) == (3, 7)


class TestEnsemble:
    def test_single_row_identity(self):
        s = ScoreMatrix(np.array([[0.1, -0.2, 0.3]], dtype=np.float32))
        out = ensemble_scores(s)
        assert np.array_equal(out.values, s.values)

    def test_mean_of_rows(self):
        s = ScoreMatrix(np.array([[0.2, 0.4], [0.6, 0.0]], dtype=np.float32))
        out = ensemble_scores(s)
        assert out.values.shape == (1, 2)
        assert np.allclose(out.values, [[0.4, 0.2]], atol=1e-7)

    def test_row_permutation_invariant(self):
        rng = np.random.default_rng(3)
        values = (rng.random((4, 6)) * 2 - 1).astype(np.float32)
        a = ensemble_scores(ScoreMatrix(values))
        b = ensemble_scores(ScoreMatrix(values[::-1].copy()))
        assert np.array_equal(a.values, b.values)


class TestPromptSet:
    def test_render_uses_template(self):
        pset = PromptSet("gender", ("man", "woman"), template="A photo of a/an {}")
        assert pset.render() == ["A photo of a/an man", "A photo of a/an woman"]

    def test_attribute_classes_defaults_to_prompt_count(self):
        assert PromptSet("g", ("a", "b", "c")).n_attribute_classes == 3
        assert PromptSet("g", ("a", "b", "c"), attribute_classes=2).n_attribute_classes == 2

    def test_duplicate_prompts_rejected(self):
        with pytest.raises(ConfigError, match="distinct"):
            PromptSet("g", ("a", "a"))

    def test_template_needs_one_placeholder(self):
        with pytest.raises(ConfigError, match="placeholder"):
            PromptSet("g", ("a",), template="no slots")

    def test_json_round_trip(self, tmp_path):
        pset = PromptSet("age", ("young", "old"), template="a {} person", attribute_classes=2)
        path = tmp_path / "p.json"
        save_prompt_set(pset, path)
        back = load_prompt_set(path)
        assert back == pset

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text("{not json")
        with pytest.raises(FormatError, match="JSON"):
            load_prompt_set(path)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('{"attribute_name": "g"}')
        with pytest.raises(FormatError, match="prompts"):
            load_prompt_set(path)
