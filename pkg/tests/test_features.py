"""Consistency scoring against brute-force oracles and pinned arithmetic."""

from __future__ import annotations

import math

import numpy as np
import pytest

from thoughtbeam.core import FeatureVector, Thought, extend_state, make_root_state
from thoughtbeam.features import (
    ancestor_embeddings,
    assemble_features,
    candidate_features,
    consistency_score,
    cosine_similarity,
)

from conftest import make_problem, random_unit, unit_vector


def slow_cosine(a, b) -> float:
    """Independent reference: pure-Python dot product and norms."""
    dot = math.fsum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(math.fsum(float(x) ** 2 for x in a))
    nb = math.sqrt(math.fsum(float(y) ** 2 for y in b))
    return dot / (na * nb)


class TestCosine:
    def test_identical_directions(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_forty_five_degrees(self):
        got = cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert got == pytest.approx(0.7071067811865475, abs=1e-15)

    def test_antipodal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == -1.0

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            dim = int(rng.integers(2, 24))
            a = rng.standard_normal(dim) * float(rng.uniform(0.1, 50))
            b = rng.standard_normal(dim) * float(rng.uniform(0.1, 50))
            expected = slow_cosine(a, b)
            assert cosine_similarity(a, b) == pytest.approx(expected, abs=1e-12)

    def test_scale_invariance_and_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            a = rng.standard_normal(6)
            b = rng.standard_normal(6)
            lam = float(rng.uniform(0.01, 100.0))
            assert cosine_similarity(lam * a, b) == pytest.approx(
                cosine_similarity(a, b), abs=1e-12
            )
            assert cosine_similarity(a, b) == cosine_similarity(b, a)

    def test_result_always_clipped(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            a = rng.standard_normal(3)
            v = cosine_similarity(a, a * float(rng.uniform(0.5, 2.0)))
            assert -1.0 <= v <= 1.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity(np.zeros(3), unit_vector(3))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity(unit_vector(3), unit_vector(4))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity(np.array([1.0, float("nan")]), unit_vector(2))


class TestConsistency:
    def test_empty_ancestors_is_neutral(self):
        assert consistency_score(unit_vector(3), []) == 1.0

    def test_identical_embeddings(self):
        v = np.array([1.0, 0.0])
        assert consistency_score(v, [v, v]) == 1.0

    def test_mean_of_two_equal_cosines(self):
        v = np.array([1.0, 1.0]) / math.sqrt(2.0)
        got = consistency_score(v, [np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert got == pytest.approx(0.7071067811865475, abs=1e-15)

    def test_antipodal_single_ancestor(self):
        assert consistency_score(np.array([1.0, 0.0]), [np.array([-1.0, 0.0])]) == -1.0

    def test_matches_mean_of_oracle_cosines(self):
        rng = np.random.default_rng(303)
        for _ in range(200):
            dim = int(rng.integers(2, 16))
            v = rng.standard_normal(dim)
            ancestors = [rng.standard_normal(dim) for _ in range(int(rng.integers(1, 6)))]
            expected = sum(slow_cosine(v, a) for a in ancestors) / len(ancestors)
            assert consistency_score(v, ancestors) == pytest.approx(
                expected, abs=1e-12
            )

    def test_range(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            v = rng.standard_normal(5)
            anc = [rng.standard_normal(5) for _ in range(3)]
            assert -1.0 <= consistency_score(v, anc) <= 1.0


class TestAssembly:
    def test_concatenation_order(self):
        out = assemble_features(np.array([0.1, 0.2, 0.3]), 0.5)
        assert np.array_equal(out, np.array([0.1, 0.2, 0.3, 0.5]))

    def test_last_component_is_consistency(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            emb = rng.standard_normal(int(rng.integers(1, 10)))
            out = assemble_features(emb, 1.0)
            assert out[-1] == 1.0
            assert np.array_equal(out[:-1], emb.astype(np.float64))

    def test_out_of_range_consistency_rejected(self):
        with pytest.raises(ValueError):
            assemble_features(unit_vector(3), 1.5)


class TestAncestorFeatures:
    def _chain(self, embeddings):
        problem = make_problem()
        state = make_root_state(problem, embeddings[0])
        for i, emb in enumerate(embeddings[1:], start=1):
            state = extend_state(
                state,
                Thought(f"s{i}", 1),
                candidate_features(emb, state),
                ordinal=0,
            )
        return state

    def test_ancestor_embeddings_root_first(self):
        rng = np.random.default_rng(77)
        embs = [random_unit(rng, 5) for _ in range(4)]
        tip = self._chain(embs)
        got = ancestor_embeddings(tip, include_root=True)
        assert len(got) == 4
        for g, e in zip(got, embs):
            assert np.array_equal(g, e)

    def test_include_root_false_drops_first(self):
        rng = np.random.default_rng(78)
        embs = [random_unit(rng, 5) for _ in range(3)]
        tip = self._chain(embs)
        got = ancestor_embeddings(tip, include_root=False)
        assert len(got) == 2
        assert np.array_equal(got[0], embs[1])

    def test_candidate_features_match_manual_computation(self):
        rng = np.random.default_rng(79)
        embs = [random_unit(rng, 6) for _ in range(3)]
        parent = self._chain(embs)
        cand = random_unit(rng, 6)
        fv = candidate_features(cand, parent, include_root=True)
        manual = sum(slow_cosine(cand, e) for e in embs) / len(embs)
        assert isinstance(fv, FeatureVector)
        assert fv.consistency == pytest.approx(manual, abs=1e-12)
        assert np.array_equal(fv.embedding, cand)

    def test_candidate_of_root_has_single_ancestor(self):
        rng = np.random.default_rng(80)
        root_emb = random_unit(rng, 4)
        root = make_root_state(make_problem(), root_emb)
        cand = random_unit(rng, 4)
        fv = candidate_features(cand, root, include_root=True)
        assert fv.consistency == pytest.approx(slow_cosine(cand, root_emb), abs=1e-12)
        # Excluding the root leaves a depth-1 candidate with no ancestors.
        assert candidate_features(cand, root, include_root=False).consistency == 1.0
