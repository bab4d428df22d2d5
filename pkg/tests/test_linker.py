"""Sentence-tree similarity tables, the global threshold, and link building."""

import numpy as np
import pytest

from misinfo.errors import ConfigError, DegenerateInputError
from misinfo.linker import (
    LINK_FULL,
    LINK_THRESHOLD,
    build_links,
    compute_tau,
    similarity_table,
)


class TestSimilarityTable:
    def test_same_vector_scores_one(self):
        s = np.array([[0.6, 0.8]])
        assert similarity_table(s, s)[0, 0] == pytest.approx(1.0)

    def test_orthogonal_scores_zero(self):
        table = similarity_table(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
        assert table[0, 0] == pytest.approx(0.0)

    def test_matches_brute_force_loop(self, rng):
        sentences = rng.normal(size=(3, 5))
        trees = rng.normal(size=(2, 5))
        table = similarity_table(sentences, trees)
        for i in range(3):
            for j in range(2):
                expected = sentences[i] @ trees[j] / (
                    np.linalg.norm(sentences[i]) * np.linalg.norm(trees[j])
                )
                assert table[i, j] == pytest.approx(expected, abs=1e-12)

    def test_zero_norm_raises(self):
        with pytest.raises(DegenerateInputError):
            similarity_table(np.zeros((1, 3)), np.ones((1, 3)))

    def test_no_trees_gives_empty_table(self):
        table = similarity_table(np.ones((2, 3)), np.empty((0, 3)))
        assert table.shape == (2, 0)


class TestComputeTau:
    def test_midpoint_of_range(self):
        assert compute_tau([0.1, 0.2, 0.9]) == pytest.approx(0.5)

    def test_all_equal_scores(self):
        assert compute_tau([0.3, 0.3, 0.3]) == pytest.approx(0.3)

    def test_uniform_scores_center_near_zero(self, rng):
        scores = rng.uniform(-1.0, 1.0, size=10_000)
        assert abs(compute_tau(scores)) < 0.05

    def test_median_mode(self):
        assert compute_tau([0.0, 0.2, 1.0], mode="median") == pytest.approx(0.2)

    def test_off_mode(self):
        assert compute_tau([0.5], mode="off") is None

    def test_empty_population_raises(self):
        with pytest.raises(DegenerateInputError):
            compute_tau([])

    def test_unknown_mode_raises(self):
        with pytest.raises(ConfigError):
            compute_tau([0.1], mode="nonsense")

    def test_pure_function_of_multiset(self, rng):
        scores = rng.normal(size=50)
        shuffled = scores.copy()
        rng.shuffle(shuffled)
        assert compute_tau(scores) == compute_tau(shuffled)


class TestBuildLinks:
    def test_tau_below_everything_equals_full_mode(self, rng):
        scores = rng.uniform(-0.9, 0.9, size=(3, 4))
        thresholded = build_links(scores, tau=-1.0, mode=LINK_THRESHOLD)
        full = build_links(scores, tau=None, mode=LINK_FULL)
        assert thresholded.edges == full.edges
        assert len(full.edges) == 12

    def test_tau_at_one_gives_zero_edges(self):
        scores = np.array([[1.0, 0.5], [0.3, 1.0]])
        graph = build_links(scores, tau=1.0)
        assert graph.edges == []
        assert graph.unlinked_sentences == [0, 1]

    def test_strictly_above_threshold(self):
        scores = np.array([[0.9, 0.4], [0.5, 0.2]])
        graph = build_links(scores, tau=0.5)
        assert graph.edges == [(0, 0)]  # 0.5 itself is excluded

    def test_threshold_edges_subset_of_full(self, rng):
        for seed in range(25):
            r = np.random.default_rng(seed)
            scores = r.normal(size=(4, 3))
            tau = float(r.uniform(-1, 1))
            thresholded = set(build_links(scores, tau).edges)
            full = set(build_links(scores, None, mode=LINK_FULL).edges)
            assert thresholded <= full

    def test_invariant_under_tree_permutation(self, rng):
        scores = rng.normal(size=(3, 5))
        perm = rng.permutation(5)
        tau = 0.1
        original = build_links(scores, tau)
        permuted = build_links(scores[:, perm], tau)
        for i in range(3):
            relabeled = sorted(int(perm[j]) for j in permuted.per_sentence[i])
            assert relabeled == sorted(int(j) for j in original.per_sentence[i])

    def test_dump_format(self, tmp_path):
        scores = np.array([[0.9, 0.1]])
        graph = build_links(scores, tau=0.5)
        path = tmp_path / "links.tsv"
        with open(path, "w") as fh:
            graph.dump(fh, article_id="a0")
        assert path.read_text() == "a0\t0\t0\t0.900000\n"

    def test_unknown_mode_raises(self):
        with pytest.raises(ConfigError):
            build_links(np.ones((1, 1)), 0.0, mode="banana")
