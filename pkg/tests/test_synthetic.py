"""Synthetic generator: determinism, planted guarantees, oracle self-check."""

import numpy as np
import pytest

from misinfo.data import LABEL_FAKE, LABEL_REAL, SENTENCE_MISINFORMING
from misinfo.errors import ConfigError
from misinfo.synthetic import (
    DEBUNK_ALIGN,
    ORACLE_THRESHOLD,
    generate_synthetic,
    nearest_evidence_f1,
    tree_mean,
)


class TestDeterminism:
    def test_same_config_same_seed_identical(self):
        a = generate_synthetic(num_articles=6, n_sentences=3, m_trees=5, dim=12, seed=42)
        b = generate_synthetic(num_articles=6, n_sentences=3, m_trees=5, dim=12, seed=42)
        for art_a, art_b in zip(a.articles, b.articles):
            assert art_a.label == art_b.label
            np.testing.assert_array_equal(art_a.sentence_embeddings, art_b.sentence_embeddings)
            for ta, tb in zip(art_a.trees, art_b.trees):
                for pa, pb in zip(ta.posts, tb.posts):
                    np.testing.assert_array_equal(pa.embedding, pb.embedding)

    def test_different_seed_differs(self):
        a = generate_synthetic(num_articles=3, dim=12, seed=0)
        b = generate_synthetic(num_articles=3, dim=12, seed=1)
        assert not np.array_equal(
            a.articles[0].sentence_embeddings, b.articles[0].sentence_embeddings
        )


class TestPlantedGuarantees:
    def test_fake_articles_have_misinforming_real_articles_none(self):
        corpus = generate_synthetic(num_articles=30, n_sentences=4, m_trees=6, dim=16, seed=9)
        corpus.reset_sentence_label_audit()
        saw_fake = saw_real = False
        for article in corpus.articles:
            mis = sum(l == SENTENCE_MISINFORMING for l in article.sentence_labels)
            if article.label == LABEL_FAKE:
                saw_fake = True
                assert mis >= 1
            else:
                saw_real = True
                assert mis == 0
        assert saw_fake and saw_real

    def test_debunk_tree_exists_per_misinforming_sentence(self):
        corpus = generate_synthetic(num_articles=10, n_sentences=4, m_trees=6, dim=16, noise=0.0, seed=3)
        for article in corpus.articles:
            labels = article.sentence_labels
            pooled = [tree_mean(t) for t in article.trees]
            for i, label in enumerate(labels):
                if label != SENTENCE_MISINFORMING:
                    continue
                s = article.sentence_embeddings[i]
                cosines = [
                    s @ v / (np.linalg.norm(s) * np.linalg.norm(v)) for v in pooled
                ]
                assert min(cosines) < ORACLE_THRESHOLD

    @pytest.mark.parametrize("seed", range(100))
    def test_tree_invariants_over_seed_sweep(self, seed):
        corpus = generate_synthetic(
            num_articles=2, n_sentences=2, m_trees=3, dim=8, seed=seed, self_check=False
        )
        for article in corpus.articles:
            for tree in article.trees:
                tree.validate()  # connected, one root, no cycles
                assert len(tree.posts) >= 1


class TestOracle:
    def test_noise_zero_oracle_f1_high(self):
        corpus = generate_synthetic(num_articles=50, n_sentences=5, m_trees=8, dim=32, noise=0.0, seed=11)
        assert nearest_evidence_f1(corpus) >= 0.9

    def test_self_check_runs_at_noise_zero(self):
        # Self-check passes silently when the geometry holds.
        generate_synthetic(num_articles=5, dim=16, noise=0.0, seed=2, self_check=True)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_articles": 0},
            {"misinform_rate": 0.0},
            {"misinform_rate": 1.0},
            {"noise": -0.1},
            {"dim": 4, "n_sentences": 4},
            {"fake_fraction": 0.0},
            {"min_posts": 3, "max_posts": 2},
        ],
    )
    def test_bad_configs(self, kwargs):
        base = dict(num_articles=3, n_sentences=2, m_trees=3, dim=8, seed=0)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            generate_synthetic(**base)

    def test_label_audit_clean_after_generation(self):
        corpus = generate_synthetic(num_articles=3, dim=16, noise=0.0, seed=1)
        assert corpus.total_sentence_label_reads() == 0
