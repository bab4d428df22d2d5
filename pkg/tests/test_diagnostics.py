"""Attention entropy reporting and ablation orchestration."""

import math

import numpy as np
import pytest

from misinfo.data import Corpus
from misinfo.diagnostics import (
    attention_entropy,
    entropy_report,
    plot_ablation_f1,
    run_ablations,
    write_ablation_csv,
)
from misinfo.errors import DegenerateInputError
from misinfo.kernels import KernelBank
from misinfo.optim import ParamStore
from misinfo.synthetic import generate_synthetic
from misinfo.trainer import TrainConfig

from conftest import make_article, make_tree


class TestAttentionEntropy:
    def test_one_hot_is_zero(self):
        assert attention_entropy([0.0, 1.0, 0.0]) == 0.0

    def test_uniform_is_log_n(self):
        assert attention_entropy([0.25] * 4) == pytest.approx(math.log(4.0), abs=1e-12)

    def test_skewed_value(self):
        assert attention_entropy([0.75, 0.25]) == pytest.approx(0.5623, abs=1e-4)

    def test_non_distribution_rejected(self):
        with pytest.raises(DegenerateInputError):
            attention_entropy([0.2, 0.2])
        with pytest.raises(DegenerateInputError):
            attention_entropy([])

    @pytest.mark.parametrize("seed", range(30))
    def test_never_exceeds_log_support(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 8))
        w = rng.dirichlet(np.ones(n))
        assert attention_entropy(w) <= math.log(n) + 1e-12


def _fixture_corpus(exact_neighbors=True):
    """Star tree around one post with one identical neighbor and three
    dissimilar ones."""
    center = np.array([1.0, 0.0, 0.0, 0.0])
    leaves = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],  # exact match
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.1, 0.0, 0.0, 0.995],
        ]
    )
    emb = np.vstack([center, leaves])
    parents = [None] + ["t0-p0"] * 4
    tree = make_tree("t0", emb, parents=parents)
    article = make_article("a0", np.eye(4)[:2], [tree], label="fake")
    return Corpus([article], dim=4)


class TestEntropyReport:
    def test_identical_posts_make_scorers_agree_at_uniform(self, rng):
        emb = np.tile(rng.normal(size=3), (4, 1))
        tree = make_tree("t0", emb)
        corpus = Corpus([make_article("a0", rng.normal(size=(2, 3)), [tree], label="real")], dim=3)
        config = TrainConfig(num_kernels=4, embedding_dim=3)
        report = entropy_report(corpus, config=config)
        assert report.kernel_mean == pytest.approx(report.dot_product_mean, abs=1e-9)

    def test_trained_exact_match_weight_focuses_kernel_attention(self):
        # Stand-in for a trained model: positive weight on the exact-match
        # kernel makes kernel attention sharper than dot-product attention.
        corpus = _fixture_corpus()
        config = TrainConfig(num_kernels=5, embedding_dim=4)
        params = ParamStore()
        w1 = np.zeros(5)
        w1[-1] = 5.0
        params.add("w1", w1)
        params.add("b1", 0.0)
        report = entropy_report(corpus, params=params, config=config)
        assert report.kernel_mean < report.dot_product_mean

    def test_per_tree_breakdown_present(self):
        corpus = generate_synthetic(num_articles=2, n_sentences=2, m_trees=3, dim=8, seed=0)
        report = entropy_report(corpus, config=TrainConfig(num_kernels=4, embedding_dim=8))
        assert len(report.per_tree) == 6
        for row in report.per_tree:
            assert row.kernel >= 0.0 and row.dot_product >= 0.0

    def test_corpus_without_trees_rejected(self, rng):
        corpus = Corpus([make_article("a0", rng.normal(size=(2, 4)), [], label="fake")], dim=4)
        with pytest.raises(DegenerateInputError):
            entropy_report(corpus, config=TrainConfig(num_kernels=3, embedding_dim=4))


@pytest.fixture(scope="module")
def ablation_corpus():
    return generate_synthetic(num_articles=8, n_sentences=3, m_trees=5, dim=12, seed=13)


class TestRunAblations:
    def test_empty_flag_list_gives_base_row_only(self, ablation_corpus):
        corpus = ablation_corpus
        config = TrainConfig(max_epochs=2, num_kernels=3, embedding_dim=12)
        rows = run_ablations(corpus, config, flags=[])
        assert [r.name for r in rows] == ["base"]

    def test_rows_and_reproducibility(self, ablation_corpus):
        corpus = ablation_corpus
        config = TrainConfig(max_epochs=2, num_kernels=3, embedding_dim=12, seed=5)
        rows_a = run_ablations(corpus, config, flags=["no-trees", "threshold-mil"])
        rows_b = run_ablations(corpus, config, flags=["no-trees", "threshold-mil"])
        assert [r.name for r in rows_a] == ["base", "no-trees", "threshold-mil"]
        for a, b in zip(rows_a, rows_b):
            assert a.loss_trace == b.loss_trace
            assert a.report.article == b.report.article

    def test_csv_and_svg_outputs(self, ablation_corpus, tmp_path):
        config = TrainConfig(max_epochs=1, num_kernels=3, embedding_dim=12)
        rows = run_ablations(ablation_corpus, config, flags=["no-trees"])
        csv_path = tmp_path / "ablations.csv"
        write_ablation_csv(rows, csv_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0].startswith("ablation,article_precision")
        assert len(lines) == 3
        svg_path = tmp_path / "ablations.svg"
        plot_ablation_f1(rows, svg_path)
        assert svg_path.read_text().lstrip().startswith("<?xml")
