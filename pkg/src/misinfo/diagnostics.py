"""Attention-entropy reporting and ablation orchestration."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .data import Corpus
from .errors import DegenerateInputError
from .forward import build_caches, initial_params
from .kernels import KernelBank
from .trainer import (
    ABLATIONS,
    EvalReport,
    TrainConfig,
    apply_ablation,
    evaluate,
    train,
)
from .tree_encoder import post_attention


def attention_entropy(weights) -> float:
    """Shannon entropy in nats of an attention distribution (0 log 0 = 0)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0 or np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
        raise DegenerateInputError("attention_entropy expects a probability distribution")
    w = np.clip(w, 0.0, None)
    nonzero = w[w > 0.0]
    return float(-(nonzero * np.log(nonzero)).sum())


@dataclass
class TreeEntropy:
    tree_id: str
    kernel: float
    dot_product: float
    posts: int


@dataclass
class EntropyReport:
    """Mean post-attention entropy under the kernel scorer versus a
    dot-product baseline, over identical trees."""

    kernel_mean: float
    dot_product_mean: float
    per_tree: list[TreeEntropy]


def _masked_row_entropies(gamma: np.ndarray, mask: np.ndarray) -> list[float]:
    return [attention_entropy(row[m]) for row, m in zip(gamma, mask)]


def entropy_report(corpus: Corpus, params=None, config: TrainConfig | None = None) -> EntropyReport:
    """Compare how focused kernel attention is against dot-product attention.

    Works with trained or freshly initialized parameters; both scorers are
    evaluated on exactly the same trees.
    """
    config = config or TrainConfig()
    bank = KernelBank.default(config.num_kernels)
    if params is None:
        rng = np.random.default_rng([config.seed, 1])
        params = initial_params(corpus.dim, bank.size, config, rng)
    per_tree = []
    kernel_all: list[float] = []
    dot_all: list[float] = []
    for cache in build_caches(corpus, bank):
        for tree in cache.trees:
            kernel_gamma = post_attention(tree, params, kernel=True, node_level=config.node_level_kernels)
            dot_gamma = post_attention(tree, params, kernel=False)
            k_ent = _masked_row_entropies(kernel_gamma.data, tree.sim.mask)
            d_ent = _masked_row_entropies(dot_gamma.data, tree.sim.mask)
            kernel_all.extend(k_ent)
            dot_all.extend(d_ent)
            per_tree.append(
                TreeEntropy(
                    tree_id=tree.tree_id,
                    kernel=float(np.mean(k_ent)),
                    dot_product=float(np.mean(d_ent)),
                    posts=tree.size,
                )
            )
    if not per_tree:
        raise DegenerateInputError("entropy_report on a corpus without trees")
    return EntropyReport(
        kernel_mean=float(np.mean(kernel_all)),
        dot_product_mean=float(np.mean(dot_all)),
        per_tree=per_tree,
    )


@dataclass
class AblationRow:
    name: str
    report: EvalReport
    loss_trace: list[float]


def run_ablations(
    corpus: Corpus,
    config: TrainConfig,
    flags: list[str] | None = None,
    eval_corpus: Corpus | None = None,
) -> list[AblationRow]:
    """Train and evaluate the base configuration plus one model per flag.

    All runs share the base seed; evaluation defaults to the training
    corpus.  Returns rows in base-first order.
    """
    eval_corpus = eval_corpus or corpus
    rows = []
    variants = [("base", config)]
    for flag in flags or []:
        variants.append((flag, apply_ablation(config, flag)))
    for name, variant in variants:
        result = train(corpus, variant)
        report = evaluate(eval_corpus, result.params, result.bank, result.tau, variant)
        rows.append(AblationRow(name=name, report=report, loss_trace=result.loss_trace))
    return rows


def write_ablation_csv(rows: list[AblationRow], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "ablation",
                "article_precision", "article_recall", "article_f1", "article_accuracy",
                "sentence_precision", "sentence_recall", "sentence_f1", "sentence_accuracy",
            ]
        )
        for row in rows:
            a = row.report.article
            s = row.report.sentence
            writer.writerow(
                [row.name, f"{a.precision:.6f}", f"{a.recall:.6f}", f"{a.f1:.6f}", f"{a.accuracy:.6f}"]
                + (
                    [f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}", f"{s.accuracy:.6f}"]
                    if s is not None
                    else ["", "", "", ""]
                )
            )


def plot_ablation_f1(rows: list[AblationRow], path):
    """Bar chart of article F1 per ablation, written as an SVG file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [row.name for row in rows]
    values = [row.report.article.f1 for row in rows]
    fig, ax = plt.subplots(figsize=(max(4, len(rows) * 1.2), 3.2))
    ax.bar(names, values, color="#4878b0")
    ax.set_ylabel("article F1")
    ax.set_ylim(0.0, 1.0)
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
