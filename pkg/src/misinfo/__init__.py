"""Weakly supervised detection of misinforming sentences and fake articles."""

from .__about__ import __version__
from .autodiff import Tensor, cosine_similarity, softmax
from .data import Article, ConversationTree, Corpus, Post, hash_embed, load_corpus, write_corpus
from .diagnostics import EntropyReport, attention_entropy, entropy_report, run_ablations
from .estimator import MisinformationDetector
from .kernels import KernelBank, gaussian_kernel_vector
from .linker import LinkGraph, build_links, compute_tau, similarity_table
from .optim import ParamStore, finite_diff_check
from .synthetic import generate_synthetic, nearest_evidence_f1
from .trainer import (
    EvalReport,
    Metrics,
    TrainConfig,
    consistency_term,
    evaluate,
    predict_articles,
    train,
)

__all__ = [
    "__version__",
    "Tensor",
    "cosine_similarity",
    "softmax",
    "Article",
    "ConversationTree",
    "Corpus",
    "Post",
    "hash_embed",
    "load_corpus",
    "write_corpus",
    "EntropyReport",
    "attention_entropy",
    "entropy_report",
    "run_ablations",
    "MisinformationDetector",
    "KernelBank",
    "gaussian_kernel_vector",
    "LinkGraph",
    "build_links",
    "compute_tau",
    "similarity_table",
    "ParamStore",
    "finite_diff_check",
    "generate_synthetic",
    "nearest_evidence_f1",
    "EvalReport",
    "Metrics",
    "TrainConfig",
    "consistency_term",
    "evaluate",
    "predict_articles",
    "train",
]
