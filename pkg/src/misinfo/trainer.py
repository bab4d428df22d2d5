"""Training objective, optimization loop, and two-level evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import (
    Corpus,
    LABEL_FAKE,
    SENTENCE_MISINFORMING,
)
from .errors import ConfigError
from .forward import (
    ArticleCache,
    ForwardResult,
    article_forward,
    build_article_cache,
    build_caches,
    encode_article_trees,
    initial_params,
    link_article,
)
from .kernels import KernelBank
from .linker import LINK_MODES, TAU_MODES, TAU_OFF, compute_tau, similarity_table
from .optim import ParamStore
from .sentence import MISINFORMING_INDEX


@dataclass
class TrainConfig:
    """Hyperparameters and ablation switches for one training run."""

    trade_off: float = 0.5          # weight of the consistency term in the loss
    learning_rate: float = 0.001
    max_epochs: int = 100
    embedding_dim: int = 512        # used when a corpus needs hash-filled embeddings
    num_kernels: int = 10
    seed: int = 0
    rounds: int = 1                 # message-passing rounds inside each tree
    attention_blocks: int = 1
    attention_heads: int = 1
    ffn_hidden: int | None = None
    batch_size: int | None = None   # None = full batch
    convergence_tol: float = 1e-6
    convergence_patience: int = 5
    link_mode: str = "threshold"
    tau_mode: str = "range-midpoint"
    aggregation: str = "weighted"   # or "threshold-mil"
    consistency: str = "paper"      # or "weighted"
    nll_loss: bool = False
    use_trees: bool = True
    kernel_attention: bool = True
    node_level_kernels: bool = False
    title_as_sentence: bool = False

    def __post_init__(self):
        if not (0.0 <= self.trade_off <= 1.0):
            raise ConfigError("trade_off must lie in [0, 1]")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.link_mode not in LINK_MODES:
            raise ConfigError(f"link_mode must be one of {LINK_MODES}")
        if self.tau_mode not in TAU_MODES:
            raise ConfigError(f"tau_mode must be one of {TAU_MODES}")
        if self.aggregation not in ("weighted", "threshold-mil"):
            raise ConfigError("aggregation must be 'weighted' or 'threshold-mil'")
        if self.consistency not in ("paper", "weighted"):
            raise ConfigError("consistency must be 'paper' or 'weighted'")


# Ablation switches by surface name.
ABLATIONS = {
    "full-connect": {"link_mode": "full"},
    "threshold-mil": {"aggregation": "threshold-mil"},
    "nll-loss": {"nll_loss": True},
    "title-as-sentence": {"title_as_sentence": True},
    "no-kernel": {"kernel_attention": False},
    "no-trees": {"use_trees": False},
}


def apply_ablation(config: TrainConfig, name: str) -> TrainConfig:
    if name not in ABLATIONS:
        raise ConfigError(f"unknown ablation {name!r}; expected one of {sorted(ABLATIONS)}")
    return replace(config, **ABLATIONS[name])


def config_to_dict(config: TrainConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(TrainConfig)}


def config_from_dict(data: dict) -> TrainConfig:
    names = {f.name for f in fields(TrainConfig)}
    return TrainConfig(**{k: v for k, v in data.items() if k in names})


@dataclass
class Metrics:
    """Precision / recall / F1 / accuracy with the fake or misinforming
    class as positive; ``zero_division`` flags undefined precision/recall
    that were reported as 0."""

    precision: float
    recall: float
    f1: float
    accuracy: float
    zero_division: bool = False

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        zero_division = (tp + fp == 0) or (tp + fn == 0)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total = tp + fp + fn + tn
        accuracy = (tp + tn) / total if total else 0.0
        return cls(precision, recall, f1, accuracy, zero_division)


@dataclass
class EvalReport:
    article: Metrics
    sentence: Metrics | None


@dataclass
class TrainResult:
    params: ParamStore
    bank: KernelBank
    tau: float | None
    loss_trace: list[float]
    epochs_run: int
    converged: bool


@dataclass
class ArticlePrediction:
    article_id: str
    y_hat: np.ndarray                       # (2,) [P(fake), P(real)]
    sentence_probs: np.ndarray              # (n, 2) [P(misinforming), P(clean)]
    alpha: np.ndarray | None
    links: list[np.ndarray]
    link_scores: np.ndarray | None
    tree_attention: list[np.ndarray] = field(default_factory=list)

    @property
    def label(self) -> str:
        return "fake" if self.y_hat[0] >= self.y_hat[1] else "real"

    def sentence_flags(self) -> np.ndarray:
        return self.sentence_probs[:, MISINFORMING_INDEX] > 0.5


def consistency_term(sentence_out, predictions, variant: str = "paper") -> Tensor:
    """Pairwise coupling of sentence representations and predictions.

    The default averages exp(-||si - sj||^2 * ||pi - pj||^2) over all n^2
    ordered pairs, which keeps the value inside (0, 1].  The ``weighted``
    variant instead averages exp(-||si - sj||^2) * ||pi - pj||^2, penalizing
    prediction gaps between similar sentences.
    """
    s = sentence_out if isinstance(sentence_out, Tensor) else Tensor(np.asarray(sentence_out, dtype=np.float64))
    p = predictions if isinstance(predictions, Tensor) else Tensor(np.asarray(predictions, dtype=np.float64))
    d_s = ad.pairwise_sqdist(s)
    d_p = ad.pairwise_sqdist(p)
    if variant == "weighted":
        return ad.mean(ad.mul(ad.exp(ad.neg(d_s)), d_p))
    if variant != "paper":
        raise ConfigError(f"unknown consistency variant {variant!r}")
    return ad.mean(ad.exp(ad.neg(ad.mul(d_s, d_p))))


def article_loss(result: ForwardResult, label_index: int, config: TrainConfig) -> Tensor:
    """Per-article objective.

    Default: trade_off * consistency + (1 - trade_off) * squared L2 gap
    between the one-hot label and the predicted distribution.  The nll_loss
    switch replaces the whole objective with the negative log-likelihood of
    the true class.
    """
    one_hot = np.zeros(2)
    one_hot[label_index] = 1.0
    if config.nll_loss:
        return ad.neg(ad.log(ad.matmul(result.y_hat, Tensor(one_hot)) + 1e-30))
    gap = ad.sub(Tensor(one_hot), result.y_hat)
    label_term = ad.tensor_sum(ad.mul(gap, gap))
    consistency = consistency_term(result.sentence_out, result.predictions, config.consistency)
    return config.trade_off * consistency + (1.0 - config.trade_off) * label_term


def _tree_values(cache: ArticleCache, params, config) -> np.ndarray | None:
    matrix, _ = encode_article_trees(cache, params, config)
    return None if matrix is None else matrix.data


def compute_corpus_tau(caches: list[ArticleCache], params, config) -> float | None:
    """Global linking threshold from the pooled similarity population."""
    if not config.use_trees or config.link_mode == "full" or config.tau_mode == TAU_OFF:
        return None
    scores = []
    for cache in caches:
        values = _tree_values(cache, params, config)
        if values is not None and values.size:
            scores.append(similarity_table(cache.sentences, values).reshape(-1))
    if not scores:
        return None
    return compute_tau(np.concatenate(scores), mode=config.tau_mode)


def train(corpus: Corpus, config: TrainConfig) -> TrainResult:
    """Fit parameters with article-level labels only.

    Full-batch (or minibatch) Adam; the linking threshold and the link
    structure are computed once from the freshly initialized encoder and
    held fixed for the whole run, which keeps the objective smooth and the
    run deterministic for a given seed.
    """
    for article in corpus.articles:
        if article.label is None:
            raise ConfigError(f"article {article.id!r} is unlabeled; training needs article labels")

    bank = KernelBank.default(config.num_kernels)
    caches = build_caches(corpus, bank)
    init_rng = np.random.default_rng([config.seed, 1])
    params = initial_params(corpus.dim, bank.size, config, init_rng)

    tau = compute_corpus_tau(caches, params, config)
    links = [
        link_article(cache, _tree_values(cache, params, config), tau, config)
        for cache in caches
    ]

    n_articles = len(caches)
    shuffle_rng = np.random.default_rng([config.seed, 2])
    trace: list[float] = []
    converged = False
    stable_epochs = 0
    for epoch in range(config.max_epochs):
        if config.batch_size is None:
            batches = [np.arange(n_articles)]
        else:
            order = shuffle_rng.permutation(n_articles)
            batches = [order[i:i + config.batch_size] for i in range(0, n_articles, config.batch_size)]
        epoch_losses = []
        for batch in batches:
            params.zero_grad()
            for idx in batch:
                result = article_forward(caches[idx], links[idx], params, config)
                loss = article_loss(result, caches[idx].label_index, config)
                epoch_losses.append(loss.item())
                loss.backward(1.0 / len(batch))
            params.adam_step(lr=config.learning_rate)
        trace.append(float(np.mean(epoch_losses)))
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < config.convergence_tol:
            stable_epochs += 1
            if stable_epochs >= config.convergence_patience:
                converged = True
                break
        else:
            stable_epochs = 0
    return TrainResult(
        params=params,
        bank=bank,
        tau=tau,
        loss_trace=trace,
        epochs_run=len(trace),
        converged=converged,
    )


def predict_articles(
    corpus: Corpus,
    params: ParamStore,
    bank: KernelBank,
    tau: float | None,
    config: TrainConfig,
) -> list[ArticlePrediction]:
    """Forward passes over a corpus with fixed parameters.

    Links are rebuilt from the current encoder using the stored threshold.
    """
    out = []
    for article in corpus.articles:
        cache = build_article_cache(article, bank)
        values = _tree_values(cache, params, config) if config.use_trees else None
        links = link_article(cache, values, tau, config)
        scores = (
            similarity_table(cache.sentences, values)
            if (values is not None and values.size)
            else None
        )
        result = article_forward(cache, links, params, config)
        out.append(
            ArticlePrediction(
                article_id=article.id,
                y_hat=result.y_hat.data.copy(),
                sentence_probs=result.sentence_predictions.copy(),
                alpha=None if result.alpha is None else result.alpha.data.copy(),
                links=links,
                link_scores=scores,
                tree_attention=[
                    st.tree_attention.data.copy() if st.tree_attention is not None else np.empty(0)
                    for st in result.states[result.sentence_offset:]
                ],
            )
        )
    return out


def evaluate(
    corpus: Corpus,
    params: ParamStore,
    bank: KernelBank,
    tau: float | None,
    config: TrainConfig,
) -> EvalReport:
    """Metrics at both levels; sentence metrics need per-sentence labels."""
    predictions = predict_articles(corpus, params, bank, tau, config)
    a_tp = a_fp = a_fn = a_tn = 0
    s_tp = s_fp = s_fn = s_tn = 0
    any_sentence_labels = False
    for article, pred in zip(corpus.articles, predictions):
        if article.label is None:
            raise ConfigError(f"article {article.id!r} has no label; cannot evaluate")
        actual_fake = article.label == LABEL_FAKE
        predicted_fake = pred.label == LABEL_FAKE
        if predicted_fake and actual_fake:
            a_tp += 1
        elif predicted_fake:
            a_fp += 1
        elif actual_fake:
            a_fn += 1
        else:
            a_tn += 1
        if article.has_sentence_labels:
            any_sentence_labels = True
            flags = pred.sentence_flags()
            for flag, label in zip(flags, article.sentence_labels):
                actual_mis = label == SENTENCE_MISINFORMING
                if flag and actual_mis:
                    s_tp += 1
                elif flag:
                    s_fp += 1
                elif actual_mis:
                    s_fn += 1
                else:
                    s_tn += 1
    article_metrics = Metrics.from_counts(a_tp, a_fp, a_fn, a_tn)
    sentence_metrics = (
        Metrics.from_counts(s_tp, s_fp, s_fn, s_tn) if any_sentence_labels else None
    )
    return EvalReport(article=article_metrics, sentence=sentence_metrics)
