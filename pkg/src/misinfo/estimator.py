"""Scikit-learn style estimator wrapping the training and prediction pipeline."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import __about__
from .data import ARTICLE_LABELS, Article, Corpus
from .errors import ConfigError
from .kernels import KernelBank
from .optim import ParamStore
from .trainer import (
    ArticlePrediction,
    EvalReport,
    TrainConfig,
    config_from_dict,
    config_to_dict,
    evaluate,
    predict_articles,
    train,
)

CHECKPOINT_VERSION = 1


class MisinformationDetector(BaseEstimator, ClassifierMixin):
    """Weakly supervised detector of misinforming sentences and fake articles.

    Trains from article-level labels only; predicts a class distribution for
    every sentence and for the whole article.  The constructor mirrors
    :class:`misinfo.trainer.TrainConfig` so the estimator composes with
    scikit-learn tooling (``get_params`` / ``set_params`` / ``clone``).

    Parameters
    ----------
    trade_off : float, weight of the consistency term in the loss.
    learning_rate, max_epochs, batch_size : optimizer settings
        (``batch_size=None`` trains full-batch).
    num_kernels : size of the fixed Gaussian kernel bank.
    link_mode, tau_mode : sentence-tree linking behaviour.
    aggregation : ``"weighted"`` attention aggregation or the hard
        ``"threshold-mil"`` bag rule.
    consistency : ``"paper"`` or ``"weighted"`` consistency variant.
    use_trees, kernel_attention, node_level_kernels, title_as_sentence,
    nll_loss : ablation switches.

    Attributes
    ----------
    params_ : ParamStore of fitted tensors.
    kernel_bank_ : the fixed kernel bank used at fit time.
    tau_ : linking threshold frozen at fit time (or None).
    loss_trace_ : per-epoch mean training loss.
    classes_ : ``array(["fake", "real"])``.
    """

    def __init__(
        self,
        trade_off: float = 0.5,
        learning_rate: float = 0.001,
        max_epochs: int = 100,
        embedding_dim: int = 512,
        num_kernels: int = 10,
        seed: int = 0,
        rounds: int = 1,
        attention_blocks: int = 1,
        attention_heads: int = 1,
        ffn_hidden: int | None = None,
        batch_size: int | None = None,
        convergence_tol: float = 1e-6,
        convergence_patience: int = 5,
        link_mode: str = "threshold",
        tau_mode: str = "range-midpoint",
        aggregation: str = "weighted",
        consistency: str = "paper",
        nll_loss: bool = False,
        use_trees: bool = True,
        kernel_attention: bool = True,
        node_level_kernels: bool = False,
        title_as_sentence: bool = False,
    ):
        self.trade_off = trade_off
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.embedding_dim = embedding_dim
        self.num_kernels = num_kernels
        self.seed = seed
        self.rounds = rounds
        self.attention_blocks = attention_blocks
        self.attention_heads = attention_heads
        self.ffn_hidden = ffn_hidden
        self.batch_size = batch_size
        self.convergence_tol = convergence_tol
        self.convergence_patience = convergence_patience
        self.link_mode = link_mode
        self.tau_mode = tau_mode
        self.aggregation = aggregation
        self.consistency = consistency
        self.nll_loss = nll_loss
        self.use_trees = use_trees
        self.kernel_attention = kernel_attention
        self.node_level_kernels = node_level_kernels
        self.title_as_sentence = title_as_sentence

    # ------------------------------------------------------------------
    def _config(self) -> TrainConfig:
        return config_from_dict(self.get_params())

    @staticmethod
    def _as_corpus(X, y=None) -> Corpus:
        if isinstance(X, Corpus):
            corpus = X
        elif isinstance(X, (list, tuple)) and all(isinstance(a, Article) for a in X):
            if not X:
                raise ConfigError("cannot fit/predict on an empty article list")
            dims = {a.sentence_embeddings.shape[1] for a in X}
            if len(dims) != 1:
                raise ConfigError(f"articles mix embedding dimensions: {sorted(dims)}")
            corpus = Corpus(list(X), dim=dims.pop())
        else:
            raise ConfigError(
                "X must be a Corpus or a list of Article objects"
            )
        if y is not None:
            labels = list(y)
            if len(labels) != len(corpus.articles):
                raise ConfigError("y length does not match the number of articles")
            relabeled = []
            for article, label in zip(corpus.articles, labels):
                if label not in ARTICLE_LABELS:
                    raise ConfigError(f"unknown article label {label!r}")
                clone = Article(
                    id=article.id,
                    title_text=article.title_text,
                    title_embedding=article.title_embedding,
                    sentence_texts=article.sentence_texts,
                    sentence_embeddings=article.sentence_embeddings,
                    trees=article.trees,
                    label=label,
                    sentence_labels=article._sentence_labels,
                )
                relabeled.append(clone)
            corpus = Corpus(relabeled, dim=corpus.dim, source=corpus.source, seed=corpus.seed)
        return corpus

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this MisinformationDetector instance is not fitted yet")

    # ------------------------------------------------------------------
    def fit(self, X, y=None):
        """Train on a corpus (or article list); y may override article labels."""
        corpus = self._as_corpus(X, y)
        result = train(corpus, self._config())
        self.params_ = result.params
        self.kernel_bank_ = result.bank
        self.tau_ = result.tau
        self.loss_trace_ = result.loss_trace
        self.converged_ = result.converged
        self.epochs_run_ = result.epochs_run
        self.n_features_in_ = corpus.dim
        self.classes_ = np.array(ARTICLE_LABELS)
        return self

    def predict_details(self, X) -> list[ArticlePrediction]:
        """Full per-article predictions including attention traces."""
        self._check_fitted()
        corpus = self._as_corpus(X)
        return predict_articles(corpus, self.params_, self.kernel_bank_, self.tau_, self._config())

    def predict_proba(self, X) -> np.ndarray:
        """Article class probabilities, columns ordered as ``classes_``."""
        return np.stack([p.y_hat for p in self.predict_details(X)])

    def predict(self, X) -> np.ndarray:
        """Article labels ("fake" / "real")."""
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def predict_sentence_proba(self, X) -> list[np.ndarray]:
        """Per-article arrays of sentence distributions [P(misinforming), P(clean)]."""
        return [p.sentence_probs for p in self.predict_details(X)]

    def predict_sentences(self, X) -> list[np.ndarray]:
        """Per-article boolean arrays: True where a sentence is flagged."""
        return [p.sentence_flags() for p in self.predict_details(X)]

    def evaluate(self, X) -> EvalReport:
        """Article metrics, plus sentence metrics when labels are present."""
        self._check_fitted()
        corpus = self._as_corpus(X)
        return evaluate(corpus, self.params_, self.kernel_bank_, self.tau_, self._config())

    # ------------------------------------------------------------------
    def save(self, path):
        """Write a versioned binary checkpoint plus a textual manifest."""
        self._check_fitted()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays = {f"param/{name}": values for name, values in self.params_.to_arrays().items()}
        arrays["kernel/mu"] = self.kernel_bank_.mu
        arrays["kernel/sigma"] = self.kernel_bank_.sigma
        arrays["meta/version"] = np.array([CHECKPOINT_VERSION])
        arrays["meta/tau"] = np.array([np.nan if self.tau_ is None else self.tau_])
        arrays["meta/loss_trace"] = np.asarray(self.loss_trace_, dtype=np.float64)
        np.savez(path, **arrays)
        manifest = {
            "format": "misinfo-checkpoint",
            "version": CHECKPOINT_VERSION,
            "package_version": __about__.__version__,
            "tau": self.tau_,
            "dim": int(self.n_features_in_),
            "config": config_to_dict(self._config()),
            "parameters": {name: list(v.shape) for name, v in self.params_.to_arrays().items()},
        }
        manifest_path = path.with_suffix(path.suffix + ".manifest.json")
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return path

    @classmethod
    def load(cls, path) -> "MisinformationDetector":
        """Restore a fitted estimator from :meth:`save` output."""
        path = Path(path)
        manifest_path = path.with_suffix(path.suffix + ".manifest.json")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {manifest.get('version')!r}")
        with np.load(path if path.suffix else path.with_suffix(".npz")) as data:
            params = ParamStore.from_arrays(
                {key[len("param/"):]: data[key] for key in data.files if key.startswith("param/")}
            )
            bank = KernelBank(mu=data["kernel/mu"], sigma=data["kernel/sigma"])
            tau_raw = float(data["meta/tau"][0])
            loss_trace = data["meta/loss_trace"].tolist()
        est = cls(**manifest["config"])
        est.params_ = params
        est.kernel_bank_ = bank
        est.tau_ = None if np.isnan(tau_raw) else tau_raw
        est.loss_trace_ = loss_trace
        est.converged_ = None
        est.epochs_run_ = len(loss_trace)
        est.n_features_in_ = manifest["dim"]
        est.classes_ = np.array(ARTICLE_LABELS)
        return est
