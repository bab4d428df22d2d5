"""Per-article forward pass: tree encoding, linking, sentence and article heads."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .article import aggregate, aggregate_threshold_mil, global_encode
from .data import Article, Corpus
from .kernels import KernelBank
from .linker import LINK_FULL, build_links, similarity_table
from .optim import ParamStore
from .sentence import SentenceState, contextualize_sentence, predict_sentences
from .tree_encoder import TreeCache, build_tree_cache, encode_tree


@dataclass
class ArticleCache:
    """Constant per-article inputs shared by every forward pass.

    Sentence labels are deliberately absent: the training path works purely
    from caches.
    """

    article_id: str
    sentences: np.ndarray          # (n, d)
    title: np.ndarray              # (d,)
    trees: list[TreeCache]
    label_index: int | None        # 0 = fake, 1 = real, None = unlabeled

    @property
    def n_sentences(self) -> int:
        return self.sentences.shape[0]


@dataclass
class ForwardResult:
    """Everything a loss or a prediction dump needs from one article pass."""

    tree_matrix: Tensor | None
    tree_attention: list[Tensor]
    states: list[SentenceState]
    predictions: Tensor            # (I, 2) rows; instances = sentences (+ title under flag)
    title_out: Tensor
    sentence_out: Tensor           # (I, d)
    alpha: Tensor | None
    y_hat: Tensor                  # (2,)
    sentence_offset: int           # index of the first real sentence among instances

    @property
    def sentence_predictions(self) -> np.ndarray:
        return self.predictions.data[self.sentence_offset:]


LABEL_TO_INDEX = {"fake": 0, "real": 1}


def build_article_cache(article: Article, bank: KernelBank) -> ArticleCache:
    return ArticleCache(
        article_id=article.id,
        sentences=article.sentence_embeddings,
        title=article.title_embedding,
        trees=[build_tree_cache(t, bank) for t in article.trees],
        label_index=LABEL_TO_INDEX.get(article.label) if article.label else None,
    )


def build_caches(corpus: Corpus, bank: KernelBank) -> list[ArticleCache]:
    return [build_article_cache(a, bank) for a in corpus.articles]


def initial_params(dim: int, num_kernels: int, config, rng: np.random.Generator) -> ParamStore:
    """Fresh trainable parameters; creation order is fixed for determinism."""
    params = ParamStore()
    params.add("w1", rng.normal(0.0, 0.1, size=num_kernels))
    params.add("b1", 0.0)
    params.add("w2", rng.normal(0.0, 1.0 / np.sqrt(2 * dim), size=(2, 2 * dim)))
    params.add("w3", rng.normal(0.0, 1.0 / np.sqrt(dim), size=(2, dim)))
    params.add("b2", np.zeros(2))
    params.add("proj", rng.normal(0.0, 1.0 / np.sqrt(2 * dim), size=(dim, 2 * dim)))
    hidden = config.ffn_hidden or dim
    scale = 1.0 / np.sqrt(dim)
    for b in range(config.attention_blocks):
        for name in ("wq", "wk", "wv", "wo"):
            params.add(f"block{b}.{name}", rng.normal(0.0, scale, size=(dim, dim)))
        params.add(f"block{b}.ffn_w1", rng.normal(0.0, scale, size=(hidden, dim)))
        params.add(f"block{b}.ffn_b1", np.zeros(hidden))
        params.add(f"block{b}.ffn_w2", rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(dim, hidden)))
        params.add(f"block{b}.ffn_b2", np.zeros(dim))
    return params


def encode_article_trees(cache: ArticleCache, params, config):
    """Encode every tree of an article; returns (tree matrix, attention traces)."""
    if not cache.trees:
        return None, []
    pooled, gammas = [], []
    for tree in cache.trees:
        vec, gamma = encode_tree(tree, params, config)
        pooled.append(vec)
        gammas.append(gamma)
    return ad.stack(pooled), gammas


def link_article(cache: ArticleCache, tree_values: np.ndarray | None, tau, config) -> list[np.ndarray]:
    """Per-sentence linked tree indices under the configured mode."""
    n = cache.n_sentences
    if tree_values is None or tree_values.size == 0 or not config.use_trees:
        return [np.empty(0, dtype=np.intp) for _ in range(n)]
    mode = LINK_FULL if (config.link_mode == LINK_FULL or tau is None) else config.link_mode
    scores = similarity_table(cache.sentences, tree_values)
    return build_links(scores, tau, mode=mode).per_sentence


def article_forward(cache: ArticleCache, links: list[np.ndarray], params, config) -> ForwardResult:
    """Full differentiable pass over one article."""
    if config.use_trees:
        tree_matrix, gammas = encode_article_trees(cache, params, config)
    else:
        tree_matrix, gammas = None, []

    states: list[SentenceState] = []
    offset = 0
    if config.title_as_sentence:
        # The title also becomes instance 0, with no linked trees.
        states.append(contextualize_sentence(cache.title, None, ()))
        offset = 1
    for i in range(cache.n_sentences):
        states.append(contextualize_sentence(cache.sentences[i], tree_matrix, links[i]))

    predictions = predict_sentences(states, params)
    title_out, sentence_out = global_encode(
        Tensor(cache.title),
        ad.stack([st.combined for st in states]),
        params,
        blocks=config.attention_blocks,
        heads=config.attention_heads,
    )

    if config.aggregation == "threshold-mil":
        alpha = None
        y_hat = Tensor(aggregate_threshold_mil(predictions.data))
    else:
        alpha, y_hat = aggregate(title_out, sentence_out, predictions)

    return ForwardResult(
        tree_matrix=tree_matrix,
        tree_attention=gammas,
        states=states,
        predictions=predictions,
        title_out=title_out,
        sentence_out=sentence_out,
        alpha=alpha,
        y_hat=y_hat,
        sentence_offset=offset,
    )
