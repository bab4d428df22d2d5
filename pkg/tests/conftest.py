"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from misinfo.autodiff import Tensor
from misinfo.data import Article, ConversationTree, Corpus, Post
from misinfo.optim import ParamStore, finite_diff_check


def make_tree(tree_id, embeddings, parents=None):
    """Tree from a (P, d) array; default structure is a root chain."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    n = embeddings.shape[0]
    if parents is None:
        parents = [None] + [f"{tree_id}-p{k - 1}" for k in range(1, n)]
    posts = [
        Post(id=f"{tree_id}-p{k}", parent_id=parents[k], embedding=embeddings[k])
        for k in range(n)
    ]
    return ConversationTree(id=tree_id, posts=posts)


def make_article(article_id, sentences, trees, title=None, label=None, sentence_labels=None):
    sentences = np.asarray(sentences, dtype=np.float64)
    if title is None:
        title = sentences.mean(axis=0)
    return Article(
        id=article_id,
        title_text=f"title of {article_id}",
        title_embedding=np.asarray(title, dtype=np.float64),
        sentence_texts=[f"{article_id} sentence {i}" for i in range(sentences.shape[0])],
        sentence_embeddings=sentences,
        trees=trees,
        label=label,
        sentence_labels=sentence_labels,
    )


def random_article(rng, article_id="a0", n_sentences=3, m_trees=2, dim=6, posts=3, label="fake"):
    trees = [
        make_tree(f"{article_id}-t{j}", rng.normal(size=(posts, dim)))
        for j in range(m_trees)
    ]
    return make_article(
        article_id,
        rng.normal(size=(n_sentences, dim)),
        trees,
        title=rng.normal(size=dim),
        label=label,
    )


def random_corpus(rng, num_articles=2, dim=6, **kwargs):
    labels = ["fake", "real"]
    articles = [
        random_article(rng, article_id=f"a{i}", dim=dim, label=labels[i % 2], **kwargs)
        for i in range(num_articles)
    ]
    return Corpus(articles, dim=dim)


def gradient_max_error(fn, arrays, epsilon=1e-6, loss_weights_seed=0):
    """Max relative error of analytic vs central-difference gradients.

    ``fn`` maps a ParamStore to a Tensor of any shape; the check reduces it
    to a scalar with fixed random weights so every output coordinate
    contributes.
    """
    store = ParamStore()
    for name, values in arrays.items():
        store.add(name, values)
    weights = {}
    rng = np.random.default_rng(loss_weights_seed)

    def loss_fn(params):
        out = fn(params)
        if "w" not in weights:
            weights["w"] = rng.normal(size=out.data.shape)
        from misinfo.autodiff import mul, tensor_sum

        return tensor_sum(mul(out, Tensor(weights["w"])))

    return finite_diff_check(loss_fn, store, epsilon=epsilon)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
