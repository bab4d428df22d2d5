"""Synthetic corpus generation with planted sentence-level ground truth.

The geometry separates *topic* from *stance*: sentence embeddings are
(noisy) orthonormal topic directions, while conversation trees add a stance
component along a global axis orthogonal to every topic.  Clean sentences
get supportive trees loading positively on the stance axis; each
misinforming sentence gets (a) a debunking tree whose posts sit near an
evidence direction anticorrelated with the sentence vector and (b), budget
permitting, an on-topic disputing tree loading negatively on the stance
axis.  Neutral filler trees carry no stance.  Every tree also contains one
off-topic decoy post so that attention inside a tree has something to
discount.  A brute-force nearest-evidence oracle checks the planted signal
after generation.
"""

from __future__ import annotations

import numpy as np

from .data import (
    Article,
    ConversationTree,
    Corpus,
    LABEL_FAKE,
    LABEL_REAL,
    Post,
    SENTENCE_CLEAN,
    SENTENCE_MISINFORMING,
)
from .errors import ConfigError

# On-topic alignment of supportive / disputing trees with their sentence,
# and the (anticorrelated) alignment of a debunking tree.
TOPIC_ALIGN = 0.75
STANCE_LOAD = float(np.sqrt(1.0 - TOPIC_ALIGN**2))
DEBUNK_ALIGN = -0.40
DEBUNK_LOAD = float(np.sqrt(1.0 - DEBUNK_ALIGN**2))
# Neutral directions are rejected until nearly orthogonal to every topic.
NEUTRAL_MAX_COS = 0.10
# Nearest-evidence oracle: flag a sentence when some tree's mean-pooled
# vector is anticorrelated below this threshold.
ORACLE_THRESHOLD = -0.25

_MAX_REJECTION_DRAWS = 20000


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return _unit(rng.standard_normal(dim))


def _orthonormal_topics(rng, dim, count, axis):
    """`count` orthonormal unit vectors, all orthogonal to ``axis``."""
    raw = rng.standard_normal((dim, count))
    raw -= np.outer(axis, axis @ raw)
    q, r = np.linalg.qr(raw)
    # Fix signs so the decomposition is unambiguous across BLAS builds.
    q = q * np.sign(np.diag(r))
    return [q[:, i] for i in range(count)]


def _neutral_direction(rng, dim, axis, topics):
    """Unit vector orthogonal to the stance axis, nearly orthogonal to topics."""
    for _ in range(_MAX_REJECTION_DRAWS):
        v = rng.standard_normal(dim)
        v -= (v @ axis) * axis
        norm = np.linalg.norm(v)
        if norm < 1e-9:
            continue
        v /= norm
        if all(abs(v @ t) < NEUTRAL_MAX_COS for t in topics):
            return v
    raise ConfigError(
        f"could not sample a near-orthogonal direction in dim {dim};"
        " increase the embedding dimension"
    )


def _noisy_unit(rng, direction, noise):
    if noise == 0.0:
        return direction.copy()
    return _unit(direction + noise * _random_unit(rng, direction.size))


def _make_tree(rng, tree_id, direction, decoy_direction, noise, min_posts, max_posts):
    """Random reply cascade whose posts sit near ``direction`` plus one decoy."""
    n_posts = int(rng.integers(min_posts, max_posts + 1))
    decoy_index = int(rng.integers(1, n_posts)) if n_posts > 1 else -1
    posts = []
    for k in range(n_posts):
        base = decoy_direction if k == decoy_index else direction
        posts.append(
            Post(
                id=f"{tree_id}-p{k}",
                parent_id=None if k == 0 else f"{tree_id}-p{int(rng.integers(0, k))}",
                embedding=_noisy_unit(rng, base, noise),
            )
        )
    return ConversationTree(id=tree_id, posts=posts)


def tree_mean(tree: ConversationTree) -> np.ndarray:
    return np.mean([p.embedding for p in tree.posts], axis=0)


def nearest_evidence_f1(corpus: Corpus) -> float:
    """Sentence F1 of a brute-force nearest-evidence classifier.

    For every sentence it scans all trees in the article, mean-pools raw
    post embeddings, and flags the sentence as misinforming when the most
    anticorrelated tree falls below ``ORACLE_THRESHOLD``.  Independent of
    the model: no parameters, no attention, no linking.
    """
    tp = fp = fn = 0
    for article in corpus.articles:
        labels = article.sentence_labels
        if labels is None:
            continue
        pooled = [tree_mean(t) for t in article.trees]
        for i in range(article.n_sentences):
            s = article.sentence_embeddings[i]
            worst = 0.0
            for vec in pooled:
                c = float(s @ vec / (np.linalg.norm(s) * np.linalg.norm(vec)))
                worst = min(worst, c)
            predicted_mis = worst < ORACLE_THRESHOLD
            actual_mis = labels[i] == SENTENCE_MISINFORMING
            if predicted_mis and actual_mis:
                tp += 1
            elif predicted_mis:
                fp += 1
            elif actual_mis:
                fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def generate_synthetic(
    num_articles: int,
    n_sentences: int = 5,
    m_trees: int = 8,
    dim: int = 32,
    misinform_rate: float = 0.4,
    noise: float = 0.1,
    seed: int = 0,
    fake_fraction: float = 0.5,
    min_posts: int = 4,
    max_posts: int = 7,
    self_check: bool = True,
) -> Corpus:
    """Deterministic synthetic corpus with planted misinforming sentences.

    Fake articles carry at least one misinforming sentence, each backed by
    an anticorrelated debunking tree; real articles contain none.  The
    topic/stance geometry needs ``dim > n_sentences``.  At noise level 0
    the nearest-evidence oracle must reach sentence F1 >= 0.9 (self-check).
    """
    if num_articles < 1 or n_sentences < 1 or m_trees < 1:
        raise ConfigError("num_articles, n_sentences and m_trees must all be >= 1")
    if dim <= n_sentences:
        raise ConfigError(
            f"dim must exceed n_sentences to fit orthogonal topics (got dim={dim}, n={n_sentences})"
        )
    if not (0.0 < misinform_rate < 1.0):
        raise ConfigError("misinform_rate must lie strictly inside (0, 1)")
    if not (0.0 < fake_fraction < 1.0):
        raise ConfigError("fake_fraction must lie strictly inside (0, 1)")
    if noise < 0.0:
        raise ConfigError("noise must be >= 0")
    if not (1 <= min_posts <= max_posts):
        raise ConfigError("need 1 <= min_posts <= max_posts")

    rng = np.random.default_rng([seed, 0x5EED])
    stance_axis = _random_unit(rng, dim)

    n_fake = int(round(num_articles * fake_fraction))
    n_fake = min(max(n_fake, 1), num_articles - 1) if num_articles > 1 else 1
    is_fake = np.zeros(num_articles, dtype=bool)
    is_fake[:n_fake] = True
    rng.shuffle(is_fake)

    articles = []
    for a in range(num_articles):
        article_id = f"a{a:05d}"
        fake = bool(is_fake[a])
        topics = _orthonormal_topics(rng, dim, n_sentences, stance_axis)

        mis_flags = np.zeros(n_sentences, dtype=bool)
        if fake:
            mis_flags = rng.random(n_sentences) < misinform_rate
            if not mis_flags.any():
                mis_flags[int(rng.integers(0, n_sentences))] = True
            # Every misinforming sentence needs its own debunking tree.
            over = int(mis_flags.sum()) - m_trees
            if over > 0:
                drop = rng.choice(np.flatnonzero(mis_flags), size=over, replace=False)
                mis_flags[drop] = False

        # Priority under the tree budget: mandatory debunking trees, then
        # on-topic disputing trees for misinforming sentences, supportive
        # trees for clean sentences, then neutral filler.
        tree_dirs = []
        for i in np.flatnonzero(mis_flags):
            tree_dirs.append(DEBUNK_ALIGN * topics[i] - DEBUNK_LOAD * stance_axis)
        for i in rng.permutation(np.flatnonzero(mis_flags)):
            if len(tree_dirs) >= m_trees:
                break
            tree_dirs.append(TOPIC_ALIGN * topics[i] - STANCE_LOAD * stance_axis)
        for i in rng.permutation(np.flatnonzero(~mis_flags)):
            if len(tree_dirs) >= m_trees:
                break
            tree_dirs.append(TOPIC_ALIGN * topics[i] + STANCE_LOAD * stance_axis)
        while len(tree_dirs) < m_trees:
            tree_dirs.append(_neutral_direction(rng, dim, stance_axis, topics))
        tree_dirs = [tree_dirs[j] for j in rng.permutation(len(tree_dirs))]

        trees = []
        for j, direction in enumerate(tree_dirs):
            decoy = _neutral_direction(rng, dim, stance_axis, topics)
            trees.append(
                _make_tree(rng, f"{article_id}-t{j}", direction, decoy, noise, min_posts, max_posts)
            )

        sentences = np.stack([_noisy_unit(rng, t, noise) for t in topics])
        title = _noisy_unit(rng, _unit(np.mean(topics, axis=0)), noise)
        articles.append(
            Article(
                id=article_id,
                title_text=f"synthetic article {a}",
                title_embedding=title,
                sentence_texts=[f"sentence {i} of article {a}" for i in range(n_sentences)],
                sentence_embeddings=sentences,
                trees=trees,
                label=LABEL_FAKE if fake else LABEL_REAL,
                sentence_labels=[
                    SENTENCE_MISINFORMING if m else SENTENCE_CLEAN for m in mis_flags
                ],
            )
        )

    corpus = Corpus(articles, dim=dim, source="synthetic", seed=seed)
    corpus.validate()
    corpus.reset_sentence_label_audit()

    if self_check and noise == 0.0:
        f1 = nearest_evidence_f1(corpus)
        corpus.reset_sentence_label_audit()
        if f1 < 0.9:
            raise RuntimeError(
                f"generator self-check failed: nearest-evidence sentence F1 {f1:.3f} < 0.9"
            )
    return corpus
