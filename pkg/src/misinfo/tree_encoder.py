"""Kernel-based post interaction encoding of conversation trees.

Each tree yields a matrix of neighbor cosine similarities, per-post
attention over the neighborhood (self-loop included), one or more rounds of
synchronous message passing, and a mean-pooled tree vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DegenerateInputError
from .kernels import KernelBank

_NORM_FLOOR = 1e-150


@dataclass
class SimilarityMatrix:
    """Per-tree post similarities restricted to the undirected neighborhood.

    ``values[p, q]`` is the cosine similarity of posts p and q when q is a
    neighbor of p (or p itself, fixed at 1.0) and exactly 0 otherwise;
    ``mask`` marks the neighborhood including self-loops.
    """

    values: np.ndarray
    mask: np.ndarray


@dataclass
class TreeCache:
    """Constant per-tree quantities reused across every forward pass."""

    tree_id: str
    embeddings: np.ndarray          # (P, d) raw post embeddings
    sim: SimilarityMatrix
    edge_features: np.ndarray       # (P*P, K) kernel activations of sim values
    node_features: np.ndarray       # (P, K) log-sum kernel activations per post
    dot_logits: np.ndarray          # (P, P) raw post-post dot products
    softmax_mask: np.ndarray        # (P, P) additive mask: 0 in-neighborhood, -inf outside

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]


@dataclass
class TreeEncoding:
    """Updated post vectors, pooled tree vector, and the attention trace."""

    posts: np.ndarray
    pooled: np.ndarray
    attention: np.ndarray


def similarity_matrix(embeddings: np.ndarray, neighbors: list[list[int]], where: str = "tree") -> SimilarityMatrix:
    """Neighbor cosine similarities with self-loops pinned to 1."""
    norms = np.linalg.norm(embeddings, axis=1)
    if np.any(norms < _NORM_FLOOR):
        bad = int(np.argmin(norms))
        raise DegenerateInputError(f"{where}: post {bad} has a zero-norm embedding")
    unit = embeddings / norms[:, None]
    cos = unit @ unit.T
    n = embeddings.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    for p, qs in enumerate(neighbors):
        mask[p, qs] = True
    np.fill_diagonal(mask, True)
    values = np.where(mask, cos, 0.0)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values=values, mask=mask)


def build_tree_cache(tree, bank: KernelBank) -> TreeCache:
    embeddings = np.stack([p.embedding for p in tree.posts]).astype(np.float64)
    sim = similarity_matrix(embeddings, tree.neighbor_lists(), where=f"tree {tree.id!r}")
    n = embeddings.shape[0]
    features = bank.features(sim.values)                       # (P, P, K)
    # Node-level variant: log of kernel activations summed over the
    # neighborhood (clamped away from log 0 for the exact-match kernel).
    masked = features * sim.mask[..., None]
    node_features = np.log(np.maximum(masked.sum(axis=1), 1e-300))
    softmax_mask = np.where(sim.mask, 0.0, -np.inf)
    return TreeCache(
        tree_id=tree.id,
        embeddings=embeddings,
        sim=sim,
        edge_features=features.reshape(n * n, bank.size),
        node_features=node_features,
        dot_logits=embeddings @ embeddings.T,
        softmax_mask=softmax_mask,
    )


def post_attention(
    cache: TreeCache,
    params,
    kernel: bool = True,
    node_level: bool = False,
) -> Tensor:
    """Row-stochastic attention of each post over its neighborhood.

    Kernel scoring maps each neighbor's kernel feature vector through the
    trainable (w1, b1); the dot-product variant scores neighbors by raw
    embedding dot products.  Rows are softmax-normalized over the
    neighborhood including the self-loop.
    """
    n = cache.size
    if kernel:
        if node_level:
            scores_per_post = ad.matmul(Tensor(cache.node_features), params["w1"]) + params["b1"]
            score_matrix = ad.tile_rows(scores_per_post, n)
        else:
            flat = ad.matmul(Tensor(cache.edge_features), params["w1"])
            score_matrix = ad.reshape(flat, (n, n)) + params["b1"]
    else:
        score_matrix = Tensor(cache.dot_logits)
    return ad.softmax(score_matrix, axis=1, mask=cache.softmax_mask)


def update_posts(embeddings, attention, rounds: int = 1) -> Tensor:
    """Synchronous message passing: each post becomes the attention-weighted
    combination of its neighborhood (self included)."""
    posts = embeddings if isinstance(embeddings, Tensor) else Tensor(embeddings)
    for _ in range(max(rounds, 1)):
        posts = ad.matmul(attention, posts)
    return posts


def pool_tree(posts) -> Tensor:
    """Elementwise mean of the updated post vectors."""
    posts_t = posts if isinstance(posts, Tensor) else Tensor(posts)
    return ad.mean(posts_t, axis=0)


def encode_tree(cache: TreeCache, params, config) -> tuple[Tensor, Tensor]:
    """Full tree encoding: returns (pooled vector, attention matrix)."""
    gamma = post_attention(
        cache,
        params,
        kernel=config.kernel_attention,
        node_level=config.node_level_kernels,
    )
    posts = update_posts(cache.embeddings, gamma, rounds=config.rounds)
    return pool_tree(posts), gamma
