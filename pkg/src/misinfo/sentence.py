"""Socially contextualized sentence states and per-sentence predictions.

A sentence's linked trees are attention-pooled into a context vector which
is concatenated onto the raw sentence embedding; a linear layer over both
halves yields the 2-class distribution [P(misinforming), P(clean)].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

MISINFORMING_INDEX = 0
CLEAN_INDEX = 1


@dataclass
class SentenceState:
    """Per-sentence forward state prior to classification."""

    embedding: np.ndarray          # (d,) raw sentence embedding
    context: Tensor                # (d,) attention-pooled linked-tree summary
    combined: Tensor               # (2d,) context concatenated with embedding
    tree_attention: Tensor | None  # distribution over linked trees, None if unlinked
    linked: np.ndarray             # indices of linked trees


def contextualize_sentence(sentence_embedding: np.ndarray, tree_matrix: Tensor | None, linked) -> SentenceState:
    """Build the sentence state from its linked trees.

    Attention over the linked trees uses dot-product scores against the raw
    sentence embedding; with no links the context is the zero vector and the
    prediction falls back to the bare embedding.
    """
    s = np.asarray(sentence_embedding, dtype=np.float64)
    linked = np.asarray(linked, dtype=np.intp)
    if tree_matrix is None or linked.size == 0:
        context = Tensor(np.zeros_like(s))
        beta = None
    else:
        chosen = ad.take_rows(tree_matrix, linked)       # (k, d)
        scores = ad.matmul(chosen, Tensor(s))            # (k,)
        beta = ad.softmax(scores)
        context = ad.matmul(beta, chosen)                # (d,)
    combined = ad.concat([context, Tensor(s)])
    return SentenceState(
        embedding=s,
        context=context,
        combined=combined,
        tree_attention=beta,
        linked=linked,
    )


def predict_sentence(state: SentenceState, params) -> Tensor:
    """2-class distribution for one sentence (index 0 = misinforming)."""
    logits = (
        ad.matmul(params["w2"], state.combined)
        + ad.matmul(params["w3"], Tensor(state.embedding))
        + params["b2"]
    )
    return ad.softmax(logits)


def predict_sentences(states: list[SentenceState], params) -> Tensor:
    """Batched predictions, one row per state; matches predict_sentence."""
    combined = ad.stack([st.combined for st in states])                 # (I, 2d)
    raw = Tensor(np.stack([st.embedding for st in states]))             # (I, d)
    logits = (
        ad.matmul(combined, ad.transpose(params["w2"]))
        + ad.matmul(raw, ad.transpose(params["w3"]))
        + params["b2"]
    )
    return ad.softmax(logits, axis=1)
