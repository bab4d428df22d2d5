"""Article-level encoding and aggregation of sentence predictions.

A trainable self-attention block (residual + feedforward, no normalization)
mixes the title with projected sentence states; attention of each output
against the title output weights the per-sentence predictions into the
article distribution [P(fake), P(real)].
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .sentence import MISINFORMING_INDEX

FAKE_INDEX = 0
REAL_INDEX = 1


def encoder_block(z: Tensor, params, prefix: str, heads: int = 1) -> Tensor:
    """One self-attention block: multi-head attention and a feedforward
    sublayer, each wrapped in an identity residual."""
    length, width = z.shape
    if width % heads != 0:
        raise ValueError(f"width {width} not divisible by {heads} heads")
    head_dim = width // heads
    wq, wk, wv, wo = (params[f"{prefix}.{n}"] for n in ("wq", "wk", "wv", "wo"))

    head_outputs = []
    scale = 1.0 / np.sqrt(head_dim)
    for h in range(heads):
        lo, hi = h * head_dim, (h + 1) * head_dim
        q = ad.matmul(z, ad.transpose(ad.slice_rows(wq, lo, hi)))
        k = ad.matmul(z, ad.transpose(ad.slice_rows(wk, lo, hi)))
        v = ad.matmul(z, ad.transpose(ad.slice_rows(wv, lo, hi)))
        weights = ad.softmax(scale * ad.matmul(q, ad.transpose(k)), axis=1)
        head_outputs.append(ad.matmul(weights, v))
    attended = head_outputs[0] if heads == 1 else ad.concat(head_outputs, axis=1)
    z = z + ad.matmul(attended, ad.transpose(wo))

    hidden = ad.relu(ad.matmul(z, ad.transpose(params[f"{prefix}.ffn_w1"])) + params[f"{prefix}.ffn_b1"])
    return z + ad.matmul(hidden, ad.transpose(params[f"{prefix}.ffn_w2"])) + params[f"{prefix}.ffn_b2"]


def global_encode(title: Tensor, combined_states: Tensor, params, blocks: int = 1, heads: int = 1):
    """Contextualize [title, sentences...] jointly.

    The double-width sentence states are linearly projected back to the
    title's width, stacked under the title, and passed through the encoder
    block(s).  Returns (title output, per-sentence outputs).
    """
    if combined_states.shape[0] < 1:
        raise ValueError("global_encode needs at least one sentence state")
    width = title.shape[0]
    projected = ad.matmul(combined_states, ad.transpose(params["proj"]))  # (I, d)
    seq = ad.concat([ad.reshape(title, (1, width)), projected], axis=0)
    for b in range(blocks):
        seq = encoder_block(seq, params, f"block{b}", heads=heads)
    title_out = ad.row(seq, 0)
    sentence_out = ad.slice_rows(seq, 1, seq.shape[0])
    return title_out, sentence_out


def aggregate(title_out: Tensor, sentence_out: Tensor, predictions: Tensor):
    """Attention-weighted combination of sentence predictions.

    alpha is the softmax of each sentence output's dot product with the
    title output; the article distribution is the alpha-weighted mixture of
    the per-sentence distributions (a convex combination).
    """
    alpha = ad.softmax(ad.matmul(sentence_out, title_out))
    return alpha, ad.matmul(alpha, predictions)


def aggregate_threshold_mil(predictions: np.ndarray) -> np.ndarray:
    """Hard bag rule: fake iff any sentence is misinforming above 0.5.

    Ties at exactly 0.5 count as clean (strict inequality).
    """
    p = np.asarray(predictions, dtype=np.float64)
    if np.any(p[:, MISINFORMING_INDEX] > 0.5):
        return np.array([1.0, 0.0])
    return np.array([0.0, 1.0])
