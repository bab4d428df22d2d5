"""Threshold linking between article sentences and conversation trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateInputError

_NORM_FLOOR = 1e-150

TAU_RANGE_MIDPOINT = "range-midpoint"
TAU_MEDIAN = "median"
TAU_OFF = "off"
TAU_MODES = (TAU_RANGE_MIDPOINT, TAU_MEDIAN, TAU_OFF)

LINK_THRESHOLD = "threshold"
LINK_FULL = "full"
LINK_MODES = (LINK_THRESHOLD, LINK_FULL)


@dataclass
class LinkGraph:
    """Bipartite sentence-tree edges for one article."""

    edges: list[tuple[int, int]]
    per_sentence: list[np.ndarray]
    tau: float | None
    mode: str
    scores: np.ndarray = field(repr=False, default=None)

    @property
    def unlinked_sentences(self) -> list[int]:
        return [i for i, trees in enumerate(self.per_sentence) if trees.size == 0]

    def dump(self, fh, article_id: str = ""):
        """Diagnostic dump: one 'sentence <tab> tree <tab> score' line per edge."""
        prefix = f"{article_id}\t" if article_id else ""
        for i, j in self.edges:
            score = float(self.scores[i, j]) if self.scores is not None else float("nan")
            fh.write(f"{prefix}{i}\t{j}\t{score:.6f}\n")


def similarity_table(sentence_embeddings: np.ndarray, tree_vectors: np.ndarray) -> np.ndarray:
    """n x m cosine similarities between sentences and encoded trees."""
    s = np.asarray(sentence_embeddings, dtype=np.float64)
    t = np.asarray(tree_vectors, dtype=np.float64)
    if t.size == 0:
        return np.zeros((s.shape[0], 0))
    s_norm = np.linalg.norm(s, axis=1)
    t_norm = np.linalg.norm(t, axis=1)
    if np.any(s_norm < _NORM_FLOOR):
        raise DegenerateInputError(f"sentence {int(np.argmin(s_norm))} has a zero-norm embedding")
    if np.any(t_norm < _NORM_FLOOR):
        raise DegenerateInputError(f"tree vector {int(np.argmin(t_norm))} has zero norm")
    return (s / s_norm[:, None]) @ (t / t_norm[:, None]).T


def compute_tau(scores, mode: str = TAU_RANGE_MIDPOINT) -> float | None:
    """Global linking threshold from the population of similarity scores.

    The default maps the threshold to the midpoint of the score range,
    (min + max) / 2; ``median`` uses the statistical median instead; ``off``
    disables thresholding (None).
    """
    if mode not in TAU_MODES:
        raise ConfigError(f"unknown tau mode {mode!r}; expected one of {TAU_MODES}")
    if mode == TAU_OFF:
        return None
    flat = np.asarray(scores, dtype=np.float64).reshape(-1)
    if flat.size == 0:
        raise DegenerateInputError("tau of an empty score population")
    if mode == TAU_MEDIAN:
        return float(np.median(flat))
    return float((flat.min() + flat.max()) / 2.0)


def build_links(scores: np.ndarray, tau: float | None, mode: str = LINK_THRESHOLD) -> LinkGraph:
    """Keep edges scoring strictly above tau; ``full`` keeps all n*m edges."""
    if mode not in LINK_MODES:
        raise ConfigError(f"unknown link mode {mode!r}; expected one of {LINK_MODES}")
    scores = np.asarray(scores, dtype=np.float64)
    n, m = scores.shape
    per_sentence = []
    edges = []
    for i in range(n):
        if mode == LINK_FULL or tau is None:
            linked = np.arange(m, dtype=np.intp)
        else:
            linked = np.flatnonzero(scores[i] > tau).astype(np.intp)
        per_sentence.append(linked)
        edges.extend((i, int(j)) for j in linked)
    return LinkGraph(edges=edges, per_sentence=per_sentence, tau=tau, mode=mode, scores=scores)
