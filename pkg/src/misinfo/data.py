"""Data model and file ingestion for articles, conversation trees, and corpora.

Corpus files are JSON-lines: the first record is a metadata header declaring
the embedding dimension and provenance, followed by one article per line.
Missing embeddings are filled deterministically with :func:`hash_embed`.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CyclicTreeError,
    DanglingParentError,
    DegenerateInputError,
    DimensionMismatchError,
    MalformedRecordError,
)

LABEL_FAKE = "fake"
LABEL_REAL = "real"
ARTICLE_LABELS = (LABEL_FAKE, LABEL_REAL)

SENTENCE_MISINFORMING = "misinforming"
SENTENCE_CLEAN = "clean"
SENTENCE_LABELS = (SENTENCE_MISINFORMING, SENTENCE_CLEAN)

META_KIND = "corpus-meta"

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def hash_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic fallback embedding via signed token hashing.

    Tokens are hashed into ``dim`` buckets with a sign bit, counts are
    accumulated, and the vector is L2-normalized.  Identical text gives a
    bitwise-identical vector on every platform.
    """
    if dim < 2:
        raise DegenerateInputError(f"hash_embed needs dim >= 2, got {dim}")
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise DegenerateInputError("hash_embed of text with no tokens")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        h = int.from_bytes(digest, "big")
        sign = 1.0 if (h >> 60) & 1 else -1.0
        vec[h % dim] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise DegenerateInputError("hash_embed produced a zero vector (all buckets cancelled)")
    return vec / norm


@dataclass
class Post:
    id: str
    parent_id: str | None = None
    text: str = ""
    embedding: np.ndarray | None = None


@dataclass
class ConversationTree:
    """A reply cascade: posts plus parent links, read as an undirected graph."""

    id: str
    posts: list[Post] = field(default_factory=list)

    def __len__(self):
        return len(self.posts)

    def neighbor_lists(self) -> list[list[int]]:
        """Undirected adjacency derived from parent-child edges."""
        index = {post.id: i for i, post in enumerate(self.posts)}
        neighbors: list[list[int]] = [[] for _ in self.posts]
        for i, post in enumerate(self.posts):
            if post.parent_id is not None:
                j = index[post.parent_id]
                neighbors[i].append(j)
                neighbors[j].append(i)
        return neighbors

    def validate(self, where: str = ""):
        loc = f"{where}tree {self.id!r}"
        if not self.posts:
            raise MalformedRecordError(f"{loc}: has no posts")
        ids = [p.id for p in self.posts]
        if len(set(ids)) != len(ids):
            raise MalformedRecordError(f"{loc}: duplicate post ids")
        index = {pid: i for i, pid in enumerate(ids)}
        roots = [p for p in self.posts if p.parent_id is None]
        if len(roots) != 1:
            raise MalformedRecordError(f"{loc}: expected exactly one root post, found {len(roots)}")
        for post in self.posts:
            if post.parent_id is not None and post.parent_id not in index:
                raise DanglingParentError(
                    f"{loc}: post {post.id!r} references missing parent {post.parent_id!r}"
                )
        children: dict[int, list[int]] = {i: [] for i in range(len(self.posts))}
        for i, post in enumerate(self.posts):
            if post.parent_id is not None:
                children[index[post.parent_id]].append(i)
        seen = set()
        frontier = [index[roots[0].id]]
        while frontier:
            node = frontier.pop()
            if node in seen:
                raise CyclicTreeError(f"{loc}: cycle involving post {self.posts[node].id!r}")
            seen.add(node)
            frontier.extend(children[node])
        if len(seen) != len(self.posts):
            missing = [p.id for i, p in enumerate(self.posts) if i not in seen]
            raise CyclicTreeError(f"{loc}: posts unreachable from root (cycle): {missing}")


class Article:
    """One news article: title, ordered sentences, linked conversation trees.

    The article-level label drives training; per-sentence labels, when
    present, are evaluation-only and every read is counted so tests can
    audit that the training path never touches them.
    """

    def __init__(
        self,
        id: str,
        title_text: str,
        title_embedding: np.ndarray,
        sentence_texts: list[str],
        sentence_embeddings: np.ndarray,
        trees: list[ConversationTree],
        label: str | None = None,
        sentence_labels: list[str] | None = None,
    ):
        self.id = id
        self.title_text = title_text
        self.title_embedding = np.asarray(title_embedding, dtype=np.float64)
        self.sentence_texts = list(sentence_texts)
        self.sentence_embeddings = np.asarray(sentence_embeddings, dtype=np.float64)
        self.trees = list(trees)
        self.label = label
        self._sentence_labels = list(sentence_labels) if sentence_labels is not None else None
        self.sentence_label_reads = 0

    @property
    def n_sentences(self) -> int:
        return len(self.sentence_texts)

    @property
    def has_sentence_labels(self) -> bool:
        return self._sentence_labels is not None

    @property
    def sentence_labels(self) -> list[str] | None:
        """Evaluation-only ground truth; each access is audited."""
        self.sentence_label_reads += 1
        return self._sentence_labels

    def validate(self):
        loc = f"article {self.id!r}"
        if self.n_sentences < 1:
            raise MalformedRecordError(f"{loc}: needs at least one sentence")
        if self.sentence_embeddings.shape[0] != self.n_sentences:
            raise MalformedRecordError(f"{loc}: sentence embedding count mismatch")
        if self.label is not None and self.label not in ARTICLE_LABELS:
            raise MalformedRecordError(f"{loc}: unknown label {self.label!r}")
        if self._sentence_labels is not None:
            if len(self._sentence_labels) != self.n_sentences:
                raise MalformedRecordError(f"{loc}: sentence label count mismatch")
            for lab in self._sentence_labels:
                if lab not in SENTENCE_LABELS:
                    raise MalformedRecordError(f"{loc}: unknown sentence label {lab!r}")
        for tree in self.trees:
            tree.validate(where=f"{loc}: ")


class Corpus:
    """Immutable-after-load collection of articles with one shared dimension."""

    def __init__(self, articles: list[Article], dim: int, source: str = "", seed: int | None = None):
        self.articles = list(articles)
        self.dim = int(dim)
        self.source = source
        self.seed = seed

    def __len__(self):
        return len(self.articles)

    def validate(self):
        for article in self.articles:
            article.validate()
            self._check_dim(article)

    def _check_dim(self, article: Article):
        loc = f"article {article.id!r}"
        if article.title_embedding.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{loc}: title embedding has dim {article.title_embedding.shape}, corpus dim is {self.dim}"
            )
        if article.sentence_embeddings.shape != (article.n_sentences, self.dim):
            raise DimensionMismatchError(
                f"{loc}: sentence embeddings have shape {article.sentence_embeddings.shape},"
                f" corpus dim is {self.dim}"
            )
        for tree in article.trees:
            for post in tree.posts:
                if post.embedding is None or post.embedding.shape != (self.dim,):
                    raise DimensionMismatchError(
                        f"{loc}: tree {tree.id!r} post {post.id!r} embedding does not match dim {self.dim}"
                    )

    def subset(self, indices) -> "Corpus":
        """New corpus view over a subset of articles (articles are shared)."""
        picked = [self.articles[i] for i in indices]
        return Corpus(picked, dim=self.dim, source=self.source, seed=self.seed)

    def total_sentence_label_reads(self) -> int:
        return sum(a.sentence_label_reads for a in self.articles)

    def reset_sentence_label_audit(self):
        for a in self.articles:
            a.sentence_label_reads = 0


def _embedding_from(record: dict, text_key: str, emb_key: str, dim: int, loc: str) -> np.ndarray:
    emb = record.get(emb_key)
    if emb is not None:
        arr = np.asarray(emb, dtype=np.float64)
        if arr.ndim != 1:
            raise MalformedRecordError(f"{loc}: embedding must be a flat list of numbers")
        if arr.shape[0] != dim:
            raise DimensionMismatchError(f"{loc}: embedding has dim {arr.shape[0]}, expected {dim}")
        return arr
    text = record.get(text_key)
    if not text:
        raise MalformedRecordError(f"{loc}: needs either an embedding or non-empty text")
    return hash_embed(text, dim)


def _parse_article(record: dict, dim: int, line_no: int) -> Article:
    loc = f"line {line_no}"
    if not isinstance(record, dict):
        raise MalformedRecordError(f"{loc}: article record must be an object")
    try:
        article_id = record["id"]
        title = record["title"]
        sentences = record["sentences"]
    except KeyError as exc:
        raise MalformedRecordError(f"{loc}: missing required field {exc.args[0]!r}") from None
    loc = f"line {line_no}, article {article_id!r}"
    if not isinstance(sentences, list) or not sentences:
        raise MalformedRecordError(f"{loc}: 'sentences' must be a non-empty list")

    title_emb = _embedding_from(title, "text", "embedding", dim, f"{loc}: title")
    sent_texts, sent_embs = [], []
    sent_labels: list[str] | None = None
    if any("label" in s for s in sentences):
        sent_labels = []
    for k, sent in enumerate(sentences):
        sent_texts.append(sent.get("text", ""))
        sent_embs.append(_embedding_from(sent, "text", "embedding", dim, f"{loc}: sentence {k}"))
        if sent_labels is not None:
            label = sent.get("label")
            if label is None:
                raise MalformedRecordError(f"{loc}: sentence {k} missing label while others have one")
            sent_labels.append(label)

    trees = []
    for t in record.get("trees", []):
        tree_loc = f"{loc}: tree {t.get('id')!r}"
        posts = []
        for p in t.get("posts", []):
            posts.append(
                Post(
                    id=p["id"],
                    parent_id=p.get("parent"),
                    text=p.get("text", ""),
                    embedding=_embedding_from(p, "text", "embedding", dim, f"{tree_loc}: post {p.get('id')!r}"),
                )
            )
        trees.append(ConversationTree(id=t.get("id", f"{article_id}-t{len(trees)}"), posts=posts))

    return Article(
        id=article_id,
        title_text=title.get("text", ""),
        title_embedding=title_emb,
        sentence_texts=sent_texts,
        sentence_embeddings=np.stack(sent_embs),
        trees=trees,
        label=record.get("label"),
        sentence_labels=sent_labels,
    )


def load_corpus(path, dim: int | None = None) -> Corpus:
    """Read and eagerly validate a JSONL corpus file.

    ``dim`` overrides / substitutes the header's declared dimension; it is
    required when the file has no metadata header.
    """
    articles = []
    source = ""
    seed = None
    header_dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            if line_no == 1 and isinstance(record, dict) and record.get("kind") == META_KIND:
                header_dim = record.get("dim")
                source = record.get("source", "")
                seed = record.get("seed")
                continue
            effective_dim = dim if dim is not None else header_dim
            if effective_dim is None:
                raise MalformedRecordError(
                    "corpus file has no metadata header; pass an explicit embedding dimension"
                )
            articles.append(_parse_article(record, int(effective_dim), line_no))
    if not articles:
        raise MalformedRecordError(f"{path}: corpus contains no articles")
    corpus = Corpus(articles, dim=int(dim if dim is not None else header_dim), source=source, seed=seed)
    corpus.validate()
    return corpus


def write_corpus(corpus: Corpus, path):
    """Serialize a corpus; load_corpus(write_corpus(c)) reproduces c exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        meta = {"kind": META_KIND, "dim": corpus.dim, "source": corpus.source, "seed": corpus.seed}
        fh.write(json.dumps(meta) + "\n")
        for article in corpus.articles:
            record = {
                "id": article.id,
                "title": {"text": article.title_text, "embedding": article.title_embedding.tolist()},
                "sentences": [
                    {"text": text, "embedding": emb.tolist()}
                    for text, emb in zip(article.sentence_texts, article.sentence_embeddings)
                ],
                "trees": [
                    {
                        "id": tree.id,
                        "posts": [
                            {
                                "id": post.id,
                                **({"parent": post.parent_id} if post.parent_id is not None else {}),
                                "text": post.text,
                                "embedding": post.embedding.tolist(),
                            }
                            for post in tree.posts
                        ],
                    }
                    for tree in article.trees
                ],
            }
            if article.label is not None:
                record["label"] = article.label
            if article._sentence_labels is not None:
                for sent, lab in zip(record["sentences"], article._sentence_labels):
                    sent["label"] = lab
            fh.write(json.dumps(record) + "\n")
