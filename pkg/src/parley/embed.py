"""Static word-embedding tables, cosine similarity, neighbour search and
document pooling.

Two document-vector backends share one interface (``pool(comments)``):
:class:`StaticPooling` averages table vectors over a text's tokens, and
:class:`Precomputed` averages externally produced per-comment vectors
(e.g. from a transformer run outside this package).
"""

from __future__ import annotations

import csv
import gzip
import io
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Comment, tokenize
from .errors import DimensionMismatch, MissingVector, ParseError, UnknownTerm, ZeroVector

log = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = resources.files("parley").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path: str | Path | None) -> frozenset[str]:
    if path is None:
        return default_stopwords()
    text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


class EmbeddingTable:
    """Immutable term -> vector map backed by one ``(size, dimension)`` array."""

    def __init__(self, terms: Sequence[str], vectors):
        vectors = np.array(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] != len(terms):
            raise ValueError("vectors must be a (len(terms), d) array")
        if any(not t for t in terms):
            raise ValueError("empty term")
        index = {t: i for i, t in enumerate(terms)}
        if len(index) != len(terms):
            raise ValueError("duplicate terms")
        self.terms: tuple[str, ...] = tuple(terms)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.index = index
        self.norms = np.sqrt(np.einsum("ij,ij->i", vectors, vectors))
        self._unit = None
        if not np.any(self.norms > 0):
            raise ValueError("embedding table has no nonzero vector")

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, term) -> bool:
        return term in self.index

    def __getitem__(self, term: str) -> np.ndarray:
        try:
            return self.vectors[self.index[term]]
        except KeyError:
            raise UnknownTerm(term) from None

    def scaled(self, factor: float) -> EmbeddingTable:
        return EmbeddingTable(self.terms, self.vectors * factor)

    def unit_vectors(self) -> np.ndarray:
        if self._unit is None:
            out = np.zeros_like(self.vectors)
            nz = self.norms > 0
            out[nz] = self.vectors[nz] / self.norms[nz, None]
            out.setflags(write=False)
            self._unit = out
        return self._unit


def _open_text(path: str | Path):
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def load_table(path: str | Path) -> EmbeddingTable:
    """Read a GloVe-style text table: ``term v1 ... vd`` per line.

    The dimension comes from the first vector line.  A leading word2vec
    ``<count> <dim>`` header is skipped.  ``.gz`` files are decompressed.
    """
    source = str(path)
    entries: dict[str, np.ndarray] = {}
    dim = None
    with _open_text(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip("\r").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                raise ParseError(line_no, "term without vector", source)
            try:
                vec = np.array(parts[1:], dtype=float)
            except ValueError:
                raise ParseError(line_no, "non-numeric vector component", source) from None
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise DimensionMismatch(line_no, dim, vec.size, source)
            term = parts[0]
            if term in entries:
                log.warning("%s:%d: duplicate term %r, keeping the last", source, line_no, term)
                del entries[term]
            entries[term] = vec
    if not entries:
        raise ParseError(0, "empty embedding file", source)
    terms = list(entries)
    return EmbeddingTable(terms, np.vstack([entries[t] for t in terms]))


def write_table(table: EmbeddingTable, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for term, vec in zip(table.terms, table.vectors):
            fh.write(term + " " + " ".join(repr(float(x)) for x in vec) + "\n")
    return path


def cosine(u, v) -> float:
    """Cosine similarity.  Raises :class:`ZeroVector` if either norm is 0."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    su, sv = np.max(np.abs(u), initial=0.0), np.max(np.abs(v), initial=0.0)
    if su == 0.0 or sv == 0.0:
        raise ZeroVector("cosine of a zero vector")
    # rescale first so tiny or huge magnitudes neither underflow nor overflow
    u, v = u / su, v / sv
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    # sqrt(uu * vv) rather than |u||v| so that cosine(u, u) is exactly 1
    c = float(np.dot(u, v)) / math.sqrt(uu * vv)
    return min(1.0, max(-1.0, c))


@dataclass(frozen=True)
class Neighborhood:
    term: str
    neighbors: list[tuple[str, float]]
    threshold: float
    raised: bool
    count_at_min: int


def search_neighbors(
    table: EmbeddingTable,
    term: str,
    min_sim: float = 0.4,
    raise_to: float = 0.6,
    cap: int = 1000,
) -> Neighborhood:
    """All other terms with cosine >= *min_sim*; when more than *cap* pass,
    the threshold is raised to *raise_to* and the search repeated."""
    if term not in table:
        raise UnknownTerm(term)
    i = table.index[term]
    if table.norms[i] == 0:
        log.warning("term %r has a zero vector; no neighbours", term)
        return Neighborhood(term, [], min_sim, False, 0)
    unit = table.unit_vectors()
    sims = unit @ unit[i]
    valid = table.norms > 0
    valid[i] = False
    count = int(np.count_nonzero(valid & (sims >= min_sim)))
    threshold, raised = min_sim, False
    if count > cap:
        threshold, raised = raise_to, True
    hits = np.flatnonzero(valid & (sims >= threshold))
    found = sorted(((table.terms[j], float(min(1.0, sims[j]))) for j in hits), key=lambda p: (-p[1], p[0]))
    return Neighborhood(term, found, threshold, raised, count)


def neighbors(
    table: EmbeddingTable,
    term: str,
    min_sim: float = 0.4,
    raise_to: float = 0.6,
    cap: int = 1000,
) -> list[tuple[str, float]]:
    return search_neighbors(table, term, min_sim, raise_to, cap).neighbors


@dataclass(frozen=True)
class PoolingOptions:
    remove_stopwords: bool = True
    stopword_list: frozenset[str] | None = None

    def __post_init__(self):
        if self.remove_stopwords and self.stopword_list is None:
            object.__setattr__(self, "stopword_list", default_stopwords())
        elif self.stopword_list is not None:
            object.__setattr__(self, "stopword_list", frozenset(self.stopword_list))


def pooled_sum(table: EmbeddingTable, tokens: Iterable[str], opts: PoolingOptions | None = None):
    """(sum of vectors, contributing token count) over in-vocabulary,
    non-stopword tokens."""
    opts = opts or PoolingOptions()
    stop = opts.stopword_list if opts.remove_stopwords else frozenset()
    rows = [table.index[t] for t in tokens if t in table.index and t not in stop]
    if not rows:
        return np.zeros(table.dimension), 0
    return table.vectors[rows].sum(axis=0), len(rows)


def pool_text(table: EmbeddingTable, tokens: Iterable[str], opts: PoolingOptions | None = None):
    """Mean vector of the surviving tokens, or ``None`` (no data)."""
    total, n = pooled_sum(table, tokens, opts)
    if n == 0:
        return None
    return total / n


class StaticPooling:
    """Document vectors as means of static word vectors."""

    name = "static"

    def __init__(self, table: EmbeddingTable, opts: PoolingOptions | None = None):
        self.table = table
        self.opts = opts or PoolingOptions()
        self._cache: dict[tuple[int, str], tuple[np.ndarray, int]] = {}

    def comment_sum(self, c: Comment) -> tuple[np.ndarray, int]:
        key = (c.id, c.text)
        hit = self._cache.get(key)
        if hit is None:
            hit = pooled_sum(self.table, tokenize(c.text), self.opts)
            self._cache[key] = hit
        return hit

    def pool(self, comments: Iterable[Comment]):
        """(mean vector or None, contributing token count)."""
        total = np.zeros(self.table.dimension)
        n = 0
        for c in comments:
            s, k = self.comment_sum(c)
            if k:
                total = total + s
                n += k
        if n == 0:
            return None, 0
        return total / n, n


@dataclass
class DocVectorStore:
    dimension: int
    entries: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, comment_id: int) -> np.ndarray:
        try:
            return self.entries[comment_id]
        except KeyError:
            raise MissingVector(comment_id) from None

    def validate(self, corpus: Iterable[Comment]) -> None:
        for c in corpus:
            if c.id not in self.entries:
                raise MissingVector(c.id)


def load_doc_vectors(path: str | Path) -> DocVectorStore:
    """Read ``id,v1,...,vd`` CSV rows (header required)."""
    source = str(path)
    entries: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "id" or len(header) < 2:
            raise ParseError(1, "expected header 'id,v1,...,vd'", source)
        dim = len(header) - 1
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) - 1 != dim:
                raise DimensionMismatch(line_no, dim, len(row) - 1, source)
            try:
                cid = int(row[0])
                vec = np.array(row[1:], dtype=float)
            except ValueError:
                raise ParseError(line_no, "non-numeric field", source) from None
            entries[cid] = vec
    return DocVectorStore(dim, entries)


def write_doc_vectors(store: DocVectorStore, path: str | Path) -> Path:
    header = ["id"] + [f"v{i + 1}" for i in range(store.dimension)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for cid in sorted(store.entries):
            w.writerow([cid] + [repr(float(x)) for x in store.entries[cid]])
    return Path(path)


class Precomputed:
    """Document vectors read from a :class:`DocVectorStore`; a group of
    comments pools to the token-count-weighted mean of their vectors."""

    name = "precomputed"

    def __init__(self, store: DocVectorStore):
        self.store = store

    def comment_sum(self, c: Comment) -> tuple[np.ndarray, int]:
        vec = self.store[c.id]
        n = len(tokenize(c.text))
        return vec * n, n

    def pool(self, comments: Iterable[Comment]):
        total = np.zeros(self.store.dimension)
        n = 0
        for c in comments:
            s, k = self.comment_sum(c)
            if k:
                total = total + s
                n += k
        if n == 0:
            return None, 0
        return total / n, n
