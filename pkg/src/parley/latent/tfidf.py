"""TF-IDF document-term matrix.

weight(d, t) = tf(d, t) * (ln((1 + n) / (1 + df(t))) + 1), rows L2-normalised.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..corpus import Comment, tokenize
from ..embed import default_stopwords
from ..errors import EmptyVocabulary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VocabConfig:
    max_features: int = 10_000
    max_df: float = 0.9
    stopword_list: frozenset[str] | None = None
    allow_list: frozenset[str] | None = None
    deny_list: frozenset[str] | None = None

    def __post_init__(self):
        if not 0 < self.max_df <= 1:
            raise ValueError(f"max_df must lie in (0, 1], got {self.max_df}")
        if self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")
        if self.stopword_list is None:
            object.__setattr__(self, "stopword_list", default_stopwords())
        for name in ("stopword_list", "allow_list", "deny_list"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozenset(value))


@dataclass
class DocTermMatrix:
    docs: list[int]
    vocab: list[str]
    X: sp.csr_matrix
    idf: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def column(self, term: str) -> int:
        return self.vocab.index(term)

    def zero_rows(self) -> np.ndarray:
        return np.diff(self.X.indptr) == 0


def build_tfidf(corpus: Sequence[Comment], cfg: VocabConfig | None = None) -> DocTermMatrix:
    """TF-IDF over the corpus with the vocabulary rules of *cfg*.

    The vocabulary keeps terms surviving the stop/deny/allow filters with
    document frequency <= max_df * n_docs, truncated to the max_features
    most frequent (ties lexicographic), then sorted lexicographically.
    """
    cfg = cfg or VocabConfig()
    if not corpus:
        raise ValueError("empty corpus")
    stop = cfg.stopword_list or frozenset()

    def keep(t: str) -> bool:
        if t in stop:
            return False
        if cfg.deny_list is not None and t in cfg.deny_list:
            return False
        if cfg.allow_list is not None and t not in cfg.allow_list:
            return False
        return True

    counts = [Counter(t for t in tokenize(c.text) if keep(t)) for c in corpus]
    n = len(corpus)
    df: Counter = Counter()
    tf_total: Counter = Counter()
    for cnt in counts:
        df.update(cnt.keys())
        tf_total.update(cnt)
    limit = cfg.max_df * n
    candidates = [t for t in df if df[t] <= limit]
    candidates.sort(key=lambda t: (-tf_total[t], t))
    vocab = sorted(candidates[: cfg.max_features])
    if not vocab:
        raise EmptyVocabulary("no term survives the vocabulary filters")
    col = {t: j for j, t in enumerate(vocab)}
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocab])

    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    empty = 0
    for cnt in counts:
        row = sorted((col[t], v) for t, v in cnt.items() if t in col)
        if not row:
            empty += 1
        weights = np.array([v * idf[j] for j, v in row], dtype=float)
        norm = math.sqrt(float(np.dot(weights, weights))) if row else 0.0
        indices.extend(j for j, _ in row)
        data.extend((weights / norm).tolist() if norm > 0 else [])
        indptr.append(len(indices))
    if empty:
        log.warning("%d of %d documents have no vocabulary term (all-zero rows kept)", empty, n)
    X = sp.csr_matrix((np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)), shape=(n, len(vocab)))
    return DocTermMatrix([c.id for c in corpus], vocab, X, idf)
