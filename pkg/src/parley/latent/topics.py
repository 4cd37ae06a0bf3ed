"""Reading a fitted topic model: keywords, memberships, representative
comments, topic overlap and activity."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np

from ..corpus import Comment, export_csv, label_activity, write_rows
from .nmf import TopicModel


def topic_keywords(model: TopicModel, n: int = 10) -> list[list[tuple[str, float]]]:
    """Top-*n* (term, weight) pairs per topic; ties broken lexicographically."""
    out = []
    for row in model.H:
        ranked = sorted(zip(model.vocab, row.tolist()), key=lambda p: (-p[1], p[0]))
        out.append(ranked[:n])
    return out


def membership(model: TopicModel) -> np.ndarray:
    """Row-normalised W; all-zero rows stay zero."""
    W = model.W
    totals = W.sum(axis=1, keepdims=True)
    out = np.zeros_like(W)
    np.divide(W, totals, out=out, where=totals > 0)
    return out


def assign_topics(model: TopicModel, threshold: float | None = None) -> dict[int, set[int]]:
    """Document -> topics whose share of the document's W row is >= threshold."""
    if threshold is None:
        threshold = model.params.membership_threshold
    share = membership(model)
    totals = model.W.sum(axis=1)
    return {
        doc: ({int(t) for t in np.flatnonzero(share[i] >= threshold)} if totals[i] > 0 else set())
        for i, doc in enumerate(model.docs)
    }


def representative_comments(model: TopicModel, topic: int, n: int = 10) -> list[int]:
    """Documents most exclusively about *topic*: purity desc, weight desc,
    id asc.  Documents with an all-zero TF-IDF row are skipped."""
    share = membership(model)
    ranked = sorted(
        (
            (-share[i, topic], -model.W[i, topic], doc)
            for i, doc in enumerate(model.docs)
            if doc not in model.empty_docs
        ),
    )
    return [doc for _, _, doc in ranked[:n]]


def topic_overlap(assignments: dict[int, set[int]], k: int) -> np.ndarray:
    """Jaccard overlap of the document sets of every pair of topics."""
    sets = [set() for _ in range(k)]
    for doc, topics in assignments.items():
        for t in topics:
            sets[t].add(doc)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            union = len(sets[i] | sets[j])
            out[i, j] = len(sets[i] & sets[j]) / union if union else 0.0
    return out


def latent_activity(
    assignments: dict[int, set[int]], corpus: Sequence[Comment], group_by: str = "year"
) -> list[tuple[int, str, int]]:
    return sorted(label_activity(corpus, assignments, group_by))


def topic_label(t: int) -> str:
    return f"topic_{t}"


def write_keywords(model: TopicModel, path: str | Path, n: int = 10) -> Path:
    rows = [
        (t, rank, term, repr(weight))
        for t, words in enumerate(topic_keywords(model, n))
        for rank, (term, weight) in enumerate(words, start=1)
    ]
    return write_rows(path, ("topic", "rank", "term", "weight"), rows)


def write_assignments(corpus: Sequence[Comment], assignments: dict[int, set[int]], path: str | Path) -> Path:
    column = {c.id: "|".join(str(t) for t in sorted(assignments.get(c.id, ()))) for c in corpus}
    return export_csv(corpus, path, {"topics": column})


def write_representatives(model: TopicModel, corpus: Sequence[Comment], path: str | Path, n: int = 10) -> Path:
    by_id = {c.id: c for c in corpus}
    share = membership(model)
    row_of = {doc: i for i, doc in enumerate(model.docs)}
    rows = []
    for t in range(model.k):
        for rank, doc in enumerate(representative_comments(model, t, n), start=1):
            c = by_id[doc]
            rows.append((t, rank, doc, repr(float(share[row_of[doc], t])), c.organisation, c.text))
    return write_rows(path, ("topic", "rank", "id", "purity", "organisation", "text"), rows)


def write_overlap(overlap: np.ndarray, path: str | Path) -> Path:
    k = overlap.shape[0]
    rows = [[i] + [repr(float(x)) for x in overlap[i]] for i in range(k)]
    return write_rows(path, ["topic"] + [str(j) for j in range(k)], rows)


def read_assignments(path: str | Path) -> dict[int, set[int]]:
    from ..corpus import read_extra_column

    col = read_extra_column(path, "topics")
    return {cid: {int(t) for t in v.split("|")} if v else set() for cid, v in col.items()}
