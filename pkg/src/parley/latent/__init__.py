"""Latent-issue extraction: TF-IDF, NNDSVD, HALS NMF and topic read-outs."""

from .nmf import NMFParams, TopicModel, fit_nmf, hals_sweep, objective
from .nndsvd import RankDeficientWarning, nndsvd_init, truncated_svd
from .tfidf import DocTermMatrix, VocabConfig, build_tfidf
from .topics import (
    assign_topics,
    latent_activity,
    membership,
    representative_comments,
    topic_keywords,
    topic_label,
    topic_overlap,
)

__all__ = [
    "DocTermMatrix",
    "NMFParams",
    "RankDeficientWarning",
    "TopicModel",
    "VocabConfig",
    "assign_topics",
    "build_tfidf",
    "fit_nmf",
    "hals_sweep",
    "latent_activity",
    "membership",
    "nndsvd_init",
    "objective",
    "representative_comments",
    "topic_keywords",
    "topic_label",
    "topic_overlap",
    "truncated_svd",
]
