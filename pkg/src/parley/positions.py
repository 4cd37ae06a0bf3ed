"""Party positions in embedding space and the distances between them.

A party's position on an issue is the pooled vector of everything its
members said in comments tagged with that issue during a period.  Missing
data is ``None`` throughout and is never replaced by a zero vector.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .corpus import Comment, period_of, word_count
from .embed import cosine
from .errors import InsufficientParties, InvalidParams, NoReference

log = logging.getLogger(__name__)

Tags = Mapping[int, "set"]

_SHIFT_FLOOR = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class PartyPosition:
    party: str
    issue: str
    period: str
    vector: np.ndarray | None
    word_count: int
    comment_count: int

    @property
    def has_data(self) -> bool:
        return self.vector is not None


def select_comments(
    corpus: Sequence[Comment],
    tags: Tags,
    party: str,
    issue,
    period: str = "all",
    group_by: str | None = None,
) -> list[Comment]:
    """The party's issue-tagged comments in *period*, sorted by id."""
    out = [
        c
        for c in corpus
        if c.organisation == party
        and issue in tags.get(c.id, ())
        and (period == "all" or period_of(c, group_by) == period)
    ]
    return sorted(out, key=lambda c: c.id)


def party_position(
    corpus: Sequence[Comment],
    tags: Tags,
    backend,
    party: str,
    issue,
    period: str = "all",
    group_by: str | None = None,
) -> PartyPosition:
    comments = select_comments(corpus, tags, party, issue, period, group_by)
    vector, n = backend.pool(comments)
    return PartyPosition(party, str(issue), period, vector, n, len(comments))


def reference_position(
    positions: Sequence[PartyPosition], mode: str = "average", baseline: str | None = None
) -> np.ndarray:
    """Unweighted mean of the parties' vectors, or the baseline party's vector."""
    if mode == "baseline":
        for p in positions:
            if p.party == baseline:
                if p.vector is None:
                    raise NoReference(f"baseline party {baseline!r} has no data")
                return p.vector.copy()
        raise NoReference(f"baseline party {baseline!r} not among the positions")
    if mode != "average":
        raise ValueError(f"unknown reference mode {mode!r}")
    present = [p for p in positions if p.vector is not None]
    missing = [p.party for p in positions if p.vector is None]
    if not present:
        raise NoReference("no party has data")
    if missing:
        log.warning("average reference excludes parties without data: %s", ", ".join(missing))
    if len(present) < 2:
        log.warning("average reference built from a single party (%s)", present[0].party)
    V = np.vstack([p.vector for p in present])
    # offset by the first vector so identical positions average exactly
    return V[0] + np.mean(V - V[0], axis=0)


@dataclass
class DistanceProfile:
    reference_kind: str
    similarity: dict[tuple[str, str, str], float | None] = field(default_factory=dict)

    def distance(self, key) -> float | None:
        s = self.similarity[key]
        return None if s is None else 1.0 - s


def _safe_cosine(u, v) -> float | None:
    if u is None or v is None:
        return None
    if not np.any(u) or not np.any(v):
        return None
    return cosine(u, v)


def distance_profile(
    positions: Sequence[PartyPosition],
    references: Mapping[tuple[str, str], np.ndarray | None],
    reference_kind: str = "average",
) -> DistanceProfile:
    """Cosine similarity of each position to the reference of its
    (issue, period); missing data propagates as ``None``."""
    prof = DistanceProfile(reference_kind)
    for p in positions:
        ref = references.get((p.issue, p.period))
        prof.similarity[(p.party, p.issue, p.period)] = _safe_cosine(p.vector, ref)
    return prof


@dataclass
class HeatmapReport:
    issue: str
    parties: list[str]
    matrix: np.ndarray
    levels: np.ndarray
    bin_edges: np.ndarray

    def level_of(self, a: str, b: str) -> int:
        return int(self.levels[self.parties.index(a), self.parties.index(b)])


def quantize_levels(sims: np.ndarray, lo: float, n_levels: int = 4) -> np.ndarray:
    """Equal-width bins over [lo, 1], each closed at its lower edge (the
    top bin also includes 1); level 1 holds the most similar pairs."""
    if lo >= 1.0:
        return np.ones(sims.shape, dtype=int)
    width = (1.0 - lo) / n_levels
    idx = np.clip(np.floor((sims - lo) / width).astype(int), 0, n_levels - 1)
    return n_levels - idx


def pairwise_heatmap(positions: Sequence[PartyPosition], issue: str | None = None) -> HeatmapReport:
    """Pairwise cosine matrix with 4-level quantisation.

    Missing parties get NaN similarity and level 0.
    """
    parties = [p.party for p in positions]
    issue = issue if issue is not None else (positions[0].issue if positions else "")
    ok = [p.vector is not None and np.any(p.vector) for p in positions]
    if sum(ok) < 2:
        raise InsufficientParties(f"issue {issue!r}: fewer than two parties with data")
    n = len(positions)
    M = np.full((n, n), np.nan)
    for i in range(n):
        if not ok[i]:
            continue
        M[i, i] = 1.0
        for j in range(i + 1, n):
            if ok[j]:
                M[i, j] = M[j, i] = cosine(positions[i].vector, positions[j].vector)
    off = [M[i, j] for i in range(n) for j in range(n) if i != j and ok[i] and ok[j]]
    lo = min(off)
    levels = np.zeros((n, n), dtype=int)
    mask = ~np.isnan(M)
    levels[mask] = quantize_levels(M[mask], lo)
    edges = np.linspace(lo, 1.0, 5) if lo < 1.0 else np.array([1.0])
    return HeatmapReport(issue, parties, M, levels, edges)


def party_activity(
    corpus: Sequence[Comment],
    tags: Tags,
    issue,
    period: str = "all",
    group_by: str | None = None,
) -> list[tuple[str, int]]:
    """Words spoken by each party on *issue*; silent parties are absent."""
    totals: dict[str, int] = {}
    for c in corpus:
        if issue not in tags.get(c.id, ()):
            continue
        if period != "all" and period_of(c, group_by) != period:
            continue
        totals[c.organisation] = totals.get(c.organisation, 0) + word_count(c)
    return sorted(totals.items())


@dataclass(frozen=True)
class UncertaintyMargin:
    party: str
    issue: str
    period: str
    margin: float | None
    reps: int
    fraction: float


def estimate_uncertainty(
    corpus: Sequence[Comment],
    tags: Tags,
    backend,
    party: str,
    issue,
    period: str = "all",
    group_by: str | None = None,
    fraction: float = 0.10,
    reps: int = 20,
    seed: int = 0,
) -> UncertaintyMargin:
    """Largest position shift (1 - cosine) over *reps* random removals of
    whole comments totalling about *fraction* of the party's words.

    Each repetition removes comments in a seeded random order until the
    removed share reaches *fraction*, always removing at least one comment
    and never the last one.
    """
    if reps < 1:
        raise InvalidParams(f"reps must be >= 1, got {reps}")
    if not 0 < fraction < 1:
        raise InvalidParams(f"fraction must lie in (0, 1), got {fraction}")
    comments = select_comments(corpus, tags, party, issue, period, group_by)
    sums, counts = [], []
    for c in comments:
        s, k = backend.comment_sum(c)
        if k:
            sums.append(s)
            counts.append(k)

    def result(margin):
        return UncertaintyMargin(party, str(issue), period, margin, reps, fraction)

    total = sum(counts)
    if total <= 1:
        return result(0.0)
    if len(counts) < 2:
        log.warning("%s / %s / %s: single comment, no uncertainty estimate", party, issue, period)
        return result(None)
    S = np.vstack(sums)
    cnt = np.array(counts, dtype=float)
    original = S.sum(axis=0) / total
    worst = 0.0
    for child in np.random.SeedSequence(seed).spawn(reps):
        order = np.random.default_rng(child).permutation(len(counts))
        keep = np.ones(len(counts), dtype=bool)
        removed = 0.0
        for idx in order[:-1]:
            keep[idx] = False
            removed += cnt[idx]
            if removed >= fraction * total:
                break
        perturbed = S[keep].sum(axis=0) / cnt[keep].sum()
        shift = 1.0 - cosine(original, perturbed)
        worst = max(worst, shift)
    # shifts at rounding level are parallel vectors
    return result(worst if worst > _SHIFT_FLOOR else 0.0)
