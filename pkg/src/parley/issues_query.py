"""Predefined-issue categorisation by embedding query expansion.

Each issue's seed keywords are expanded with their embedding neighbours;
a comment is tagged with every issue whose (seed + expansion) term set
shares at least one token with it.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Comment, NormalizationConfig, clean_text, export_csv, label_activity, tokenize, write_rows
from .embed import EmbeddingTable, search_neighbors
from .errors import EmptyCatalog

log = logging.getLogger(__name__)

# Issue names from the Yemen dialogue categorisation; seeds are illustrative.
SAMPLE_CATALOG: list[tuple[str, list[str]]] = [
    ("The South", ["south", "southern", "reparations", "independence", "autonomy"]),
    ("Decentralisation/federalism", ["decentralisation", "federalism", "federal", "regions"]),
    ("National body", ["national_body", "committee", "composition"]),
    ("Government of National Unity", ["government", "unity", "cabinet"]),
    ("Dispute resolution", ["dispute", "arbitration", "mediation"]),
    ("Demobilisation", ["demobilisation", "disarmament", "militias"]),
    ("Guarantees", ["guarantees", "guarantor", "enforcement"]),
    ("Sequencing of negotiations", ["sequencing", "sequence", "timeline", "phases"]),
    ("Natural resources", ["resources", "oil", "revenues", "wealth"]),
    ("Security arrangements", ["security", "military", "withdrawal", "ceasefire"]),
    ("Executive powers", ["president", "presidency", "powers", "executive"]),
    ("Constitution", ["constitution", "draft_constitution", "referendum"]),
    ("Transitional justice", ["justice", "reconciliation", "accountability"]),
    ("Elections", ["elections", "electoral", "vote"]),
    ("Humanitarian situation", ["humanitarian", "aid", "famine"]),
    ("Economy", ["economy", "salaries", "currency", "bank"]),
    ("Inclusion", ["women", "youth", "inclusion", "civil"]),
    ("International role", ["un", "envoy", "international", "sanctions"]),
]


@dataclass(frozen=True)
class IssueCatalog:
    issues: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        names = [n for n, _ in self.issues]
        if len(set(names)) != len(names):
            raise ValueError("issue names must be unique")
        for name, seeds in self.issues:
            if not seeds:
                raise ValueError(f"issue {name!r} has no seed keywords")

    @classmethod
    def build(cls, issues: Iterable[tuple[str, Iterable[str]]], cfg: NormalizationConfig | None = None):
        """Normalise and tokenise raw seed strings with the corpus rules."""
        out = []
        for name, raw_seeds in issues:
            seeds: list[str] = []
            for raw in raw_seeds:
                for tok in tokenize(clean_text(raw, cfg)):
                    if tok not in seeds:
                        seeds.append(tok)
            out.append((name, tuple(seeds)))
        return cls(tuple(out))

    @classmethod
    def sample(cls) -> IssueCatalog:
        return cls.build(SAMPLE_CATALOG)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.issues]

    def __len__(self) -> int:
        return len(self.issues)


@dataclass(frozen=True)
class Expansion:
    term: str
    similarity: float
    source_seed: str


@dataclass
class ExpandedIssue:
    name: str
    seeds: tuple[str, ...]
    expanded: list[Expansion] = field(default_factory=list)
    thresholds: dict[str, float] = field(default_factory=dict)
    oov_seeds: list[str] = field(default_factory=list)

    def terms(self) -> set[str]:
        return set(self.seeds) | {e.term for e in self.expanded}


@dataclass
class ExpandedCatalog:
    issues: list[ExpandedIssue]

    @property
    def names(self) -> list[str]:
        return [i.name for i in self.issues]

    def rows(self) -> list[tuple]:
        return [
            (issue.name, e.source_seed, e.term, repr(e.similarity))
            for issue in self.issues
            for e in issue.expanded
        ]


def expand_catalog(
    catalog: IssueCatalog,
    table: EmbeddingTable,
    min_sim: float = 0.4,
    raise_to: float = 0.6,
    cap: int = 1000,
    corpus_vocab: Iterable[str] | None = None,
) -> ExpandedCatalog:
    """Expand every seed of every issue with its embedding neighbours.

    When *corpus_vocab* is given, expansions are restricted to terms that
    occur in it.  Seeds missing from the table stay as literal terms.
    A term reached from several seeds keeps its highest similarity.
    """
    if not catalog.issues:
        raise EmptyCatalog("issue catalog is empty")
    if not (0 < min_sim <= 1 and 0 < raise_to <= 1 and min_sim <= raise_to):
        raise ValueError(f"bad thresholds min_sim={min_sim} raise_to={raise_to}")
    vocab = set(corpus_vocab) if corpus_vocab is not None else None
    warned: set[str] = set()
    out = []
    for name, seeds in catalog.issues:
        issue = ExpandedIssue(name, tuple(seeds))
        best: dict[str, Expansion] = {}
        for seed in seeds:
            if seed not in table:
                issue.oov_seeds.append(seed)
                if seed not in warned:
                    log.warning("seed %r (issue %r) not in embedding table; literal match only", seed, name)
                    warned.add(seed)
                continue
            hood = search_neighbors(table, seed, min_sim, raise_to, cap)
            issue.thresholds[seed] = hood.threshold
            for term, sim in hood.neighbors:
                if term in seeds or (vocab is not None and term not in vocab):
                    continue
                prev = best.get(term)
                if prev is None or sim > prev.similarity:
                    best[term] = Expansion(term, sim, seed)
        issue.expanded = sorted(best.values(), key=lambda e: (-e.similarity, e.term))
        out.append(issue)
    return ExpandedCatalog(out)


@dataclass
class TaggedCorpus:
    corpus: list[Comment]
    issue_names: list[str]
    tags: dict[int, set[str]]
    match_evidence: dict[int, dict[str, list[str]]]

    def labels(self) -> dict[int, set[str]]:
        return self.tags


def tag_corpus(corpus: Sequence[Comment], expanded: ExpandedCatalog, per_term: bool = False) -> TaggedCorpus:
    """Multi-label tagging by exact-token intersection.

    With *per_term* (debug), evidence entries read ``term<-seed`` so each
    match can be traced to the seed query that produced it.
    """
    term_sets = []
    for issue in expanded.issues:
        origin = {s: s for s in issue.seeds}
        for e in issue.expanded:
            origin.setdefault(e.term, e.source_seed)
        term_sets.append((issue.name, origin))
    tags: dict[int, set[str]] = {}
    evidence: dict[int, dict[str, list[str]]] = {}
    for c in corpus:
        tokens = set(tokenize(c.text))
        tags[c.id] = set()
        evidence[c.id] = {}
        for name, origin in term_sets:
            hits = sorted(tokens.intersection(origin))
            if hits:
                tags[c.id].add(name)
                evidence[c.id][name] = [f"{t}<-{origin[t]}" for t in hits] if per_term else hits
    return TaggedCorpus(list(corpus), expanded.names, tags, evidence)


def issue_activity(tagged: TaggedCorpus, group_by: str = "year") -> list[tuple[str, str, int]]:
    """(issue, period, words) rows in catalog order, then period order."""
    rows = label_activity(tagged.corpus, tagged.tags, group_by)
    order = {n: i for i, n in enumerate(tagged.issue_names)}
    return sorted(rows, key=lambda r: (order[r[0]], r[1]))


def write_tagged(tagged: TaggedCorpus, path: str | Path) -> Path:
    extra = {}
    for name in tagged.issue_names:
        extra[name] = {cid: int(name in t) for cid, t in tagged.tags.items()}
    extra["evidence"] = {
        cid: json.dumps(ev, sort_keys=True, ensure_ascii=False) for cid, ev in tagged.match_evidence.items()
    }
    return export_csv(tagged.corpus, path, extra)


def write_expansion(expanded: ExpandedCatalog, path: str | Path) -> Path:
    return write_rows(path, ("issue", "seed", "term", "similarity"), expanded.rows())


def write_activity(rows: Sequence[tuple], path: str | Path, label: str = "issue") -> Path:
    return write_rows(path, (label, "period", "words"), rows)


def read_tags(path: str | Path, issue_names: Sequence[str] | None = None) -> dict[int, set[str]]:
    """Issue tags back from ``tagged.csv``."""
    import csv

    from .corpus import CSV_HEADER

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = list(reader.fieldnames or ())
        names = list(issue_names) if issue_names is not None else fields[len(CSV_HEADER) : -1]
        return {int(row["id"]): {n for n in names if row[n] == "1"} for row in reader}
