"""Synthetic dialogue corpora with planted topics and party biases.

Per comment: pick a speaker, draw a topic from the speaker organisation's
bias row, then draw tokens uniformly from that topic's word pool.  The
one-hot topic of every comment is kept as ground truth.
"""

from __future__ import annotations

import textwrap
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Comment, SessionMeta, tokenize, write_rows
from .errors import InvalidSpec


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    parties: Sequence[tuple[str, str]]
    sessions: Sequence[tuple[int, int, int]]
    topics: Sequence[tuple[str, Sequence[str]]]
    party_topic_bias: dict[str, dict[str, float]] = field(default_factory=dict)
    comment_length_range: tuple[int, int] = (20, 60)
    joint_fraction: float = 0.0

    @property
    def organisations(self) -> list[str]:
        return list(dict.fromkeys(org for _, org in self.parties))

    @property
    def topic_labels(self) -> list[str]:
        return [label for label, _ in self.topics]

    def validate(self) -> None:
        orgs = self.organisations
        if len(self.parties) < 2 or len(orgs) < 2:
            raise InvalidSpec("need at least two parties from two organisations")
        for name, org in self.parties:
            if not name or not org or any(ch in name + org for ch in "():&|\n"):
                raise InvalidSpec(f"unusable party name/organisation: {name!r} ({org!r})")
        if len(self.topics) < 2:
            raise InvalidSpec("need at least two topics")
        labels = self.topic_labels
        if len(set(labels)) != len(labels):
            raise InvalidSpec("topic labels must be unique")
        for label, pool in self.topics:
            if not pool:
                raise InvalidSpec(f"topic {label!r} has an empty word pool")
            for word in pool:
                if tokenize(word) != [word]:
                    raise InvalidSpec(f"pool word {word!r} is not a single lowercase token")
        for org, row in self.party_topic_bias.items():
            if org not in orgs:
                raise InvalidSpec(f"bias given for unknown organisation {org!r}")
            if any(t not in labels for t in row):
                raise InvalidSpec(f"bias row for {org!r} names an unknown topic")
            weights = list(row.values())
            if any(w < 0 for w in weights):
                raise InvalidSpec(f"negative bias weight for {org!r}")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise InvalidSpec(f"bias row for {org!r} sums to {sum(weights)}, not 1")
        lo, hi = self.comment_length_range
        if not 1 <= lo <= hi:
            raise InvalidSpec(f"bad comment_length_range {self.comment_length_range}")
        for year, month, n in self.sessions:
            if not (1000 <= year <= 9999 and 1 <= month <= 12 and n >= 0):
                raise InvalidSpec(f"bad session {(year, month, n)}")
        if not 0.0 <= self.joint_fraction <= 1.0:
            raise InvalidSpec("joint_fraction must lie in [0, 1]")

    def bias_matrix(self) -> np.ndarray:
        """Rows follow :attr:`organisations`; missing rows are uniform."""
        k = len(self.topics)
        labels = self.topic_labels
        out = np.full((len(self.organisations), k), 1.0 / k)
        for i, org in enumerate(self.organisations):
            row = self.party_topic_bias.get(org)
            if row is not None:
                out[i] = [row.get(t, 0.0) for t in labels]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SynthSpec:
        return cls(
            seed=int(data.get("seed", 0)),
            parties=[tuple(p) for p in data["parties"]],
            sessions=[tuple(int(x) for x in s) for s in data["sessions"]],
            topics=[(t["label"], tuple(t["words"])) for t in data["topics"]],
            party_topic_bias={k: dict(v) for k, v in data.get("party_topic_bias", {}).items()},
            comment_length_range=tuple(data.get("comment_length_range", (20, 60))),
            joint_fraction=float(data.get("joint_fraction", 0.0)),
        )


@dataclass
class SynthCorpus:
    comments: list[Comment]
    truth: dict[int, np.ndarray]
    topic_labels: list[str]

    def __len__(self) -> int:
        return len(self.comments)


def session_file_name(index: int, year: int, month: int) -> str:
    return f"{year:04d}-{month:02d}-session{index:02d}.txt"


def _ordered_sessions(spec: SynthSpec) -> list[tuple[int, int, int, int]]:
    indexed = [(year, month, i, n) for i, (year, month, n) in enumerate(spec.sessions)]
    return sorted(indexed)


def generate(spec: SynthSpec) -> SynthCorpus:
    """Sample a corpus from *spec*; deterministic in ``spec.seed``.

    Sessions are emitted in (year, month, declaration order), the same order
    in which their note files sort, so ids survive a notes round trip.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    orgs = spec.organisations
    bias = spec.bias_matrix()
    pools = [list(pool) for _, pool in spec.topics]
    k = len(pools)
    lo, hi = spec.comment_length_range
    by_org = {org: [p for p in spec.parties if p[1] == org] for org in orgs}

    comments: list[Comment] = []
    truth: dict[int, np.ndarray] = {}
    for year, month, index, n in _ordered_sessions(spec):
        meta = SessionMeta(session_file_name(index, year, month), year, month)
        for _ in range(n):
            name, org = spec.parties[rng.integers(len(spec.parties))]
            topic = int(rng.choice(k, p=bias[orgs.index(org)]))
            length = int(rng.integers(lo, hi + 1))
            words = rng.choice(pools[topic], size=length)
            text = " ".join(words) + "."
            participant, multi = name, ()
            if spec.joint_fraction and rng.random() < spec.joint_fraction:
                others = [o for o in orgs if o != org]
                other_org = others[rng.integers(len(others))]
                candidates = by_org[other_org]
                other_name = candidates[rng.integers(len(candidates))][0]
                participant = f"{name} & {other_name}"
                multi = (org, other_org)
            cid = len(comments)
            comments.append(Comment(cid, text, meta, participant, org, multi))
            onehot = np.zeros(k)
            onehot[topic] = 1.0
            truth[cid] = onehot
    return SynthCorpus(comments, truth, spec.topic_labels)


def render_notes(comments: Sequence[Comment], width: int = 78) -> str:
    """Render comments of one session in the rough-notes grammar.

    Long turns wrap onto 4-space indented continuation lines.
    """
    lines = []
    for c in comments:
        if c.multi_organisations:
            names = c.participant.split(" & ")
            speakers = " & ".join(f"{n} ({o})" for n, o in zip(names, c.multi_organisations))
        else:
            speakers = f"{c.participant} ({c.organisation})"
        lines.extend(
            textwrap.wrap(f"{speakers}: {c.text}", width=width, subsequent_indent="    ", break_long_words=False)
        )
    return "\n".join(lines) + "\n"


def write_notes(corpus: SynthCorpus, notes_dir: str | Path) -> list[Path]:
    notes_dir = Path(notes_dir)
    notes_dir.mkdir(parents=True, exist_ok=True)
    sessions: dict[str, list[Comment]] = {}
    for c in corpus.comments:
        sessions.setdefault(c.meta.source_file, []).append(c)
    written = []
    for name, comments in sessions.items():
        path = notes_dir / name
        path.write_text(f"SESSION {name[:-4]}\n" + render_notes(comments), encoding="utf-8")
        written.append(path)
    return written


def write_truth(corpus: SynthCorpus, path: str | Path) -> Path:
    rows = (
        (cid, "|".join(repr(float(w)) for w in weights))
        for cid, weights in sorted(corpus.truth.items())
    )
    return write_rows(path, ("id", "true_topic_weights"), rows)


def read_truth(path: str | Path) -> dict[int, np.ndarray]:
    import csv

    with open(path, encoding="utf-8", newline="") as fh:
        return {
            int(row["id"]): np.array([float(x) for x in row["true_topic_weights"].split("|")])
            for row in csv.DictReader(fh)
        }


def synthetic_table(
    spec: SynthSpec,
    dimension: int = 50,
    spread: float = 0.35,
    extra_terms: Sequence[str] = (),
    seed: int | None = None,
):
    """Toy embedding table in which each pool clusters around its own
    random direction.  *extra_terms* (e.g. catalog seeds absent from every
    pool) receive unrelated random vectors."""
    from .embed import EmbeddingTable

    rng = np.random.default_rng(spec.seed if seed is None else seed)
    centroids = rng.standard_normal((len(spec.topics), dimension))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    vectors: dict[str, np.ndarray] = {}
    for (_, pool), centre in zip(spec.topics, centroids):
        for word in pool:
            if word in vectors:
                continue
            noise = rng.standard_normal(dimension) / np.sqrt(dimension)
            vectors[word] = centre + spread * noise
    for term in extra_terms:
        if term not in vectors:
            v = rng.standard_normal(dimension)
            vectors[term] = v / np.linalg.norm(v)
    terms = sorted(vectors)
    return EmbeddingTable(terms, np.array([vectors[t] for t in terms]))


def paper_shaped_spec(seed: int = 0, words_per_session: int = 12_000) -> SynthSpec:
    """Fourteen sessions (six in 2018, eight in 2019) of roughly
    *words_per_session* tokens each, four parties, five planted topics."""
    topics = [
        ("The South", ("south", "southern", "independence", "autonomy", "reparations", "aden",
                       "secession", "southerners", "hirak", "grievances", "separation", "region",
                       "movement", "identity", "southern_issue", "statehood", "unity", "referendum",
                       "marginalisation", "restitution")),
        ("Decentralisation/federalism", ("federal", "regions", "resources", "revenues", "local",
                       "governorates", "decentralisation", "federalism", "draft_constitution",
                       "provinces", "budget", "oil", "natural", "allocation", "municipal", "fiscal",
                       "autonomous", "councils", "taxation", "wealth")),
        ("National body", ("national_body", "committee", "composition", "oversee", "membership",
                       "mandate", "disputes", "body", "appointment", "seats", "quota", "women",
                       "youth", "civil", "representatives", "selection", "criteria", "nomination",
                       "chair", "secretariat")),
        ("Security arrangements", ("military", "security", "withdrawal", "militias", "weapons",
                       "arms", "disarmament", "demobilisation", "ceasefire", "forces", "troops",
                       "monitoring", "military_security_committee", "hodeida", "ports", "checkpoints",
                       "redeployment", "violations", "guarantees", "stockholm_agreement")),
        ("Government of National Unity", ("government", "unity", "president", "presidency",
                       "prime_minister", "ministers", "cabinet", "power", "sharing", "legitimacy",
                       "transition", "technocratic", "portfolios", "parliament", "vice",
                       "presidential_council", "executive", "decree", "coalition", "consensus")),
    ]
    parties = [
        ("Amal", "Party A"), ("Basim", "Party A"),
        ("Dina", "Party B"), ("Fuad", "Party B"),
        ("Hana", "Party C"), ("Jamil", "Party C"),
        ("Laila", "Party D"), ("Nabil", "Party D"),
    ]
    bias = {
        "Party A": {"The South": 0.5, "Decentralisation/federalism": 0.2, "National body": 0.1,
                    "Security arrangements": 0.1, "Government of National Unity": 0.1},
        "Party B": {"The South": 0.1, "Decentralisation/federalism": 0.4, "National body": 0.2,
                    "Security arrangements": 0.1, "Government of National Unity": 0.2},
        "Party C": {"The South": 0.1, "Decentralisation/federalism": 0.1, "National body": 0.2,
                    "Security arrangements": 0.4, "Government of National Unity": 0.2},
        "Party D": {"The South": 0.1, "Decentralisation/federalism": 0.1, "National body": 0.3,
                    "Security arrangements": 0.1, "Government of National Unity": 0.4},
    }
    length_range = (20, 60)
    per_session = round(words_per_session / (sum(length_range) / 2))
    months_2018 = (2, 3, 5, 7, 9, 11)
    months_2019 = (1, 2, 4, 5, 7, 8, 10, 12)
    sessions = [(2018, m, per_session) for m in months_2018] + [(2019, m, per_session) for m in months_2019]
    return SynthSpec(
        seed=seed,
        parties=parties,
        sessions=sessions,
        topics=topics,
        party_topic_bias=bias,
        comment_length_range=length_range,
    )
