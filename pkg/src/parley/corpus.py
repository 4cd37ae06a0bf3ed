"""Dialogue notes -> structured comment records.

Note grammar
------------
A turn header sits at indentation level 0::

    Name (Organisation): text of the turn

Shared statements join ``Name (Org)`` groups with ``&``::

    Ali (PartyA) & Bob (PartyB): joint text

Indented lines continue the preceding turn.  Any other level-0 line
(session titles, agenda items, ...) is non-conversational and dropped;
it also closes the running turn.
"""

from __future__ import annotations

import csv
import logging
import re
import unicodedata
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedTurn

log = logging.getLogger(__name__)

CSV_HEADER = (
    "id",
    "text",
    "source_file",
    "year",
    "month",
    "participant",
    "organisation",
    "multi_organisation",
)

_DROP_CATEGORIES = {"Cc", "Cf", "Co", "Cs", "Cn"}
_TOKEN_RE = re.compile(r"\w{2,}")
_WS_RE = re.compile(r"\s+")
_SPEAKER = r"[^\s:()&][^:()&]*?\s*\([^()]+\)"
_HEADER_RE = re.compile(rf"^(?P<speakers>{_SPEAKER}(?:\s*&\s*{_SPEAKER})*)\s*:\s*(?P<text>.*)$")
_SPEAKER_RE = re.compile(r"\s*(?P<name>[^:()&]+?)\s*\((?P<org>[^()]+)\)\s*")
_FILENAME_RE = re.compile(r"^(?P<year>\d{4})-(?P<month>\d{2})(?:-.*)?\.txt$")


@dataclass(frozen=True)
class SessionMeta:
    source_file: str
    year: int
    month: int

    def __post_init__(self):
        if not self.source_file:
            raise ValueError("source_file must be nonempty")
        if not 1000 <= self.year <= 9999:
            raise ValueError(f"year must have 4 digits, got {self.year}")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")


@dataclass(frozen=True)
class Comment:
    id: int
    text: str
    meta: SessionMeta
    participant: str
    organisation: str
    multi_organisations: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"comment {self.id}: empty text")
        if not self.participant:
            raise ValueError(f"comment {self.id}: empty participant")
        if self.multi_organisations and self.organisation not in self.multi_organisations:
            raise ValueError(f"comment {self.id}: organisation missing from multi_organisations")
        object.__setattr__(self, "multi_organisations", tuple(self.multi_organisations))

    @property
    def year(self) -> int:
        return self.meta.year

    @property
    def month(self) -> int:
        return self.meta.month

    @property
    def is_multi_party(self) -> bool:
        return bool(self.multi_organisations)


def _word_pattern(keys: Iterable[str]) -> re.Pattern | None:
    keys = sorted(set(keys), key=lambda k: (-len(k), k))
    if not keys:
        return None
    return re.compile("|".join(rf"(?<!\w){re.escape(k)}(?!\w)" for k in keys))


@dataclass(frozen=True)
class NormalizationConfig:
    abbreviation_map: dict[str, str] = field(default_factory=dict)
    entity_map: dict[str, str] = field(default_factory=dict)
    phrase_list: tuple[str, ...] = ()
    strip_patterns: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("abbreviation_map", "entity_map"):
            mapping = getattr(self, name)
            if any(not k or not k.strip() for k in mapping):
                raise ValueError(f"{name} contains an empty key")
        phrases = tuple(" ".join(p.split()) for p in self.phrase_list)
        for p in phrases:
            if len(p.split()) < 2:
                raise ValueError(f"phrase {p!r} must have at least two words")
        object.__setattr__(self, "phrase_list", phrases)
        patterns = tuple(self.strip_patterns)
        if any(not p.strip() for p in patterns):
            raise ValueError("strip_patterns contains a blank pattern")
        object.__setattr__(self, "strip_patterns", patterns)
        # Expansions must not reintroduce a key, otherwise cleaning never
        # settles.  Abbreviation output may name an entity: the entity map
        # runs after it within the same pass.
        checks = (
            (self.abbreviation_map.values(), list(self.abbreviation_map)),
            (self.entity_map.values(), list(self.abbreviation_map) + list(self.entity_map)),
        )
        for values, keys in checks:
            pat = _word_pattern(keys)
            if pat is None:
                continue
            for value in values:
                m = pat.search(value)
                if m:
                    raise ValueError(f"replacement {value!r} contains map key {m.group(0)!r}")

    @classmethod
    def from_dict(cls, data: dict | None) -> NormalizationConfig:
        data = data or {}
        return cls(
            abbreviation_map=dict(data.get("abbreviation_map", {})),
            entity_map=dict(data.get("entity_map", {})),
            phrase_list=tuple(data.get("phrase_list", ())),
            strip_patterns=tuple(data.get("strip_patterns", ())),
        )


def _collapse(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def _clean_once(text: str, cfg: NormalizationConfig) -> str:
    text = "".join(
        " " if ch.isspace() else ch
        for ch in text
        if ch.isspace() or unicodedata.category(ch) not in _DROP_CATEGORIES
    )
    text = _collapse(text)
    for pattern in cfg.strip_patterns:
        while pattern in text:
            text = _collapse(text.replace(pattern, " "))
    for mapping in (cfg.abbreviation_map, cfg.entity_map):
        pat = _word_pattern(mapping)
        if pat is not None:
            text = pat.sub(lambda m, mp=mapping: mp[m.group(0)], text)
    if cfg.phrase_list:
        phrases = sorted(cfg.phrase_list, key=lambda p: (-len(p), p))
        alt = "|".join(r"\s+".join(re.escape(w) for w in p.split()) for p in phrases)
        pat = re.compile(rf"(?<!\w)(?:{alt})(?!\w)", re.IGNORECASE)
        text = pat.sub(lambda m: "_".join(m.group(0).split()), text)
    return _collapse(text)


def clean_text(raw: str, cfg: NormalizationConfig | None = None) -> str:
    """Strip control/format characters, expand abbreviations, unify entity
    spellings, join configured phrases with ``_`` and collapse whitespace.

    Case is preserved.  The result is a fixed point: cleaning it again is a
    no-op.
    """
    cfg = cfg or NormalizationConfig()
    text = raw
    for _ in range(16):
        cleaned = _clean_once(text, cfg)
        if cleaned == text:
            return cleaned
        text = cleaned
    return text


def tokenize(text: str) -> list[str]:
    """Lowercase maximal runs of letters/digits/underscore, length >= 2."""
    return _TOKEN_RE.findall(text.lower())


def _split_speakers(speakers: str, cfg: NormalizationConfig) -> list[tuple[str, str]]:
    out = []
    for part in speakers.split("&"):
        m = _SPEAKER_RE.fullmatch(part)
        name = " ".join(m.group("name").split())
        org = " ".join(m.group("org").split())
        out.append((cfg.entity_map.get(name, name), cfg.entity_map.get(org, org)))
    return out


def parse_notes(
    raw_note: str,
    meta: SessionMeta,
    cfg: NormalizationConfig | None = None,
    *,
    start_id: int = 0,
    problems: list | None = None,
) -> list[Comment]:
    """Parse one session's rough notes into comments, one per speaker turn.

    Malformed continuation lines are logged and, when *problems* is given,
    appended to it as :class:`MalformedTurn` instances; parsing continues.
    """
    cfg = cfg or NormalizationConfig()
    turns: list[tuple[list[tuple[str, str]], list[str]]] = []
    current = None
    for line_no, line in enumerate(raw_note.splitlines(), start=1):
        if not line.strip():
            continue
        if line[0].isspace():
            if current is not None:
                current[1].append(line.strip())
            elif not turns:
                err = MalformedTurn(line_no, line, meta.source_file)
                log.warning("%s", err)
                if problems is not None:
                    problems.append(err)
            continue
        m = _HEADER_RE.match(line)
        if m is None:
            current = None
            continue
        current = (_split_speakers(m.group("speakers"), cfg), [m.group("text").strip()])
        turns.append(current)

    comments = []
    next_id = start_id
    for speakers, parts in turns:
        text = clean_text(" ".join(p for p in parts if p), cfg)
        if not text:
            continue
        if len(speakers) == 1:
            participant, organisation = speakers[0]
            multi: tuple[str, ...] = ()
        else:
            participant = " & ".join(name for name, _ in speakers)
            organisation = speakers[0][1]
            multi = tuple(dict.fromkeys(org for _, org in speakers))
        comments.append(Comment(next_id, text, meta, participant, organisation, multi))
        next_id += 1
    return comments


def meta_from_filename(path: str | Path) -> SessionMeta:
    """Session metadata from the ``YYYY-MM-*.txt`` naming convention."""
    name = Path(path).name
    m = _FILENAME_RE.match(name)
    if m is None:
        raise ValueError(f"{name}: expected a YYYY-MM-*.txt file name")
    return SessionMeta(name, int(m.group("year")), int(m.group("month")))


def parse_note_dir(
    notes_dir: str | Path,
    cfg: NormalizationConfig | None = None,
    problems: list | None = None,
) -> list[Comment]:
    """Parse every ``*.txt`` note in *notes_dir* in file-name order."""
    corpus: list[Comment] = []
    for path in sorted(Path(notes_dir).glob("*.txt")):
        raw = path.read_text(encoding="utf-8")
        parsed = parse_notes(raw, meta_from_filename(path), cfg, start_id=len(corpus), problems=problems)
        if not parsed:
            log.warning("%s: no dialogue turns found", path.name)
        corpus.extend(parsed)
    if not corpus:
        log.warning("%s: empty corpus", notes_dir)
    return corpus


def _in_range(value: int, spec) -> bool:
    if spec is None:
        return True
    if isinstance(spec, int):
        return value == spec
    if isinstance(spec, range):
        return value in spec
    lo, hi = spec
    return lo <= value <= hi


def filter_comments(
    corpus: Sequence[Comment],
    *,
    party: Iterable[str] | None = None,
    organisation: Iterable[str] | None = None,
    year=None,
    month=None,
    exclude_multi_party: bool = False,
) -> list[Comment]:
    """Order-preserving subset matching all given criteria.

    ``party`` matches the participant name, ``organisation`` the organisation
    field.  ``year``/``month`` take an int, a ``range`` or an inclusive
    ``(lo, hi)`` pair.
    """
    party = set(party) if party is not None else None
    organisation = set(organisation) if organisation is not None else None
    out = []
    for c in corpus:
        if party is not None and c.participant not in party:
            continue
        if organisation is not None and c.organisation not in organisation:
            continue
        if not _in_range(c.year, year) or not _in_range(c.month, month):
            continue
        if exclude_multi_party and c.is_multi_party:
            continue
        out.append(c)
    return out


def comment_row(c: Comment) -> list:
    return [
        c.id,
        c.text,
        c.meta.source_file,
        c.meta.year,
        c.meta.month,
        c.participant,
        c.organisation,
        "|".join(c.multi_organisations),
    ]


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def export_csv(corpus: Sequence[Comment], path: str | Path, extra: dict | None = None) -> Path:
    """Write the master CSV, one row per comment in id order.

    *extra* maps additional column names to ``{comment_id: value}``.
    """
    extra = extra or {}
    rows = []
    for c in sorted(corpus, key=lambda c: c.id):
        rows.append(comment_row(c) + [col[c.id] for col in extra.values()])
    return write_rows(path, list(CSV_HEADER) + list(extra), rows)


def read_csv(path: str | Path) -> list[Comment]:
    """Inverse of :func:`export_csv` (extra columns are ignored)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ())[: len(CSV_HEADER)] != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            multi = tuple(row["multi_organisation"].split("|")) if row["multi_organisation"] else ()
            meta = SessionMeta(row["source_file"], int(row["year"]), int(row["month"]))
            out.append(
                Comment(int(row["id"]), row["text"], meta, row["participant"], row["organisation"], multi)
            )
    return out


def read_extra_column(path: str | Path, column: str) -> dict[int, str]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if column not in (reader.fieldnames or ()):
            raise ValueError(f"{path}: no column {column!r}")
        return {int(row["id"]): row[column] for row in reader}


def period_of(c: Comment, group_by: str | None) -> str:
    if group_by is None or group_by == "all":
        return "all"
    if group_by == "year":
        return f"{c.year:04d}"
    if group_by == "year_month":
        return f"{c.year:04d}-{c.month:02d}"
    raise ValueError(f"unknown group_by {group_by!r}")


def word_count(c: Comment) -> int:
    return len(tokenize(c.text))


def label_activity(
    corpus: Sequence[Comment], labels: dict[int, Iterable], group_by: str = "year"
) -> list[tuple]:
    """Words per (label, period).  Multi-labelled comments count fully for
    every label; periods without activity produce no row."""
    totals: dict[tuple, int] = {}
    for c in corpus:
        tags = labels.get(c.id, ())
        if not tags:
            continue
        n = word_count(c)
        period = period_of(c, group_by)
        for tag in tags:
            totals[(tag, period)] = totals.get((tag, period), 0) + n
    return [(tag, period, n) for (tag, period), n in totals.items()]
