"""``parley`` command line: one subcommand per pipeline stage.

    parley synth     --config run.toml      # synthetic notes + table + truth
    parley prepare   --config run.toml      # notes -> master.csv
    parley tag       --config run.toml      # query-driven issues
    parley topics    --config run.toml      # NMF latent issues
    parley distances --config run.toml --source query
    parley diagnose  --config run.toml
    parley filter    --config run.toml --organisation "Party A" --year 2019

Exit status: 0 success, 1 validation error (bad config, missing input
artifact), 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import platform
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from . import config as config_mod
from .corpus import NormalizationConfig, export_csv, filter_comments, parse_note_dir, read_csv, tokenize, write_rows
from .errors import ConfigError, MissingArtifact, ParleyError

log = logging.getLogger("parley")

SUBCOMMANDS = ("prepare", "tag", "topics", "distances", "diagnose", "filter", "synth")


def slug(name: str) -> str:
    s = re.sub(r"[^0-9a-zA-Z]+", "_", name).strip("_").lower()
    return s or "issue"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Run:
    """Tracks files written by one subcommand and records them in the
    manifest of the directory they live in."""

    def __init__(self, subcommand: str, cfg: dict, root: Path):
        self.subcommand = subcommand
        self.cfg = cfg
        self.root = root
        self.outputs: list[Path] = []
        self.started = _now()

    def path(self, *parts: str) -> Path:
        p = self.root.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def wrote(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return path

    def finish(self) -> Path:
        manifest = self.root / "manifest.json"
        data = {"runs": [], "outputs": {}}
        if manifest.exists():
            data = json.loads(manifest.read_text(encoding="utf-8"))
        files = {str(p.relative_to(self.root)): _sha256(p) for p in self.outputs}
        data["runs"].append(
            {
                "subcommand": self.subcommand,
                "config_hash": config_mod.config_hash(self.cfg),
                "versions": {
                    "parley": __version__,
                    "python": platform.python_version(),
                    "numpy": np.__version__,
                    "kernels": kernels.BACKEND,
                },
                "started": self.started,
                "finished": _now(),
                "outputs": sorted(files),
            }
        )
        data["outputs"].update(files)
        data["outputs"] = dict(sorted(data["outputs"].items()))
        manifest.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        return manifest


def _require(path: Path | None, hint: str) -> Path:
    if path is None or not Path(path).exists():
        raise MissingArtifact(path, hint)
    return Path(path)


def _norm_cfg(cfg: dict) -> NormalizationConfig:
    return NormalizationConfig.from_dict(cfg["normalization"])


def _load_master(out: Path):
    return read_csv(_require(out / "master.csv", "run `parley prepare` first"))


def _load_table(cfg: dict):
    from .embed import load_table

    return load_table(_require(config_mod.embeddings_path(cfg), "set paths.embeddings or run `parley synth`"))


def _catalog(cfg: dict):
    from .issues_query import IssueCatalog

    if cfg["issues"]:
        return IssueCatalog.build(((i["name"], i["seeds"]) for i in cfg["issues"]), _norm_cfg(cfg))
    return IssueCatalog.sample()


def _synth_spec(cfg: dict):
    from .synthkit import SynthSpec, paper_shaped_spec

    s = cfg["synth"]
    if s["spec"]:
        spec = SynthSpec.from_dict({"seed": s["seed"], **s["spec"]})
    else:
        spec = paper_shaped_spec(seed=s["seed"], words_per_session=s["words_per_session"])
    return spec


# ---------------------------------------------------------------- commands


def cmd_synth(cfg: dict, args, out: Path) -> Run:
    from .embed import write_table
    from .synthkit import generate, synthetic_table, write_notes, write_truth

    root = config_mod.synth_dir(cfg)
    root.mkdir(parents=True, exist_ok=True)
    run = Run("synth", cfg, root)
    spec = _synth_spec(cfg)
    corpus = generate(spec)
    notes = config_mod.notes_dir(cfg)
    for p in write_notes(corpus, notes):
        run.wrote(p) if _inside(p, root) else None
    run.wrote(write_truth(corpus, run.path("truth.csv")))
    seeds = [t for _, ts in _catalog(cfg).issues for t in ts]
    table = synthetic_table(spec, dimension=cfg["synth"]["dimension"], extra_terms=seeds)
    table_path = config_mod.embeddings_path(cfg)
    table_path.parent.mkdir(parents=True, exist_ok=True)
    write_table(table, table_path)
    if _inside(table_path, root):
        run.wrote(table_path)
    log.info("synthesised %d comments (%d words)", len(corpus), sum(len(tokenize(c.text)) for c in corpus.comments))
    return run


def _inside(p: Path, root: Path) -> bool:
    try:
        Path(p).resolve().relative_to(root.resolve())
        return True
    except ValueError:
        return False


def cmd_prepare(cfg: dict, args, out: Path) -> Run:
    run = Run("prepare", cfg, out)
    notes = _require(config_mod.notes_dir(cfg), "set paths.notes or run `parley synth`")
    problems: list = []
    corpus = parse_note_dir(notes, _norm_cfg(cfg), problems)
    for p in problems:
        log.warning("%s", p)
    run.wrote(export_csv(corpus, run.path("master.csv")))
    log.info("prepared %d comments from %s", len(corpus), notes)
    return run


def cmd_filter(cfg: dict, args, out: Path) -> Run:
    run = Run("filter", cfg, out)
    corpus = _load_master(out)
    f = cfg["filter"]
    party = args.party or f["party"] or None
    org = args.organisation or f["organisation"] or None
    year = _range_arg(args.year) if args.year else _range_cfg(f["year"])
    month = _range_arg(args.month) if args.month else _range_cfg(f["month"])
    subset = filter_comments(
        corpus,
        party=party,
        organisation=org,
        year=year,
        month=month,
        exclude_multi_party=cfg["flags"]["exclude_multi_party"] if args.exclude_multi_party is None else args.exclude_multi_party,
    )
    run.wrote(export_csv(subset, run.path("filtered.csv")))
    return run


def _range_arg(text: str):
    if "-" in text:
        lo, hi = text.split("-", 1)
        return (int(lo), int(hi))
    return int(text)


def _range_cfg(value):
    if value is None:
        return None
    if isinstance(value, list):
        return tuple(value)
    return int(value)


def cmd_tag(cfg: dict, args, out: Path) -> Run:
    from .issues_query import expand_catalog, issue_activity, tag_corpus, write_activity, write_expansion, write_tagged

    run = Run("tag", cfg, out)
    corpus = _load_master(out)
    table = _load_table(cfg)
    q = cfg["query"]
    vocab = {t for c in corpus for t in tokenize(c.text)} if q["restrict_to_corpus"] else None
    expanded = expand_catalog(_catalog(cfg), table, q["min_sim"], q["raise_to"], q["cap"], vocab)
    tagged = tag_corpus(corpus, expanded, per_term=q["per_term"])
    activity = issue_activity(tagged, q["group_by"])
    run.wrote(write_tagged(tagged, run.path("tagged.csv")))
    run.wrote(write_expansion(expanded, run.path("expansion.csv")))
    run.wrote(write_activity(activity, run.path("activity.csv")))
    if cfg["flags"]["emit_svg"]:
        from .render import activity_bars

        run.wrote(activity_bars(activity, run.path("activity.svg"), "Words per predefined issue"))
    return run


def cmd_topics(cfg: dict, args, out: Path) -> Run:
    from .latent import NMFParams, VocabConfig, assign_topics, build_tfidf, fit_nmf, latent_activity, topic_overlap
    from .latent.topics import write_assignments, write_keywords, write_overlap, write_representatives
    from .issues_query import write_activity

    run = Run("topics", cfg, out)
    corpus = _load_master(out)
    modelled = filter_comments(corpus, exclude_multi_party=cfg["flags"]["exclude_multi_party"])
    n = cfg["nmf"]
    paths = cfg["paths"]
    vocab_cfg = VocabConfig(
        max_features=n["max_features"],
        max_df=n["max_df"],
        stopword_list=_stopwords(cfg),
        allow_list=_word_list(cfg, paths["allow_list"]),
        deny_list=_word_list(cfg, paths["deny_list"]),
    )
    dtm = build_tfidf(modelled, vocab_cfg)

    def params(k):
        return NMFParams(k=k, alpha=n["alpha"], l1_ratio=n["l1_ratio"], tol=n["tol"],
                         max_iter=n["max_iter"], membership_threshold=n["membership"])

    model = fit_nmf(dtm, params(n["k"]))
    assignments = assign_topics(model)
    run.wrote(write_keywords(model, run.path("topics_keywords.csv"), n["keywords"]))
    run.wrote(write_assignments(corpus, assignments, run.path("topic_assignments.csv")))
    run.wrote(write_representatives(model, modelled, run.path("representatives.csv"), n["representatives"]))
    run.wrote(write_overlap(topic_overlap(assignments, model.k), run.path("overlap.csv")))
    activity = latent_activity(assignments, modelled, n["group_by"])
    run.wrote(write_activity(activity, run.path("latent_activity.csv"), label="topic"))
    if n["sweep"]:
        rows = []
        for k in n["sweep"]:
            if k > min(dtm.shape):
                log.warning("k=%d exceeds the document-term matrix %s; skipped in sweep", k, dtm.shape)
                continue
            m = fit_nmf(dtm, params(k))
            rows.append((k, repr(m.objective_trace[-1]), m.n_iter, int(m.converged)))
        run.wrote(write_rows(run.path("k_sweep.csv"), ("k", "objective", "iterations", "converged"), rows))
    if cfg["flags"]["emit_svg"]:
        from .render import activity_bars

        run.wrote(activity_bars(activity, run.path("latent_activity.svg"), "Words per latent issue"))
    return run


def _stopwords(cfg):
    from .embed import load_stopwords

    return load_stopwords(config_mod.resolve(cfg, cfg["paths"]["stopwords"]))


def _word_list(cfg, value):
    if value is None:
        return None
    path = _require(config_mod.resolve(cfg, value), "word list")
    return frozenset(w.strip().lower() for w in path.read_text(encoding="utf-8").split() if w.strip())


def cmd_distances(cfg: dict, args, out: Path) -> Run:
    from .corpus import period_of
    from .embed import PoolingOptions, Precomputed, StaticPooling, load_doc_vectors
    from .errors import InsufficientParties, NoReference
    from .positions import (
        distance_profile,
        estimate_uncertainty,
        pairwise_heatmap,
        party_activity,
        party_position,
        reference_position,
    )

    source = args.source or "query"
    run = Run("distances", cfg, out)
    corpus = _load_master(out)
    if source == "query":
        from .issues_query import read_tags

        tags = read_tags(_require(out / "tagged.csv", "run `parley tag` first"))
        issues = [n for n in _tag_columns(out / "tagged.csv")]
    else:
        from .latent.topics import read_assignments, topic_label

        raw = read_assignments(_require(out / "topic_assignments.csv", "run `parley topics` first"))
        tags = {cid: {topic_label(t) for t in ts} for cid, ts in raw.items()}
        k = 1 + max((t for ts in raw.values() for t in ts), default=-1)
        issues = [topic_label(t) for t in range(k)]
    if cfg["flags"]["exclude_multi_party"]:
        corpus = filter_comments(corpus, exclude_multi_party=True)

    p = cfg["positions"]
    if p["backend"] == "precomputed":
        store = load_doc_vectors(_require(config_mod.resolve(cfg, cfg["paths"]["doc_vectors"]), "paths.doc_vectors"))
        store.validate(corpus)
        backend = Precomputed(store)
    else:
        opts = PoolingOptions(remove_stopwords=p["remove_stopwords"], stopword_list=_stopwords(cfg) if p["remove_stopwords"] else None)
        backend = StaticPooling(_load_table(cfg), opts)

    parties = p["parties"] or sorted({c.organisation for c in corpus})
    baseline = args.baseline or p["baseline"]
    if baseline is not None and baseline not in parties:
        raise ConfigError("positions.baseline", f"{baseline!r} is not among the parties")
    group_by = p["group_by"]
    periods = sorted({period_of(c, group_by) for c in corpus})
    u = cfg["uncertainty"]

    profile_rows = []
    activity_rows = []
    for issue in issues:
        for period in periods:
            positions = [party_position(corpus, tags, backend, party, issue, period, group_by) for party in parties]
            margins = {
                pos.party: estimate_uncertainty(
                    corpus, tags, backend, pos.party, issue, period, group_by, u["fraction"], u["reps"], u["seed"]
                ).margin
                if pos.has_data
                else None
                for pos in positions
            }
            refs = [("average", "average", None)]
            if baseline is not None:
                refs.append((f"baseline:{baseline}", "baseline", baseline))
            for ref_name, mode, base in refs:
                try:
                    ref = reference_position(positions, mode, base)
                except NoReference:
                    ref = None
                prof = distance_profile(positions, {(str(issue), period): ref}, ref_name)
                for pos in positions:
                    sim = prof.similarity[(pos.party, pos.issue, pos.period)]
                    profile_rows.append({
                        "reference": ref_name,
                        "party": pos.party,
                        "issue": issue,
                        "period": period,
                        "similarity": "" if sim is None else repr(sim),
                        "distance": "" if sim is None else repr(1.0 - sim),
                        "margin": "" if margins[pos.party] is None else repr(margins[pos.party]),
                        "word_count": pos.word_count,
                    })
            for party, words in party_activity(corpus, tags, issue, period, group_by):
                if party in parties:
                    activity_rows.append((issue, period, party, words))

    sub = ("distances", source)
    header = ("reference", "party", "issue", "period", "similarity", "distance", "margin", "word_count")
    run.wrote(write_rows(run.path(*sub, "profile.csv"), header, ([r[h] for h in header] for r in profile_rows)))
    run.wrote(write_rows(run.path(*sub, "party_activity.csv"), ("issue", "period", "party", "words"), activity_rows))

    for issue in issues:
        positions = [party_position(corpus, tags, backend, party, issue) for party in parties]
        try:
            report = pairwise_heatmap(positions, str(issue))
        except InsufficientParties as exc:
            log.warning("%s", exc)
            continue
        name = slug(str(issue))
        fmt = lambda x: "" if np.isnan(x) else repr(float(x))  # noqa: E731
        rows = [[party] + [fmt(x) for x in report.matrix[i]] for i, party in enumerate(parties)]
        run.wrote(write_rows(run.path(*sub, f"heatmap_{name}.csv"), ["party"] + parties, rows))
        lrows = [[party] + [int(x) if x else "" for x in report.levels[i]] for i, party in enumerate(parties)]
        lrows.append(["bin_edges"] + [repr(float(e)) for e in report.bin_edges] + [""] * (len(parties) - len(report.bin_edges)))
        run.wrote(write_rows(run.path(*sub, f"heatmap_{name}_levels.csv"), ["party"] + parties, lrows))
        if cfg["flags"]["emit_svg"]:
            from .render import heatmap_grid

            run.wrote(heatmap_grid(report, run.path(*sub, f"heatmap_{name}.svg")))

    if cfg["flags"]["emit_svg"]:
        from .render import activity_bars, profile_lines

        for ref_name in sorted({r["reference"] for r in profile_rows}):
            for period in periods:
                rows = [r for r in profile_rows if r["reference"] == ref_name and r["period"] == period]
                name = f"profile_{slug(ref_name)}_{slug(period)}.svg"
                run.wrote(profile_lines(rows, run.path(*sub, name), f"{ref_name} ({period})"))
        by_party = [(f"{r[0]} / {r[2]}", r[1], r[3]) for r in activity_rows]
        run.wrote(activity_bars(by_party, run.path(*sub, "party_activity.svg"), "Words per party and issue"))
    return run


def _tag_columns(path: Path) -> list[str]:
    from .corpus import CSV_HEADER

    with open(path, encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh))
    return header[len(CSV_HEADER) : -1]


def _stream_tokens(cfg: dict, out: Path):
    d = cfg["diag"]
    if d["streams"]:
        streams = []
        for s in d["streams"]:
            text = _require(config_mod.resolve(cfg, s), "diag stream").read_text(encoding="utf-8")
            streams.append(tokenize(text))
    else:
        corpus = _load_master(out)
        half = len(corpus) // 2
        streams = [
            [t for c in corpus[:half] for t in tokenize(c.text)],
            [t for c in corpus[half:] for t in tokenize(c.text)],
        ]
    if d["remove_stopwords"]:
        stop = _stopwords(cfg)
        streams = [[t for t in s if t not in stop] for s in streams]
    return streams


def cmd_diagnose(cfg: dict, args, out: Path) -> Run:
    from .diag import anisotropy, running_mean_extrema, running_mean_similarity

    run = Run("diagnose", cfg, out)
    table = _load_table(cfg)
    hist = anisotropy(table)
    run.wrote(write_rows(run.path("anisotropy.csv"), ("dimension", "count"), enumerate(hist.counts.tolist())))
    limit = cfg["diag"]["max_tokens"]
    streams = _stream_tokens(cfg, out)
    streams = [[t for t in s if t in table][:limit] for s in streams]
    series = []
    for i, stream in enumerate(streams):
        rm = running_mean_extrema(table, stream)
        series.append(rm)
        rows = []
        for n, mean in enumerate(rm.means, start=1):
            rows.append((n, "max", repr(float(mean.max()))))
            rows.append((n, "min", repr(float(mean.min()))))
            if cfg["diag"]["all_components"]:
                rows.extend((n, j, repr(float(v))) for j, v in enumerate(mean))
        name = "running_mean.csv" if i == 0 else f"running_mean_{i + 1}.csv"
        run.wrote(write_rows(run.path(name), ("n", "component", "value"), rows))
    sims = running_mean_similarity(table, streams[0], streams[1])
    run.wrote(write_rows(run.path("running_sim.csv"), ("n", "cosine"), ((n, repr(float(v))) for n, v in enumerate(sims, start=1))))
    if cfg["flags"]["emit_svg"]:
        from .render import bar_chart, series_plot

        run.wrote(bar_chart(list(range(hist.dimension)), hist.counts, run.path("anisotropy.svg"),
                            "Largest component per vector", "vectors"))
        rm = series[0]
        run.wrote(series_plot(rm.n, {"max": rm.max_component, "min": rm.min_component},
                              run.path("running_mean.svg"), "Running-mean extreme components", "value"))
        run.wrote(series_plot(np.arange(1, len(sims) + 1), {"cosine": sims}, run.path("running_sim.svg"),
                              "Cosine between running means", "cosine"))
    return run


COMMANDS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "tag": cmd_tag,
    "topics": cmd_topics,
    "distances": cmd_distances,
    "diagnose": cmd_diagnose,
    "filter": cmd_filter,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parley", description="Dialogue-note analytics for mediation support.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", help="output directory (default: paths.output, $PARLEY_OUT, ./out)")
    p.add_argument("--seed", type=int, help="override synth.seed and uncertainty.seed")
    p.add_argument("--source", choices=("query", "latent"), help="tag source for `distances`")
    p.add_argument("--baseline", help="baseline party for `distances`")
    p.add_argument("--emit-svg", action="store_true", help="also render SVG charts")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. --set nmf.k=12 (value parsed as TOML)")
    p.add_argument("--party", action="append", help="`filter`: participant name (repeatable)")
    p.add_argument("--organisation", action="append", help="`filter`: organisation (repeatable)")
    p.add_argument("--year", help="`filter`: year or range like 2018-2019")
    p.add_argument("--month", help="`filter`: month or range like 3-6")
    p.add_argument("--exclude-multi-party", dest="exclude_multi_party", action="store_true", default=None)
    p.add_argument("--include-multi-party", dest="exclude_multi_party", action="store_false")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_overrides(items: list[str]) -> dict:
    out: dict = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(item, "expected KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = config_mod.tomllib.loads(f"v = {raw}")["v"]
        except config_mod.tomllib.TOMLDecodeError:
            value = raw
        node = out
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out


def _deep_update(base: dict, extra: dict) -> None:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = _parse_overrides(args.overrides)
        if args.seed is not None:
            _deep_update(overrides, {"synth": {"seed": args.seed}, "uncertainty": {"seed": args.seed}})
        if args.emit_svg:
            _deep_update(overrides, {"flags": {"emit_svg": True}})
        cfg = config_mod.load_config(args.config, overrides)
        out = config_mod.output_dir(cfg, args.out)
    except ConfigError as exc:
        print(f"parley: config error: {exc}", file=sys.stderr)
        return 1

    from filelock import FileLock, Timeout

    out.mkdir(parents=True, exist_ok=True)
    lock_path = out / ".parley.lock"
    lock = FileLock(str(lock_path), timeout=0)
    try:
        with lock:
            result = COMMANDS[args.subcommand](cfg, args, out)
            result.finish()
    except Timeout:
        print(f"parley: output directory {out} is locked by another run", file=sys.stderr)
        return 2
    except (ConfigError, MissingArtifact) as exc:
        print(f"parley: {exc}", file=sys.stderr)
        return 1
    except (ParleyError, OSError, ValueError) as exc:
        print(f"parley: error: {exc}", file=sys.stderr)
        return 2
    finally:
        lock_path.unlink(missing_ok=True)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
