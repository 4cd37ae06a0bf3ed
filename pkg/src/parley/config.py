"""Run configuration: one TOML file, every paper default pre-filled.

Relative paths resolve against the directory of the config file (or the
working directory when no file is given).
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS: dict = {
    "paths": {
        "notes": None,
        "embeddings": None,
        "doc_vectors": None,
        "output": None,
        "synth_dir": "synthetic",
        "stopwords": None,
        "allow_list": None,
        "deny_list": None,
    },
    "normalization": {
        "abbreviation_map": {},
        "entity_map": {},
        "phrase_list": [],
        "strip_patterns": [],
    },
    "issues": [],
    "query": {
        "min_sim": 0.4,
        "raise_to": 0.6,
        "cap": 1000,
        "restrict_to_corpus": True,
        "per_term": False,
        "group_by": "year",
    },
    "nmf": {
        "k": 5,
        "alpha": 0.1,
        "l1_ratio": 0.5,
        "tol": 1e-4,
        "max_iter": 200,
        "membership": 0.1,
        "max_features": 10_000,
        "max_df": 0.9,
        "keywords": 10,
        "representatives": 10,
        "sweep": list(range(5, 31)),  # reported alongside the chosen k
        "group_by": "year",
    },
    "positions": {
        "parties": [],
        "baseline": None,
        "backend": "static",
        "group_by": "year",
        "remove_stopwords": True,
    },
    "uncertainty": {
        "fraction": 0.10,
        "reps": 20,
        "seed": 0,
    },
    "synth": {
        "seed": 0,
        "words_per_session": 12_000,
        "dimension": 50,
        "spec": None,
    },
    "diag": {
        "streams": [],
        "max_tokens": 5000,
        "all_components": False,
        "remove_stopwords": False,
    },
    "filter": {
        "party": [],
        "organisation": [],
        "year": None,
        "month": None,
    },
    "flags": {
        "exclude_multi_party": True,
        "emit_svg": False,
    },
}


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(path, "unknown setting")
        if isinstance(base[key], dict) and base[key] and key not in ("abbreviation_map", "entity_map"):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected a table")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = value
    return out


def _check(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ConfigError(field, message)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate(cfg: dict) -> None:
    """Reject out-of-range parameters before any work starts."""
    q = cfg["query"]
    for name in ("min_sim", "raise_to"):
        _check(_is_number(q[name]) and 0 < q[name] <= 1, f"query.{name}", "must lie in (0, 1]")
    _check(q["min_sim"] <= q["raise_to"], "query.raise_to", "must be >= query.min_sim")
    _check(isinstance(q["cap"], int) and q["cap"] >= 0, "query.cap", "must be an integer >= 0")
    for section in ("query", "nmf", "positions"):
        _check(
            cfg[section]["group_by"] in ("year", "year_month", "all"),
            f"{section}.group_by",
            "must be one of year, year_month, all",
        )
    n = cfg["nmf"]
    _check(isinstance(n["k"], int) and n["k"] >= 2, "nmf.k", "must be an integer >= 2")
    _check(_is_number(n["alpha"]) and n["alpha"] >= 0, "nmf.alpha", "must be >= 0")
    _check(_is_number(n["l1_ratio"]) and 0 <= n["l1_ratio"] <= 1, "nmf.l1_ratio", "must lie in [0, 1]")
    _check(_is_number(n["tol"]) and n["tol"] > 0, "nmf.tol", "must be > 0")
    _check(isinstance(n["max_iter"], int) and n["max_iter"] >= 1, "nmf.max_iter", "must be an integer >= 1")
    _check(_is_number(n["membership"]) and 0 <= n["membership"] <= 1, "nmf.membership", "must lie in [0, 1]")
    _check(isinstance(n["max_features"], int) and n["max_features"] >= 1, "nmf.max_features", "must be >= 1")
    _check(_is_number(n["max_df"]) and 0 < n["max_df"] <= 1, "nmf.max_df", "must lie in (0, 1]")
    for name in ("keywords", "representatives"):
        _check(isinstance(n[name], int) and n[name] >= 1, f"nmf.{name}", "must be an integer >= 1")
    _check(all(isinstance(k, int) and k >= 2 for k in n["sweep"]), "nmf.sweep", "entries must be integers >= 2")
    p = cfg["positions"]
    _check(p["backend"] in ("static", "precomputed"), "positions.backend", "must be static or precomputed")
    u = cfg["uncertainty"]
    _check(_is_number(u["fraction"]) and 0 < u["fraction"] < 1, "uncertainty.fraction", "must lie in (0, 1)")
    _check(isinstance(u["reps"], int) and u["reps"] >= 1, "uncertainty.reps", "must be an integer >= 1")
    _check(isinstance(u["seed"], int), "uncertainty.seed", "must be an integer")
    s = cfg["synth"]
    _check(isinstance(s["seed"], int), "synth.seed", "must be an integer")
    _check(_is_number(s["words_per_session"]) and s["words_per_session"] > 0, "synth.words_per_session", "must be > 0")
    _check(isinstance(s["dimension"], int) and s["dimension"] >= 2, "synth.dimension", "must be an integer >= 2")
    d = cfg["diag"]
    _check(isinstance(d["max_tokens"], int) and d["max_tokens"] >= 1, "diag.max_tokens", "must be >= 1")
    _check(len(d["streams"]) in (0, 2), "diag.streams", "give exactly two stream files or none")
    names = set()
    for i, issue in enumerate(cfg["issues"]):
        _check(isinstance(issue, dict) and "name" in issue and "seeds" in issue, f"issues[{i}]", "needs name and seeds")
        _check(bool(issue["seeds"]), f"issues[{i}].seeds", "must be nonempty")
        _check(issue["name"] not in names, f"issues[{i}].name", "duplicate issue name")
        names.add(issue["name"])
    from .corpus import NormalizationConfig

    try:
        NormalizationConfig.from_dict(cfg["normalization"])
    except ValueError as exc:
        raise ConfigError("normalization", str(exc)) from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults <- config file <- *overrides* (nested dict), validated."""
    data: dict = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError("--config", f"file not found: {path}")
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"invalid TOML: {exc}") from None
        base_dir = path.resolve().parent
    cfg = _merge(DEFAULTS, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    validate(cfg)
    cfg["_base_dir"] = str(base_dir)
    return cfg


def resolve(cfg: dict, value: str | None) -> Path | None:
    if value is None:
        return None
    p = Path(value).expanduser()
    return p if p.is_absolute() else Path(cfg["_base_dir"]) / p


def output_dir(cfg: dict, cli_out: str | None = None) -> Path:
    if cli_out:
        return Path(cli_out)
    if cfg["paths"]["output"]:
        return resolve(cfg, cfg["paths"]["output"])
    env = os.environ.get("PARLEY_OUT")
    if env:
        return Path(env)
    return resolve(cfg, "out")


def synth_dir(cfg: dict) -> Path:
    return resolve(cfg, cfg["paths"]["synth_dir"])


def notes_dir(cfg: dict) -> Path:
    if cfg["paths"]["notes"]:
        return resolve(cfg, cfg["paths"]["notes"])
    return synth_dir(cfg) / "notes"


def embeddings_path(cfg: dict) -> Path:
    if cfg["paths"]["embeddings"]:
        return resolve(cfg, cfg["paths"]["embeddings"])
    return synth_dir(cfg) / "table.txt"


def config_hash(cfg: dict) -> str:
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    blob = json.dumps(clean, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()
