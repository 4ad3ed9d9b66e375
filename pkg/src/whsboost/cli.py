"""Command-line driver: ``whsboost {simulate,bench,stats} --config FILE --out DIR``.

The config is a flat ``key = value`` file (``#`` starts a comment)::

    seed = 7
    repetitions = 50
    train_fraction = 0.7
    beta = 3
    normalize = true                   # min-max scaling fitted on each train split

    dataset.german.csv = german.csv
    dataset.german.schema = german.schema.json
    # or a generated dataset
    dataset.sim10.simulation.minority_fraction = 0.1
    dataset.sim10.simulation.seed = 3

    pipeline.whs.kind = whsboost
    pipeline.whs.T = 20
    pipeline.whs.base.kind = knn
    pipeline.whs.base.k = 3

    simulation.n_total = 1000          # for `simulate`
    stats.inputs = results.csv         # for `stats`, relative to --out
    stats.metric = f_beta
    stats.mode = pooled                # or per-dataset

Relative dataset paths are resolved against the config file's directory;
relative ``stats.inputs`` against the output directory. The worker
count may be overridden with the ``WHSBOOST_WORKERS`` environment variable;
nothing else is read from the environment.

Exit codes: 0 success, 1 configuration or input error, 2 partial or runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .classifiers import ClassifierSpec
from .data import DataError, load_csv_dataset, write_csv_dataset
from .ensemble import BoostConfig
from .evaluation import (
    METRICS,
    RESULT_COLUMNS,
    Pipeline,
    SimulationSpec,
    paired_values,
    run_experiment,
    simulate_dataset,
    wilcoxon_signed_rank,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
WORKERS_ENV = "WHSBOOST_WORKERS"
SIGNIFICANCE = 0.05

log = logging.getLogger("whsboost")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _coerce(value: str, kind):
    if kind is bool or kind == "bool":
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"cannot read {value!r} as {kind.__name__}") from None


def _typed(cls, raw: dict, what: str) -> dict:
    """Coerce string values for dataclass ``cls`` fields, rejecting unknown keys."""
    types = {}
    for f in fields(cls):
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "str")
        types[f.name] = {"int": int, "float": float, "str": str, "bool": bool,
                         "int | None": int}.get(t)
    out = {}
    for k, v in raw.items():
        if k not in types or types[k] is None:
            raise ConfigError(f"{what}: unknown key {k!r}")
        out[k] = _coerce(v, types[k])
    return out


def _group(cfg: dict, prefix: str) -> dict:
    """``{name: {subkey: value}}`` for keys of the form ``prefix.name.subkey``."""
    groups = {}
    for key, value in cfg.items():
        if key.startswith(prefix + "."):
            rest = key[len(prefix) + 1:]
            if "." not in rest:
                raise ConfigError(f"{key!r}: expected {prefix}.<name>.<field>")
            name, sub = rest.split(".", 1)
            groups.setdefault(name, {})[sub] = value
    return groups


def build_pipeline(name: str, raw: dict) -> Pipeline:
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind is None:
        raise ConfigError(f"pipeline {name!r}: missing 'kind'")
    base_raw = {k[5:]: v for k, v in raw.items() if k.startswith("base.")}
    if "base" in raw:
        base_raw.setdefault("kind", raw.pop("base"))
    boost_raw = {k: v for k, v in raw.items() if not k.startswith("base.")}
    try:
        base = ClassifierSpec(**_typed(ClassifierSpec, base_raw, f"pipeline {name!r} base"))
        cfg = BoostConfig(base=base, **_typed(BoostConfig, boost_raw, f"pipeline {name!r}"))
        return Pipeline(name, kind, cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"pipeline {name!r}: {exc}") from None


def build_simulation(raw: dict, seed: int | None, what: str) -> SimulationSpec:
    raw = dict(raw)
    if "seed" not in raw and seed is not None:
        raw["seed"] = str(seed)
    try:
        return SimulationSpec(**_typed(SimulationSpec, raw, what))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _get(cfg, key, kind, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return _coerce(cfg[key], kind)


def load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text), path.resolve().parent


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def worker_count(cfg: dict) -> int:
    env = os.environ.get(WORKERS_ENV)
    n = _coerce(env, int) if env else _get(cfg, "workers", int, 1)
    if n < 1:
        raise ConfigError("workers must be >= 1")
    return n


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def write_atomic(path: Path, text: str) -> None:
    """Write to ``path.partial`` first so an interrupted run never leaves a truncated final."""
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in header])
    return buf.getvalue()


def _setup_log(out: Path) -> logging.Handler:
    handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def load_datasets(cfg: dict, base: Path, seed: int):
    groups = _group(cfg, "dataset")
    if not groups:
        raise ConfigError("no dataset.<name>.* entries")
    out = []
    for name in sorted(groups):
        g = groups[name]
        sim = {k[len("simulation."):]: v for k, v in g.items() if k.startswith("simulation.")}
        if sim:
            spec = build_simulation(sim, seed, f"dataset {name!r} simulation")
            try:
                out.append((name, simulate_dataset(spec)))
            except DataError as exc:
                raise ConfigError(f"dataset {name!r}: {exc}") from None
            continue
        if "csv" not in g or "schema" not in g:
            raise ConfigError(f"dataset {name!r}: needs 'csv' and 'schema' or 'simulation.*'")
        csv_path, schema_path = _resolve(base, g["csv"]), _resolve(base, g["schema"])
        for p in (csv_path, schema_path):
            if not p.is_file():
                raise ConfigError(f"dataset {name!r}: file not found: {p}")
        try:
            out.append((name, load_csv_dataset(csv_path, schema_path)))
        except (DataError, ValueError, KeyError) as exc:
            raise ConfigError(f"dataset {name!r}: {exc}") from None
    return out


def cmd_simulate(cfg: dict, base: Path, out: Path) -> int:
    seed = _get(cfg, "seed", int, required=True)
    raw = {k[len("simulation."):]: v for k, v in cfg.items() if k.startswith("simulation.")}
    spec = build_simulation(raw, seed, "simulation")
    name = cfg.get("name", "simulated")
    try:
        data = simulate_dataset(spec)
    except DataError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    csv_path, schema_path = out / f"{name}.csv", out / f"{name}.schema.json"
    tmp_csv = csv_path.with_name(csv_path.name + ".partial")
    tmp_schema = schema_path.with_name(schema_path.name + ".partial")
    write_csv_dataset(data, tmp_csv, tmp_schema)
    os.replace(tmp_csv, csv_path)
    os.replace(tmp_schema, schema_path)
    meta = {"spec": {f.name: getattr(spec, f.name) for f in fields(spec)}, **data.meta}
    write_atomic(out / f"{name}.meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    log.info("simulated %d rows (%d positive) into %s", data.n, data.n_positive, csv_path)
    return EXIT_OK


def cmd_bench(cfg: dict, base: Path, out: Path) -> int:
    seed = _get(cfg, "seed", int, required=True)
    reps = _get(cfg, "repetitions", int, 50)
    frac = _get(cfg, "train_fraction", float, 0.7)
    beta = _get(cfg, "beta", float, 3.0)
    timing = _get(cfg, "record_timing", bool, False)
    normalize = _get(cfg, "normalize", bool, True)
    workers = worker_count(cfg)
    groups = _group(cfg, "pipeline")
    if not groups:
        raise ConfigError("no pipeline.<name>.* entries")
    pipelines = [build_pipeline(n, groups[n]) for n in groups]
    datasets = load_datasets(cfg, base, seed)
    if reps < 1 or not 0 < frac < 1:
        raise ConfigError("need repetitions >= 1 and 0 < train_fraction < 1")

    rows, summary = [], {}
    for name, data in datasets:
        log.info("dataset %s: %d rows, %d positive", name, data.n, data.n_positive)
        try:
            res = run_experiment(data, pipelines, reps, frac, beta, seed, name, workers, timing,
                                 normalize)
        except (DataError, ValueError) as exc:
            raise ConfigError(f"dataset {name!r}: {exc}") from None
        rows.extend(res.rows)
        summary[name] = res.summary
        for p, s in res.summary["pipelines"].items():
            log.info("%s/%s: f_beta %s auc %s failures %d", name, p,
                     s["f_beta_mean"], s["auc_mean"], s["failures"])

    plot = [{"dataset": r["dataset"], "pipeline": r["pipeline"],
             "base_classifier": r["base_classifier"], "repetition": r["repetition"],
             "metric": m, "value": r[m]} for r in rows for m in METRICS if not r["error"]]
    write_atomic(out / "results.csv", csv_text(RESULT_COLUMNS, rows))
    write_atomic(out / "plotdata.csv", csv_text(
        ("dataset", "pipeline", "base_classifier", "repetition", "metric", "value"), plot))
    doc = {"seed": seed, "repetitions": reps, "train_fraction": frac, "beta": beta,
           "datasets": summary}
    write_atomic(out / "summary.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    failed = [r for r in rows if r["error"]]
    for r in failed:
        log.error("%s/%s rep %s: %s", r["dataset"], r["pipeline"], r["repetition"], r["error"])
    return EXIT_RUNTIME if failed else EXIT_OK


def read_results(paths) -> list:
    rows = []
    for p in paths:
        if not p.is_file():
            raise ConfigError(f"results file not found: {p}")
        with open(p, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"dataset", "pipeline", "repetition", "split_seed"} - set(reader.fieldnames or ())
            if missing:
                raise ConfigError(f"{p}: missing columns {sorted(missing)}")
            rows.extend(reader)
    for r in rows:
        r["error"] = r.get("error") or ""
    return rows


WILCOXON_COLUMNS = ("scope", "row", "col", "metric", "n_effective", "W_plus", "W_minus",
                    "Z", "p", "rank_basis", "significant", "method")


def wilcoxon_matrix(rows, metric="f_beta", mode="pooled", alpha=SIGNIFICANCE) -> list:
    """All ordered pipeline pairs; cell (row, col) tests ``d = col - row``."""
    names = list(dict.fromkeys(r["pipeline"] for r in rows))
    scopes = [None] if mode == "pooled" else sorted({r["dataset"] for r in rows})
    out = []
    for scope in scopes:
        for a in names:
            for b in names:
                cell = {"scope": scope or "pooled", "row": a, "col": b, "metric": metric}
                vb, va = paired_values(rows, b, a, metric, scope)
                try:
                    w = wilcoxon_signed_rank(vb, va)
                except ValueError:
                    cell.update(n_effective=0, W_plus="", W_minus="", Z="", p="",
                                rank_basis="", significant="undefined", method="")
                    out.append(cell)
                    continue
                cell.update(n_effective=w.n_effective, W_plus=w.W_plus, W_minus=w.W_minus,
                            Z=w.Z, p=w.p_two_sided, rank_basis=w.marker,
                            significant=str(w.p_two_sided < alpha).lower(), method=w.method)
                out.append(cell)
    return out


def cmd_stats(cfg: dict, base: Path, out: Path) -> int:
    inputs = cfg.get("stats.inputs", "results.csv")
    # relative inputs live next to the outputs, where `bench` put them
    paths = [_resolve(out, s.strip()) for s in inputs.split(",") if s.strip()]
    metric = cfg.get("stats.metric", "f_beta")
    if metric not in METRICS:
        raise ConfigError(f"stats.metric must be one of {METRICS}")
    mode = cfg.get("stats.mode", "pooled")
    if mode not in ("pooled", "per-dataset"):
        raise ConfigError("stats.mode must be 'pooled' or 'per-dataset'")
    alpha = _get(cfg, "stats.alpha", float, SIGNIFICANCE)
    rows = read_results(paths)
    try:
        cells = wilcoxon_matrix(rows, metric, mode, alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_atomic(out / "wilcoxon.csv", csv_text(WILCOXON_COLUMNS, cells))
    log.info("wrote %d wilcoxon cells", len(cells))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "bench": cmd_bench, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="whsboost", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    handler = _setup_log(out)
    try:
        cfg, base = load_config(args.config)
        log.info("command %s, config %s", args.command, args.config)
        code = COMMANDS[args.command](cfg, base, out)
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any crash maps to the runtime exit code
        log.exception("run failed")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_RUNTIME
    finally:
        log.removeHandler(handler)
        handler.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
