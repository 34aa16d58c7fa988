"""Experiment specs, batch execution over (dataset, variant) pairs, and report tables.

Config files are YAML. Top-level keys::

    datasets:   list of names (resolved through ``manifest``) or mappings
                {name, path, label, r, v}
    manifest:   optional path to a YAML mapping name -> {path, label}
    variants:   list of variant names or mappings {name, label, <sections>}
    runs:       runs per pair (default 20)
    out:        output directory (default "results")
    formats:    any of text, delimited, markdown (default all three)
    <sections>: algorithm defaults shared by every variant, see ``SCHEMA``

Relative paths resolve against the file that mentions them.
"""
from __future__ import annotations

import json
import math
import os
import platform
import re
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import yaml

from .bpso import PsoParams
from .chaos import ChaosConfig
from .data import load_dataset
from .fitness import KnnParams, compare_solutions
from .mutation import MutationParams
from .orchestrator import VARIANTS, AlgorithmConfig, run_batch
from .seeding import SeedingParams

FORMATS = ("text", "delimited", "markdown")
SUFFIX = {"text": ".txt", "delimited": ".tsv", "markdown": ".md"}
DEFAULT_RUNS = 20


class ConfigError(ValueError):
    """Invalid experiment config; ``key`` is the dotted path at fault."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


# section -> key -> value kind; a trailing "?" allows null
SCHEMA = {
    "chaos": {"map": "str", "alpha": "float", "seed": "float?", "burn_in": "int", "velocity": "bool"},
    "pso": {"c1": "float", "c2": "float", "vmax": "float", "particles": "int", "iterations": "int", "inertia": "float"},
    "run": {"seed": "int"},
    "seeding": {
        "r": "float?",
        "v": "float",
        "temperature": "float?",
        "record_every": "int",
        "top_fraction": "float",
        "seed_fraction": "float",
        "invert_sign": "bool",
        "keep_snapshots": "bool",
    },
    "mutation": {"trigger_prob": "float", "per_bit_prob": "float?", "mode": "str"},
    "knn": {"k": "int"},
    "cv": {"folds": "int"},
    "fitness": {"tie_eps": "float"},
    "budget": {"enforce_final": "bool"},
    "normalize": {"enabled": "bool", "lower": "float", "upper": "float", "per_fold": "bool"},
}
TOP_KEYS = {"datasets", "manifest", "variants", "runs", "out", "formats"} | set(SCHEMA)
DATASET_KEYS = {"name", "path", "label", "r", "v"}
VARIANT_KEYS = {"name", "label"} | set(SCHEMA)


def _check_kind(key: str, value, kind: str):
    nullable = kind.endswith("?")
    kind = kind.rstrip("?")
    if value is None:
        if nullable:
            return None
        raise ConfigError(key, "must not be null")
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind == "int":
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _check_mapping(key: str, node, allowed: set[str]) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(key, f"expected a mapping, got {type(node).__name__}")
    for k in node:
        if k not in allowed:
            where = f"{key}.{k}" if key else str(k)
            raise ConfigError(where, f"unknown key (allowed: {', '.join(sorted(allowed))})")
    return node


def _sections(node: dict, prefix: str) -> dict[str, dict]:
    out = {}
    for sec, keys in SCHEMA.items():
        if sec not in node:
            continue
        where = f"{prefix}{sec}"
        body = _check_mapping(where, node[sec] if node[sec] is not None else {}, set(keys))
        out[sec] = {k: _check_kind(f"{where}.{k}", v, keys[k]) for k, v in body.items()}
    return out


def _merge(base: dict[str, dict], extra: dict[str, dict]) -> dict[str, dict]:
    merged = {k: dict(v) for k, v in base.items()}
    for sec, body in extra.items():
        merged.setdefault(sec, {}).update(body)
    return merged


def _guard(key: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def build_config(sections: dict[str, dict], variant: str, prefix: str = "") -> AlgorithmConfig:
    """AlgorithmConfig from validated section values; domain errors name the section."""
    s = {sec: sections.get(sec, {}) for sec in SCHEMA}
    ch, ps, sd, mu, nm = s["chaos"], s["pso"], s["seeding"], s["mutation"], s["normalize"]
    chaos = _guard(
        f"{prefix}chaos",
        ChaosConfig,
        map_kind=ch.get("map", "logistic"),
        alpha=ch.get("alpha", 4.0),
        seed_x0=ch.get("seed"),
        burn_in=ch.get("burn_in", 100),
    )
    pso_kw = {"particles": "n_particles", "iterations": "max_iterations"}
    pso = _guard(f"{prefix}pso", PsoParams, **{pso_kw.get(k, k): v for k, v in ps.items()})
    seeding = _guard(
        f"{prefix}seeding", SeedingParams, **{k: v for k, v in sd.items() if k != "keep_snapshots"}
    )
    mutation = _guard(f"{prefix}mutation", MutationParams, **mu)
    knn = _guard(f"{prefix}knn", KnnParams, k=s["knn"].get("k", 1), tie_eps=s["fitness"].get("tie_eps", 1e-9))
    bounds = (nm.get("lower", -1.0), nm.get("upper", 1.0)) if nm.get("enabled", True) else None
    return _guard(
        prefix.rstrip(".") or "config",
        AlgorithmConfig,
        pso=pso,
        chaos=chaos,
        seeding=seeding,
        mutation=mutation,
        knn=knn,
        cv_folds=s["cv"].get("folds", 10),
        seed=s["run"].get("seed", 0),
        variant=variant,
        normalize_bounds=bounds,
        normalize_per_fold=nm.get("per_fold", False),
        chaotic_velocity=ch.get("velocity", False),
        enforce_final_budget=s["budget"].get("enforce_final", False),
        keep_snapshots=sd.get("keep_snapshots", False),
    )


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: Path
    label: str | int = -1
    r: float | None = None
    v: float | None = None


@dataclass(frozen=True)
class VariantEntry:
    label: str
    config: AlgorithmConfig


@dataclass(frozen=True)
class ExperimentSpec:
    datasets: list[DatasetEntry]
    variants: list[VariantEntry]
    n_runs: int = DEFAULT_RUNS
    out_dir: Path = Path("results")
    formats: tuple[str, ...] = FORMATS

    def pairs(self) -> list[tuple[DatasetEntry, VariantEntry, AlgorithmConfig]]:
        """(dataset, variant, config with dataset overrides) in config order."""
        out = []
        for ds in self.datasets:
            for var in self.variants:
                cfg = var.config
                over = {k: getattr(ds, k) for k in ("r", "v") if getattr(ds, k) is not None}
                if over:
                    cfg = replace(cfg, seeding=replace(cfg.seeding, **over))
                out.append((ds, var, cfg))
        return out

    def with_overrides(self, seed=None, runs=None, out=None) -> "ExperimentSpec":
        spec = self
        if seed is not None:
            spec = replace(spec, variants=[replace(v, config=v.config.with_seed(seed)) for v in spec.variants])
        if runs is not None:
            if runs < 1:
                raise ConfigError("runs", "must be >= 1")
            spec = replace(spec, n_runs=runs)
        if out is not None:
            spec = replace(spec, out_dir=Path(out))
        return spec


_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


def _name(key: str, value) -> str:
    if not isinstance(value, str) or not _NAME_RE.match(value):
        raise ConfigError(key, f"names use letters, digits, '_', '.', '-' only, got {value!r}")
    return value


def _load_yaml(path: Path, key: str):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(key, f"cannot read {path}: {exc.strerror}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(key, f"{path} is not valid YAML: {exc}") from None


def _parse_datasets(node, manifest: dict, root: Path) -> list[DatasetEntry]:
    if not isinstance(node, list) or not node:
        raise ConfigError("datasets", "expected a non-empty list")
    seen = set()
    out = []
    for i, item in enumerate(node):
        key = f"datasets[{i}]"
        if isinstance(item, str):
            item = {"name": item}
        _check_mapping(key, item, DATASET_KEYS)
        if "name" not in item:
            raise ConfigError(f"{key}.name", "required")
        name = _name(f"{key}.name", item["name"])
        if name in seen:
            raise ConfigError(f"{key}.name", f"duplicate dataset name {name!r}")
        seen.add(name)
        entry = dict(manifest.get(name, {}))
        entry.update({k: v for k, v in item.items() if k != "name"})
        if "path" not in entry:
            raise ConfigError(f"{key}.path", f"no path for {name!r} in the config or the manifest")
        base = entry.pop("_root", root) if "path" not in item else root
        entry.pop("_root", None)
        path = Path(entry["path"])
        path = path if path.is_absolute() else base / path
        if not path.is_file():
            raise ConfigError(f"{key}.path", f"dataset file not found: {path}")
        label = entry.get("label", -1)
        if isinstance(label, bool) or not isinstance(label, (str, int)):
            raise ConfigError(f"{key}.label", f"expected a column name or index, got {label!r}")
        r = _check_kind(f"{key}.r", entry.get("r"), "float?")
        v = _check_kind(f"{key}.v", entry.get("v"), "float?")
        # reuse the seeding validators so r/v errors read the same everywhere
        _guard(f"{key}.r", SeedingParams, r=r)
        if v is not None:
            _guard(f"{key}.v", SeedingParams, v=v)
        out.append(DatasetEntry(name, path, label, r, v))
    return out


def _parse_manifest(node, root: Path) -> dict:
    if node is None:
        return {}
    if not isinstance(node, str):
        raise ConfigError("manifest", "expected a file path")
    path = Path(node) if Path(node).is_absolute() else root / node
    body = _load_yaml(path, "manifest") or {}
    if not isinstance(body, dict):
        raise ConfigError("manifest", f"{path} must map dataset names to entries")
    out = {}
    for name, item in body.items():
        key = f"manifest.{name}"
        _check_mapping(key, item, {"path", "label"})
        out[_name(key, name)] = dict(item, _root=path.parent)
    return out


def _parse_variants(node, defaults: dict[str, dict]) -> list[VariantEntry]:
    if node is None:
        node = list(VARIANTS)
    if not isinstance(node, list) or not node:
        raise ConfigError("variants", "expected a non-empty list")
    seen = set()
    out = []
    for i, item in enumerate(node):
        key = f"variants[{i}]"
        if isinstance(item, str):
            item = {"name": item}
        _check_mapping(key, item, VARIANT_KEYS)
        kind = item.get("name")
        if kind not in VARIANTS:
            raise ConfigError(f"{key}.name", f"must be one of {', '.join(VARIANTS)}, got {kind!r}")
        label = _name(f"{key}.label", item.get("label", kind))
        if label in seen:
            raise ConfigError(f"{key}.label", f"duplicate variant label {label!r}")
        seen.add(label)
        sections = _merge(defaults, _sections(item, f"{key}."))
        out.append(VariantEntry(label, build_config(sections, kind, f"{key}.")))
    return out


def parse_spec_dict(doc, root: Path = Path(".")) -> ExperimentSpec:
    doc = _check_mapping("", doc if doc is not None else {}, TOP_KEYS)
    if "datasets" not in doc:
        raise ConfigError("datasets", "required")
    manifest = _parse_manifest(doc.get("manifest"), root)
    datasets = _parse_datasets(doc["datasets"], manifest, root)
    # top-level sections are validated even if every variant overrides them
    defaults = _sections(doc, "")
    build_config(defaults, VARIANTS[0])
    variants = _parse_variants(doc.get("variants"), defaults)
    runs = _check_kind("runs", doc.get("runs", DEFAULT_RUNS), "int")
    if runs < 1:
        raise ConfigError("runs", "must be >= 1")
    out = doc.get("out", "results")
    if not isinstance(out, str):
        raise ConfigError("out", "expected a directory path")
    formats = doc.get("formats", list(FORMATS))
    if isinstance(formats, str):
        formats = [formats]
    if not isinstance(formats, list) or not formats:
        raise ConfigError("formats", "expected a non-empty list")
    for f in formats:
        if f not in FORMATS:
            raise ConfigError("formats", f"unknown format {f!r} (allowed: {', '.join(FORMATS)})")
    out_dir = Path(out) if Path(out).is_absolute() else root / out
    return ExperimentSpec(datasets, variants, runs, out_dir, tuple(dict.fromkeys(formats)))


def parse_spec(path) -> ExperimentSpec:
    path = Path(path)
    return parse_spec_dict(_load_yaml(path, "config"), path.resolve().parent)


# ---------------------------------------------------------------- execution


@dataclass
class ReportRow:
    dataset: str
    variant: str
    n_runs: int = 0
    mean_accuracy: float = math.nan
    sd_accuracy: float = math.nan
    mean_subset_size: float = math.nan
    best_selected: list[int] = field(default_factory=list)
    mean_wall_time: float = math.nan
    mean_precision: float = math.nan
    mean_recall: float = math.nan
    mean_f_measure: float = math.nan
    error: str | None = None
    best: bool = False

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ReportTable:
    rows: list[ReportRow]

    @property
    def failures(self) -> list[ReportRow]:
        return [r for r in self.rows if not r.ok]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def flag_best(self, tol: float = 1e-12) -> "ReportTable":
        """Mark the highest mean accuracy per dataset; equal means are all marked."""
        by_ds: dict[str, list[ReportRow]] = {}
        for row in self.rows:
            row.best = False
            if row.ok:
                by_ds.setdefault(row.dataset, []).append(row)
        for rows in by_ds.values():
            top = max(r.mean_accuracy for r in rows)
            for r in rows:
                r.best = r.mean_accuracy >= top - tol
        return self


def _stem(dataset: str, variant: str) -> str:
    return f"{dataset}__{variant}"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _config_record(cfg: AlgorithmConfig) -> dict:
    rec = asdict(cfg)
    rec.pop("seed")
    rec["normalize_bounds"] = list(cfg.normalize_bounds) if cfg.normalize_bounds else None
    return rec


def _best_run(results) -> int:
    best = 0
    for i, r in enumerate(results):
        if compare_solutions(r.final_fitness, results[best].final_fitness, 0.0) > 0:
            best = i
    return best


def run_pair(entry: DatasetEntry, label: str, cfg: AlgorithmConfig, n_runs: int) -> dict:
    """Run one (dataset, variant) batch; returns the documents to write."""
    d = load_dataset(entry.path, entry.label, name=entry.name)
    results, summary = run_batch(d, cfg, n_runs=n_runs)
    runs = []
    for r in results:
        runs.append(
            {
                "seed": r.seed,
                "accuracy": r.final_fitness.cv_accuracy,
                "n_selected": r.final_fitness.n_selected,
                "selected": r.selected,
                "search_accuracy": r.best_fitness.cv_accuracy,
                "search_n_selected": r.best_fitness.n_selected,
                "precision": r.precision,
                "recall": r.recall,
                "f_measure": r.f_measure,
                "n_evaluations": r.trace.n_evaluations,
            }
        )
    best = _best_run(results)
    agg = summary.as_dict()
    agg.pop("mean_wall_time")
    agg.update(best_seed=results[best].seed, best_selected=results[best].selected, budget=results[0].budget)
    doc = {
        "dataset": entry.name,
        "dataset_shape": {"samples": d.n_samples, "features": d.n_features, "classes": d.n_classes},
        "variant": label,
        "config": _config_record(cfg),
        "runs": runs,
        "aggregate": agg,
    }
    histories = [
        {"seed": r.seed, "history": [[h.cv_accuracy, h.n_selected] for h in r.history]} for r in results
    ]
    walls = [r.wall_time for r in results]
    return {"doc": doc, "histories": histories, "wall_times": walls}


def _pair_task(args):
    entry, label, cfg, n_runs = args
    try:
        return run_pair(entry, label, cfg, n_runs)
    except Exception as exc:  # recorded per pair, never aborts the batch
        tb = traceback.format_exception_only(type(exc), exc)[-1].strip()
        return {"error": tb}


def _row_from(doc: dict, walls: list[float]) -> ReportRow:
    agg = doc["aggregate"]
    return ReportRow(
        dataset=doc["dataset"],
        variant=doc["variant"],
        n_runs=agg["n_runs"],
        mean_accuracy=agg["mean_accuracy"],
        sd_accuracy=agg["sd_accuracy"],
        mean_subset_size=agg["mean_subset_size"],
        best_selected=list(agg["best_selected"]),
        mean_wall_time=float(sum(walls) / len(walls)) if walls else math.nan,
        mean_precision=agg["mean_precision"],
        mean_recall=agg["mean_recall"],
        mean_f_measure=agg["mean_f_measure"],
    )


def execute(spec: ExperimentSpec, jobs: int = 1, log=None) -> ReportTable:
    """Run every pair, write results/run/meta files and summary tables under ``spec.out_dir``."""
    out = Path(spec.out_dir)
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"output directory not writable: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError("out", f"output directory not writable: {out}")

    pairs = spec.pairs()
    tasks = [(ds, var.label, cfg, spec.n_runs) for ds, var, cfg in pairs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            outcomes = list(pool.map(_pair_task, tasks))
    else:
        outcomes = []
        for t in tasks:
            if log:
                log(f"running {t[0].name} / {t[1]}")
            outcomes.append(_pair_task(t))

    rows = []
    for (ds, var, cfg), res in zip(pairs, outcomes):
        stem = _stem(ds.name, var.label)
        if "error" in res:
            rows.append(ReportRow(ds.name, var.label, error=res["error"]))
            if log:
                log(f"FAILED {ds.name} / {var.label}: {res['error']}")
            continue
        doc = res["doc"]
        (out / f"{stem}.json").write_text(_dump(doc))
        for run, hist in zip(doc["runs"], res["histories"]):
            (out / "runs" / f"{stem}__seed{run['seed']}.json").write_text(
                _dump({"dataset": ds.name, "variant": var.label, **run, "history": hist["history"]})
            )
        meta = {
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "python": platform.python_version(),
            "host": platform.node(),
            "wall_times": res["wall_times"],
        }
        (out / f"{stem}.meta.json").write_text(_dump(meta))
        rows.append(_row_from(doc, res["wall_times"]))

    table = ReportTable(rows).flag_best()
    for fmt in spec.formats:
        emit_table(table, fmt, out / f"summary{SUFFIX[fmt]}")
    return table


def load_results(path) -> dict:
    return json.loads(Path(path).read_text())


def table_from_results(paths) -> ReportTable:
    """Rebuild a report from results files, picking up wall times from sidecars when present."""
    rows = []
    for p in paths:
        p = Path(p)
        doc = load_results(p)
        meta = p.with_name(p.name[: -len(".json")] + ".meta.json")
        walls = load_results(meta)["wall_times"] if meta.is_file() else []
        rows.append(_row_from(doc, walls))
    return ReportTable(rows).flag_best()


# ---------------------------------------------------------------- tables

COLUMNS = ("dataset", "variant", "runs", "acc%", "sd%", "size", "P", "R", "F", "wall_s", "best_subset", "best")


def _cells(row: ReportRow, digits: int) -> list[str]:
    if not row.ok:
        return [row.dataset, row.variant, "0", "FAILED", "", "", "", "", "", "", row.error or "", ""]

    def pct(x):
        return f"{100 * x:.{digits}f}"

    return [
        row.dataset,
        row.variant,
        str(row.n_runs),
        pct(row.mean_accuracy),
        pct(row.sd_accuracy),
        f"{row.mean_subset_size:.{digits}f}",
        pct(row.mean_precision),
        pct(row.mean_recall),
        pct(row.mean_f_measure),
        f"{row.mean_wall_time:.{digits}f}",
        ",".join(map(str, row.best_selected)),
        "*" if row.best else "",
    ]


def render_table(table: ReportTable, fmt: str = "text", digits: int = 2) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    if not table.rows:
        raise ValueError("empty report")
    body = [_cells(r, digits) for r in table.rows]
    if fmt == "delimited":
        return "\n".join("\t".join(line) for line in [list(COLUMNS), *body]) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS[:-1]) + " |", "|" + "---|" * (len(COLUMNS) - 1)]
        for row, cells in zip(table.rows, body):
            cells = cells[:-1]
            if row.best:
                cells[3] = f"**{cells[3]}**"
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    widths = [max(len(c), *(len(line[i]) for line in body)) for i, c in enumerate(COLUMNS)]

    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    return "\n".join([line(COLUMNS), line(["-" * w for w in widths]), *map(line, body)]) + "\n"


def emit_table(table: ReportTable, fmt: str, path) -> Path:
    path = Path(path)
    text = render_table(table, fmt)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc.strerror}") from None
    return path


def parse_markdown_table(text: str) -> list[dict]:
    """Inverse of the markdown view, for cross-checks against the results files."""
    lines = [l for l in text.splitlines() if l.startswith("|")]
    head = [c.strip() for c in lines[0].strip("|").split("|")]
    rows = []
    for line in lines[2:]:
        cells = [c.strip() for c in line.strip("|").split("|")]
        rec = dict(zip(head, cells))
        rec["best"] = rec["acc%"].startswith("**")
        rec["acc%"] = rec["acc%"].strip("*")
        rows.append(rec)
    return rows
