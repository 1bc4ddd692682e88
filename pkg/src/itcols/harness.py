"""
Seeded Monte Carlo experiments over the ITC-OLS detectors.

An :class:`ExperimentSpec` names one sweep axis (SNR, number of
subcarriers, or the ML correction floor). Every run index draws one scene
and one noise realisation that are shared by all methods and all sweep
values, so method-to-method and point-to-point differences are paired.

Seeds: run ``r`` uses ``seed = base_seed XOR r`` for the scene and
``seed XOR NOISE_SALT`` for the symbols and noise.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional

import numpy as np

from .covariance import sample_covariance
from .detectors import (
    AngleGrid,
    DetectorConfig,
    Penalty,
    disjoint_itc_ols,
    hybrid_itc_ols,
    joint_itc_ols,
    threshold_ols,
)
from .linalg import hermitian_eigendecompose
from .metrics import FA_NORMALIZATIONS, DetectionOutcome, aggregate, classify
from .scene import RadarConfig, SceneBounds, random_scene, synthesize

SEED_MASK = (1 << 64) - 1
NOISE_SALT = 0x9E3779B97F4A7C15
NEG_INF = "neg_inf"
METHODS = ("disjoint", "joint", "hybrid", "threshold")
AXES = ("snr", "q", "sigma-c")
CSV_HEADER = (
    "sweep_axis",
    "sweep_value",
    "method",
    "penalty",
    "hit_rate",
    "fa_rate",
    "youden_j",
    "mean_k_hat",
    "runs",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def run_seeds(base_seed, run_index):
    seed = (int(base_seed) ^ int(run_index)) & SEED_MASK
    return seed, seed ^ NOISE_SALT


def sigma_c_linear(value):
    """Convert a correction floor in dB (or the ``neg_inf`` sentinel) to linear power."""
    if value == NEG_INF:
        return 0.0
    return 10.0 ** (float(value) / 10.0)


@dataclass(frozen=True)
class Cell:
    index: int
    axis: str
    value: object
    radar: RadarConfig
    snr_db: float
    sigma_c_db: object

    @property
    def value_text(self):
        return _fmt(self.value)


@dataclass(frozen=True)
class ExperimentSpec:
    """Monte Carlo experiment description; field names match the config file."""

    radar: RadarConfig = field(default_factory=lambda: RadarConfig(num_subcarriers=128))
    k_true: int = 8
    snr_db: object = 60.0
    q_sweep: Optional[tuple] = None
    sigma_c_db: object = -35.0
    penalty: str = "AIC"
    methods: tuple = METHODS
    num_runs: int = 500
    base_seed: int = 0
    grid_resolution: int = 1024
    min_separation: float = 0.0
    fa_normalization: str = "detections"

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = {f.name for f in fields(cls)}
        for key in doc:
            if key not in known:
                raise ConfigError(key, "unknown field")
        kwargs = dict(doc)
        radar_doc = kwargs.pop("radar", None)
        if radar_doc is not None:
            if not isinstance(radar_doc, dict):
                raise ConfigError("radar", "must be a mapping")
            radar_fields = {f.name for f in fields(RadarConfig)}
            for key in radar_doc:
                if key not in radar_fields:
                    raise ConfigError(f"radar.{key}", "unknown field")
            merged = {**ExperimentSpec().radar.to_dict(), **radar_doc}
            try:
                kwargs["radar"] = RadarConfig(**merged)
            except (TypeError, ValueError) as exc:
                raise ConfigError("radar", str(exc)) from None
        for key in ("methods", "q_sweep"):
            if isinstance(kwargs.get(key), list):
                kwargs[key] = tuple(kwargs[key])
        for key in ("snr_db", "sigma_c_db"):
            if isinstance(kwargs.get(key), list):
                kwargs[key] = tuple(kwargs[key])
        spec = cls(**kwargs)
        spec.validate()
        return spec

    def to_dict(self):
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["radar"] = self.radar.to_dict()
        for key, val in doc.items():
            if isinstance(val, tuple):
                doc[key] = list(val)
        return doc

    def validate(self):
        if not _is_int(self.k_true) or self.k_true < 0:
            raise ConfigError("k_true", "must be a non-negative integer")
        if not _is_int(self.num_runs) or self.num_runs < 1:
            raise ConfigError("num_runs", "must be an integer >= 1")
        if not _is_int(self.base_seed) or not 0 <= self.base_seed <= SEED_MASK:
            raise ConfigError("base_seed", "must be a 64-bit unsigned integer")
        if not _is_int(self.grid_resolution) or self.grid_resolution < 2:
            raise ConfigError("grid_resolution", "must be an integer >= 2")
        if str(self.penalty).upper() not in ("AIC", "BIC", "BOTH"):
            raise ConfigError("penalty", "must be AIC, BIC or both")
        if not self.methods:
            raise ConfigError("methods", "must list at least one method")
        for i, m in enumerate(self.methods):
            if m not in METHODS:
                raise ConfigError(f"methods[{i}]", f"unknown method {m!r}")
        if self.fa_normalization not in FA_NORMALIZATIONS:
            raise ConfigError("fa_normalization", f"must be one of {FA_NORMALIZATIONS}")
        if not isinstance(self.min_separation, (int, float)) or self.min_separation < 0:
            raise ConfigError("min_separation", "must be a non-negative number")
        for i, v in enumerate(_as_list(self.snr_db)):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or math.isnan(v):
                raise ConfigError(_path("snr_db", self.snr_db, i), "must be a number")
        for i, v in enumerate(_as_list(self.sigma_c_db)):
            if v != NEG_INF and (not isinstance(v, (int, float)) or isinstance(v, bool)):
                raise ConfigError(_path("sigma_c_db", self.sigma_c_db, i), f"must be a number or {NEG_INF!r}")
        if self.q_sweep is not None:
            if not isinstance(self.q_sweep, tuple) or not self.q_sweep:
                raise ConfigError("q_sweep", "must be a non-empty list")
            for i, v in enumerate(self.q_sweep):
                if not _is_int(v) or v < 1:
                    raise ConfigError(f"q_sweep[{i}]", "must be a positive integer")
        lists = [name for name, val in (("snr_db", self.snr_db), ("sigma_c_db", self.sigma_c_db),
                                        ("q_sweep", self.q_sweep)) if isinstance(val, tuple)]
        if len(lists) > 1:
            raise ConfigError(lists[1], f"only one sweep axis may be active (also {lists[0]})")
        return self

    @property
    def axis(self):
        if isinstance(self.q_sweep, tuple):
            return "q"
        if isinstance(self.sigma_c_db, tuple):
            return "sigma-c"
        return "snr"

    @property
    def penalties(self):
        p = str(self.penalty).upper()
        return (Penalty.AIC, Penalty.BIC) if p == "BOTH" else (Penalty(p),)

    def cells(self, axis=None):
        """Sweep points; ``axis`` (if given) must match the configured axis."""
        axis = axis or self.axis
        if axis not in AXES:
            raise ConfigError("axis", f"must be one of {AXES}")
        if axis != self.axis and len(self._axis_values(self.axis)) > 1:
            raise ConfigError(_AXIS_FIELD[axis], f"config sweeps {self.axis!r}, not {axis!r}")
        values = self._axis_values(axis)
        snr = _as_list(self.snr_db)[0]
        sc = _as_list(self.sigma_c_db)[0]
        out = []
        for i, v in enumerate(values):
            radar, s_db, c_db = self.radar, snr, sc
            if axis == "snr":
                s_db = v
            elif axis == "q":
                radar = replace(self.radar, num_subcarriers=int(v))
            else:
                c_db = v
            out.append(Cell(i, axis, v, radar, float(s_db), c_db))
        return out

    def _axis_values(self, axis):
        if axis == "snr":
            return _as_list(self.snr_db)
        if axis == "q":
            return list(self.q_sweep) if self.q_sweep else [self.radar.num_subcarriers]
        return _as_list(self.sigma_c_db)


_AXIS_FIELD = {"snr": "snr_db", "q": "q_sweep", "sigma-c": "sigma_c_db"}


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _as_list(v):
    return list(v) if isinstance(v, (tuple, list)) else [v]


def _path(name, val, i):
    return f"{name}[{i}]" if isinstance(val, (tuple, list)) else name


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def load_spec(path):
    """Read an :class:`ExperimentSpec` from a YAML (or JSON) file."""
    import yaml

    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"cannot parse {path}: {exc}") from None
    try:
        return ExperimentSpec.from_dict(doc or {})
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None


def detector_config(cell: Cell, penalty, noise_variance, grid):
    return DetectorConfig(
        noise_variance=noise_variance,
        penalty=penalty,
        sigma_c_sq=sigma_c_linear(cell.sigma_c_db),
        grid=grid,
    )


def method_labels(spec):
    labels = []
    for m in spec.methods:
        if m == "threshold":
            labels.append((m, "none"))
        else:
            labels.extend((m, p.value) for p in spec.penalties)
    return labels


def evaluate_methods(R, noise_variance, cell, spec, grid):
    """Run every configured (method, penalty) pair on one covariance."""
    spectrum = None
    if any(m in ("disjoint", "hybrid") for m in spec.methods):
        spectrum = hermitian_eigendecompose(R.matrix, vectors=False)
    results = {}
    for method, pen in method_labels(spec):
        if method == "threshold":
            results[(method, pen)] = threshold_ols(R, noise_variance, grid)
            continue
        cfg = detector_config(cell, Penalty(pen), noise_variance, grid)
        if method == "disjoint":
            results[(method, pen)] = disjoint_itc_ols(R, cfg, spectrum)
        elif method == "joint":
            results[(method, pen)] = joint_itc_ols(R, cfg)
        else:
            results[(method, pen)] = hybrid_itc_ols(R, cfg, spectrum)
    return results


def simulate_cell_run(spec, cell, run_index, grid=None):
    """Scene, observation and per-method estimates for one (cell, run)."""
    grid = grid or AngleGrid.uniform_sine(spec.grid_resolution)
    scene_seed, noise_seed = run_seeds(spec.base_seed, run_index)
    bounds = SceneBounds(min_separation=spec.min_separation)
    scene = random_scene(spec.k_true, cell.radar, scene_seed, bounds)
    obs = synthesize(scene, cell.radar, cell.snr_db, noise_seed)
    R = sample_covariance(obs)
    results = evaluate_methods(R, obs.noise_variance, cell, spec, grid)
    return scene, obs, results


def _run_index_task(args):
    spec, axis, run_index = args
    grid = AngleGrid.uniform_sine(spec.grid_resolution)
    M = spec.radar.num_antennas
    records = []
    for cell in spec.cells(axis):
        scene, _, results = simulate_cell_run(spec, cell, run_index, grid)
        methods = {}
        for (method, pen), est in results.items():
            out = classify(scene.doas, est.doas, M)
            methods[f"{method}/{pen}"] = {
                "k_hat": est.k_hat,
                "doas": [float(x) for x in est.doas],
                "hits": out.hits,
                "false_alarms": out.false_alarms,
                "misses": out.misses,
            }
        records.append(
            {
                "cell": cell.index,
                "sweep_axis": cell.axis,
                "sweep_value": cell.value_text,
                "run_index": run_index,
                "seed": run_seeds(spec.base_seed, run_index)[0],
                "scene": {"k": scene.num_targets, "theta_rad": [float(x) for x in scene.doas]},
                "methods": methods,
            }
        )
    return records


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    axis: str
    rows: List[dict]
    trials: List[dict]

    def csv_text(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()

    def jsonl_text(self):
        return "".join(json.dumps(t, sort_keys=True) + "\n" for t in self.trials)

    def row(self, method, penalty="AIC", sweep_value=None):
        for r in self.rows:
            if r["method"] == method and r["penalty"] == penalty:
                if sweep_value is None or r["sweep_value"] == _fmt(sweep_value):
                    return r
        raise KeyError((method, penalty, sweep_value))


def run_experiment(spec: ExperimentSpec, axis=None, workers=1):
    """
    Run all trials of a sweep and aggregate them per (cell, method, penalty).

    Results are independent of ``workers``: trials are keyed by run index
    and sorted before aggregation.
    """
    spec.validate()
    axis = axis or spec.axis
    cells = spec.cells(axis)
    tasks = [(spec, axis, r) for r in range(spec.num_runs)]
    if workers <= 1:
        chunks = [_run_index_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_index_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    trials = sorted((rec for chunk in chunks for rec in chunk), key=lambda t: (t["cell"], t["run_index"]))

    rows = []
    for cell in cells:
        cell_trials = [t for t in trials if t["cell"] == cell.index]
        for method, pen in method_labels(spec):
            key = f"{method}/{pen}"
            outcomes = [
                DetectionOutcome(t["methods"][key]["hits"], t["methods"][key]["false_alarms"],
                                 t["methods"][key]["misses"])
                for t in cell_trials
            ]
            rep = aggregate(outcomes, spec.fa_normalization)
            mean_k = sum(t["methods"][key]["k_hat"] for t in cell_trials) / len(cell_trials)
            rows.append(
                {
                    "sweep_axis": axis,
                    "sweep_value": cell.value_text,
                    "method": method,
                    "penalty": pen,
                    "hit_rate": repr(rep.hit_rate),
                    "fa_rate": repr(rep.fa_rate),
                    "youden_j": repr(rep.youden_j),
                    "mean_k_hat": repr(mean_k),
                    "runs": str(rep.runs),
                }
            )
    return ExperimentResult(spec, axis, rows, trials)


def write_outputs(result: ExperimentResult, out_dir):
    """Write ``results.csv`` and ``runs.jsonl`` (UTF-8, LF) into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name, text in (("results.csv", result.csv_text()), ("runs.jsonl", result.jsonl_text())):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths[name] = path
    return paths


def read_results_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return list(reader)
