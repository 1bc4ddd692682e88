"""
Replayable JSON bundles.

A bundle records everything needed to regenerate one trial: the spec, the
sweep cell, the scene (targets and radar config), the seeds, and the
estimates obtained when it was written. :func:`replay_bundle` rebuilds the
observation from the seeds and re-runs the detectors.
"""

import json
import os

import jsonschema

from .harness import ExperimentSpec, run_seeds, simulate_cell_run
from .scene import RadarConfig, Scene

BUNDLE_VERSION = "itcols.bundle/1"

_NUMBER = {"type": "number"}
_TARGET = {
    "type": "object",
    "required": ["theta_rad", "gain_re", "gain_im", "tau_s", "doppler_hz"],
    "properties": {
        "theta_rad": {"type": "number", "minimum": -1.5707963267949, "maximum": 1.5707963267949},
        "gain_re": _NUMBER,
        "gain_im": _NUMBER,
        "tau_s": {"type": "number", "minimum": 0},
        "doppler_hz": _NUMBER,
    },
}
_RESULT = {
    "type": "object",
    "required": ["method", "k_hat", "doas"],
    "properties": {
        "method": {"type": "string"},
        "k_hat": {"type": "integer", "minimum": 0},
        "doas": {"type": "array", "items": _NUMBER},
    },
}
BUNDLE_SCHEMA = {
    "type": "object",
    "required": ["version", "spec", "cell", "run_index", "seed", "noise_seed", "scene", "results"],
    "properties": {
        "version": {"const": BUNDLE_VERSION},
        "spec": {"type": "object"},
        "cell": {
            "type": "object",
            "required": ["index", "axis", "value"],
            "properties": {"index": {"type": "integer", "minimum": 0}, "axis": {"type": "string"}},
        },
        "run_index": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "noise_seed": {"type": "integer", "minimum": 0},
        "scene": {
            "type": "object",
            "required": ["seed", "targets", "config"],
            "properties": {
                "seed": {"type": "integer"},
                "targets": {"type": "array", "items": _TARGET},
                "config": {"type": "object"},
            },
        },
        "results": {"type": "object", "additionalProperties": _RESULT},
    },
}


class BundleError(ValueError):
    """Malformed bundle; ``path`` is the JSON path of the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _json_path(error):
    parts = ["$"]
    for p in error.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else f".{p}")
    return "".join(parts)


def validate_bundle(doc):
    validator = jsonschema.Draft7Validator(BUNDLE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise BundleError(_json_path(err), err.message)
    return doc


def make_bundle(spec: ExperimentSpec, cell, run_index=0):
    scene, _, results = simulate_cell_run(spec, cell, run_index)
    seed, noise_seed = run_seeds(spec.base_seed, run_index)
    return {
        "version": BUNDLE_VERSION,
        "spec": spec.to_dict(),
        "cell": {"index": cell.index, "axis": cell.axis, "value": cell.value},
        "run_index": run_index,
        "seed": seed,
        "noise_seed": noise_seed,
        "scene": scene.to_dict(cell.radar),
        "results": {f"{m}/{p}": est.to_dict() for (m, p), est in results.items()},
    }


def emit_scene_bundle(spec: ExperimentSpec, path, axis=None):
    """
    Write one bundle per sweep cell (first run of each) into directory ``path``.

    Returns the list of written file paths.
    """
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create bundle directory {path}: {exc.strerror}") from exc
    written = []
    for cell in spec.cells(axis):
        doc = make_bundle(spec, cell)
        fname = os.path.join(path, f"bundle_cell{cell.index:03d}.json")
        try:
            with open(fname, "w", encoding="utf-8", newline="\n") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write bundle {fname}: {exc.strerror}") from exc
        written.append(fname)
    return written


def load_bundle(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BundleError("$", f"invalid JSON: {exc}") from None
    return validate_bundle(doc)


def replay_bundle(path):
    """
    Regenerate the bundled trial and re-run its detectors.

    Returns
    -------
    results : dict
        Fresh estimates keyed like the bundle's ``results``.
    matches : bool
        Whether every fresh estimate equals the recorded one.
    """
    doc = load_bundle(path)
    try:
        spec = ExperimentSpec.from_dict(doc["spec"])
    except ValueError as exc:
        raise BundleError("$.spec", str(exc)) from None
    cells = spec.cells(doc["cell"]["axis"])
    idx = doc["cell"]["index"]
    if idx >= len(cells):
        raise BundleError("$.cell.index", f"no cell {idx} in the bundled spec")
    cell = cells[idx]
    scene, _, results = simulate_cell_run(spec, cell, doc["run_index"])
    if scene.to_dict(cell.radar) != Scene.from_dict(doc["scene"]).to_dict(RadarConfig(**doc["scene"]["config"])):
        raise BundleError("$.scene", "regenerated scene differs from the bundled one")
    fresh = {f"{m}/{p}": est.to_dict() for (m, p), est in results.items()}
    return fresh, fresh == doc["results"]
