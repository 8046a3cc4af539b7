"""Deterministic JSON artifacts and run manifests."""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import numpy as np

__all__ = ["to_jsonable", "dumps", "write_json", "read_json", "file_sha256", "versions", "write_manifest", "manifest_path"]


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    """Sorted-key JSON. Floats use the shortest repr that round-trips exactly."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_json(path, obj) -> str:
    text = dumps(obj)
    Path(path).write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    import scipy
    import skimage

    from . import __version__

    return {
        "polyortho": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-image": skimage.__version__,
    }


def manifest_path(out) -> Path:
    """``basis.json`` -> ``basis.manifest.json``; other names get the suffix appended."""
    out = Path(out)
    stem = out.name[:-5] if out.name.endswith(".json") else out.name
    return out.with_name(stem + ".manifest.json")


def write_manifest(out, command: str, config: dict, inputs: dict, outputs: list, tolerances: dict) -> Path:
    """Write ``<out stem>.manifest.json`` next to the primary artifact."""
    path = manifest_path(out)
    manifest = {
        "command": command,
        "config": config,
        "inputs": {name: file_sha256(p) for name, p in sorted(inputs.items()) if p is not None},
        "outputs": {str(p): file_sha256(p) for p in outputs},
        "tolerances": tolerances,
        "versions": versions(),
    }
    write_json(path, manifest)
    return path
