"""Checkpoint directories: a JSON manifest plus one raw little-endian file per parameter."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


class CheckpointError(ValueError):
    pass


def _filename(name: str) -> str:
    return name.replace("/", "_") + ".bin"


def save_checkpoint(directory, state: dict[str, np.ndarray], config_hash: str,
                    extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(state):
        arr = np.asarray(state[name])
        dtype = "float32" if arr.dtype == np.float32 else "float64"
        fname = _filename(name)
        arr.astype(np.dtype(dtype).newbyteorder("<")).tofile(directory / fname)
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dtype, "file": fname})
    manifest = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "byte_order": "little",
        "parameters": entries,
    }
    if extra:
        manifest.update(extra)
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return directory


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    if not path.exists():
        raise CheckpointError(f"no manifest in {directory}")
    manifest = json.loads(path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format {manifest.get('format_version')!r}, expected {FORMAT_VERSION}")
    if manifest.get("byte_order") != "little":
        raise CheckpointError("checkpoint byte order must be little-endian")
    return manifest


def load_checkpoint(directory, expected_shapes: dict[str, tuple] | None = None
                    ) -> tuple[dict[str, np.ndarray], dict]:
    """Read every parameter array; reject files whose shapes disagree with ``expected_shapes``."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    state = {}
    for entry in manifest["parameters"]:
        shape = tuple(entry["shape"])
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        arr = np.fromfile(directory / entry["file"], dtype=dtype)
        if arr.size != int(np.prod(shape)):
            raise CheckpointError(f"{entry['name']}: file holds {arr.size} values, manifest says {shape}")
        state[entry["name"]] = arr.reshape(shape).astype(entry["dtype"])
    if expected_shapes is not None:
        for name, shape in expected_shapes.items():
            if name not in state:
                raise CheckpointError(f"checkpoint lacks parameter {name}")
            if tuple(state[name].shape) != tuple(shape):
                raise CheckpointError(
                    f"shape mismatch for {name}: checkpoint {state[name].shape}, model {tuple(shape)}")
    return state, manifest
