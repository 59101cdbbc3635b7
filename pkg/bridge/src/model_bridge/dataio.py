"""Read-only access to a dataset directory via its documented file formats.

The bridge deliberately does not import the assessment package; the
manifest/CSV layout and the canonicalization contract (linear resampling to
the manifest's canonical length, then z-scoring to zero mean and unit
population variance) are the interface.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DatasetError

MANIFEST_FIELDS = ("format_version", "scenarios", "patients", "features", "canonical_length", "seed")


def read_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON: {exc}") from exc
    for field in MANIFEST_FIELDS:
        if field not in manifest:
            raise DatasetError(f"{path}: missing field {field!r}")
    return manifest


def iter_pairs(manifest: dict):
    by_scenario = {s: [] for s in manifest["scenarios"]}
    for entry in manifest["patients"]:
        if entry["scenario"] not in by_scenario:
            raise DatasetError(f"patient {entry['id']!r} references unknown scenario")
        by_scenario[entry["scenario"]].append(entry["id"])
    for scenario in manifest["scenarios"]:
        for patient in by_scenario[scenario]:
            yield scenario, patient


def read_signals(dataset_dir, scenario: str, patient: str, features: list) -> dict:
    """Columns of one (scenario, patient) CSV as feature -> (times, values)."""
    path = Path(dataset_dir) / "signals" / f"{scenario}__{patient}.csv"
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise DatasetError(f"signal file missing: {path}") from exc
    if not header or header[0] != "time":
        raise DatasetError(f"{path}: first column must be 'time'")
    missing = [f for f in features if f not in header]
    if missing:
        raise DatasetError(f"{path}: missing feature columns {missing}")
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise DatasetError(f"{path}: malformed table")
    times = data[:, 0]
    if not np.all(np.diff(times) > 0):
        raise DatasetError(f"{path}: time column not strictly increasing")
    return {name: (times, data[:, header.index(name)]) for name in features}


def canonicalize(times: np.ndarray, values: np.ndarray, length: int) -> np.ndarray:
    """Resample to `length` uniform steps, then z-score (population std)."""
    grid = np.linspace(times[0], times[-1], length)
    resampled = np.interp(grid, times, values)
    std = resampled.std()
    if std < 1e-12:
        raise DatasetError("constant signal cannot be normalized")
    return (resampled - resampled.mean()) / std
