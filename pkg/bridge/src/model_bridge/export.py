"""Export embeddings for every dataset cell into the interchange format.

One CSV (rows = tokens, cols = dims, %.17g, no header) plus a sidecar
`<stem>.meta.json` per (scenario, patient, feature). The sidecar carries the
token-to-timestep mapping; resolving tokens onto the canonical time grid is
the consumer's job (its alignment step), so the mapping is declared, never
applied here. The dataset directory is never written to.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .dataio import canonicalize, iter_pairs, read_manifest, read_signals
from .errors import DatasetError, ShapeError
from .models import load_model

SIDECAR_FORMAT_VERSION = 1


@dataclass
class BridgeConfig:
    model: str
    dataset_dir: Path
    out_dir: Path
    device: str = "cpu"
    batch_size: int = 32
    extra_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dataset_dir = Path(self.dataset_dir)
        self.out_dir = Path(self.out_dir)
        if self.batch_size < 1:
            raise DatasetError("batch_size must be >= 1")


def _write_cell(out_dir: Path, scenario: str, patient: str, feature: str, matrix: np.ndarray, meta: dict):
    """Atomic write of one cell: csv + sidecar staged then renamed."""
    stem = f"{scenario}__{patient}__{feature}"
    csv_path = out_dir / f"{stem}.csv"
    meta_path = out_dir / f"{stem}.meta.json"
    lines = [",".join("%.17g" % v for v in row) for row in matrix]
    for path, text in (
        (csv_path, "\n".join(lines) + "\n"),
        (meta_path, json.dumps(meta, sort_keys=True, indent=2) + "\n"),
    ):
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)


def export_embeddings(config: BridgeConfig) -> Path:
    """Embed every (scenario, patient, feature) cell and write the directory.

    Each feature series is canonicalized (the consumer's preprocessing
    contract) and passed to the model independently of the other features;
    batching only groups separate univariate series.
    """
    manifest = read_manifest(config.dataset_dir)
    model = load_model(config.model, config.device)
    length = int(manifest["canonical_length"])
    features = manifest["features"]

    config.out_dir.mkdir(parents=True, exist_ok=True)

    # Single-threaded inference keeps reduction order, and therefore output
    # bytes, independent of the host's core count.
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        pending = []  # (scenario, patient, feature, canonical series)
        for scenario, patient in iter_pairs(manifest):
            columns = read_signals(config.dataset_dir, scenario, patient, features)
            for feature in features:
                times, values = columns[feature]
                pending.append((scenario, patient, feature, canonicalize(times, values, length)))
        n_cells = 0
        for start in range(0, len(pending), config.batch_size):
            batch = pending[start : start + config.batch_size]
            series = np.stack([item[3] for item in batch])
            embedded = model.embed_batch(series)
            if embedded.ndim != 3 or embedded.shape[1] < 1:
                raise ShapeError(f"model emitted shape {embedded.shape}; need (B, tokens >= 1, dims)")
            for (scenario, patient, feature, _), matrix in zip(batch, embedded):
                meta = {
                    "format_version": SIDECAR_FORMAT_VERSION,
                    "model_id": model.model_id,
                    "model_revision": model.revision,
                    "scenario": scenario,
                    "patient": patient,
                    "feature": feature,
                    "rows": int(matrix.shape[0]),
                    "cols": int(matrix.shape[1]),
                    "token_to_timestep": model.token_mapping(),
                    "input_length": length,
                }
                meta.update(config.extra_metadata)
                _write_cell(config.out_dir, scenario, patient, feature, matrix, meta)
                n_cells += 1
    finally:
        torch.set_num_threads(previous_threads)

    provenance = {
        "model_id": model.model_id,
        "model_revision": model.revision,
        "dataset_dir": str(config.dataset_dir),
        "cells": n_cells,
        "token_to_timestep": model.token_mapping(),
    }
    (config.out_dir / "bridge_export.json").write_text(
        json.dumps(provenance, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return config.out_dir
