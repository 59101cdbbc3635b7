"""Command-line pipeline: generate -> embed -> assess, driven by one JSON config.

Exit codes: 0 success, 2 config error, 3 data error. Stage outputs are plain
directories (dataset/, embeddings/, report/) so external embedding producers
can slot in between generate and assess. All outputs are staged to temporary
paths and renamed into place, so a failed run never leaves partial files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .embedders import (
    EmbedderSpec,
    EmbeddingSet,
    embed_reference,
    read_embedding_set,
    write_embedding_set,
)
from .errors import EmbedProbeError, InvalidConfig, InvalidSpec
from .forge import GeneratorConfig, generate_dataset, ingest_csv, read_dataset, write_dataset
from .metrics import (
    feature_decoding,
    feature_entanglement,
    reconstruction_assessment,
    scenario_similarity,
    temporal_dynamics,
)
from .report import DEFAULT_THRESHOLDS, assemble, render_json, render_markdown, render_svg, PANELS
from .signals import canonicalize_dataset, derive_seed

log = logging.getLogger("embedprobe")

CONFIG_ERROR_EXIT = 2
DATA_ERROR_EXIT = 3


@dataclass
class MetricParams:
    window: int = 50
    stride: int | None = None
    n_perm: int = 1000
    variance_threshold: float = 0.9
    entanglement_mode: str = "matched_dims"
    patient_mode: str = "averaged"
    normalization: str = "per_cell"
    resample_first: bool = True
    folds: int = 5
    train_ratio: float = 0.8
    ridge_lambda: float = 1e-8
    logistic_l2: float = 1e-4
    thresholds: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    seed: int
    out_dir: Path
    dataset_kind: str  # "generate" | "ingest"
    dataset_params: dict
    embedder_kind: str  # "reference" | "external"
    embedder_params: dict
    metrics: MetricParams

    def semantic_dict(self) -> dict:
        """The run-defining parts of the config (excludes output paths)."""
        return {
            "seed": self.seed,
            "dataset": {self.dataset_kind: self.dataset_params},
            "embedder": {self.embedder_kind: self.embedder_params},
            "metrics": {
                k: (str(v) if isinstance(v, Path) else v)
                for k, v in vars(self.metrics).items()
            },
        }

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.semantic_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()


def _get(data: dict, path: str, default=None, required: bool = False):
    node = data
    walked = []
    for part in path.split("."):
        walked.append(part)
        if not isinstance(node, dict) or part not in node:
            if required:
                raise InvalidConfig(f"missing config field: {'.'.join(walked)}")
            return default
        node = node[part]
    return node


def load_config(path, out_override=None, seed_override=None) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: config must be a JSON object")

    seed = seed_override if seed_override is not None else _get(data, "seed", required=True)
    if not isinstance(seed, int):
        raise InvalidConfig("config field seed: must be an integer")

    dataset = _get(data, "dataset", required=True)
    if not isinstance(dataset, dict) or len(dataset) != 1 or next(iter(dataset)) not in ("generate", "ingest"):
        raise InvalidConfig("config field dataset: exactly one of 'generate' or 'ingest' required")
    dataset_kind, dataset_params = next(iter(dataset.items()))
    if dataset_kind == "ingest":
        _get(data, "dataset.ingest.signal_dir", required=True)
        _get(data, "dataset.ingest.manifest", required=True)

    embedder = _get(data, "embedder", required=True)
    if not isinstance(embedder, dict) or len(embedder) != 1 or next(iter(embedder)) not in ("reference", "external"):
        raise InvalidConfig("config field embedder: exactly one of 'reference' or 'external' required")
    embedder_kind, embedder_params = next(iter(embedder.items()))
    if embedder_kind == "reference":
        try:
            EmbedderSpec.from_dict(embedder_params)
        except InvalidSpec as exc:
            raise InvalidConfig(f"config field embedder.reference: {exc}") from exc
    else:
        _get(data, "embedder.external.dir", required=True)

    metric_data = _get(data, "metrics", default={})
    known = set(MetricParams.__dataclass_fields__)
    unknown = set(metric_data) - known
    if unknown:
        raise InvalidConfig(f"config field metrics: unknown fields {sorted(unknown)}")
    metrics = MetricParams(**metric_data)
    bad_thresholds = set(metrics.thresholds) - set(DEFAULT_THRESHOLDS)
    if bad_thresholds:
        raise InvalidConfig(f"config field metrics.thresholds: unknown names {sorted(bad_thresholds)}")

    out_dir = out_override or _get(data, "out_dir")
    if out_dir is None:
        raise InvalidConfig("missing config field: out_dir (or pass --out)")

    return RunConfig(
        seed=seed,
        out_dir=Path(out_dir),
        dataset_kind=dataset_kind,
        dataset_params=dataset_params,
        embedder_kind=embedder_kind,
        embedder_params=embedder_params,
        metrics=metrics,
    )


def _atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _swap_in_dir(staging: Path, target: Path):
    if target.exists():
        shutil.rmtree(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    os.replace(staging, target)


def cmd_generate(config: RunConfig) -> Path:
    """Materialize the dataset (generated or ingested) under <out>/dataset."""
    target = config.out_dir / "dataset"
    if config.dataset_kind == "generate":
        params = dict(config.dataset_params)
        params.setdefault("seed", config.seed)
        dataset = generate_dataset(GeneratorConfig.from_dict(params))
    else:
        dataset = ingest_csv(
            config.dataset_params["signal_dir"], config.dataset_params["manifest"]
        )
    config.out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=config.out_dir, prefix="dataset-"))
    try:
        write_dataset(dataset, staging)
        _swap_in_dir(staging, target)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    log.info("dataset written to %s", target)
    return target


def _embed_cells(dataset, spec: EmbedderSpec, threads: int) -> EmbeddingSet:
    records = list(dataset.cells())
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            embedded = list(pool.map(lambda r: embed_reference(r, spec), records))
    else:
        embedded = [embed_reference(r, spec) for r in records]
    return EmbeddingSet(cells={e.key(): e for e in embedded}, model_id=spec.model_id())


def cmd_embed(config: RunConfig, threads: int = 1) -> Path:
    """Produce <out>/embeddings from the reference spec or an external dir."""
    dataset = read_dataset(config.out_dir / "dataset")
    target = config.out_dir / "embeddings"
    if config.embedder_kind == "reference":
        spec = EmbedderSpec.from_dict(config.embedder_params)
        canonical, _ = canonicalize_dataset(
            dataset,
            normalization=config.metrics.normalization,
            resample_first=config.metrics.resample_first,
        )
        embeddings = _embed_cells(canonical, spec, threads)
    else:
        # Validate the external directory cell by cell, then keep a normalized copy.
        embeddings = read_embedding_set(config.embedder_params["dir"], dataset.manifest)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=config.out_dir, prefix="embeddings-"))
    try:
        write_embedding_set(embeddings, staging)
        _swap_in_dir(staging, target)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    log.info("embeddings written to %s", target)
    return target


def cmd_assess(config: RunConfig) -> Path:
    """Run the full metric battery and write report files under <out>/report."""
    dataset = read_dataset(config.out_dir / "dataset")
    canonical, excluded = canonicalize_dataset(
        dataset,
        normalization=config.metrics.normalization,
        resample_first=config.metrics.resample_first,
    )
    embeddings = read_embedding_set(config.out_dir / "embeddings", canonical.manifest)
    embeddings = embeddings.aligned_to(canonical.manifest.canonical_length)

    m = config.metrics
    seed = config.seed
    entanglement = feature_entanglement(canonical, embeddings, mode=m.entanglement_mode)
    reconstruction = reconstruction_assessment(
        canonical,
        embeddings,
        seed=derive_seed(seed, "reconstruction"),
        folds=m.folds,
        train_ratio=m.train_ratio,
        ridge_lambda=m.ridge_lambda,
    )
    dynamics = temporal_dynamics(
        canonical,
        embeddings,
        seed=derive_seed(seed, "dynamics"),
        n_perm=m.n_perm,
        variance_threshold=m.variance_threshold,
        patient_mode=m.patient_mode,
    )
    scenario = scenario_similarity(canonical, embeddings, variance_threshold=m.variance_threshold)
    decoding = feature_decoding(
        canonical,
        embeddings,
        window=m.window,
        stride=m.stride,
        seed=derive_seed(seed, "decoding"),
        l2=m.logistic_l2,
        train_ratio=m.train_ratio,
    )
    assessment = assemble(
        entanglement,
        reconstruction,
        dynamics,
        scenario,
        decoding,
        thresholds=m.thresholds or None,
        provenance={
            "config_digest": config.digest(),
            "seeds": {"global": seed},
            "excluded_cells": [list(c) for c in excluded],
        },
    )
    report_dir = config.out_dir / "report"
    _atomic_write_text(report_dir / "assessment.json", render_json(assessment))
    _atomic_write_text(report_dir / "assessment.md", render_markdown(assessment))
    for panel in PANELS:
        _atomic_write_text(report_dir / f"fig_{panel}.svg", render_svg(assessment, panel))
    log.info("report written to %s", report_dir)
    return report_dir


def cmd_all(config: RunConfig, threads: int = 1) -> Path:
    cmd_generate(config)
    cmd_embed(config, threads)
    return cmd_assess(config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedprobe",
        description="Assess how faithfully time-series embeddings preserve physiological signals.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("generate", "write the dataset directory"),
        ("embed", "write the embeddings directory"),
        ("assess", "run the metric battery and write the report"),
        ("all", "generate, embed, and assess in one run"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the run config JSON")
        p.add_argument("--out", default=None, help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, default=None, help="global seed (overrides config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for embedding")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("EMBEDPROBE_LOG", "WARNING").upper()
    if level not in ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, out_override=args.out, seed_override=args.seed)
    except (InvalidConfig, InvalidSpec) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR_EXIT
    try:
        if args.command == "generate":
            cmd_generate(config)
        elif args.command == "embed":
            cmd_embed(config, args.threads)
        elif args.command == "assess":
            cmd_assess(config)
        else:
            cmd_all(config, args.threads)
    except (InvalidConfig, InvalidSpec) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR_EXIT
    except EmbedProbeError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
