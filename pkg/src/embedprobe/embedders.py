"""Reference embedders with plantable pathologies, plus the interchange format.

The reference embedders exist to validate the metric battery: identity is the
neutral element, the mixer plants cross-feature entanglement, the shuffler
destroys temporal order, and random_projection over a shuffled base yields
pure-noise embeddings. External models write the same CSV + sidecar format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidConfig, InvalidSpec, MetadataMismatch, TooShort
from .signals import Dataset, Manifest, SignalRecord, derive_seed

EMBEDDING_FORMAT_VERSION = 1

VARIANTS = ("identity", "delay", "random_projection", "mixer", "shuffler")


@dataclass(frozen=True)
class EmbedderSpec:
    """Declarative description of a reference embedder."""

    variant: str
    window: int | None = None
    dims: int | None = None
    seed: int | None = None
    alpha: float | None = None
    base: "EmbedderSpec | None" = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidSpec(f"unknown embedder variant {self.variant!r}")
        if self.variant in ("delay", "random_projection"):
            if self.window is None or self.window < 1:
                raise InvalidSpec(f"{self.variant}: window must be >= 1")
        if self.variant == "random_projection":
            if self.dims is None or self.dims < 1:
                raise InvalidSpec("random_projection: dims must be >= 1")
            if self.seed is None:
                raise InvalidSpec("random_projection: seed required")
        if self.variant == "mixer":
            if self.alpha is None or self.alpha < 0:
                raise InvalidSpec("mixer: alpha must be >= 0")
            if self.base is None or self.seed is None:
                raise InvalidSpec("mixer: base spec and seed required")
        if self.variant == "shuffler":
            if self.base is None or self.seed is None:
                raise InvalidSpec("shuffler: base spec and seed required")

    @classmethod
    def identity(cls) -> "EmbedderSpec":
        return cls(variant="identity")

    @classmethod
    def delay(cls, window: int) -> "EmbedderSpec":
        return cls(variant="delay", window=window)

    @classmethod
    def random_projection(cls, window: int, dims: int, seed: int) -> "EmbedderSpec":
        return cls(variant="random_projection", window=window, dims=dims, seed=seed)

    @classmethod
    def mixer(cls, base: "EmbedderSpec", alpha: float, seed: int) -> "EmbedderSpec":
        return cls(variant="mixer", base=base, alpha=alpha, seed=seed)

    @classmethod
    def shuffler(cls, base: "EmbedderSpec", seed: int) -> "EmbedderSpec":
        return cls(variant="shuffler", base=base, seed=seed)

    def model_id(self) -> str:
        """Stable identifier used in sidecar metadata."""
        parts = [self.variant]
        if self.window is not None:
            parts.append(f"w{self.window}")
        if self.dims is not None:
            parts.append(f"d{self.dims}")
        if self.alpha is not None:
            parts.append(f"a{self.alpha:g}")
        if self.seed is not None:
            parts.append(f"s{self.seed}")
        me = "-".join(parts)
        return f"reference:{me}({self.base.model_id().removeprefix('reference:')})" if self.base else f"reference:{me}"

    def to_dict(self) -> dict:
        out = {"variant": self.variant}
        for name in ("window", "dims", "seed", "alpha"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.base is not None:
            out["base"] = self.base.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EmbedderSpec":
        if "variant" not in data:
            raise InvalidSpec("embedder spec is missing 'variant'")
        known = {"variant", "window", "dims", "seed", "alpha", "base"}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown embedder spec fields: {sorted(unknown)}")
        base = cls.from_dict(data["base"]) if "base" in data else None
        return cls(
            variant=data["variant"],
            window=data.get("window"),
            dims=data.get("dims"),
            seed=data.get("seed"),
            alpha=data.get("alpha"),
            base=base,
        )


@dataclass(eq=False)
class EmbeddingMatrix:
    """T x D per-timestep embedding for one (scenario, patient, feature) cell."""

    values: np.ndarray
    model_id: str
    scenario: str
    patient: str
    feature: str

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidConfig("embedding values must be a 2-D matrix")
        if values.shape[0] < 2 or values.shape[1] < 1:
            raise InvalidConfig(f"embedding shape {values.shape} violates T >= 2, D >= 1")
        if not np.all(np.isfinite(values)):
            raise InvalidConfig(f"{self.key()}: non-finite embedding entries")
        self.values = values

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def key(self) -> tuple:
        return (self.scenario, self.patient, self.feature)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.key() == other.key()
            and self.model_id == other.model_id
            and np.array_equal(self.values, other.values)
        )


def _delay_rows(values: np.ndarray, window: int) -> np.ndarray:
    """Row t = [x(t), x(t-1), ..., x(t-w+1)], early rows back-filled with x(0)."""
    t = np.arange(values.size)[:, None]
    idx = np.clip(t - np.arange(window)[None, :], 0, None)
    return values[idx]


def _confounder(seed: int, scenario: str, length: int) -> np.ndarray:
    """One shared unit-variance series per (seed, scenario), reused across features."""
    rng = np.random.default_rng(derive_seed(seed, scenario, "confounder"))
    series = rng.standard_normal(length)
    return (series - series.mean()) / series.std()


def embed_reference(record: SignalRecord, spec: EmbedderSpec) -> EmbeddingMatrix:
    """Apply a reference embedder to one canonical signal."""
    t = len(record)
    if spec.variant == "identity":
        matrix = record.values[:, None].copy()
    elif spec.variant == "delay":
        if spec.window > t:
            raise InvalidSpec(f"delay window {spec.window} exceeds signal length {t}")
        matrix = _delay_rows(record.values, spec.window)
    elif spec.variant == "random_projection":
        if spec.window > t:
            raise InvalidSpec(f"random_projection window {spec.window} exceeds signal length {t}")
        rng = np.random.default_rng(derive_seed(spec.seed, "projection"))
        projection = rng.standard_normal((spec.window, spec.dims)) / np.sqrt(spec.window)
        matrix = _delay_rows(record.values, spec.window) @ projection
    elif spec.variant == "mixer":
        base = embed_reference(record, spec.base)
        shared = _confounder(spec.seed, record.scenario, t)
        matrix = base.values + spec.alpha * shared[:, None]
    elif spec.variant == "shuffler":
        base = embed_reference(record, spec.base)
        rng = np.random.default_rng(derive_seed(spec.seed, *record.key(), "shuffle"))
        matrix = base.values[rng.permutation(t)]
    else:  # pragma: no cover - guarded by EmbedderSpec
        raise InvalidSpec(spec.variant)
    return EmbeddingMatrix(
        values=matrix,
        model_id=spec.model_id(),
        scenario=record.scenario,
        patient=record.patient,
        feature=record.feature,
    )


def align_embedding(embedding: EmbeddingMatrix, target_len: int) -> EmbeddingMatrix:
    """Linearly interpolate each column onto target_len uniformly spaced rows."""
    if target_len < 2:
        raise InvalidConfig(f"target_len must be >= 2, got {target_len}")
    t = embedding.rows
    if t < 2:
        raise TooShort(f"{embedding.key()}: need >= 2 rows to align")
    if t == target_len:
        return EmbeddingMatrix(
            values=embedding.values.copy(),
            model_id=embedding.model_id,
            scenario=embedding.scenario,
            patient=embedding.patient,
            feature=embedding.feature,
        )
    source = np.linspace(0.0, 1.0, t)
    target = np.linspace(0.0, 1.0, target_len)
    aligned = np.empty((target_len, embedding.cols), dtype=np.float64)
    for j in range(embedding.cols):
        aligned[:, j] = np.interp(target, source, embedding.values[:, j])
    return EmbeddingMatrix(
        values=aligned,
        model_id=embedding.model_id,
        scenario=embedding.scenario,
        patient=embedding.patient,
        feature=embedding.feature,
    )


@dataclass
class EmbeddingSet:
    """All embedding matrices for a dataset, keyed like the dataset's cells."""

    cells: dict
    model_id: str

    def get(self, scenario: str, patient: str, feature: str) -> EmbeddingMatrix:
        return self.cells[(scenario, patient, feature)]

    def aligned_to(self, target_len: int) -> "EmbeddingSet":
        return EmbeddingSet(
            cells={key: align_embedding(e, target_len) for key, e in self.cells.items()},
            model_id=self.model_id,
        )


def embed_dataset(dataset: Dataset, spec: EmbedderSpec) -> EmbeddingSet:
    """Embed every cell of a canonical dataset with a reference embedder."""
    cells = {}
    for record in dataset.cells():
        embedding = embed_reference(record, spec)
        cells[embedding.key()] = embedding
    return EmbeddingSet(cells=cells, model_id=spec.model_id())


# ---------------------------------------------------------------------------
# Interchange format: <stem>.csv (no header, %.17g) + <stem>.meta.json.
# ---------------------------------------------------------------------------


def embedding_filename(scenario: str, patient: str, feature: str) -> str:
    return f"{scenario}__{patient}__{feature}.csv"


def write_embedding(embedding: EmbeddingMatrix, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join("%.17g" % v for v in row) for row in embedding.values]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    meta = {
        "format_version": EMBEDDING_FORMAT_VERSION,
        "model_id": embedding.model_id,
        "scenario": embedding.scenario,
        "patient": embedding.patient,
        "feature": embedding.feature,
        "rows": embedding.rows,
        "cols": embedding.cols,
    }
    sidecar = path.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_embedding(path) -> EmbeddingMatrix:
    path = Path(path)
    sidecar = path.with_suffix(".meta.json")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"embedding file missing: {path}") from exc
    try:
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"sidecar missing: {sidecar}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{sidecar}: {exc}") from exc
    for key in ("format_version", "model_id", "scenario", "patient", "feature", "rows", "cols"):
        if key not in meta:
            raise MetadataMismatch(f"{sidecar}: missing field {key!r}")

    rows = []
    width = None
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise FormatError(f"{path}: line {i + 1} has {len(fields)} columns, expected {width}")
        try:
            rows.append([float(v) for v in fields])
        except ValueError as exc:
            raise FormatError(f"{path}: line {i + 1}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=np.float64)
    if values.shape != (meta["rows"], meta["cols"]):
        raise MetadataMismatch(
            f"{path}: sidecar declares {meta['rows']}x{meta['cols']}, file holds {values.shape[0]}x{values.shape[1]}"
        )
    return EmbeddingMatrix(
        values=values,
        model_id=meta["model_id"],
        scenario=meta["scenario"],
        patient=meta["patient"],
        feature=meta["feature"],
    )


def write_embedding_set(embeddings: EmbeddingSet, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for (scenario, patient, feature), embedding in embeddings.cells.items():
        write_embedding(embedding, out_dir / embedding_filename(scenario, patient, feature))
    return out_dir


def read_embedding_set(embedding_dir, manifest: Manifest) -> EmbeddingSet:
    """Read one embedding per manifest cell; shape and metadata are validated."""
    embedding_dir = Path(embedding_dir)
    cells = {}
    model_ids = set()
    for scenario, patient, feature in manifest.cells():
        path = embedding_dir / embedding_filename(scenario, patient, feature)
        embedding = read_embedding(path)
        if embedding.key() != (scenario, patient, feature):
            raise MetadataMismatch(
                f"{path}: sidecar cell {embedding.key()} does not match filename cell"
            )
        cells[embedding.key()] = embedding
        model_ids.add(embedding.model_id)
    if len(model_ids) > 1:
        raise MetadataMismatch(f"embedding dir mixes model ids: {sorted(model_ids)}")
    return EmbeddingSet(cells=cells, model_id=model_ids.pop())
