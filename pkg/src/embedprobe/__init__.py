"""embedprobe: quantify how faithfully time-series embeddings preserve
physiological signal structure."""

__version__ = "0.1.0"

from .embedders import (
    EmbedderSpec,
    EmbeddingMatrix,
    EmbeddingSet,
    align_embedding,
    embed_dataset,
    embed_reference,
    read_embedding,
    write_embedding,
)
from .forge import GeneratorConfig, generate_dataset, ingest_csv, read_dataset, write_dataset
from .metrics import (
    feature_decoding,
    feature_entanglement,
    reconstruction_assessment,
    scenario_similarity,
    temporal_dynamics,
    trajectory_smoothness,
)
from .report import AssessmentReport, assemble, render_json, render_markdown, render_svg
from .signals import (
    CANONICAL_LENGTH,
    FEATURES,
    Dataset,
    Manifest,
    PatientProfile,
    SignalRecord,
    canonicalize_dataset,
    normalize_zscore,
    resample_linear,
)

__all__ = [
    "__version__",
    "CANONICAL_LENGTH",
    "FEATURES",
    "AssessmentReport",
    "Dataset",
    "EmbedderSpec",
    "EmbeddingMatrix",
    "EmbeddingSet",
    "GeneratorConfig",
    "Manifest",
    "PatientProfile",
    "SignalRecord",
    "align_embedding",
    "assemble",
    "canonicalize_dataset",
    "embed_dataset",
    "embed_reference",
    "feature_decoding",
    "feature_entanglement",
    "generate_dataset",
    "ingest_csv",
    "normalize_zscore",
    "read_dataset",
    "read_embedding",
    "reconstruction_assessment",
    "render_json",
    "render_markdown",
    "render_svg",
    "resample_linear",
    "scenario_similarity",
    "temporal_dynamics",
    "trajectory_smoothness",
    "write_dataset",
    "write_embedding",
]
