"""Synthetic physiological scenario generation and dataset I/O.

Each scenario is a closed-form per-feature trend plus a feature-specific
oscillation plus seeded Gaussian noise, modulated by the patient profile.
Closed forms keep every generated property derivable in tests.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GapError, InvalidConfig, ParseError, SchemaError
from .signals import (
    CANONICAL_LENGTH,
    FEATURES,
    Dataset,
    Manifest,
    PatientProfile,
    SignalRecord,
    derive_seed,
)

SCENARIOS = ("hemorrhage", "sepsis", "multi_organ_failure")

# Normalized onset time of each scenario's decompensation.
ONSET = {"hemorrhage": 0.20, "sepsis": 0.10, "multi_organ_failure": 0.15}

# Each feature carries two rhythms on top of its trend:
#   - a slow drift (n full cycles per record, n distinct per feature) that
#     decorrelates features without adding step-to-step velocity, and
#   - a fast rhythm locked to the 50-sample canonical grid (period 50/h),
#     so windowed probes see a stable per-feature phase signature.
# The (harmonic, phase) slots are chosen mutually orthogonal over the
# canonical grid: distinct integer frequencies, or a 90 degree phase split
# at a shared frequency. Fast amplitudes shrink with the harmonic so every
# rhythm contributes the same small per-step velocity.
OSC_BASE_SAMPLES = 50
SLOW_CYCLES = {name: i + 1 for i, name in enumerate(FEATURES)}
SLOW_AMPLITUDE = {
    "arterial_pressure": 0.085,
    "co2_production_rate": 0.090,
    "central_venous_pressure": 0.100,
    "heart_rate": 0.105,
    "oxygen_consumption_rate": 0.110,
    "renal_blood_flow": 0.120,
    "respiration_rate": 0.125,
}
SLOW_PHASE = {name: 2.399963 * i for i, name in enumerate(FEATURES)}
FEATURE_HARMONIC = {
    "arterial_pressure": 1,
    "co2_production_rate": 1,
    "central_venous_pressure": 2,
    "heart_rate": 2,
    "oxygen_consumption_rate": 3,
    "renal_blood_flow": 3,
    "respiration_rate": 4,
}
FAST_AMPLITUDE = {
    "arterial_pressure": 0.075,
    "co2_production_rate": 0.075,
    "central_venous_pressure": 0.040,
    "heart_rate": 0.040,
    "oxygen_consumption_rate": 0.028,
    "renal_blood_flow": 0.028,
    "respiration_rate": 0.022,
}
FAST_PHASE = {
    "arterial_pressure": 0.0,
    "co2_production_rate": np.pi / 2.0,
    "central_venous_pressure": 0.0,
    "heart_rate": np.pi / 2.0,
    "oxygen_consumption_rate": 0.0,
    "renal_blood_flow": np.pi / 2.0,
    "respiration_rate": 0.0,
}

# Per-scenario trends: feature -> (relative amplitude, onset, steepness, shape).
# Positive amplitude rises after onset, negative falls; severity scales both
# the excursion and the steepness. Shapes are mixed so feature trends are not
# all scalar multiples of one curve.
TREND = {
    "hemorrhage": {
        "arterial_pressure": (-0.40, 0.20, 3.0, "sat"),
        "co2_production_rate": (-0.18, 0.45, 2.0, "lin"),
        "central_venous_pressure": (-0.45, 0.20, 2.2, "sat"),
        "heart_rate": (+0.45, 0.24, 2.5, "sig"),
        "oxygen_consumption_rate": (-0.22, 0.40, 2.0, "lin"),
        "renal_blood_flow": (-0.50, 0.25, 2.8, "sat"),
        "respiration_rate": (+0.30, 0.30, 2.0, "sig"),
    },
    "sepsis": {
        "arterial_pressure": (-0.25, 0.30, 1.6, "lin"),
        "co2_production_rate": (+0.30, 0.12, 1.8, "sig"),
        "central_venous_pressure": (-0.20, 0.35, 1.5, "lin"),
        "heart_rate": (+0.40, 0.10, 2.0, "sat"),
        "oxygen_consumption_rate": (+0.28, 0.15, 1.8, "sat"),
        "renal_blood_flow": (-0.35, 0.30, 1.7, "sig"),
        "respiration_rate": (+0.45, 0.12, 2.2, "sat"),
    },
    "multi_organ_failure": {
        "arterial_pressure": (-0.30, 0.15, 1.2, "sig"),
        "co2_production_rate": (-0.25, 0.30, 1.4, "sat"),
        "central_venous_pressure": (-0.15, 0.45, 1.5, "lin"),
        "heart_rate": (-0.20, 0.55, 1.8, "sig"),
        "oxygen_consumption_rate": (-0.35, 0.20, 1.3, "sat"),
        "renal_blood_flow": (-0.40, 0.25, 1.5, "lin"),
        "respiration_rate": (-0.22, 0.50, 1.6, "lin"),
    },
}

# Oscillation suppressed where a strict monotone trend is part of the
# scenario's definition (hemorrhage arterial pressure).
OSC_SUPPRESSED = {("hemorrhage", "arterial_pressure")}


def baseline_value(feature: str, profile: PatientProfile) -> float:
    """Resting value for a feature given the patient's demographics."""
    age_shift = profile.age - 40
    female = 1.0 if profile.sex == "female" else 0.0
    if feature == "arterial_pressure":
        return 85.0 + 0.12 * age_shift - 3.0 * female
    if feature == "co2_production_rate":
        return 205.0 - 0.6 * age_shift - 12.0 * female
    if feature == "central_venous_pressure":
        return 8.0 + 0.01 * age_shift
    if feature == "heart_rate":
        return 72.0 - 0.15 * age_shift + 4.0 * female
    if feature == "oxygen_consumption_rate":
        return 250.0 - 1.0 * age_shift - 15.0 * female
    if feature == "renal_blood_flow":
        return 1.1 - 0.004 * age_shift
    if feature == "respiration_rate":
        return 14.0 + 0.02 * age_shift
    raise SchemaError(f"unknown feature {feature!r}")


def _ramp(tau: np.ndarray, onset: float, rate: float, shape: str) -> np.ndarray:
    """Monotone 0 -> 1 transition starting at onset; three interchangeable shapes."""
    rise = np.clip((tau - onset) / max(1.0 - onset, 1e-9), 0.0, None)
    if shape == "sat":
        return 1.0 - np.exp(-rate * rise * 5.0)
    if shape == "lin":
        return np.clip(rate * rise * 5.0 / 3.0, 0.0, 1.0)
    if shape == "sig":
        x = np.clip(rate * rise * 5.0 / 3.0, 0.0, 1.0)
        return x * x * (3.0 - 2.0 * x)
    raise InvalidConfig(f"unknown trend shape {shape!r}")


def template_trend(scenario: str, feature: str, tau: np.ndarray, severity: float) -> np.ndarray:
    """Closed-form relative trend (fraction of baseline) at normalized times tau."""
    if scenario not in TREND:
        raise InvalidConfig(f"unknown scenario template {scenario!r}")
    amp, onset, rate, shape = TREND[scenario][feature]
    scale = 0.4 + 0.6 * severity
    steep = rate * (0.75 + 0.5 * severity)
    return amp * scale * _ramp(tau, onset, steep, shape)


def template_oscillation(
    scenario: str, feature: str, tau: np.ndarray, canonical_length: int
) -> np.ndarray:
    """Feature-specific rhythms (fraction of baseline) at normalized times tau."""
    if (scenario, feature) in OSC_SUPPRESSED:
        return np.zeros_like(tau)
    # tau = i / (L - 1) on the canonical grid; the (L - 1) / L factor makes the
    # slow component an exact integer-cycle frequency on that grid.
    grid = (canonical_length - 1) / canonical_length
    slow = SLOW_AMPLITUDE[feature] * np.sin(
        2.0 * np.pi * SLOW_CYCLES[feature] * grid * tau + SLOW_PHASE[feature]
    )
    fast_cycles = FEATURE_HARMONIC[feature] * (canonical_length - 1) / OSC_BASE_SAMPLES
    fast = FAST_AMPLITUDE[feature] * np.sin(
        2.0 * np.pi * fast_cycles * tau + FAST_PHASE[feature]
    )
    return slow + fast


@dataclass
class GeneratorConfig:
    seed: int
    scenarios: list = field(default_factory=lambda: list(SCENARIOS))
    patients_per_scenario: int = 5
    duration_s: float = 1000.0
    sample_rate_hz: float = 1.0
    noise_level: float = 0.01
    canonical_length: int = CANONICAL_LENGTH

    def __post_init__(self):
        if not self.scenarios:
            raise InvalidConfig("scenarios must be nonempty")
        unknown = [s for s in self.scenarios if s not in TREND]
        if unknown:
            raise InvalidConfig(f"no template for scenarios {unknown}")
        if self.patients_per_scenario < 1:
            raise InvalidConfig("patients_per_scenario must be >= 1")
        if self.duration_s <= 0:
            raise InvalidConfig("duration_s must be positive")
        if self.sample_rate_hz <= 0:
            raise InvalidConfig("sample_rate_hz must be positive")
        if self.noise_level < 0:
            raise InvalidConfig("noise_level must be >= 0")
        if self.canonical_length < 2:
            raise InvalidConfig("canonical_length must be >= 2")
        if int(round(self.duration_s * self.sample_rate_hz)) < 2:
            raise InvalidConfig("duration_s * sample_rate_hz must yield at least 2 samples")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        if "seed" not in data:
            raise InvalidConfig("generator config is missing 'seed'")
        fields = set(cls.__dataclass_fields__)
        unknown = set(data) - fields
        if unknown:
            raise InvalidConfig(f"unknown generator config fields: {sorted(unknown)}")
        return cls(**data)


def _sample_profile(seed: int, scenario: str, index: int) -> PatientProfile:
    rng = np.random.default_rng(derive_seed(seed, scenario, "patient", index))
    age = int(rng.integers(20, 91))
    sex = "female" if rng.random() < 0.5 else "male"
    severity = float(np.round(rng.uniform(0.3, 0.9), 6))
    return PatientProfile(id=f"{scenario}-{index:02d}", age=age, sex=sex, severity=severity)


def synthesize_cell(
    scenario: str,
    profile: PatientProfile,
    feature: str,
    config: GeneratorConfig,
) -> SignalRecord:
    """Generate one (scenario, patient, feature) series on the raw time grid."""
    n = int(round(config.duration_s * config.sample_rate_hz))
    times = np.arange(n, dtype=np.float64) / config.sample_rate_hz
    tau = times / times[-1]
    base = baseline_value(feature, profile)
    trend = template_trend(scenario, feature, tau, profile.severity)
    osc = template_oscillation(scenario, feature, tau, config.canonical_length)
    rng = np.random.default_rng(derive_seed(config.seed, scenario, profile.id, feature))
    noise = rng.normal(0.0, config.noise_level * abs(base), n)
    values = base * (1.0 + trend + osc) + noise
    return SignalRecord(scenario=scenario, patient=profile.id, feature=feature, times=times, values=values)


def generate_dataset(config) -> Dataset:
    """Build the full scenario x patient x feature grid, deterministically."""
    if isinstance(config, dict):
        config = GeneratorConfig.from_dict(config)
    patients = {
        scenario: [_sample_profile(config.seed, scenario, i) for i in range(config.patients_per_scenario)]
        for scenario in config.scenarios
    }
    manifest = Manifest(
        scenarios=list(config.scenarios),
        patients=patients,
        features=list(FEATURES),
        canonical_length=config.canonical_length,
        seed=config.seed,
    )
    records = {}
    for scenario in config.scenarios:
        for profile in patients[scenario]:
            for feature in FEATURES:
                record = synthesize_cell(scenario, profile, feature, config)
                records[record.key()] = record
    return Dataset(records=records, manifest=manifest)


# ---------------------------------------------------------------------------
# Dataset directory I/O
#
# Layout: <dir>/manifest.json plus <dir>/signals/<scenario>__<patient>.csv,
# one CSV per (scenario, patient) with header time,<feature>,... in display
# order. UTF-8, '.' decimal, LF line endings, %.17g floats (lossless).
# ---------------------------------------------------------------------------


def signal_filename(scenario: str, patient: str) -> str:
    return f"{scenario}__{patient}.csv"


def write_dataset(dataset: Dataset, out_dir) -> Path:
    out_dir = Path(out_dir)
    signals_dir = out_dir / "signals"
    signals_dir.mkdir(parents=True, exist_ok=True)
    manifest_text = json.dumps(dataset.manifest.to_dict(), sort_keys=True, indent=2)
    (out_dir / "manifest.json").write_text(manifest_text + "\n", encoding="utf-8")
    for scenario, patient in dataset.manifest.pairs():
        rows = [dataset.get(scenario, patient, f) for f in dataset.manifest.features]
        times = rows[0].times
        lines = ["time," + ",".join(dataset.manifest.features)]
        columns = [times] + [r.values for r in rows]
        for i in range(times.size):
            lines.append(",".join("%.17g" % col[i] for col in columns))
        path = signals_dir / signal_filename(scenario, patient)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return out_dir


def _read_signal_csv(path: Path, scenario: str, patient: str, features: list) -> dict:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty file")
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"({scenario}, {patient}): signal file missing: {path}") from exc

    if not header or header[0] != "time":
        raise ParseError(f"{path}: first column must be 'time'")
    columns = header[1:]
    unknown = [c for c in columns if c not in FEATURES]
    if unknown:
        raise SchemaError(f"{path}: unknown feature columns {unknown}")
    missing = [f for f in features if f not in columns]
    if missing:
        raise SchemaError(
            f"({scenario}, {patient}): missing feature columns {missing} in {path}"
        )

    data = np.empty((len(rows), len(header)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        try:
            data[i] = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParseError(f"{path}: row {i + 2}: {exc}") from exc
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite values")
    times = data[:, 0]
    if times.size >= 2 and not np.all(np.diff(times) > 0):
        raise GapError(f"{path}: time column is not strictly increasing")
    return {name: (times, data[:, 1 + j]) for j, name in enumerate(columns)}


def ingest_csv(signal_dir, manifest_path) -> Dataset:
    """Load an externally produced dataset directory, validating as we go."""
    manifest_path = Path(manifest_path)
    signal_dir = Path(signal_dir)
    try:
        manifest_data = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"manifest not found: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest_path}: {exc}") from exc
    manifest = Manifest.from_dict(manifest_data)

    records = {}
    for scenario, patient in manifest.pairs():
        path = signal_dir / signal_filename(scenario, patient)
        columns = _read_signal_csv(path, scenario, patient, manifest.features)
        for feature in manifest.features:
            times, values = columns[feature]
            records[(scenario, patient, feature)] = SignalRecord(
                scenario=scenario, patient=patient, feature=feature, times=times, values=values
            )
    return Dataset(records=records, manifest=manifest)


def read_dataset(dataset_dir) -> Dataset:
    """Convenience wrapper: ingest a directory written by write_dataset."""
    dataset_dir = Path(dataset_dir)
    return ingest_csv(dataset_dir / "signals", dataset_dir / "manifest.json")
