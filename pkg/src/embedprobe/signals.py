"""Core signal types and the canonicalization pipeline.

A dataset is a grid of univariate series keyed by (scenario, patient,
feature). Canonical form means: resampled to a fixed length on a uniform
time grid, then z-scored to zero mean and unit (population) variance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantSignal, GapError, InvalidConfig, SchemaError, TooShort

FORMAT_VERSION = 1
CANONICAL_LENGTH = 1000

# Feature identifiers in display order; codes A..G follow this order.
FEATURES = (
    "arterial_pressure",
    "co2_production_rate",
    "central_venous_pressure",
    "heart_rate",
    "oxygen_consumption_rate",
    "renal_blood_flow",
    "respiration_rate",
)

FEATURE_UNITS = {
    "arterial_pressure": "mmHg",
    "co2_production_rate": "mL/min",
    "central_venous_pressure": "mmHg",
    "heart_rate": "1/min",
    "oxygen_consumption_rate": "mL/min",
    "renal_blood_flow": "L/min",
    "respiration_rate": "1/min",
}

FEATURE_CODES = {name: chr(ord("A") + i) for i, name in enumerate(FEATURES)}

SEXES = ("female", "male")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of parts (hash-based, platform independent)."""
    digest = hashlib.blake2b("/".join(str(p) for p in parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


@dataclass(frozen=True)
class PatientProfile:
    """A virtual patient: demographics plus a dimensionless severity knob."""

    id: str
    age: int
    sex: str
    severity: float

    def __post_init__(self):
        if not self.id:
            raise InvalidConfig("patient id must be nonempty")
        if not 1 <= self.age <= 100:
            raise InvalidConfig(f"patient {self.id}: age {self.age} outside [1, 100]")
        if self.sex not in SEXES:
            raise InvalidConfig(f"patient {self.id}: sex must be one of {SEXES}")
        if not 0.0 <= self.severity <= 1.0:
            raise InvalidConfig(f"patient {self.id}: severity {self.severity} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class SignalRecord:
    """One univariate time series for a (scenario, patient, feature) cell."""

    scenario: str
    patient: str
    feature: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.feature not in FEATURES:
            raise SchemaError(f"unknown feature {self.feature!r}")
        if times.ndim != 1 or values.ndim != 1 or times.shape != values.shape:
            raise InvalidConfig(
                f"{self.key()}: times and values must be 1-D and equal length"
            )
        if times.size >= 2 and not np.all(np.diff(times) > 0):
            raise GapError(f"{self.key()}: time column is not strictly increasing")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(times)):
            raise InvalidConfig(f"{self.key()}: non-finite entries")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def key(self) -> tuple:
        return (self.scenario, self.patient, self.feature)

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignalRecord):
            return NotImplemented
        return (
            self.key() == other.key()
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def with_data(self, times, values) -> "SignalRecord":
        return SignalRecord(self.scenario, self.patient, self.feature, times, values)


@dataclass
class Manifest:
    """Dataset inventory: scenarios, per-scenario patients, features, shape, seed."""

    scenarios: list
    patients: dict  # scenario -> list[PatientProfile]
    features: list = field(default_factory=lambda: list(FEATURES))
    canonical_length: int = CANONICAL_LENGTH
    seed: int = 0

    def __post_init__(self):
        if len(set(self.scenarios)) != len(self.scenarios):
            raise InvalidConfig("scenario names must be unique")
        for name in self.scenarios:
            if not name:
                raise InvalidConfig("scenario names must be nonempty")
            if "__" in name:
                raise InvalidConfig(f"scenario {name!r}: '__' is reserved as a filename separator")
        missing = [f for f in FEATURES if f not in self.features]
        unknown = [f for f in self.features if f not in FEATURES]
        if unknown:
            raise SchemaError(f"unknown feature names: {unknown}")
        if missing:
            raise SchemaError(f"manifest is missing features: {missing}")
        self.features = list(FEATURES)
        for scenario, profiles in self.patients.items():
            for p in profiles:
                if "__" in p.id:
                    raise InvalidConfig(f"patient {p.id!r}: '__' is reserved as a filename separator")

    def cells(self):
        """Canonical iteration order: scenario, patient, feature."""
        for scenario in self.scenarios:
            for profile in self.patients[scenario]:
                for feature in self.features:
                    yield scenario, profile.id, feature

    def pairs(self):
        for scenario in self.scenarios:
            for profile in self.patients[scenario]:
                yield scenario, profile.id

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "scenarios": list(self.scenarios),
            "patients": [
                {
                    "id": p.id,
                    "scenario": scenario,
                    "age": p.age,
                    "sex": p.sex,
                    "severity": p.severity,
                }
                for scenario in self.scenarios
                for p in self.patients[scenario]
            ],
            "features": list(self.features),
            "canonical_length": self.canonical_length,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Manifest":
        for key in ("format_version", "scenarios", "patients", "features", "canonical_length", "seed"):
            if key not in data:
                raise SchemaError(f"manifest is missing field {key!r}")
        patients = {scenario: [] for scenario in data["scenarios"]}
        for entry in data["patients"]:
            scenario = entry.get("scenario")
            if scenario not in patients:
                raise SchemaError(f"patient {entry.get('id')!r} references unknown scenario {scenario!r}")
            patients[scenario].append(
                PatientProfile(entry["id"], entry["age"], entry["sex"], entry["severity"])
            )
        return cls(
            scenarios=list(data["scenarios"]),
            patients=patients,
            features=list(data["features"]),
            canonical_length=int(data["canonical_length"]),
            seed=int(data["seed"]),
        )


@dataclass(eq=False)
class Dataset:
    """All records for a manifest, keyed by (scenario, patient, feature)."""

    records: dict
    manifest: Manifest

    def __post_init__(self):
        missing = [cell for cell in self.manifest.cells() if cell not in self.records]
        if missing:
            raise SchemaError(f"dataset is missing cells: {missing[:5]}" + ("..." if len(missing) > 5 else ""))

    def get(self, scenario: str, patient: str, feature: str) -> SignalRecord:
        return self.records[(scenario, patient, feature)]

    def cells(self):
        for cell in self.manifest.cells():
            yield self.records[cell]

    def is_canonical(self) -> bool:
        return all(len(r) == self.manifest.canonical_length for r in self.cells())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.manifest.to_dict() != other.manifest.to_dict():
            return False
        return all(
            self.records[cell] == other.records[cell] for cell in self.manifest.cells()
        )

    def digest(self) -> str:
        """Content hash covering the manifest and every record, order independent."""
        h = hashlib.sha256()
        h.update(json.dumps(self.manifest.to_dict(), sort_keys=True).encode("utf-8"))
        for record in self.cells():
            h.update("/".join(record.key()).encode("utf-8"))
            h.update(record.times.tobytes())
            h.update(record.values.tobytes())
        return h.hexdigest()


def resample_linear(record: SignalRecord, target_len: int = CANONICAL_LENGTH) -> SignalRecord:
    """Resample onto a uniform grid spanning [t_min, t_max] by linear interpolation.

    Endpoints are preserved exactly; a record already on the target uniform
    grid round-trips unchanged.
    """
    if target_len < 2:
        raise InvalidConfig(f"target_len must be >= 2, got {target_len}")
    if len(record) < 2:
        raise TooShort(f"{record.key()}: need at least 2 samples to resample, got {len(record)}")
    grid = np.linspace(record.times[0], record.times[-1], target_len)
    resampled = np.interp(grid, record.times, record.values)
    return record.with_data(grid, resampled)


def normalize_zscore(record: SignalRecord) -> SignalRecord:
    """Shift/scale to zero mean and unit population variance."""
    variance = float(np.var(record.values))
    if variance < 1e-15:
        raise ConstantSignal(f"{record.key()}: variance {variance:.3g} below floor; exclude this cell")
    normalized = (record.values - np.mean(record.values)) / np.sqrt(variance)
    return record.with_data(record.times, normalized)


def canonicalize_dataset(
    dataset: Dataset,
    normalization: str = "per_cell",
    resample_first: bool = True,
    on_constant: str = "raise",
):
    """Resample every record to the manifest's canonical length and z-score it.

    normalization: "per_cell" scales each (scenario, patient, feature) series
    on its own; "per_scenario" pools a feature's samples across patients
    within a scenario before computing the mean/std.
    on_constant: "raise" propagates ConstantSignal; "drop" excludes the whole
    patient (the grid requires all features per patient) and reports the
    offending cells.

    Returns (canonical_dataset, excluded_cells).
    """
    if normalization not in ("per_cell", "per_scenario"):
        raise InvalidConfig(f"unknown normalization mode {normalization!r}")
    if on_constant not in ("raise", "drop"):
        raise InvalidConfig(f"unknown on_constant mode {on_constant!r}")
    length = dataset.manifest.canonical_length

    if not resample_first and normalization == "per_cell":
        stages = [normalize_zscore, lambda r: resample_linear(r, length)]
    else:
        stages = [lambda r: resample_linear(r, length)]

    resampled = {}
    excluded = []
    for record in dataset.cells():
        out = record
        try:
            for stage in stages:
                out = stage(out)
            if normalization == "per_cell" and resample_first:
                out = normalize_zscore(out)
        except ConstantSignal:
            if on_constant == "raise":
                raise
            excluded.append(record.key())
            continue
        resampled[out.key()] = out

    if normalization == "per_scenario":
        for scenario in dataset.manifest.scenarios:
            for feature in dataset.manifest.features:
                keys = [
                    (scenario, p.id, feature)
                    for p in dataset.manifest.patients[scenario]
                    if (scenario, p.id, feature) in resampled
                ]
                if not keys:
                    continue
                pooled = np.concatenate([resampled[k].values for k in keys])
                variance = float(np.var(pooled))
                if variance < 1e-15:
                    if on_constant == "raise":
                        raise ConstantSignal(
                            f"({scenario}, *, {feature}): pooled variance below floor"
                        )
                    excluded.extend(keys)
                    for k in keys:
                        del resampled[k]
                    continue
                mean, std = float(np.mean(pooled)), float(np.sqrt(variance))
                for k in keys:
                    r = resampled[k]
                    resampled[k] = r.with_data(r.times, (r.values - mean) / std)

    if not excluded:
        return Dataset(records=resampled, manifest=dataset.manifest), excluded

    # Drop whole patients touched by an exclusion so the all-features-per-pair
    # invariant still holds for the survivors.
    bad_pairs = {(s, p) for (s, p, _) in excluded}
    patients = {
        scenario: [p for p in profiles if (scenario, p.id) not in bad_pairs]
        for scenario, profiles in dataset.manifest.patients.items()
    }
    scenarios = [s for s in dataset.manifest.scenarios if patients.get(s)]
    if not scenarios:
        raise ConstantSignal("every patient was excluded during canonicalization")
    manifest = Manifest(
        scenarios=scenarios,
        patients={s: patients[s] for s in scenarios},
        features=dataset.manifest.features,
        canonical_length=dataset.manifest.canonical_length,
        seed=dataset.manifest.seed,
    )
    kept = {
        cell: resampled[cell]
        for cell in manifest.cells()
    }
    return Dataset(records=kept, manifest=manifest), excluded
