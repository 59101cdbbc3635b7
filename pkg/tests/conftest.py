"""Shared builders for toy canonical datasets."""

import numpy as np
import pytest

from embedprobe.signals import (
    FEATURES,
    Dataset,
    Manifest,
    PatientProfile,
    SignalRecord,
    derive_seed,
)


def zscore(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return (values - values.mean()) / values.std()


def canonical_dataset(cell_values, scenarios=("alpha",), patients_per=2, length=1000, seed=0):
    """Build a canonical Dataset from a cell_values callback.

    cell_values(scenario, patient_index, feature, rng) -> 1-D array of `length`
    raw values; they are z-scored here so the result is canonical.
    """
    patients = {
        s: [
            PatientProfile(id=f"{s}-{i:02d}", age=40 + i, sex="female" if i % 2 else "male", severity=0.5)
            for i in range(patients_per)
        ]
        for s in scenarios
    }
    manifest = Manifest(
        scenarios=list(scenarios),
        patients=patients,
        features=list(FEATURES),
        canonical_length=length,
        seed=seed,
    )
    times = np.arange(length, dtype=np.float64)
    records = {}
    for s in scenarios:
        for i, profile in enumerate(patients[s]):
            for feature in FEATURES:
                rng = np.random.default_rng(derive_seed(seed, s, i, feature))
                values = zscore(cell_values(s, i, feature, rng))
                records[(s, profile.id, feature)] = SignalRecord(
                    scenario=s, patient=profile.id, feature=feature, times=times, values=values
                )
    return Dataset(records=records, manifest=manifest)


@pytest.fixture(scope="session")
def default_dataset():
    from embedprobe.forge import generate_dataset

    return generate_dataset({"seed": 42})


@pytest.fixture(scope="session")
def default_canonical(default_dataset):
    from embedprobe.signals import canonicalize_dataset

    canonical, _ = canonicalize_dataset(default_dataset)
    return canonical
