"""The assessment battery: entanglement, reconstruction, temporal dynamics,
scenario similarity, and pairwise feature decoding.

Every battery compares the raw canonical signals against their embeddings and
returns a structured report. All randomness flows through derived seeds, so a
given (dataset, embeddings, seed) triple always produces identical reports.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .embedders import EmbeddingSet
from .errors import (
    DegenerateInput,
    InvalidConfig,
    TooFewSamples,
    ZeroMagnitude,
    ZeroVariance,
)
from .numerics import (
    auc_roc,
    components_for_variance,
    cosine_similarity,
    kfold_indices,
    logistic_fit,
    pca,
    pearson,
    predict_score,
    r2,
    ridge_fit,
    ridge_predict,
    stratified_split,
)
from .signals import Dataset, derive_seed


def _check_inputs(dataset: Dataset, embeddings: EmbeddingSet) -> int:
    if not dataset.is_canonical():
        raise InvalidConfig("dataset must be canonical (resampled + normalized) before metrics")
    length = dataset.manifest.canonical_length
    for cell in dataset.manifest.cells():
        if cell not in embeddings.cells:
            raise InvalidConfig(f"embeddings missing cell {cell}")
        if embeddings.cells[cell].rows != length:
            raise InvalidConfig(
                f"embedding for {cell} has {embeddings.cells[cell].rows} rows; align to {length} first"
            )
    return length


def _matrix_to_jsonable(matrix: np.ndarray):
    return [[None if np.isnan(v) else float(v) for v in row] for row in np.asarray(matrix)]


def _matrix_from_jsonable(rows) -> np.ndarray:
    return np.array(
        [[np.nan if v is None else float(v) for v in row] for row in rows], dtype=np.float64
    )


def _patient_mean_raw(dataset: Dataset, scenario: str) -> np.ndarray:
    """T x F matrix of patient-averaged canonical signals."""
    manifest = dataset.manifest
    columns = []
    for feature in manifest.features:
        stack = np.stack(
            [dataset.get(scenario, p.id, feature).values for p in manifest.patients[scenario]]
        )
        columns.append(stack.mean(axis=0))
    return np.column_stack(columns)


def _patient_mean_embedded(embeddings: EmbeddingSet, dataset: Dataset, scenario: str) -> np.ndarray:
    """T x sum(D_f) concatenation of patient-averaged feature embeddings."""
    manifest = dataset.manifest
    blocks = []
    for feature in manifest.features:
        stack = np.stack(
            [embeddings.get(scenario, p.id, feature).values for p in manifest.patients[scenario]]
        )
        blocks.append(stack.mean(axis=0))
    return np.hstack(blocks)


def _flatten_feature_major(matrix: np.ndarray) -> np.ndarray:
    """Stack columns end to end (all timesteps of column 0, then column 1, ...)."""
    return matrix.ravel(order="F")


# ---------------------------------------------------------------------------
# Feature entanglement
# ---------------------------------------------------------------------------


@dataclass
class EntanglementReport:
    features: list
    scenarios: list
    raw_matrices: dict  # scenario -> F x F mean |pearson|
    embedded_matrices: dict
    raw_grand_mean: float
    embedded_grand_mean: float
    raw_pair_values: list
    embedded_pair_values: list
    excluded_cells: list
    mode: str
    dataset_digest: str
    model_id: str

    def to_dict(self) -> dict:
        return {
            "kind": "entanglement",
            "features": list(self.features),
            "scenarios": list(self.scenarios),
            "raw_matrices": {s: _matrix_to_jsonable(m) for s, m in self.raw_matrices.items()},
            "embedded_matrices": {
                s: _matrix_to_jsonable(m) for s, m in self.embedded_matrices.items()
            },
            "raw_grand_mean": self.raw_grand_mean,
            "embedded_grand_mean": self.embedded_grand_mean,
            "raw_pair_values": [float(v) for v in self.raw_pair_values],
            "embedded_pair_values": [float(v) for v in self.embedded_pair_values],
            "excluded_cells": list(self.excluded_cells),
            "mode": self.mode,
            "dataset_digest": self.dataset_digest,
            "model_id": self.model_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EntanglementReport":
        return cls(
            features=data["features"],
            scenarios=data["scenarios"],
            raw_matrices={s: _matrix_from_jsonable(m) for s, m in data["raw_matrices"].items()},
            embedded_matrices={
                s: _matrix_from_jsonable(m) for s, m in data["embedded_matrices"].items()
            },
            raw_grand_mean=data["raw_grand_mean"],
            embedded_grand_mean=data["embedded_grand_mean"],
            raw_pair_values=data["raw_pair_values"],
            embedded_pair_values=data["embedded_pair_values"],
            excluded_cells=data["excluded_cells"],
            mode=data["mode"],
            dataset_digest=data["dataset_digest"],
            model_id=data["model_id"],
        )


def _embedded_pair_correlation(ea: np.ndarray, eb: np.ndarray, mode: str) -> float:
    if mode == "matched_dims":
        shared = min(ea.shape[1], eb.shape[1])
        vals = [abs(pearson(ea[:, d], eb[:, d])) for d in range(shared)]
        return float(np.mean(vals))
    if mode == "pc1":
        pa = pca(ea).transform(ea)[:, 0] if ea.shape[1] > 1 else ea[:, 0]
        pb = pca(eb).transform(eb)[:, 0] if eb.shape[1] > 1 else eb[:, 0]
        return abs(pearson(pa, pb))
    raise InvalidConfig(f"unknown entanglement mode {mode!r}")


def feature_entanglement(
    dataset: Dataset, embeddings: EmbeddingSet, mode: str = "matched_dims"
) -> EntanglementReport:
    """Mean absolute pairwise feature correlation, raw vs embedded.

    Raw pair value: |pearson| of the two canonical series, averaged over
    patients. Embedded pair value: mean over matched dimensions of the
    column-wise |pearson| (or |pearson| of first principal components in
    "pc1" mode). Cells with zero variance are excluded and reported.
    """
    _check_inputs(dataset, embeddings)
    manifest = dataset.manifest
    features = manifest.features
    f = len(features)
    raw_matrices, embedded_matrices = {}, {}
    raw_values, embedded_values = [], []
    excluded = []
    for scenario in manifest.scenarios:
        raw_m = np.eye(f)
        emb_m = np.eye(f)
        for i in range(f):
            for j in range(i + 1, f):
                raw_pair, emb_pair = [], []
                for profile in manifest.patients[scenario]:
                    xa = dataset.get(scenario, profile.id, features[i]).values
                    xb = dataset.get(scenario, profile.id, features[j]).values
                    ea = embeddings.get(scenario, profile.id, features[i]).values
                    eb = embeddings.get(scenario, profile.id, features[j]).values
                    try:
                        raw_value = abs(pearson(xa, xb))
                        emb_value = _embedded_pair_correlation(ea, eb, mode)
                    except ZeroVariance:
                        excluded.append(
                            f"{scenario}/{profile.id}/{features[i]}~{features[j]}"
                        )
                        continue
                    raw_pair.append(raw_value)
                    emb_pair.append(emb_value)
                raw_m[i, j] = raw_m[j, i] = np.mean(raw_pair) if raw_pair else np.nan
                emb_m[i, j] = emb_m[j, i] = np.mean(emb_pair) if emb_pair else np.nan
                raw_values.extend(raw_pair)
                embedded_values.extend(emb_pair)
        raw_matrices[scenario] = raw_m
        embedded_matrices[scenario] = emb_m

    upper = np.triu_indices(f, k=1)
    raw_grand = float(np.nanmean([raw_matrices[s][upper] for s in manifest.scenarios]))
    emb_grand = float(np.nanmean([embedded_matrices[s][upper] for s in manifest.scenarios]))
    return EntanglementReport(
        features=list(features),
        scenarios=list(manifest.scenarios),
        raw_matrices=raw_matrices,
        embedded_matrices=embedded_matrices,
        raw_grand_mean=raw_grand,
        embedded_grand_mean=emb_grand,
        raw_pair_values=raw_values,
        embedded_pair_values=embedded_values,
        excluded_cells=excluded,
        mode=mode,
        dataset_digest=dataset.digest(),
        model_id=embeddings.model_id,
    )


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------


@dataclass
class ReconstructionReport:
    features: list
    matrix: np.ndarray  # row = embedding source feature, col = reconstructed feature
    cv_mean: list  # own-feature 5-fold CV R^2 mean, per feature
    cv_std: list
    n_train: int
    n_test: int
    folds: int
    ridge_lambda: float
    seed: int
    dataset_digest: str
    model_id: str

    def to_dict(self) -> dict:
        return {
            "kind": "reconstruction",
            "features": list(self.features),
            "matrix": _matrix_to_jsonable(self.matrix),
            "cv_mean": [float(v) for v in self.cv_mean],
            "cv_std": [float(v) for v in self.cv_std],
            "n_train": self.n_train,
            "n_test": self.n_test,
            "folds": self.folds,
            "ridge_lambda": self.ridge_lambda,
            "seed": self.seed,
            "dataset_digest": self.dataset_digest,
            "model_id": self.model_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReconstructionReport":
        return cls(
            features=data["features"],
            matrix=_matrix_from_jsonable(data["matrix"]),
            cv_mean=data["cv_mean"],
            cv_std=data["cv_std"],
            n_train=data["n_train"],
            n_test=data["n_test"],
            folds=data["folds"],
            ridge_lambda=data["ridge_lambda"],
            seed=data["seed"],
            dataset_digest=data["dataset_digest"],
            model_id=data["model_id"],
        )


def reconstruction_assessment(
    dataset: Dataset,
    embeddings: EmbeddingSet,
    seed: int = 0,
    folds: int = 5,
    train_ratio: float = 0.8,
    ridge_lambda: float = 1e-8,
) -> ReconstructionReport:
    """How well each feature's embedding linearly reconstructs each raw signal.

    Samples are single timesteps pooled over scenarios and patients, split
    0.8/0.2 stratified by scenario. The F x F matrix holds held-out-test R^2
    from a ridge fit on all train rows; the own-feature entries additionally
    get k-fold cross-validation summaries on the train split.
    """
    _check_inputs(dataset, embeddings)
    manifest = dataset.manifest
    features = manifest.features
    pairs = list(manifest.pairs())
    x_by_feature = {
        f: np.vstack([embeddings.get(s, p, f).values for s, p in pairs]) for f in features
    }
    y_by_feature = {
        f: np.concatenate([dataset.get(s, p, f).values for s, p in pairs]) for f in features
    }
    strata = np.array(
        [s for s, _ in pairs for _ in range(manifest.canonical_length)]
    )
    plan = stratified_split(strata, train_ratio, derive_seed(seed, "recon", "split"))
    if plan.train.size <= folds or plan.test.size == 0:
        raise TooFewSamples("not enough timesteps for the reconstruction split")

    f = len(features)
    matrix = np.empty((f, f))
    cv_mean, cv_std = [], []
    for i, src in enumerate(features):
        x_train = x_by_feature[src][plan.train]
        x_test = x_by_feature[src][plan.test]
        for j, tgt in enumerate(features):
            y_train = y_by_feature[tgt][plan.train]
            y_test = y_by_feature[tgt][plan.test]
            model = ridge_fit(x_train, y_train, ridge_lambda)
            matrix[i, j] = r2(y_test, ridge_predict(model, x_test))
        fold_scores = []
        y_own = y_by_feature[src][plan.train]
        for fold in kfold_indices(plan.train.size, folds, derive_seed(seed, "recon", "cv", src)):
            mask = np.ones(plan.train.size, dtype=bool)
            mask[fold] = False
            model = ridge_fit(x_train[mask], y_own[mask], ridge_lambda)
            fold_scores.append(r2(y_own[fold], ridge_predict(model, x_train[fold])))
        cv_mean.append(float(np.mean(fold_scores)))
        cv_std.append(float(np.std(fold_scores)))

    return ReconstructionReport(
        features=list(features),
        matrix=matrix,
        cv_mean=cv_mean,
        cv_std=cv_std,
        n_train=int(plan.train.size),
        n_test=int(plan.test.size),
        folds=folds,
        ridge_lambda=ridge_lambda,
        seed=seed,
        dataset_digest=dataset.digest(),
        model_id=embeddings.model_id,
    )


# ---------------------------------------------------------------------------
# Temporal dynamics
# ---------------------------------------------------------------------------


def trajectory_smoothness(trajectory, n_perm: int = 1000, seed: int = 0) -> float:
    """1 - (sequential step length) / (mean step length of permuted orderings).

    The statistic is mean ||P[t+1] - P[t]|| divided by the trajectory
    magnitude (mean distance to the centroid); the magnitude cancels in the
    ratio but is checked to reject constant trajectories. 1 means smooth,
    0 matches temporally random, negative values mean anti-persistent
    (reported as-is, flagged upstream).
    """
    P = np.asarray(trajectory, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n = P.shape[0]
    if n < 3:
        raise TooFewSamples(f"smoothness needs N >= 3 points, got {n}")
    magnitude = float(np.mean(np.linalg.norm(P - P.mean(axis=0), axis=1)))
    if magnitude < 1e-15:
        raise ZeroMagnitude("constant trajectory; smoothness undefined")
    velocity = float(np.mean(np.linalg.norm(np.diff(P, axis=0), axis=1)))
    rng = np.random.default_rng(seed)
    permuted = np.empty(n_perm)
    for k in range(n_perm):
        q = P[rng.permutation(n)]
        permuted[k] = np.mean(np.linalg.norm(np.diff(q, axis=0), axis=1))
    return 1.0 - velocity / float(permuted.mean())


@dataclass
class DynamicsReport:
    scenarios: list
    raw_dimension: dict
    embedded_dimension: dict
    raw_smoothness: dict
    embedded_smoothness: dict
    mean_raw_dimension: float
    mean_embedded_dimension: float
    mean_raw_smoothness: float
    mean_embedded_smoothness: float
    trajectories: dict  # scenario -> {"raw": T x <=3, "embedded": T x <=3}
    negative_smoothness: list
    variance_threshold: float
    n_perm: int
    patient_mode: str
    seed: int
    dataset_digest: str
    model_id: str

    def to_dict(self) -> dict:
        return {
            "kind": "dynamics",
            "scenarios": list(self.scenarios),
            "raw_dimension": {s: self.raw_dimension[s] for s in self.scenarios},
            "embedded_dimension": {s: self.embedded_dimension[s] for s in self.scenarios},
            "raw_smoothness": {s: self.raw_smoothness[s] for s in self.scenarios},
            "embedded_smoothness": {s: self.embedded_smoothness[s] for s in self.scenarios},
            "mean_raw_dimension": self.mean_raw_dimension,
            "mean_embedded_dimension": self.mean_embedded_dimension,
            "mean_raw_smoothness": self.mean_raw_smoothness,
            "mean_embedded_smoothness": self.mean_embedded_smoothness,
            "trajectories": {
                s: {kind: _matrix_to_jsonable(m) for kind, m in per.items()}
                for s, per in self.trajectories.items()
            },
            "negative_smoothness": list(self.negative_smoothness),
            "variance_threshold": self.variance_threshold,
            "n_perm": self.n_perm,
            "patient_mode": self.patient_mode,
            "seed": self.seed,
            "dataset_digest": self.dataset_digest,
            "model_id": self.model_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DynamicsReport":
        return cls(
            scenarios=data["scenarios"],
            raw_dimension=data["raw_dimension"],
            embedded_dimension=data["embedded_dimension"],
            raw_smoothness=data["raw_smoothness"],
            embedded_smoothness=data["embedded_smoothness"],
            mean_raw_dimension=data["mean_raw_dimension"],
            mean_embedded_dimension=data["mean_embedded_dimension"],
            mean_raw_smoothness=data["mean_raw_smoothness"],
            mean_embedded_smoothness=data["mean_embedded_smoothness"],
            trajectories={
                s: {kind: _matrix_from_jsonable(m) for kind, m in per.items()}
                for s, per in data["trajectories"].items()
            },
            negative_smoothness=data["negative_smoothness"],
            variance_threshold=data["variance_threshold"],
            n_perm=data["n_perm"],
            patient_mode=data["patient_mode"],
            seed=data["seed"],
            dataset_digest=data["dataset_digest"],
            model_id=data["model_id"],
        )


def _reduce_to_variance(trajectory: np.ndarray, threshold: float):
    result = pca(trajectory)
    k = components_for_variance(result.explained_variance_ratio, threshold)
    return k, result.transform(trajectory)[:, :k]


def temporal_dynamics(
    dataset: Dataset,
    embeddings: EmbeddingSet,
    seed: int = 0,
    n_perm: int = 1000,
    variance_threshold: float = 0.9,
    patient_mode: str = "averaged",
) -> DynamicsReport:
    """Dimensionality and smoothness of per-scenario trajectories.

    Per scenario, the raw trajectory stacks the features into a T x F matrix
    (patient-averaged by default) and the embedded trajectory concatenates
    the feature embeddings into T x sum(D); both are PCA-reduced to the
    variance threshold before measuring smoothness. Raw and embedded use the
    same permutation seed so identical trajectories score identically.
    """
    if patient_mode not in ("averaged", "per_patient"):
        raise InvalidConfig(f"unknown patient_mode {patient_mode!r}")
    _check_inputs(dataset, embeddings)
    manifest = dataset.manifest
    raw_dim, emb_dim, raw_smooth, emb_smooth = {}, {}, {}, {}
    trajectories = {}
    negative = []
    for scenario in manifest.scenarios:
        smooth_seed = derive_seed(seed, "dynamics", scenario)
        if patient_mode == "averaged":
            raw_sets = [_patient_mean_raw(dataset, scenario)]
            emb_sets = [_patient_mean_embedded(embeddings, dataset, scenario)]
        else:
            raw_sets, emb_sets = [], []
            for profile in manifest.patients[scenario]:
                raw_sets.append(
                    np.column_stack(
                        [dataset.get(scenario, profile.id, f).values for f in manifest.features]
                    )
                )
                emb_sets.append(
                    np.hstack(
                        [
                            embeddings.get(scenario, profile.id, f).values
                            for f in manifest.features
                        ]
                    )
                )
        dims_r, dims_e, smooth_r, smooth_e = [], [], [], []
        reduced_pair = None
        for raw_traj, emb_traj in zip(raw_sets, emb_sets):
            k_r, red_r = _reduce_to_variance(raw_traj, variance_threshold)
            k_e, red_e = _reduce_to_variance(emb_traj, variance_threshold)
            dims_r.append(k_r)
            dims_e.append(k_e)
            smooth_r.append(trajectory_smoothness(red_r, n_perm, smooth_seed))
            smooth_e.append(trajectory_smoothness(red_e, n_perm, smooth_seed))
            if reduced_pair is None:
                reduced_pair = (red_r[:, :3], red_e[:, :3])
        raw_dim[scenario] = float(np.mean(dims_r)) if len(dims_r) > 1 else int(dims_r[0])
        emb_dim[scenario] = float(np.mean(dims_e)) if len(dims_e) > 1 else int(dims_e[0])
        raw_smooth[scenario] = float(np.mean(smooth_r))
        emb_smooth[scenario] = float(np.mean(smooth_e))
        trajectories[scenario] = {"raw": reduced_pair[0], "embedded": reduced_pair[1]}
        for kind, value in (("raw", raw_smooth[scenario]), ("embedded", emb_smooth[scenario])):
            if value < 0:
                negative.append(f"{scenario}/{kind}")

    return DynamicsReport(
        scenarios=list(manifest.scenarios),
        raw_dimension=raw_dim,
        embedded_dimension=emb_dim,
        raw_smoothness=raw_smooth,
        embedded_smoothness=emb_smooth,
        mean_raw_dimension=float(np.mean(list(raw_dim.values()))),
        mean_embedded_dimension=float(np.mean(list(emb_dim.values()))),
        mean_raw_smoothness=float(np.mean(list(raw_smooth.values()))),
        mean_embedded_smoothness=float(np.mean(list(emb_smooth.values()))),
        trajectories=trajectories,
        negative_smoothness=negative,
        variance_threshold=variance_threshold,
        n_perm=n_perm,
        patient_mode=patient_mode,
        seed=seed,
        dataset_digest=dataset.digest(),
        model_id=embeddings.model_id,
    )


# ---------------------------------------------------------------------------
# Scenario similarity
# ---------------------------------------------------------------------------


@dataclass
class ScenarioReport:
    scenarios: list
    raw_matrix: np.ndarray
    embedded_matrix: np.ndarray
    raw_mean_offdiag: float
    embedded_mean_offdiag: float
    raw_dimension: int | None
    embedded_dimension: int | None
    variance_threshold: float
    dataset_digest: str
    model_id: str

    def to_dict(self) -> dict:
        return {
            "kind": "scenario_similarity",
            "scenarios": list(self.scenarios),
            "raw_matrix": _matrix_to_jsonable(self.raw_matrix),
            "embedded_matrix": _matrix_to_jsonable(self.embedded_matrix),
            "raw_mean_offdiag": self.raw_mean_offdiag,
            "embedded_mean_offdiag": self.embedded_mean_offdiag,
            "raw_dimension": self.raw_dimension,
            "embedded_dimension": self.embedded_dimension,
            "variance_threshold": self.variance_threshold,
            "dataset_digest": self.dataset_digest,
            "model_id": self.model_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioReport":
        return cls(
            scenarios=data["scenarios"],
            raw_matrix=_matrix_from_jsonable(data["raw_matrix"]),
            embedded_matrix=_matrix_from_jsonable(data["embedded_matrix"]),
            raw_mean_offdiag=data["raw_mean_offdiag"],
            embedded_mean_offdiag=data["embedded_mean_offdiag"],
            raw_dimension=data["raw_dimension"],
            embedded_dimension=data["embedded_dimension"],
            variance_threshold=data["variance_threshold"],
            dataset_digest=data["dataset_digest"],
            model_id=data["model_id"],
        )


def scenario_similarity(
    dataset: Dataset, embeddings: EmbeddingSet, variance_threshold: float = 0.9
) -> ScenarioReport:
    """Cosine similarity between scenario signatures, raw vs embedded.

    A scenario's raw signature is its patient-averaged feature x time matrix
    flattened feature-major; the embedded signature flattens the concatenated
    embeddings the same way. Cross-scenario dimensionality counts the
    components needed to reach the variance threshold over scenario rows.
    """
    _check_inputs(dataset, embeddings)
    manifest = dataset.manifest
    scenarios = manifest.scenarios
    raw_vectors = [
        _flatten_feature_major(_patient_mean_raw(dataset, s)) for s in scenarios
    ]
    emb_vectors = [
        _flatten_feature_major(_patient_mean_embedded(embeddings, dataset, s)) for s in scenarios
    ]
    s = len(scenarios)
    raw_matrix = np.eye(s)
    emb_matrix = np.eye(s)
    for i in range(s):
        for j in range(i + 1, s):
            raw_matrix[i, j] = raw_matrix[j, i] = cosine_similarity(raw_vectors[i], raw_vectors[j])
            emb_matrix[i, j] = emb_matrix[j, i] = cosine_similarity(emb_vectors[i], emb_vectors[j])
    upper = np.triu_indices(s, k=1)
    raw_mean = float(raw_matrix[upper].mean()) if s > 1 else 0.0
    emb_mean = float(emb_matrix[upper].mean()) if s > 1 else 0.0
    def _cross_dim(vectors):
        if s < 2:
            return None
        try:
            result = pca(np.vstack(vectors))
        except DegenerateInput:
            return None  # all scenario signatures identical
        return components_for_variance(result.explained_variance_ratio, variance_threshold)

    raw_dim = _cross_dim(raw_vectors)
    emb_dim = _cross_dim(emb_vectors)
    return ScenarioReport(
        scenarios=list(scenarios),
        raw_matrix=raw_matrix,
        embedded_matrix=emb_matrix,
        raw_mean_offdiag=raw_mean,
        embedded_mean_offdiag=emb_mean,
        raw_dimension=raw_dim,
        embedded_dimension=emb_dim,
        variance_threshold=variance_threshold,
        dataset_digest=dataset.digest(),
        model_id=embeddings.model_id,
    )


# ---------------------------------------------------------------------------
# Pairwise feature decoding
# ---------------------------------------------------------------------------


@dataclass
class DecodingReport:
    features: list
    raw_matrix: np.ndarray  # symmetric, NaN diagonal
    embedded_matrix: np.ndarray
    raw_mean: float
    raw_std: float
    embedded_mean: float
    embedded_std: float
    pair_counts: dict  # "a~b" -> {"train": n, "test": n}
    window: int
    stride: int
    l2: float
    labels_permuted: bool
    notes: list
    seed: int
    dataset_digest: str
    model_id: str

    def to_dict(self) -> dict:
        return {
            "kind": "decoding",
            "features": list(self.features),
            "raw_matrix": _matrix_to_jsonable(self.raw_matrix),
            "embedded_matrix": _matrix_to_jsonable(self.embedded_matrix),
            "raw_mean": self.raw_mean,
            "raw_std": self.raw_std,
            "embedded_mean": self.embedded_mean,
            "embedded_std": self.embedded_std,
            "pair_counts": self.pair_counts,
            "window": self.window,
            "stride": self.stride,
            "l2": self.l2,
            "labels_permuted": self.labels_permuted,
            "notes": list(self.notes),
            "seed": self.seed,
            "dataset_digest": self.dataset_digest,
            "model_id": self.model_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecodingReport":
        return cls(
            features=data["features"],
            raw_matrix=_matrix_from_jsonable(data["raw_matrix"]),
            embedded_matrix=_matrix_from_jsonable(data["embedded_matrix"]),
            raw_mean=data["raw_mean"],
            raw_std=data["raw_std"],
            embedded_mean=data["embedded_mean"],
            embedded_std=data["embedded_std"],
            pair_counts=data["pair_counts"],
            window=data["window"],
            stride=data["stride"],
            l2=data["l2"],
            labels_permuted=data["labels_permuted"],
            notes=data["notes"],
            seed=data["seed"],
            dataset_digest=data["dataset_digest"],
            model_id=data["model_id"],
        )


def window_samples(matrix: np.ndarray, window: int, stride: int) -> np.ndarray:
    """Flattened sliding windows of a T x D matrix, one row per window."""
    t = matrix.shape[0]
    starts = range(0, t - window + 1, stride)
    return np.stack([matrix[s : s + window].ravel() for s in starts])


def feature_decoding(
    dataset: Dataset,
    embeddings: EmbeddingSet,
    window: int = 50,
    seed: int = 0,
    stride: int | None = None,
    l2: float = 1e-4,
    train_ratio: float = 0.8,
    permute_labels: bool = False,
) -> DecodingReport:
    """Pairwise feature-identity decoding with a logistic probe.

    A sample is a flattened length-`window` slice, advanced by `stride`
    (default: the window, i.e. non-overlapping): for raw signals the slice is
    of the 1-D series, for embeddings the slice covers the same timesteps of
    the T x D matrix, which makes the identity embedder reproduce the raw
    probe exactly. The split is stratified by scenario and performed on
    window slots (scenario, patient, position), so both features' samples
    from one slot land on the same side; otherwise a probe could score far
    from chance on indistinguishable classes just by memorizing train
    windows whose twins sit in the test set. With permute_labels the class
    labels are shuffled (seeded) to obtain a chance-level control.
    """
    length = _check_inputs(dataset, embeddings)
    stride = window if stride is None else stride
    if not 1 <= window <= length:
        raise InvalidConfig(f"window must be in [1, {length}], got {window}")
    if stride < 1:
        raise InvalidConfig("stride must be >= 1")
    manifest = dataset.manifest
    features = manifest.features
    pairs = list(manifest.pairs())
    f = len(features)
    raw_matrix = np.full((f, f), np.nan)
    emb_matrix = np.full((f, f), np.nan)
    pair_counts = {}
    notes = []
    slot_strata = []
    for scenario, patient in pairs:
        n_windows = (length - window) // stride + 1
        slot_strata.extend([scenario] * n_windows)
    slot_strata = np.array(slot_strata)
    n_slots = slot_strata.size

    for i in range(f):
        for j in range(i + 1, f):
            raw_rows, emb_rows = [], []
            for feature in (features[i], features[j]):
                for scenario, patient in pairs:
                    raw = dataset.get(scenario, patient, feature).values[:, None]
                    emb = embeddings.get(scenario, patient, feature).values
                    raw_rows.append(window_samples(raw, window, stride))
                    emb_rows.append(window_samples(emb, window, stride))
            raw_x = np.vstack(raw_rows)
            emb_x = np.vstack(emb_rows)
            y = np.concatenate([np.zeros(n_slots), np.ones(n_slots)])
            if permute_labels:
                perm = np.random.default_rng(
                    derive_seed(seed, "decode-permute", features[i], features[j])
                ).permutation(y.size)
                y = y[perm]
            slot_plan = stratified_split(
                slot_strata,
                train_ratio,
                derive_seed(seed, "decode-split", features[i], features[j]),
            )
            train = np.concatenate([slot_plan.train, slot_plan.train + n_slots])
            test = np.concatenate([slot_plan.test, slot_plan.test + n_slots])
            pair_name = f"{features[i]}~{features[j]}"
            pair_counts[pair_name] = {"train": int(train.size), "test": int(test.size)}
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                raw_model = logistic_fit(raw_x[train], y[train], l2)
                raw_auc = auc_roc(predict_score(raw_model, raw_x[test]), y[test])
                emb_model = logistic_fit(emb_x[train], y[train], l2)
                emb_auc = auc_roc(predict_score(emb_model, emb_x[test]), y[test])
            for warning in caught:
                notes.append(f"{pair_name}: {warning.message}")
            raw_matrix[i, j] = raw_matrix[j, i] = raw_auc
            emb_matrix[i, j] = emb_matrix[j, i] = emb_auc

    upper = np.triu_indices(f, k=1)
    return DecodingReport(
        features=list(features),
        raw_matrix=raw_matrix,
        embedded_matrix=emb_matrix,
        raw_mean=float(np.mean(raw_matrix[upper])),
        raw_std=float(np.std(raw_matrix[upper])),
        embedded_mean=float(np.mean(emb_matrix[upper])),
        embedded_std=float(np.std(emb_matrix[upper])),
        pair_counts=pair_counts,
        window=window,
        stride=stride,
        l2=l2,
        labels_permuted=permute_labels,
        notes=notes,
        seed=seed,
        dataset_digest=dataset.digest(),
        model_id=embeddings.model_id,
    )
