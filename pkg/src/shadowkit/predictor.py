"""Learning ground-state properties from (parameter -> shadow) training data.

Two distinct prediction modes, kept separate because their normalizations
differ: the truncated-Fourier average (1/N) sum_l kappa(x, x_l) * estimate_l
with the Dirichlet kernel, and kernel ridge regression where the weights are
k(x, .)^T (K + lambda I)^{-1} with no 1/N prefactor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, FactorizationFailure
from .kernels import (
    GramMatrix,
    KernelSpec,
    WavevectorSet,
    dirichlet_kernel,
    enumerate_wavevectors,
    gram_matrix,
    standardize,
    vector_kernel_row,
)
from .observables import ObservableSpec
from .shadows import ClassicalShadow


@dataclass(eq=False)
class TrainingSet:
    """Parameter points in [-1, 1]^m paired with shadows of their ground states."""

    m: int
    xs: np.ndarray                      # (N, m) float64
    shadows: list[ClassicalShadow]
    estimate_cache: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64).reshape(-1, self.m)
        if len(self.shadows) != self.xs.shape[0]:
            raise ValueError("xs and shadows must have equal length")
        if self.xs.size and (self.xs.min() < -1.0 - 1e-9 or self.xs.max() > 1.0 + 1e-9):
            raise ValueError("parameters must lie in [-1, 1]^m")
        n_set = {s.n for s in self.shadows}
        t_set = {s.num_snapshots for s in self.shadows}
        if len(n_set) > 1 or len(t_set) > 1:
            raise ValueError("all shadows must share n and T")

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    def estimates(self, observable: ObservableSpec) -> np.ndarray:
        """Per-record shadow estimates, computed once per observable id."""
        key = observable.observable_id
        if key not in self.estimate_cache:
            self.estimate_cache[key] = np.array(
                [observable.estimate(s) for s in self.shadows]
            )
        return self.estimate_cache[key]

    def record_hashes(self) -> set[bytes]:
        return {s.symbols.tobytes() for s in self.shadows}


@dataclass(eq=False)
class PredictionModel:
    """Trained predictor; ``kind`` is 'dirichlet_average' or 'kernel_ridge'."""

    kind: str
    training: TrainingSet
    wavevectors: WavevectorSet | None = None
    kernel: KernelSpec | None = None
    regularization: float | None = None
    cho_factor: tuple | None = None
    gram: GramMatrix | None = None
    metadata: dict = field(default_factory=dict)

    def kappa(self, x) -> np.ndarray:
        """Weights kappa(x, x_l) over the training records."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.training.m,):
            raise DimensionMismatch(
                f"query has shape {x.shape}, expected ({self.training.m},)"
            )
        if self.kind == "dirichlet_average":
            return np.array(
                [dirichlet_kernel(x, xl, self.wavevectors) for xl in self.training.xs]
            )
        row = vector_kernel_row(x, self.training.xs, self.kernel)
        row = row / self._row_scale(x)
        return scipy.linalg.cho_solve(self.cho_factor, row)

    def _row_scale(self, x) -> np.ndarray:
        """Standardization of the query row, k(x,x_l)/sqrt(k(x,x) k(x_l,x_l))."""
        self_val = float(vector_kernel_row(x, x[None, :], self.kernel)[0])
        return np.sqrt(self_val * self._train_diag)

    @property
    def _train_diag(self) -> np.ndarray:
        return self.metadata["train_diag"]


def train_dirichlet(data: TrainingSet, cutoff: float) -> PredictionModel:
    """Fixed-formula truncated-Fourier predictor; no fitting happens."""
    wv = enumerate_wavevectors(data.m, cutoff)
    return PredictionModel(
        kind="dirichlet_average",
        training=data,
        wavevectors=wv,
        metadata={"cutoff": float(cutoff), "num_wavevectors": wv.count},
    )


def train_ridge(
    data: TrainingSet, kernel: KernelSpec, regularization: float
) -> PredictionModel:
    """Factorize the standardized Gram plus ridge once; reusable across observables."""
    if regularization <= 0:
        raise ValueError("regularization must be > 0")
    if kernel.kind in ("shadow", "finite_shadow"):
        raise ValueError("ridge prediction uses kernels over parameter vectors")
    gram = gram_matrix(data.xs, kernel)
    train_diag = np.diag(gram.entries).copy()
    gram_std = standardize(gram)
    mat = gram_std.entries + regularization * np.eye(data.size)
    try:
        cho = scipy.linalg.cho_factor(mat)
    except scipy.linalg.LinAlgError:
        jitter = 1e-10 * np.trace(gram_std.entries) / data.size
        try:
            cho = scipy.linalg.cho_factor(
                gram_std.entries + (regularization + jitter) * np.eye(data.size)
            )
        except scipy.linalg.LinAlgError as exc:
            raise FactorizationFailure(
                f"K + lambda I singular at lambda={regularization:g}"
            ) from exc
    model = PredictionModel(
        kind="kernel_ridge",
        training=data,
        kernel=kernel,
        regularization=regularization,
        cho_factor=cho,
        gram=gram_std,
        metadata={"train_diag": train_diag},
    )
    resid = _factorization_residual(model, mat)
    if resid > 1e-8:
        raise FactorizationFailure(f"factorization residual {resid:.3e}")
    return model


def _factorization_residual(model: PredictionModel, mat: np.ndarray) -> float:
    rng = np.random.Generator(np.random.Philox(key=7))
    v = rng.standard_normal(mat.shape[0])
    back = mat @ scipy.linalg.cho_solve(model.cho_factor, v)
    return float(np.linalg.norm(back - v) / np.linalg.norm(v))


def predict_property(
    model: PredictionModel, x, observable: ObservableSpec
) -> float:
    """kappa-weighted combination of cached per-record shadow estimates."""
    if not observable.terms:
        return 0.0
    estimates = model.training.estimates(observable)
    weights = model.kappa(x)
    if model.kind == "dirichlet_average":
        return float(weights @ estimates / model.training.size)
    return float(weights @ estimates)


def rmse(predictions, truths) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if predictions.shape != truths.shape:
        raise DimensionMismatch(
            f"shape mismatch {predictions.shape} vs {truths.shape}"
        )
    return float(np.sqrt(np.mean((predictions - truths) ** 2)))


PAPER_LAMBDA_GRID = (0.0125, 0.025, 0.05, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass(eq=False)
class SelectionReport:
    observable_id: str
    observable_name: str
    kernel_label: str
    regularization: float
    validation_rmse: float


def model_select(
    train: TrainingSet,
    validation: TrainingSet,
    observables: Sequence[ObservableSpec],
    validation_truths: dict[str, np.ndarray],
    lambda_grid: Sequence[float] = PAPER_LAMBDA_GRID,
    kernel_candidates: Sequence[KernelSpec] = (),
) -> tuple[dict[str, PredictionModel], list[SelectionReport]]:
    """Pick the (kernel, lambda) pair with smallest validation RMSE per observable.

    ``validation_truths`` maps observable_id to exact values on the validation
    points.  Ties break toward smaller lambda, then kernel order as listed.
    Overlapping records between train and validation are flagged, not fatal.
    """
    if not kernel_candidates:
        raise ValueError("need at least one kernel candidate")
    overlap = train.record_hashes() & validation.record_hashes()
    if overlap:
        import warnings

        warnings.warn(
            f"{len(overlap)} identical records shared between train and "
            "validation sets",
            stacklevel=2,
        )
    # lambda-major candidate order implements the tie-break rule: first
    # smaller lambda, then kernel order as listed
    candidates: list[tuple[PredictionModel, str, float]] = []
    for lam in sorted(lambda_grid):
        for spec in kernel_candidates:
            model = train_ridge(train, spec, lam)
            candidates.append((model, spec.label(), lam))
    weight_rows = [
        np.stack([model.kappa(x) for x in validation.xs])
        for model, _, _ in candidates
    ]
    best_models: dict[str, PredictionModel] = {}
    reports: list[SelectionReport] = []
    for obs in observables:
        truths = validation_truths[obs.observable_id]
        estimates = train.estimates(obs)
        best: tuple[float, int] | None = None
        for idx in range(len(candidates)):
            err = rmse(weight_rows[idx] @ estimates, truths)
            if best is None or err < best[0] - 1e-15:
                best = (err, idx)
        err, idx = best
        model, label, lam = candidates[idx]
        best_models[obs.observable_id] = model
        reports.append(
            SelectionReport(
                observable_id=obs.observable_id,
                observable_name=obs.name,
                kernel_label=label,
                regularization=lam,
                validation_rmse=err,
            )
        )
    return best_models, reports


def split_records(
    num_records: int, fractions: Sequence[float], seed: int
) -> list[np.ndarray]:
    """Seeded disjoint index split (train/validation/test is the caller's policy)."""
    fractions = np.asarray(fractions, dtype=np.float64)
    if fractions.sum() > 1.0 + 1e-9:
        raise ValueError("fractions sum above 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    perm = rng.permutation(num_records)
    out = []
    start = 0
    for i, frac in enumerate(fractions):
        count = int(round(frac * num_records))
        if i == len(fractions) - 1 and fractions.sum() > 1.0 - 1e-9:
            count = num_records - start
        out.append(np.sort(perm[start:start + count]))
        start += count
    return out
