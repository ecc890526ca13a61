"""Phase classification in shadow-kernel feature space.

Soft-margin SVM trained by projected subgradient descent on the dual
coefficients (the hinge objective sum_l max(0, 1 - y_l (K alpha)_l) under
alpha^T K alpha <= norm_bound_sq), kernel PCA on the standardized Gram, and
the unsupervised median-split over random one-dimensional projections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateEmbedding, LengthMismatch
from .kernels import GramMatrix

PCA_EIGENVALUE_FLOOR = -1e-8
DEFAULT_SPLIT_COMPONENTS = 6


@dataclass(eq=False)
class SVMModel:
    alpha: np.ndarray
    norm_bound_sq: float
    gram: GramMatrix | None
    training_error: float
    converged: bool = True
    kernel_hash: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": list(map(float, self.alpha)),
                "norm_bound_sq": self.norm_bound_sq,
                "training_error": self.training_error,
                "converged": self.converged,
                "kernel_hash": self.kernel_hash,
            }
        )

    @classmethod
    def from_json(cls, doc: str) -> "SVMModel":
        data = json.loads(doc)
        return cls(
            alpha=np.asarray(data["alpha"], dtype=np.float64),
            norm_bound_sq=float(data["norm_bound_sq"]),
            gram=None,
            training_error=float(data["training_error"]),
            converged=bool(data.get("converged", True)),
            kernel_hash=data.get("kernel_hash", ""),
        )


@dataclass(eq=False)
class PCAEmbedding:
    num_components: int
    coordinates: np.ndarray  # (N, num_components)
    eigenvalues: np.ndarray  # nonincreasing


def hinge_training_error(gram_entries: np.ndarray, alpha, labels) -> float:
    """sum_l max(0, 1 - y_l (K alpha)_l)."""
    scores = gram_entries @ alpha
    return float(np.maximum(0.0, 1.0 - labels * scores).sum())


def _project_to_ellipsoid(alpha, gram_entries, bound_sq):
    quad = float(alpha @ gram_entries @ alpha)
    if quad > bound_sq and quad > 0:
        if bound_sq <= 0:
            return np.zeros_like(alpha)
        alpha = alpha * np.sqrt(bound_sq / quad)
    return alpha


def svm_train(
    gram: GramMatrix,
    labels,
    norm_bound_sq: float,
    tol: float = 1e-3,
    max_iter: int = 2000,
) -> SVMModel:
    """Projected subgradient descent on the hinge loss over the K-ellipsoid.

    Keeps the best iterate by training error; a run that stalls above ``tol``
    is not an error (the returned model carries ``converged=False`` and its
    achieved error, which is all the generalization bound consumes).
    """
    entries = gram.entries
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (gram.N,):
        raise LengthMismatch(f"labels shape {labels.shape}, expected ({gram.N},)")
    if set(np.unique(labels)) - {-1.0, 1.0}:
        raise ValueError("labels must be +-1")
    if norm_bound_sq < 0:
        raise ValueError("norm bound must be nonnegative")
    if norm_bound_sq == 0:
        return SVMModel(
            alpha=np.zeros(gram.N),
            norm_bound_sq=0.0,
            gram=gram,
            training_error=float(gram.N),
        )
    alpha = np.zeros(gram.N)
    best_alpha = alpha.copy()
    best_err = hinge_training_error(entries, alpha, labels)
    bound = np.sqrt(norm_bound_sq)
    for it in range(1, max_iter + 1):
        scores = entries @ alpha
        active = (1.0 - labels * scores) > 0
        grad = -entries @ (labels * active)
        gnorm = np.linalg.norm(grad)
        if gnorm == 0:
            break
        step = bound / np.sqrt(it)
        alpha = _project_to_ellipsoid(alpha - step * grad / gnorm, entries, norm_bound_sq)
        err = hinge_training_error(entries, alpha, labels)
        if err < best_err:
            best_err = err
            best_alpha = alpha.copy()
        if best_err <= tol:
            break
    return SVMModel(
        alpha=best_alpha,
        norm_bound_sq=float(norm_bound_sq),
        gram=gram,
        training_error=best_err,
        converged=best_err <= tol,
    )


def svm_predict(model: SVMModel, kernel_row) -> tuple[int, float]:
    """(label, raw score) with sign(0) = +1 as the fixed tie rule."""
    row = np.asarray(kernel_row, dtype=np.float64)
    if row.shape != model.alpha.shape:
        raise LengthMismatch(
            f"kernel row length {row.shape[0]}, expected {model.alpha.shape[0]}"
        )
    score = float(model.alpha @ row)
    return (1 if score >= 0 else -1), score


def svm_generalization_bound(
    training_error: float,
    num_train: int,
    norm_bound: float,
    kernel_diag_bound: float,
    delta: float = 0.1,
) -> float:
    """Prediction-error upper bound E_tr/N + 7(Lambda R + 1) sqrt(log(2/d)/N)."""
    return training_error / num_train + 7.0 * (
        norm_bound * kernel_diag_bound + 1.0
    ) * np.sqrt(np.log(2.0 / delta) / num_train)


def kernel_pca(
    gram: GramMatrix, num_components: int, center: bool = True
) -> PCAEmbedding:
    """Top principal components of the (double-centered) standardized Gram.

    Coordinates are eigenvector * sqrt(eigenvalue); eigenvalues below the
    -1e-8 floor are clipped to zero before use.  Component signs are
    canonicalized so the largest-magnitude coordinate is positive.
    """
    if not gram.standardized:
        raise ValueError("kernel PCA expects a standardized Gram matrix")
    if num_components > gram.N:
        raise ValueError(f"num_components {num_components} > N {gram.N}")
    k = gram.entries
    if center:
        ones = np.full((gram.N, gram.N), 1.0 / gram.N)
        k = k - ones @ k - k @ ones + ones @ k @ ones
    evals, evecs = np.linalg.eigh(k)
    order = np.argsort(evals)[::-1][:num_components]
    evals = evals[order]
    evecs = evecs[:, order]
    evals = np.where(evals < PCA_EIGENVALUE_FLOOR, 0.0, np.maximum(evals, 0.0))
    coords = evecs * np.sqrt(evals)[None, :]
    for c in range(coords.shape[1]):
        col = coords[:, c]
        if col[np.argmax(np.abs(col))] < 0:
            coords[:, c] = -col
    return PCAEmbedding(
        num_components=num_components, coordinates=coords, eigenvalues=evals
    )


def median_split(values: np.ndarray) -> np.ndarray:
    """+-1 labels by side of the median; the median point joins the +1 side."""
    center = np.median(values)
    return np.where(values >= center, 1, -1)


def unsupervised_split(
    embedding: PCAEmbedding,
    trials: int = 500,
    seed: int = 0,
    num_components: int = DEFAULT_SPLIT_COMPONENTS,
) -> np.ndarray:
    """Median split along the best of ``trials`` random 1-D projections.

    Directions are uniform on the sphere (normalized Gaussians) in the
    leading ``num_components``-dimensional subspace; the kept projection
    maximizes the sum of absolute deviations from the median.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    coords = embedding.coordinates[:, : min(num_components, embedding.num_components)]
    if coords.size == 0 or np.allclose(coords, coords[0], atol=1e-15):
        raise DegenerateEmbedding("all embedded points coincide")
    rng = np.random.Generator(np.random.Philox(key=seed))
    best_score = -np.inf
    best_labels = None
    for _ in range(trials):
        direction = rng.standard_normal(coords.shape[1])
        norm = np.linalg.norm(direction)
        if norm == 0:
            continue
        projected = coords @ (direction / norm)
        center = np.median(projected)
        score = float(np.abs(projected - center).sum())
        if score > best_score:
            best_score = score
            best_labels = np.where(projected >= center, 1, -1)
    if best_labels is None:
        raise DegenerateEmbedding("no usable projection found")
    return best_labels
