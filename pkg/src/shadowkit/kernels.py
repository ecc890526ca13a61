"""Kernel functions: truncated-Fourier (Dirichlet), Gaussian, and shadow kernels.

The shadow kernel compares two measurement records through per-qubit snapshot
overlaps wrapped in a double exponential; its value explodes to ~1e64 already
at tau = gamma = 1, so all Gram-matrix work happens in the log domain and the
standardized matrix (unit diagonal) is what downstream consumers see.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import accel
from .errors import (
    CountCapExceeded,
    DegenerateData,
    DimensionMismatch,
    NeedTwoSnapshots,
    NonpositiveDiagonal,
    ShapeMismatch,
)
from .shadows import ClassicalShadow, _SYMBOL_NORM_SQ, _SYMBOL_UNNORM

WAVEVECTOR_COUNT_CAP = 10 ** 7


@dataclass(frozen=True, eq=False)
class WavevectorSet:
    """Integer lattice vectors of Euclidean norm <= cutoff, lexicographic."""

    m: int
    cutoff: float
    vectors: np.ndarray  # (count, m) int64

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family selector with hyperparameters.

    kind: one of 'dirichlet', 'pairwise_dirichlet', 'gaussian', 'shadow',
    'finite_shadow'.
    """

    kind: str
    cutoff: float | None = None          # dirichlet radius / pairwise per-axis cutoff
    gamma: float | None = None           # gaussian bandwidth or shadow inner scale
    tau: float = 1.0                     # shadow outer scale
    outer_degree: int | None = None      # finite shadow truncation D
    inner_degree: int | None = None      # finite shadow truncation R
    exclude_equal_t_on_diagonal: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("cutoff", "gamma", "tau"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
        if self.kind == "gaussian" and (self.gamma is None or self.gamma <= 0):
            raise ValueError("gaussian kernel needs gamma > 0")

    def label(self) -> str:
        parts = [self.kind]
        if self.cutoff is not None:
            parts.append(f"cutoff={self.cutoff:g}")
        if self.gamma is not None:
            parts.append(f"gamma={self.gamma:g}")
        if self.kind in ("shadow", "finite_shadow"):
            parts.append(f"tau={self.tau:g}")
        return "(" + ", ".join(parts) + ")"


@dataclass(eq=False)
class GramMatrix:
    N: int
    entries: np.ndarray
    standardized: bool = False
    log_entries: np.ndarray | None = None
    kernel: KernelSpec | None = None


# ---------------------------------------------------------------------------
# Wavevector enumeration and trigonometric kernels
# ---------------------------------------------------------------------------

def wavevector_count_bound(m: int, cutoff: float) -> float:
    """min of the box count (2*cutoff+1)^m and the (2m+1)^(cutoff^2) bound."""
    box = (2 * math.floor(cutoff) + 1) ** m
    combinatorial = float(2 * m + 1) ** (cutoff * cutoff)
    return min(float(box), combinatorial)


def enumerate_wavevectors(
    m: int, cutoff: float, count_cap: int = WAVEVECTOR_COUNT_CAP
) -> WavevectorSet:
    """All k in Z^m with ||k||_2 <= cutoff by pruned depth-first search."""
    return _enumerate_wavevectors_cached(int(m), float(cutoff), int(count_cap))


@lru_cache(maxsize=64)
def _enumerate_wavevectors_cached(
    m: int, cutoff: float, count_cap: int
) -> WavevectorSet:
    if m < 1:
        raise DimensionMismatch(f"need m >= 1, got {m}")
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    if wavevector_count_bound(m, cutoff) > count_cap:
        raise CountCapExceeded(
            f"wavevector count may reach (2m+1)^(cutoff^2) = "
            f"{(2 * m + 1) ** (cutoff * cutoff):.3e}, above cap {count_cap}"
        )
    budget = cutoff * cutoff
    out: list[tuple[int, ...]] = []
    prefix = [0] * m

    def descend(axis: int, residual: float) -> None:
        if axis == m:
            out.append(tuple(prefix))
            return
        top = math.isqrt(int(residual)) if residual >= 0 else -1
        for k in range(-top, top + 1):
            prefix[axis] = k
            descend(axis + 1, residual - k * k)
        prefix[axis] = 0

    descend(0, budget)
    if len(out) > count_cap:
        raise CountCapExceeded(f"enumerated {len(out)} wavevectors, cap {count_cap}")
    vectors = np.array(sorted(out), dtype=np.int64).reshape(len(out), m)
    return WavevectorSet(m=m, cutoff=float(cutoff), vectors=vectors)


def dirichlet_kernel(x, x_other, wavevectors: WavevectorSet) -> float:
    """sum over enumerated k of cos(pi * k . (x - x'))."""
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != (wavevectors.m,) or x_other.shape != (wavevectors.m,):
        raise DimensionMismatch(
            f"expected vectors of dimension {wavevectors.m}, got "
            f"{x.shape} and {x_other.shape}"
        )
    phases = wavevectors.vectors @ (x - x_other)
    return float(np.cos(np.pi * phases).sum())


def _axis_cosine_sum(delta: np.ndarray, cutoff: int) -> np.ndarray:
    """D_c(d) = sum_{k=-c}^{c} cos(pi k d), per coordinate."""
    ks = np.arange(1, cutoff + 1)
    return 1.0 + 2.0 * np.cos(np.pi * np.outer(delta, ks)).sum(axis=1)


def pairwise_dirichlet_kernel(x, x_other, per_coordinate_cutoff: int = 3) -> float:
    """sum_{i != j} sum_{k_i, k_j = -c..c} cos(pi (k_i d_i + k_j d_j)).

    Over symmetric k ranges the sine cross terms cancel, so the double sum
    factorizes into per-axis cosine sums D_c(d_i) * D_c(d_j).
    """
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != x_other.shape or x.ndim != 1:
        raise DimensionMismatch(f"incompatible shapes {x.shape}, {x_other.shape}")
    if x.shape[0] < 2:
        raise DimensionMismatch("pairwise kernel needs m >= 2")
    d = _axis_cosine_sum(x - x_other, per_coordinate_cutoff)
    return float(d.sum() ** 2 - (d * d).sum())


def gaussian_kernel(x, x_other, gamma: float) -> float:
    """exp(-gamma ||x - x'||^2); already unit-normalized on the diagonal."""
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != x_other.shape:
        raise DimensionMismatch(f"incompatible shapes {x.shape}, {x_other.shape}")
    return float(np.exp(-gamma * np.sum((x - x_other) ** 2)))


def default_gamma(points: Sequence) -> float:
    """N^2 / sum_{i,j} ||x_i - x_j||^2, the inverse mean squared distance."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        raise DegenerateData("need at least two points")
    sq = np.sum(pts * pts, axis=1)
    total = float(np.sum(sq) * 2 * len(pts) - 2 * np.sum(pts @ pts.T))
    if total <= 0:
        raise DegenerateData("all points identical")
    return len(pts) ** 2 / total


# ---------------------------------------------------------------------------
# Shadow kernels
# ---------------------------------------------------------------------------

#: tr(snapshot(s) snapshot(s')) = 9 |<s|s'>|^2 - 4, exactly {-4, 1/2, 5}.
SHADOW_TRACE_TABLE = accel.DOUBLED_TRACE_TABLE.astype(np.float64) / 2.0


def shadow_trace(s: int, s_other: int) -> float:
    """Per-qubit snapshot overlap trace, from the 6x6 lookup table."""
    return float(SHADOW_TRACE_TABLE[int(s), int(s_other)])


def shadow_trace_from_states(s: int, s_other: int) -> float:
    """Independent recomputation 9|<s|s'>|^2 - 4 from the explicit vectors.

    Overlaps are evaluated on unnormalized integer representatives so the
    squared magnitude is an exact rational and the identity holds exactly.
    """
    ov = np.vdot(_SYMBOL_UNNORM[int(s)], _SYMBOL_UNNORM[int(s_other)])
    mag_sq = (ov.real * ov.real + ov.imag * ov.imag) / (
        _SYMBOL_NORM_SQ[int(s)] * _SYMBOL_NORM_SQ[int(s_other)]
    )
    return float(9.0 * mag_sq - 4.0)


def _check_pair(a: ClassicalShadow, b: ClassicalShadow, exclude_equal_t: bool):
    if a.n != b.n or a.num_snapshots != b.num_snapshots:
        raise ShapeMismatch(
            f"shadow shapes ({a.n}, {a.num_snapshots}) vs ({b.n}, {b.num_snapshots})"
        )
    if a.num_snapshots < 1:
        raise ShapeMismatch("need at least one snapshot")
    if exclude_equal_t and a.num_snapshots < 2:
        raise NeedTwoSnapshots("equal-snapshot exclusion needs T >= 2")


def shadow_kernel_log(
    a: ClassicalShadow,
    b: ClassicalShadow,
    tau: float = 1.0,
    gamma: float = 1.0,
    exclude_equal_t: bool = False,
) -> float:
    """log of the closed-form shadow kernel; always finite.

    log k = (tau/Z) sum_(t,t') exp((gamma/n) sum_i tr(sigma_i sigma~_i)) with
    Z = T^2, or Z = T(T-1) over t != t' when ``exclude_equal_t`` (the
    self-kernel convention for Gram diagonals).
    """
    _check_pair(a, b, exclude_equal_t)
    # canonical argument order makes k(a, b) == k(b, a) bit-exact
    sa, sb = a.snapshot_major, b.snapshot_major
    if sb.tobytes() < sa.tobytes():
        sa, sb = sb, sa
    return accel.shadow_log_kernel_pair(sa, sb, tau, gamma, exclude_equal_t)


def shadow_kernel(
    a: ClassicalShadow,
    b: ClassicalShadow,
    tau: float = 1.0,
    gamma: float = 1.0,
    exclude_equal_t: bool = False,
) -> float:
    """Closed-form shadow kernel; may overflow to +inf when tau*e^(5 gamma) > 709."""
    log_val = shadow_kernel_log(a, b, tau, gamma, exclude_equal_t)
    with np.errstate(over="ignore"):
        return float(np.exp(log_val))


def finite_shadow_kernel(
    a: ClassicalShadow,
    b: ClassicalShadow,
    tau: float = 1.0,
    gamma: float = 1.0,
    outer_degree: int = 0,
    inner_degree: int = 0,
) -> float:
    """Truncated double power series of the shadow kernel.

    sum_{d=0}^{D} (1/d!) ((tau/T^2) sum_{t,t'} sum_{r=0}^{R} (1/r!)
    ((gamma/n) sum_i tr(sigma_i sigma~_i))^r)^d with D = outer_degree and
    R = inner_degree.
    """
    _check_pair(a, b, exclude_equal_t=False)
    if outer_degree < 0 or inner_degree < 0:
        raise ValueError("truncation degrees must be >= 0")
    n, T = a.n, a.num_snapshots
    table = accel.DOUBLED_TRACE_TABLE
    sa, sb = a.snapshot_major, b.snapshot_major
    doubled = np.zeros((T, T), dtype=np.int64)
    for i in range(n):
        doubled += table[sa[:, i]][:, sb[:, i]].astype(np.int64)
    z = (gamma / (2.0 * n)) * doubled.astype(np.float64)
    inner = np.ones_like(z)
    term = np.ones_like(z)
    for r in range(1, inner_degree + 1):
        term = term * z / r
        inner += term
    y = tau * float(inner.sum()) / (T * T)
    outer = 1.0
    term_d = 1.0
    for d in range(1, outer_degree + 1):
        term_d = term_d * y / d
        outer += term_d
    return float(outer)


def taylor_truncation_degrees(tau: float, gamma: float, eta: float) -> tuple[int, int]:
    """Truncation orders that keep |finite - closed form| <= 2*eta everywhere."""
    e2 = math.e ** 2
    outer = e2 * tau * math.exp(5.0 * gamma) + math.log(1.0 / eta) - 1.0
    inner = 5.0 * e2 * gamma + tau * math.exp(5.0 * gamma) + math.log(tau / eta) - 1.0
    return math.ceil(outer), math.ceil(inner)


def shadow_kernel_upper_bound(tau: float, gamma: float) -> float:
    """exp(tau * exp(5 gamma)), the closed form's global upper bound."""
    with np.errstate(over="ignore"):
        return float(np.exp(tau * np.exp(5.0 * gamma)))


# ---------------------------------------------------------------------------
# Gram matrices
# ---------------------------------------------------------------------------

def _vector_gram(points: np.ndarray, spec: KernelSpec) -> np.ndarray:
    N = points.shape[0]
    if spec.kind == "gaussian":
        gamma = spec.gamma
        sq = np.sum(points * points, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
        np.clip(d2, 0.0, None, out=d2)
        return np.exp(-gamma * d2)
    if spec.kind == "dirichlet":
        wv = enumerate_wavevectors(points.shape[1], spec.cutoff)
        entries = np.empty((N, N))
        for i in range(N):
            for j in range(i, N):
                entries[i, j] = entries[j, i] = dirichlet_kernel(
                    points[i], points[j], wv
                )
        return entries
    if spec.kind == "pairwise_dirichlet":
        cutoff = int(spec.cutoff if spec.cutoff is not None else 3)
        entries = np.empty((N, N))
        for i in range(N):
            for j in range(i, N):
                entries[i, j] = entries[j, i] = pairwise_dirichlet_kernel(
                    points[i], points[j], cutoff
                )
        return entries
    raise ValueError(f"unsupported vector kernel {spec.kind!r}")


def vector_kernel_row(x, points: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """k(x, x_l) against every training point, for prediction-time queries."""
    x = np.asarray(x, dtype=np.float64)
    if spec.kind == "gaussian":
        d2 = np.sum((points - x[None, :]) ** 2, axis=1)
        return np.exp(-spec.gamma * d2)
    if spec.kind == "dirichlet":
        wv = enumerate_wavevectors(points.shape[1], spec.cutoff)
        return np.array([dirichlet_kernel(x, p, wv) for p in points])
    if spec.kind == "pairwise_dirichlet":
        cutoff = int(spec.cutoff if spec.cutoff is not None else 3)
        return np.array(
            [pairwise_dirichlet_kernel(x, p, cutoff) for p in points]
        )
    raise ValueError(f"unsupported vector kernel {spec.kind!r}")


def gram_matrix(items, kernel: KernelSpec) -> GramMatrix:
    """Pairwise kernel values; shadow kernels are evaluated in the log domain.

    ``items`` is an (N, m) array of parameter vectors for vector kernels or a
    sequence of ClassicalShadow for shadow kernels.  Shadow-kernel diagonals
    follow the equal-snapshot exclusion rule when the spec requests it.
    """
    if kernel.kind == "shadow":
        shadow_list = list(items)
        if not shadow_list:
            raise ShapeMismatch("need at least one shadow")
        n, T = shadow_list[0].n, shadow_list[0].num_snapshots
        for s in shadow_list:
            _check_pair(shadow_list[0], s, exclude_equal_t=False)
        if kernel.exclude_equal_t_on_diagonal and T < 2:
            raise NeedTwoSnapshots("equal-snapshot exclusion needs T >= 2")
        codes = np.stack([s.snapshot_major for s in shadow_list])
        gamma = kernel.gamma if kernel.gamma is not None else 1.0
        log_gram = accel.shadow_log_gram(codes, kernel.tau, gamma)
        if not kernel.exclude_equal_t_on_diagonal:
            for i, s in enumerate(shadow_list):
                log_gram[i, i] = accel.shadow_log_kernel_pair(
                    s.snapshot_major, s.snapshot_major, kernel.tau, gamma, False
                )
        with np.errstate(over="ignore"):
            entries = np.exp(log_gram)
        return GramMatrix(
            N=len(shadow_list),
            entries=entries,
            standardized=False,
            log_entries=log_gram,
            kernel=kernel,
        )
    if kernel.kind == "finite_shadow":
        shadow_list = list(items)
        gamma = kernel.gamma if kernel.gamma is not None else 1.0
        outer = kernel.outer_degree if kernel.outer_degree is not None else 16
        inner = kernel.inner_degree if kernel.inner_degree is not None else 16
        count = len(shadow_list)
        entries = np.empty((count, count))
        for i in range(count):
            for j in range(i, count):
                entries[i, j] = entries[j, i] = finite_shadow_kernel(
                    shadow_list[i], shadow_list[j], kernel.tau, gamma, outer, inner
                )
        return GramMatrix(N=count, entries=entries, standardized=False, kernel=kernel)
    points = np.asarray(items, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] < 1:
        raise ShapeMismatch("need at least one item")
    entries = _vector_gram(points, kernel)
    return GramMatrix(
        N=points.shape[0], entries=entries, standardized=False, kernel=kernel
    )


def standardize(gram: GramMatrix) -> GramMatrix:
    """Unit-diagonal rescaling K_ij / sqrt(K_ii K_jj), exact in the log domain."""
    if gram.log_entries is not None:
        log_k = gram.log_entries
        diag = np.diag(log_k)
        centered = log_k - 0.5 * (diag[:, None] + diag[None, :])
        with np.errstate(over="ignore"):
            entries = np.exp(centered)
        return GramMatrix(
            N=gram.N,
            entries=entries,
            standardized=True,
            log_entries=centered,
            kernel=gram.kernel,
        )
    diag = np.diag(gram.entries)
    if np.any(diag <= 0):
        raise NonpositiveDiagonal("Gram diagonal must be strictly positive")
    scale = 1.0 / np.sqrt(diag)
    entries = gram.entries * scale[:, None] * scale[None, :]
    return GramMatrix(
        N=gram.N, entries=entries, standardized=True, kernel=gram.kernel
    )


def save_gram(path, gram: GramMatrix) -> None:
    """Binary dump: u64 N then N*N row-major float64, with a JSON sidecar."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", gram.N))
        fh.write(np.ascontiguousarray(gram.entries, dtype=np.float64).tobytes())
    meta = {
        "standardized": gram.standardized,
        "kernel": None if gram.kernel is None else {
            "kind": gram.kernel.kind,
            "cutoff": gram.kernel.cutoff,
            "gamma": gram.kernel.gamma,
            "tau": gram.kernel.tau,
            "exclude_equal_t_on_diagonal": gram.kernel.exclude_equal_t_on_diagonal,
        },
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)


def load_gram(path) -> GramMatrix:
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        entries = np.frombuffer(fh.read(), dtype=np.float64).reshape(n, n).copy()
    standardized = False
    try:
        with open(str(path) + ".json") as fh:
            standardized = bool(json.load(fh).get("standardized", False))
    except FileNotFoundError:
        pass
    return GramMatrix(N=int(n), entries=entries, standardized=standardized)
