"""Classical shadow raw data and the estimators built on it.

A shadow stores the n x T array of single-qubit stabilizer states recorded
from T rounds of randomized Pauli measurements, one byte per entry.  Each
recorded state |s> reconstructs to the snapshot matrix 3|s><s| - I, whose
average over measurement randomness reproduces the measured state exactly;
reduced density matrices and local observables are estimated from those
snapshots without ever forming the global 2^n-dimensional matrix.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyShadow,
    MalformedHeader,
    SubsystemTooLarge,
    TruncatedPayload,
)

RDM_SITE_CAP = 6

class SnapshotSymbol(IntEnum):
    """Post-measurement single-qubit state; the byte encoding is fixed."""

    Z_PLUS = 0
    Z_MINUS = 1
    X_PLUS = 2
    X_MINUS = 3
    Y_PLUS = 4
    Y_MINUS = 5


# Unnormalized integer representatives of |0>, |1>, |+>, |->, |i+>, |i->;
# dividing outer products by the squared norm keeps every projector entry an
# exact multiple of 1/2, so snapshot algebra is exact in float64.
_SYMBOL_UNNORM = np.array(
    [
        [1, 0],
        [0, 1],
        [1, 1],
        [1, -1],
        [1, 1j],
        [1, -1j],
    ],
    dtype=np.complex128,
)
_SYMBOL_NORM_SQ = np.array([1.0, 1.0, 2.0, 2.0, 2.0, 2.0])

#: Unit vectors in the symbol order above.
SYMBOL_STATES = _SYMBOL_UNNORM / np.sqrt(_SYMBOL_NORM_SQ)[:, None]

#: snapshot_matrix(s) for all six symbols, shape (6, 2, 2); entries exact.
SNAPSHOT_MATRICES = np.stack(
    [
        3.0 * np.outer(u, u.conj()) / ns - np.eye(2)
        for u, ns in zip(_SYMBOL_UNNORM, _SYMBOL_NORM_SQ)
    ]
)


def snapshot_matrix(symbol: int) -> np.ndarray:
    """Single-qubit snapshot reconstruction 3|s><s| - I (eigenvalues 2, -1)."""
    return SNAPSHOT_MATRICES[int(symbol)].copy()


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian unit-trace matrix; shadow reconstructions need not be PSD."""

    dim: int
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class ClassicalShadow:
    """Raw measurement record: symbols[i, t] is qubit i's state in snapshot t."""

    n: int
    num_snapshots: int
    symbols: np.ndarray  # (n, T) uint8, values 0..5
    seed: int | None = None
    state_hash: str | None = None
    # snapshot-major (T, n) view cached for kernel evaluation
    _tmajor: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        sym = np.ascontiguousarray(self.symbols, dtype=np.uint8)
        if sym.shape != (self.n, self.num_snapshots):
            raise ValueError(f"symbols shape {sym.shape} != (n, T)")
        if sym.size and sym.max() > 5:
            raise ValueError("symbol byte out of range 0..5")
        object.__setattr__(self, "symbols", sym)
        object.__setattr__(self, "_tmajor", np.ascontiguousarray(sym.T))

    @property
    def snapshot_major(self) -> np.ndarray:
        """(T, n) view used by shadow kernels."""
        return self._tmajor


def _check_subsystem(shadow: ClassicalShadow, subsystem: Sequence[int]) -> list[int]:
    sites = [int(s) for s in subsystem]
    if len(sites) > RDM_SITE_CAP:
        raise SubsystemTooLarge(f"{len(sites)} sites exceeds cap {RDM_SITE_CAP}")
    if len(set(sites)) != len(sites):
        raise ValueError("subsystem sites must be distinct")
    for s in sites:
        if not 0 <= s < shadow.n:
            raise ValueError(f"site {s} outside [0, {shadow.n})")
    return sites


def shadow_rdm(shadow: ClassicalShadow, subsystem: Sequence[int]) -> DensityMatrix:
    """Average of per-snapshot tensor products of snapshot matrices.

    Unbiased estimator of the reduced density matrix on ``subsystem``;
    Hermitian and unit-trace but in general not positive semidefinite.
    """
    sites = _check_subsystem(shadow, subsystem)
    if shadow.num_snapshots == 0:
        raise EmptyShadow("shadow has no snapshots")
    T = shadow.num_snapshots
    dim = 2 ** len(sites)
    acc = np.zeros((dim, dim), dtype=np.complex128)
    chunk = max(1, (1 << 22) // (dim * dim))
    for start in range(0, T, chunk):
        sl = slice(start, min(start + chunk, T))
        block = SNAPSHOT_MATRICES[shadow.symbols[sites[0], sl]]
        for s in sites[1:]:
            nxt = SNAPSHOT_MATRICES[shadow.symbols[s, sl]]
            d = block.shape[1]
            block = np.einsum("tab,tcd->tacbd", block, nxt).reshape(-1, d * 2, d * 2)
        acc += block.sum(axis=0)
    return DensityMatrix(dim=dim, matrix=acc / T)


def _factor_weights(factors: Mapping[int, np.ndarray]) -> tuple[list[int], np.ndarray]:
    sites = sorted(int(s) for s in factors)
    weights = np.empty((len(sites), 6), dtype=np.float64)
    for row, s in enumerate(sites):
        op = np.asarray(factors[s], dtype=np.complex128)
        if op.shape != (2, 2):
            raise ValueError("each factor must be a 2x2 matrix")
        # Tr(O (3|s><s| - I)) is real for Hermitian O
        weights[row] = np.einsum("ab,kba->k", op, SNAPSHOT_MATRICES).real
    return sites, weights


def estimate_product_observable(
    shadow: ClassicalShadow, factors: Mapping[int, np.ndarray]
) -> float:
    """Factorized estimator (1/T) sum_t prod_i Tr(O_i sigma_i^(t)).

    O(T * |factors|) arithmetic via a per-site 6-entry weight table.
    """
    if len(factors) > RDM_SITE_CAP:
        raise SubsystemTooLarge(f"{len(factors)} factors exceeds cap {RDM_SITE_CAP}")
    if shadow.num_snapshots == 0:
        raise EmptyShadow("shadow has no snapshots")
    if not factors:
        return 1.0
    sites, weights = _factor_weights(factors)
    prod = weights[0][shadow.symbols[sites[0]]]
    for row, s in enumerate(sites[1:], start=1):
        prod = prod * weights[row][shadow.symbols[s]]
    return float(prod.mean())


def estimate_observable_sum(
    shadow: ClassicalShadow,
    terms: Sequence[tuple[Mapping[int, np.ndarray], float]],
) -> float:
    """Linear combination of factorized product estimates."""
    return sum(
        coeff * estimate_product_observable(shadow, factors)
        for factors, coeff in terms
    )


def psd_project(dm: DensityMatrix) -> DensityMatrix:
    """Clip negative eigenvalues and renormalize to unit trace (optional)."""
    evals, evecs = np.linalg.eigh(dm.matrix)
    clipped = np.clip(evals, 0.0, None)
    total = clipped.sum()
    if total <= 0:
        clipped = np.full_like(evals, 1.0 / dm.dim)
        total = 1.0
    mat = (evecs * (clipped / total)) @ evecs.conj().T
    return DensityMatrix(dim=dm.dim, matrix=mat)


# ---------------------------------------------------------------------------
# Binary file format
# ---------------------------------------------------------------------------

_MAGIC = b"SHDW"
_VERSION = 1
_HEADER = struct.Struct("<4sHIIQ")  # magic, version, n, T, seed


def serialize(shadow: ClassicalShadow) -> bytes:
    """Little-endian: magic, version u16, n u32, T u32, seed u64, payload.

    Payload is n*T bytes in snapshot-major order (all qubits of snapshot 0,
    then snapshot 1, ...), each byte in 0..5.
    """
    seed = shadow.seed if shadow.seed is not None else 0
    header = _HEADER.pack(_MAGIC, _VERSION, shadow.n, shadow.num_snapshots, seed)
    return header + shadow.symbols.T.tobytes()


def deserialize(data: bytes) -> ClassicalShadow:
    if len(data) < _HEADER.size:
        raise TruncatedPayload(
            f"stream has {len(data)} bytes, header needs {_HEADER.size}"
        )
    magic, version, n, T, seed = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}")
    if version != _VERSION:
        raise MalformedHeader(f"unsupported version {version}")
    payload = data[_HEADER.size:]
    if len(payload) < n * T:
        raise TruncatedPayload(
            f"payload has {len(payload)} bytes, header promises {n * T}"
        )
    if len(payload) != n * T:
        raise MalformedHeader(
            f"length fields promise {n * T} payload bytes, stream has {len(payload)}"
        )
    symbols = np.frombuffer(payload, dtype=np.uint8).reshape(T, n).T
    if symbols.size and symbols.max() > 5:
        raise MalformedHeader("payload byte out of range 0..5")
    return ClassicalShadow(
        n=n,
        num_snapshots=T,
        symbols=symbols.copy(),
        seed=seed if seed != 0 else None,
    )


def save_shadow(path, shadow: ClassicalShadow) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(shadow))


def load_shadow(path) -> ClassicalShadow:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
