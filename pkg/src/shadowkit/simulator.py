"""Parameterized local Hamiltonians, exact ground states, and measurement sampling.

Ground states come from exact diagonalization (dense below dimension 4096,
Lanczos via ARPACK at and above), which bounds every experiment to desk
scale: at most 14 qubits or 10 qutrits.  Randomized Pauli measurements are
sampled by rotating the full state vector per snapshot, with randomness
keyed per (seed, snapshot) so sampling is reproducible under parallelism.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import accel
from .errors import (
    BadTerm,
    ConvergenceFailure,
    DimensionCap,
    SubsystemTooLarge,
    UnsupportedLocalDim,
)
from .shadows import ClassicalShadow, DensityMatrix

QUBIT_DIM_CAP = 2 ** 14
QUTRIT_DIM_CAP = 3 ** 10
DENSE_DIM_LIMIT = 4096  # dense eigh below, Lanczos at and above
RDM_SITE_CAP = 6

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# spin-1 operators in the basis (m=+1, m=0, m=-1)
SPIN1_Z = np.diag([1.0, 0.0, -1.0]).astype(np.complex128)
SPIN1_X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.complex128) / math.sqrt(2)
SPIN1_Y = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=np.complex128) / math.sqrt(2)


def dimension_cap(local_dim: int) -> int:
    return QUTRIT_DIM_CAP if local_dim == 3 else QUBIT_DIM_CAP


@dataclass(frozen=True, eq=False)
class LocalTerm:
    """A coefficient times a Hermitian matrix acting on an ordered site tuple."""

    sites: tuple[int, ...]
    matrix: np.ndarray
    coefficient: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        object.__setattr__(
            self, "matrix", np.ascontiguousarray(self.matrix, dtype=np.complex128)
        )


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """H = sum_j coeff_j * (embedding of matrix_j on sites_j) on a qudit chain.

    ``params`` is the normalized parameter vector x in [-1, 1]^m obtained by
    affine rescaling of ``physical_params`` over ``physical_box``.
    """

    n: int
    local_dim: int
    terms: tuple[LocalTerm, ...]
    family_tag: str = "Custom"
    params: tuple[float, ...] = ()
    physical_params: tuple[float, ...] = ()
    physical_box: tuple[tuple[float, float], ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(
            self, "physical_params", tuple(float(p) for p in self.physical_params)
        )
        object.__setattr__(
            self,
            "physical_box",
            tuple((float(a), float(b)) for a, b in self.physical_box),
        )

    @property
    def dim(self) -> int:
        return self.local_dim ** self.n


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    local_dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.local_dim ** self.n,):
            raise ValueError("amplitude length != local_dim**n")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.local_dim ** self.n


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    state: StateVector
    energy: float
    gap: float
    degenerate: bool


def normalize_params(physical, box):
    """Affine map of physical parameters onto [-1, 1]^m."""
    out = []
    for value, (lo, hi) in zip(physical, box):
        if hi == lo:
            out.append(0.0)
        else:
            out.append(2.0 * (value - lo) / (hi - lo) - 1.0)
    return tuple(out)


def denormalize_params(x, box):
    return tuple(lo + (xi + 1.0) * 0.5 * (hi - lo) for xi, (lo, hi) in zip(x, box))


# ---------------------------------------------------------------------------
# Matrix construction
# ---------------------------------------------------------------------------

def _validate_term(term: LocalTerm, n: int, local_dim: int) -> None:
    k = len(term.sites)
    want = local_dim ** k
    if term.matrix.shape != (want, want):
        raise BadTerm(
            f"term on sites {term.sites}: matrix shape {term.matrix.shape}, "
            f"expected {(want, want)}"
        )
    if len(set(term.sites)) != k:
        raise BadTerm(f"term sites {term.sites} are not distinct")
    for s in term.sites:
        if not 0 <= s < n:
            raise BadTerm(f"site {s} outside [0, {n})")
    if np.abs(term.matrix - term.matrix.conj().T).max() > 1e-12:
        raise BadTerm(f"term on sites {term.sites} is not Hermitian")


def _embed_term_coo(term: LocalTerm, n: int, local_dim: int):
    """COO data embedding a k-site matrix into the full d^n space."""
    d = local_dim
    sites = term.sites
    k = len(sites)
    place = d ** (n - 1 - np.array(sites))  # digit place value per listed site
    small = d ** k
    digits = np.empty((small, k), dtype=np.int64)
    for j in range(k):
        digits[:, j] = (np.arange(small) // d ** (k - 1 - j)) % d
    offset = digits @ place  # basis offset of each small index on its sites
    env_sites = [s for s in range(n) if s not in sites]
    env_dim = d ** len(env_sites)
    if env_sites:
        env_place = d ** (n - 1 - np.array(env_sites))
        env_digits = np.empty((env_dim, len(env_sites)), dtype=np.int64)
        for j in range(len(env_sites)):
            env_digits[:, j] = (np.arange(env_dim) // d ** (len(env_sites) - 1 - j)) % d
        env_offset = env_digits @ env_place
    else:
        env_offset = np.zeros(1, dtype=np.int64)
    rows_s, cols_s = np.nonzero(term.matrix)
    vals = term.coefficient * term.matrix[rows_s, cols_s]
    rows = (offset[rows_s][:, None] + env_offset[None, :]).ravel()
    cols = (offset[cols_s][:, None] + env_offset[None, :]).ravel()
    data = np.repeat(vals, env_dim)
    return rows, cols, data


def build_matrix(spec: HamiltonianSpec) -> sp.csr_matrix:
    """Sparse Hermitian matrix of the full Hamiltonian."""
    dim = spec.local_dim ** spec.n
    cap = dimension_cap(spec.local_dim)
    if dim > cap:
        raise DimensionCap(f"dimension {dim} exceeds cap {cap}")
    rows, cols, data = [], [], []
    for term in spec.terms:
        _validate_term(term, spec.n, spec.local_dim)
        r, c, v = _embed_term_coo(term, spec.n, spec.local_dim)
        rows.append(r)
        cols.append(c)
        data.append(v)
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=np.complex128)
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    mat.sum_duplicates()
    return mat


def operator_norm_bound(spec: HamiltonianSpec) -> float:
    """Cheap upper bound sum_j |coeff_j| * ||matrix_j||_2."""
    total = 0.0
    for term in spec.terms:
        total += abs(term.coefficient) * float(
            np.linalg.norm(term.matrix, ord=2)
        )
    return max(total, 1e-30)


# ---------------------------------------------------------------------------
# Ground states
# ---------------------------------------------------------------------------

_LANCZOS_V0_SEED = 0x5EED_1A9C


def _lowest_eigenpairs(mat: sp.csr_matrix, k: int):
    """Lowest k eigenvalues/vectors; dense below DENSE_DIM_LIMIT, else Lanczos."""
    dim = mat.shape[0]
    imag_max = np.abs(mat.imag.data).max() if mat.imag.nnz else 0.0
    work = mat.real if imag_max < 1e-14 else mat
    if dim < DENSE_DIM_LIMIT:
        dense = work.toarray()
        evals, evecs = np.linalg.eigh(dense)
        return evals[:k], evecs[:, :k].astype(np.complex128)
    rng = np.random.Generator(np.random.Philox(key=_LANCZOS_V0_SEED))
    v0 = rng.standard_normal(dim)
    try:
        evals, evecs = spla.eigsh(
            work, k=min(k, dim - 1), which="SA", v0=v0, maxiter=10000, tol=0
        )
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceFailure(f"Lanczos failed to converge: {exc}") from exc
    order = np.argsort(evals)
    return evals[order], evecs[:, order].astype(np.complex128)


def ground_state(
    spec: HamiltonianSpec, degeneracy_tol: float = 1e-8
) -> GroundStateResult:
    """Lowest eigenpair and spectral gap; flags numerically degenerate spaces."""
    mat = build_matrix(spec)
    k = 2 if mat.shape[0] > 1 else 1
    evals, evecs = _lowest_eigenpairs(mat, k)
    energy = float(evals[0])
    gap = float(evals[1] - evals[0]) if len(evals) > 1 else 0.0
    gap = max(gap, 0.0)
    vec = evecs[:, 0]
    vec = vec / np.linalg.norm(vec)
    state = StateVector(n=spec.n, local_dim=spec.local_dim, amplitudes=vec)
    residual = np.linalg.norm(mat @ vec - energy * vec)
    if residual > 1e-8 * operator_norm_bound(spec):
        raise ConvergenceFailure(
            f"ground-state residual {residual:.3e} above tolerance"
        )
    return GroundStateResult(
        state=state,
        energy=energy,
        gap=gap,
        degenerate=gap < degeneracy_tol,
    )


def ground_multiplet_mixture(
    spec: HamiltonianSpec, degeneracy_tol: float = 1e-8, max_multiplicity: int = 6
) -> DensityMatrix:
    """Uniform mixture over the numerically identified ground multiplet.

    Matches the zero-temperature Gibbs-state limit when the ground space is
    degenerate; reduces to the pure ground-state projector otherwise.
    """
    mat = build_matrix(spec)
    k = max(1, min(max_multiplicity, mat.shape[0]))
    evals, evecs = _lowest_eigenpairs(mat, k)
    inside = evals <= evals[0] + degeneracy_tol
    vecs = evecs[:, inside]
    g = vecs.shape[1]
    rho = (vecs @ vecs.conj().T) / g
    return DensityMatrix(dim=mat.shape[0], matrix=rho)


# ---------------------------------------------------------------------------
# Measurements and exact reference values
# ---------------------------------------------------------------------------

def sample_shadow(state: StateVector, num_snapshots: int, seed: int) -> ClassicalShadow:
    """T rounds of randomized single-qubit Pauli measurements on ``state``.

    Deterministic given (state, T, seed): snapshot t draws its bases and its
    Born-rule outcome from the counter stream keyed by (seed, t).
    """
    if state.local_dim != 2:
        raise UnsupportedLocalDim(
            f"randomized Pauli sampling needs qubits, got local_dim={state.local_dim}"
        )
    if num_snapshots < 1:
        raise ValueError("need at least one snapshot")
    symbols = accel.sample_symbols(state.amplitudes, seed, num_snapshots)
    return ClassicalShadow(
        n=state.n, num_snapshots=num_snapshots, symbols=symbols, seed=seed
    )


def exact_expectation(
    state: StateVector, observable: Sequence[LocalTerm] | Sequence[tuple]
) -> float:
    """<psi|O|psi> for O given as a list of local terms (the oracle path)."""
    total = 0.0
    d = state.local_dim
    psi = state.amplitudes.reshape((d,) * state.n)
    for term in observable:
        if not isinstance(term, LocalTerm):
            sites, matrix, coeff = term
            term = LocalTerm(sites=tuple(sites), matrix=matrix, coefficient=coeff)
        _validate_term(term, state.n, d)
        k = len(term.sites)
        op = term.matrix.reshape((d,) * (2 * k))
        moved = np.moveaxis(psi, term.sites, range(k))
        acted = np.tensordot(op, moved, axes=(list(range(k, 2 * k)), list(range(k))))
        acted = np.moveaxis(acted, range(k), term.sites)
        val = np.vdot(psi, acted) * term.coefficient
        total += val
    if abs(total.imag) > 1e-10:
        raise BadTerm(f"expectation has imaginary residue {total.imag:.3e}")
    return float(total.real)


def exact_rdm(state: StateVector, subsystem: Sequence[int]) -> DensityMatrix:
    """Partial trace of |psi><psi| onto ``subsystem``."""
    sites = [int(s) for s in subsystem]
    if len(sites) > RDM_SITE_CAP:
        raise SubsystemTooLarge(f"{len(sites)} sites exceeds cap {RDM_SITE_CAP}")
    d = state.local_dim
    psi = state.amplitudes.reshape((d,) * state.n)
    moved = np.moveaxis(psi, sites, range(len(sites)))
    sub_dim = d ** len(sites)
    flat = moved.reshape(sub_dim, -1)
    rho = flat @ flat.conj().T
    return DensityMatrix(dim=sub_dim, matrix=rho)


# ---------------------------------------------------------------------------
# Named Hamiltonian families
# ---------------------------------------------------------------------------

TFIM_FIELD_BOX = (0.5, 1.5)
RYDBERG_BOX = ((-1.0, 4.0), (1.0, 2.2))
RYDBERG_MAX_RANGE = 4
HEISENBERG_COUPLING_BOX = (0.0, 2.0)
XXZ_BOX = ((0.5, 2.0), (0.5, 1.5))  # (J'/J, delta)


def tfim_family(
    n: int,
    field: float,
    coupling: float = 1.0,
    field_box: tuple[float, float] = TFIM_FIELD_BOX,
) -> HamiltonianSpec:
    """Open transverse-field Ising chain H = -J sum Z_i Z_{i+1} - h sum X_i."""
    terms = [
        LocalTerm(sites=(i,), matrix=PAULI_X, coefficient=-field) for i in range(n)
    ]
    terms += [
        LocalTerm(
            sites=(i, i + 1),
            matrix=np.kron(PAULI_Z, PAULI_Z),
            coefficient=-coupling,
        )
        for i in range(n - 1)
    ]
    return HamiltonianSpec(
        n=n,
        local_dim=2,
        terms=tuple(terms),
        family_tag="TFIM",
        params=normalize_params((field,), (field_box,)),
        physical_params=(field,),
        physical_box=(field_box,),
        metadata={"coupling": coupling},
    )


def rydberg_chain(
    n: int,
    detuning_over_rabi: float,
    blockade_over_spacing: float,
    rabi: float = 1.0,
    max_range: int = RYDBERG_MAX_RANGE,
    box: tuple = RYDBERG_BOX,
) -> HamiltonianSpec:
    """Rydberg atom chain with Van der Waals tail truncated at ``max_range``.

    H = (Omega/2) sum X_i - Delta sum N_i
        + Omega sum_{i<j} (R_b / (a|i-j|))^6 N_i N_j,
    with N = |r><r| and the parameter vector (Delta/Omega, R_b/a).
    """
    num_op = np.array([[0, 0], [0, 1]], dtype=np.complex128)
    delta = detuning_over_rabi * rabi
    terms = [
        LocalTerm(sites=(i,), matrix=PAULI_X, coefficient=rabi / 2.0) for i in range(n)
    ]
    terms += [
        LocalTerm(sites=(i,), matrix=num_op, coefficient=-delta) for i in range(n)
    ]
    nn = np.kron(num_op, num_op)
    for i in range(n):
        for j in range(i + 1, min(i + max_range + 1, n)):
            v = rabi * (blockade_over_spacing / (j - i)) ** 6
            terms.append(LocalTerm(sites=(i, j), matrix=nn, coefficient=v))
    physical = (detuning_over_rabi, blockade_over_spacing)
    return HamiltonianSpec(
        n=n,
        local_dim=2,
        terms=tuple(terms),
        family_tag="RydbergChain",
        params=normalize_params(physical, box),
        physical_params=physical,
        physical_box=box,
        metadata={"rabi": rabi, "max_range": max_range},
    )


def heisenberg2d(
    rows: int,
    cols: int,
    seed: int,
    coupling_box: tuple[float, float] = HEISENBERG_COUPLING_BOX,
    couplings: Sequence[float] | None = None,
) -> HamiltonianSpec:
    """Random-coupling antiferromagnet sum_<ij> J_ij (XX + YY + ZZ) on a grid.

    Couplings are sampled uniformly from ``coupling_box`` with the given seed
    unless passed explicitly; the parameter vector is the coupling list.
    """
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            if c + 1 < cols:
                edges.append((s, s + 1))
            if r + 1 < rows:
                edges.append((s, s + cols))
    if couplings is None:
        rng = np.random.Generator(np.random.Philox(key=seed))
        couplings = rng.uniform(coupling_box[0], coupling_box[1], size=len(edges))
    couplings = tuple(float(j) for j in couplings)
    if len(couplings) != len(edges):
        raise BadTerm(f"need {len(edges)} couplings, got {len(couplings)}")
    pair = (
        np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Y, PAULI_Y) + np.kron(PAULI_Z, PAULI_Z)
    )
    terms = [
        LocalTerm(sites=e, matrix=pair, coefficient=j)
        for e, j in zip(edges, couplings)
    ]
    box = tuple(coupling_box for _ in edges)
    return HamiltonianSpec(
        n=n,
        local_dim=2,
        terms=tuple(terms),
        family_tag="Heisenberg2D",
        params=normalize_params(couplings, box),
        physical_params=couplings,
        physical_box=box,
        metadata={"rows": rows, "cols": cols, "seed": seed},
    )


def xxz_bond_alternating(
    n: int,
    coupling_ratio: float,
    anisotropy: float,
    coupling: float = 1.0,
    box: tuple = XXZ_BOX,
) -> HamiltonianSpec:
    """Bond-alternating XXZ chain with a symmetry-pinning penalty 0.1*J*Z_1.

    Bond i (0-based, open chain) carries J for even i and J' = ratio * J for
    odd i; each bond contributes XX + YY + delta * ZZ.  Parameters are
    (J'/J, delta).
    """
    j_prime = coupling_ratio * coupling
    pair = (
        np.kron(PAULI_X, PAULI_X)
        + np.kron(PAULI_Y, PAULI_Y)
        + anisotropy * np.kron(PAULI_Z, PAULI_Z)
    )
    terms = [
        LocalTerm(
            sites=(i, i + 1),
            matrix=pair,
            coefficient=coupling if i % 2 == 0 else j_prime,
        )
        for i in range(n - 1)
    ]
    terms.append(LocalTerm(sites=(0,), matrix=PAULI_Z, coefficient=0.1 * coupling))
    physical = (coupling_ratio, anisotropy)
    return HamiltonianSpec(
        n=n,
        local_dim=2,
        terms=tuple(terms),
        family_tag="XXZBondAlt",
        params=normalize_params(physical, box),
        physical_params=physical,
        physical_box=box,
        metadata={"coupling": coupling},
    )


def aklt_spin1(n: int) -> HamiltonianSpec:
    """Periodic spin-1 chain sum_i [S_i.S_j + (1/3)(S_i.S_j)^2], j = i+1 mod n."""
    sdots = (
        np.kron(SPIN1_X, SPIN1_X)
        + np.kron(SPIN1_Y, SPIN1_Y)
        + np.kron(SPIN1_Z, SPIN1_Z)
    )
    h_bond = sdots + (sdots @ sdots) / 3.0
    terms = [
        LocalTerm(sites=(i, (i + 1) % n), matrix=h_bond, coefficient=1.0)
        for i in range(n)
    ]
    return HamiltonianSpec(
        n=n,
        local_dim=3,
        terms=tuple(terms),
        family_tag="AKLT",
        params=(),
        physical_params=(),
        physical_box=(),
    )


FAMILY_DEFAULT_BOXES = {
    "TFIM": (TFIM_FIELD_BOX,),
    "RydbergChain": RYDBERG_BOX,
    "XXZBondAlt": XXZ_BOX,
}


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def spec_to_dict(spec: HamiltonianSpec) -> dict:
    terms = []
    for term in spec.terms:
        flat = term.matrix.ravel()
        terms.append(
            {
                "sites": list(term.sites),
                "matrix": [[float(v.real), float(v.imag)] for v in flat],
                "coefficient": float(term.coefficient),
            }
        )
    return {
        "n": spec.n,
        "local_dim": spec.local_dim,
        "family_tag": spec.family_tag,
        "params": list(spec.params),
        "physical_params": list(spec.physical_params),
        "physical_box": [list(b) for b in spec.physical_box],
        "terms": terms,
        "metadata": spec.metadata,
    }


def spec_from_dict(doc: dict) -> HamiltonianSpec:
    terms = []
    d = int(doc["local_dim"])
    for item in doc["terms"]:
        pairs = np.asarray(item["matrix"], dtype=np.float64)
        size = int(round(math.sqrt(len(pairs))))
        mat = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(size, size)
        terms.append(
            LocalTerm(
                sites=tuple(item["sites"]),
                matrix=mat,
                coefficient=float(item["coefficient"]),
            )
        )
    return HamiltonianSpec(
        n=int(doc["n"]),
        local_dim=d,
        terms=tuple(terms),
        family_tag=doc.get("family_tag", "Custom"),
        params=tuple(doc.get("params", ())),
        physical_params=tuple(doc.get("physical_params", ())),
        physical_box=tuple(tuple(b) for b in doc.get("physical_box", ())),
        metadata=doc.get("metadata", {}),
    )


def save_spec(path, spec: HamiltonianSpec) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh)


def load_spec(path) -> HamiltonianSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
