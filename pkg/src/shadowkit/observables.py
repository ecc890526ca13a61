"""Physics observables used as prediction targets and phase labels.

Everything is expressed as sums of few-body factors so the same spec can be
evaluated exactly on a state vector or estimated from a classical shadow.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ChainTooShort,
    IntervalOutOfRange,
    NonAdjacent,
    SameSite,
    SubsystemTooLarge,
    WrongLocalDim,
)
from .shadows import ClassicalShadow, estimate_observable_sum
from .simulator import (
    LocalTerm,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    StateVector,
    exact_expectation,
    exact_rdm,
)

_P0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)  # |g><g|
_P1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)  # |r><r|

REFLECTION_SITE_CAP = 12


@dataclass(frozen=True, eq=False)
class ObservableSpec:
    """Sum of products of single-site Hermitian factors."""

    terms: tuple[tuple[dict, float], ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(
            self,
            "terms",
            tuple(
                ({int(s): np.ascontiguousarray(m, np.complex128) for s, m in f.items()}, float(c))
                for f, c in self.terms
            ),
        )

    @property
    def observable_id(self) -> str:
        """Canonical content hash, used as the estimate-cache key."""
        h = hashlib.sha256()
        for factors, coeff in self.terms:
            for site in sorted(factors):
                h.update(site.to_bytes(4, "little"))
                h.update(np.ascontiguousarray(factors[site]).tobytes())
            h.update(np.float64(coeff).tobytes())
        return h.hexdigest()[:16]

    def local_terms(self) -> list[LocalTerm]:
        """Equivalent LocalTerm list for exact evaluation."""
        out = []
        for factors, coeff in self.terms:
            sites = tuple(sorted(factors))
            mat = np.array([[1.0 + 0j]])
            for s in sites:
                mat = np.kron(mat, factors[s])
            out.append(LocalTerm(sites=sites, matrix=mat, coefficient=coeff))
        return out

    def norm_budget(self) -> float:
        """sum of |coeff| * ||factor product||, reported but never consumed."""
        total = 0.0
        for factors, coeff in self.terms:
            prod = 1.0
            for m in factors.values():
                prod *= float(np.linalg.norm(m, 2))
            total += abs(coeff) * prod
        return total

    def exact(self, state: StateVector) -> float:
        return exact_expectation(state, self.local_terms())

    def estimate(self, shadow: ClassicalShadow) -> float:
        return estimate_observable_sum(shadow, self.terms)


def pauli_site(pauli: str, site: int, name: str | None = None) -> ObservableSpec:
    mat = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}[pauli.upper()]
    return ObservableSpec(
        terms=(({site: mat}, 1.0),),
        name=name or f"{pauli.upper()}{site}",
    )


def order_param_z2(n: int) -> ObservableSpec:
    """Density of neighboring (r, g) / (g, r) pairs, 1 on perfect Z2 order."""
    if n < 2:
        raise ChainTooShort("Z2 order parameter needs n >= 2")
    coeff = 1.0 / (n - 1)
    terms = []
    for i in range(n - 1):
        terms.append(({i: _P1, i + 1: _P0}, coeff))
        terms.append(({i: _P0, i + 1: _P1}, coeff))
    return ObservableSpec(terms=tuple(terms), name="O_Z2")


def order_param_z3(n: int) -> ObservableSpec:
    """Density of windows with exactly one excited site in (r,g,g) patterns."""
    if n < 3:
        raise ChainTooShort("Z3 order parameter needs n >= 3")
    coeff = 1.0 / (n - 2)
    terms = []
    for i in range(n - 2):
        terms.append(({i: _P1, i + 1: _P0, i + 2: _P0}, coeff))
        terms.append(({i: _P0, i + 1: _P1, i + 2: _P0}, coeff))
        terms.append(({i: _P0, i + 1: _P0, i + 2: _P1}, coeff))
    return ObservableSpec(terms=tuple(terms), name="O_Z3")


def correlator(i: int, j: int) -> ObservableSpec:
    """C_ij = (X_i X_j + Y_i Y_j + Z_i Z_j) / 3."""
    if i == j:
        raise SameSite(f"correlator needs two distinct sites, got {i} == {j}")
    terms = tuple(
        ({i: p, j: p}, 1.0 / 3.0) for p in (PAULI_X, PAULI_Y, PAULI_Z)
    )
    return ObservableSpec(terms=terms, name=f"C{i}_{j}")


def classify_rydberg_phase(target, n: int | None = None) -> str:
    """'Z2Order' / 'Z3Order' / 'Disordered' by the larger order parameter vs 0.8.

    ``target`` is a StateVector or a ClassicalShadow; exact ties resolve to Z2.
    """
    n = n if n is not None else target.n
    o2 = order_param_z2(n)
    o3 = order_param_z3(n)
    if isinstance(target, ClassicalShadow):
        v2, v3 = o2.estimate(target), o3.estimate(target)
    else:
        v2, v3 = o2.exact(target), o3.exact(target)
    best = max(v2, v3)
    if best <= 0.8:
        return "Disordered"
    return "Z2Order" if v2 >= v3 else "Z3Order"


# ---------------------------------------------------------------------------
# Partial-reflection topological invariant
# ---------------------------------------------------------------------------

def _reversal_permutation(k: int, d: int) -> np.ndarray:
    """Index permutation of |s_1 ... s_k> -> |s_k ... s_1> on d-level sites."""
    idx = np.arange(d ** k)
    digits = []
    for j in range(k):
        digits.append((idx // d ** (k - 1 - j)) % d)
    rev = np.zeros_like(idx)
    for j, dig in enumerate(reversed(digits)):
        rev += dig * d ** (k - 1 - j)
    return rev


def partial_reflection_invariant(
    state: StateVector, interval_a: Sequence[int], interval_b: Sequence[int]
) -> float:
    """Normalized reflection expectation on two adjacent equal intervals.

    Z_R = Tr(rho_{A u B} R) with R reversing site order, normalized by
    sqrt((Tr rho_A^2 + Tr rho_B^2) / 2); +1 trivial, -1 SPT, ~0 broken.
    """
    a = sorted(int(s) for s in interval_a)
    b = sorted(int(s) for s in interval_b)
    if len(a) != len(b):
        raise NonAdjacent(f"intervals must have equal length, got {len(a)}, {len(b)}")
    for iv in (a, b):
        if iv != list(range(iv[0], iv[0] + len(iv))):
            raise NonAdjacent(f"interval {iv} is not contiguous")
    if a[-1] + 1 != b[0] and b[-1] + 1 != a[0]:
        raise NonAdjacent(f"intervals {a} and {b} are not adjacent")
    combined = sorted(a + b)
    if len(combined) > REFLECTION_SITE_CAP:
        raise SubsystemTooLarge(
            f"{len(combined)} sites exceeds reflection cap {REFLECTION_SITE_CAP}"
        )
    d = state.local_dim
    # exact_rdm enforces a smaller cap meant for shadow estimation; the
    # reflection invariant needs up to 12 sites, so trace out directly here.
    psi = state.amplitudes.reshape((d,) * state.n)
    moved = np.moveaxis(psi, combined, range(len(combined)))
    flat = moved.reshape(d ** len(combined), -1)
    rho = flat @ flat.conj().T
    rev = _reversal_permutation(len(combined), d)
    z_r = np.sum(rho[np.arange(rho.shape[0]), rev])
    purity_a = np.trace(exact_rdm(state, a).matrix @ exact_rdm(state, a).matrix).real
    purity_b = np.trace(exact_rdm(state, b).matrix @ exact_rdm(state, b).matrix).real
    norm = np.sqrt((purity_a + purity_b) / 2.0)
    value = z_r / norm
    if abs(value.imag) > 1e-9:
        raise ValueError(f"reflection value has imaginary residue {value.imag:.3e}")
    return float(value.real)


# ---------------------------------------------------------------------------
# Twist operator for spin-1 chains
# ---------------------------------------------------------------------------

def twist_window(n: int, half_width: int) -> list[int]:
    """0-based sites covered by the twist, centered at floor(n/2)."""
    center = n // 2
    return list(range(center - half_width - 1, center + half_width + 1))


def twist_expectation(state: StateVector, half_width: float) -> complex:
    """<psi| O_l |psi> for the graded z-rotation twist on 2l+2 central sites.

    Site k (relative index -l .. l+1 within the window) is rotated by
    exp(-i 2 pi (k + l)/(2l + 1) Sz).  The operator is diagonal, so the
    expectation is a phase-weighted sum of amplitude magnitudes;
    ``half_width`` may be fractional (the twist is continuous in l).
    """
    if state.local_dim != 3:
        raise WrongLocalDim(f"twist needs spin-1 sites, got d={state.local_dim}")
    l_int = int(np.floor(half_width + 1e-12))
    window = twist_window(state.n, l_int)
    if window[0] < 0 or window[-1] >= state.n:
        raise IntervalOutOfRange(
            f"twist window {window} does not fit on {state.n} sites"
        )
    sz_values = np.array([1.0, 0.0, -1.0])
    angle_unit = 2.0 * np.pi / (2.0 * half_width + 1.0)
    # per-site phase factors exp(-i * angle * m) for m in {+1, 0, -1}
    site_phases = []
    for rel, site in enumerate(window):
        k = rel - l_int  # relative index -l .. l+1
        theta = angle_unit * (k + half_width)
        site_phases.append((site, np.exp(-1j * theta * sz_values)))
    d = 3
    phases = np.ones(state.dim, dtype=np.complex128)
    idx = np.arange(state.dim)
    for site, ph in site_phases:
        digit = (idx // d ** (state.n - 1 - site)) % d
        phases *= ph[digit]
    weights = np.abs(state.amplitudes) ** 2
    return complex(np.sum(weights * phases))


def twist_hermitian_expectation(state: StateVector, half_width: float) -> float:
    """Expectation of A = (O_l + O_l^dagger)/2, the real part of the twist."""
    return twist_expectation(state, half_width).real
