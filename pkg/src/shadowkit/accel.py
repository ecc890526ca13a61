"""Hot numerical kernels with numba-compiled and pure-numpy implementations.

Two code paths exist for each kernel:

* a numba ``@njit`` version used by default, and
* a vectorized numpy fallback, selected by setting the environment variable
  ``SHADOWKIT_NO_NUMBA=1`` before import.

Both paths consume identical pregenerated randomness (a Philox-4x32-10
counter generator keyed by ``(seed, t)``, so snapshot ``t`` owns an
independent stream and parallel sampling cannot change results) and are
exercised against each other in the test suite.  ``benchmarks/bench_accel.py``
times the two paths side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("SHADOWKIT_NO_NUMBA", "").lower() in ("1", "true", "yes")

if not NUMBA_DISABLED:
    try:
        import numba
        from numba import njit, prange

        # skip the TBB probe; workqueue is always present and deterministic
        numba.config.THREADING_LAYER = "workqueue"
        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA


def set_num_threads(k: int) -> None:
    """Cap worker threads for parallel kernels (no-op on the numpy path)."""
    if USING_NUMBA:
        k = max(1, min(int(k), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(k)


# ---------------------------------------------------------------------------
# Philox-4x32-10 counter-based randomness
# ---------------------------------------------------------------------------

_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint32(0x9E3779B9)
_PHILOX_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)


def _philox_blocks(c0, c1, c2, c3, k0, k1):
    """Run 10 Philox-4x32 rounds on arrays of counters; returns 4 uint32 arrays."""
    c0 = c0.astype(np.uint64)
    c1 = c1.astype(np.uint64)
    c2 = c2.astype(np.uint64)
    c3 = c3.astype(np.uint64)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for _ in range(10):
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _PHILOX_W0) & _MASK32
        k1 = (k1 + _PHILOX_W1) & _MASK32
    return (
        c0.astype(np.uint32),
        c1.astype(np.uint32),
        c2.astype(np.uint32),
        c3.astype(np.uint32),
    )


def snapshot_randomness(seed: int, num_snapshots: int, n: int):
    """Per-snapshot measurement randomness from streams keyed by (seed, t).

    Returns ``(bases, unif)`` where ``bases[t, i]`` in {0: Z, 1: X, 2: Y} is the
    measurement basis of qubit ``i`` in snapshot ``t`` and ``unif[t]`` is one
    uniform double in [0, 1) used to draw the outcome bitstring.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    k0 = seed & 0xFFFFFFFF
    k1 = seed >> 32
    words_needed = n + 2
    nblocks = (words_needed + 3) // 4
    t = np.arange(num_snapshots, dtype=np.uint64)
    j = np.arange(nblocks, dtype=np.uint64)
    c0 = np.broadcast_to(j, (num_snapshots, nblocks)).ravel()
    tt = np.broadcast_to(t[:, None], (num_snapshots, nblocks)).ravel()
    c1 = tt & _MASK32
    c2 = tt >> np.uint64(32)
    c3 = np.zeros_like(c0)
    r0, r1, r2, r3 = _philox_blocks(c0, c1, c2, c3, k0, k1)
    words = np.stack([r0, r1, r2, r3], axis=1).reshape(num_snapshots, nblocks * 4)
    bases = (words[:, :n] % np.uint32(3)).astype(np.uint8)
    hi = words[:, n].astype(np.uint64)
    lo = words[:, n + 1].astype(np.uint64)
    u64 = (hi << np.uint64(32)) | lo
    unif = (u64 >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return np.ascontiguousarray(bases), unif


def derive_seed(root: int, *indices: int) -> int:
    """Deterministically split a root seed (dataset -> record -> stream)."""
    seed = int(root) & 0xFFFFFFFFFFFFFFFF
    k0 = seed & 0xFFFFFFFF
    k1 = seed >> 32
    c = [np.uint64(len(indices)), np.uint64(0), np.uint64(0), np.uint64(0)]
    for idx in indices:
        v = int(idx) & 0xFFFFFFFFFFFFFFFF
        c[1] ^= np.uint64(v & 0xFFFFFFFF)
        c[2] ^= np.uint64(v >> 32)
        r = _philox_blocks(*(np.array([x]) for x in c), k0, k1)
        c = [np.uint64(r[i][0]) for i in range(4)]
    return int((np.uint64(c[0]) << np.uint64(32)) | np.uint64(c[1]))


# ---------------------------------------------------------------------------
# Randomized Pauli measurement sampling
# ---------------------------------------------------------------------------

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _sample_core_numpy(amps, bases, unif, out):
    """Rotate the state into each snapshot's product basis and Born-sample."""
    num_snapshots, n = bases.shape
    dim = amps.shape[0]
    s = _INV_SQRT2
    for t in range(num_snapshots):
        work = amps.copy()
        for q in range(n):
            b = bases[t, q]
            if b == 0:
                continue
            stride = 1 << (n - 1 - q)
            w = work.reshape(-1, 2, stride)
            a0 = w[:, 0, :].copy()
            a1 = w[:, 1, :].copy()
            if b == 1:  # X basis: Hadamard
                w[:, 0, :] = s * a0 + s * a1
                w[:, 1, :] = s * a0 + (-s) * a1
            else:  # Y basis: H S^dagger
                w[:, 0, :] = s * a0 + (-1j * s) * a1
                w[:, 1, :] = s * a0 + (1j * s) * a1
        p = work.real**2 + work.imag**2
        cum = np.cumsum(p)
        target = unif[t] * cum[-1]
        idx = int(np.searchsorted(cum, target, side="right"))
        if idx >= dim:
            idx = dim - 1
        for q in range(n):
            bit = (idx >> (n - 1 - q)) & 1
            out[q, t] = 2 * bases[t, q] + bit
    return out


def _make_sample_core_numba():
    @njit(parallel=True, cache=True)
    def _sample_core(amps, bases, unif, out):
        num_snapshots, n = bases.shape
        dim = amps.shape[0]
        s = _INV_SQRT2
        for t in prange(num_snapshots):
            work = amps.copy()
            for q in range(n):
                b = bases[t, q]
                if b == 0:
                    continue
                stride = 1 << (n - 1 - q)
                for base in range(0, dim, 2 * stride):
                    for off in range(stride):
                        i0 = base + off
                        i1 = i0 + stride
                        a0 = work[i0]
                        a1 = work[i1]
                        if b == 1:
                            work[i0] = s * a0 + s * a1
                            work[i1] = s * a0 + (-s) * a1
                        else:
                            work[i0] = s * a0 + (-1j * s) * a1
                            work[i1] = s * a0 + (1j * s) * a1
            total = 0.0
            for i in range(dim):
                total += work[i].real ** 2 + work[i].imag ** 2
            target = unif[t] * total
            cum = 0.0
            idx = dim - 1
            for i in range(dim):
                cum += work[i].real ** 2 + work[i].imag ** 2
                if cum > target:
                    idx = i
                    break
            for q in range(n):
                bit = (idx >> (n - 1 - q)) & 1
                out[q, t] = 2 * bases[t, q] + bit
        return out

    return _sample_core


if USING_NUMBA:
    _sample_core = _make_sample_core_numba()
else:
    _sample_core = _sample_core_numpy


def sample_symbols(amps: np.ndarray, seed: int, num_snapshots: int) -> np.ndarray:
    """Sample an (n, T) uint8 symbol array of randomized Pauli measurements."""
    n = int(round(math.log2(amps.shape[0])))
    bases, unif = snapshot_randomness(seed, num_snapshots, n)
    out = np.zeros((n, num_snapshots), dtype=np.uint8)
    _sample_core(np.ascontiguousarray(amps, dtype=np.complex128), bases, unif, out)
    return out


# ---------------------------------------------------------------------------
# Shadow-kernel inner sums
# ---------------------------------------------------------------------------

# tr((3|s><s|-I)(3|s'><s'|-I)) in {-4, 1/2, 5}, stored doubled so the
# accumulator stays integer: 10 same symbol, -8 orthogonal same basis,
# 1 across bases.  Symbol order (Z+, Z-, X+, X-, Y+, Y-).
DOUBLED_TRACE_TABLE = np.ones((6, 6), dtype=np.int16)
for _b in range(3):
    DOUBLED_TRACE_TABLE[2 * _b, 2 * _b] = 10
    DOUBLED_TRACE_TABLE[2 * _b + 1, 2 * _b + 1] = 10
    DOUBLED_TRACE_TABLE[2 * _b, 2 * _b + 1] = -8
    DOUBLED_TRACE_TABLE[2 * _b + 1, 2 * _b] = -8


def trace_exp_table(n: int, gamma: float) -> np.ndarray:
    """exp(gamma/n * sum_i tr(..)) indexed by the doubled integer sum + 8n."""
    c = np.arange(-8 * n, 10 * n + 1, dtype=np.float64)
    return np.exp((gamma / (2.0 * n)) * c)


def _pair_exp_sum_numpy(a, b, exp_table, exclude_equal_t):
    """sum over snapshot pairs (t, t') of exp(gamma/n * per-qubit trace sum).

    ``a``, ``b`` are (T, n) uint8 symbol arrays (snapshot-major).  All doubled
    trace sums are integers, so the matmul below is exact in float64 and the
    result does not depend on BLAS threading.
    """
    T, n = a.shape
    eye = np.eye(6, dtype=np.float64)
    onehot_a = eye[a.reshape(-1)].reshape(T, n * 6)
    # fb_full[t', i*6+s] = table[s, b[t', i]]
    table_t = DOUBLED_TRACE_TABLE.astype(np.float64).T
    fb_full = np.empty((T, n * 6), dtype=np.float64)
    for i in range(n):
        fb_full[:, i * 6:(i + 1) * 6] = table_t[b[:, i]]
    c = onehot_a @ fb_full.T  # exact integers
    idx = c.astype(np.int64) + 8 * n
    vals = exp_table[idx]
    if exclude_equal_t:
        np.fill_diagonal(vals, 0.0)
    return float(np.sum(vals))


def _make_pair_exp_sum_numba():
    @njit(cache=True)
    def _pair_exp_sum(a, b, exp_table, exclude_equal_t):
        T, n = a.shape
        base = 8 * n
        acc = 0.0
        for t in range(T):
            for t2 in range(T):
                if exclude_equal_t and t == t2:
                    continue
                c = 0
                for i in range(n):
                    c += DOUBLED_TRACE_TABLE[a[t, i], b[t2, i]]
                acc += exp_table[c + base]
        return acc

    return _pair_exp_sum


def _make_gram_core_numba():
    @njit(parallel=True, cache=True)
    def _gram_core(codes, exp_table, pairs, out):
        n = codes.shape[2]
        T = codes.shape[1]
        base = 8 * n
        for p in prange(pairs.shape[0]):
            ia = pairs[p, 0]
            ib = pairs[p, 1]
            exclude = ia == ib
            acc = 0.0
            for t in range(T):
                for t2 in range(T):
                    if exclude and t == t2:
                        continue
                    c = 0
                    for i in range(n):
                        c += DOUBLED_TRACE_TABLE[codes[ia, t, i], codes[ib, t2, i]]
                    acc += exp_table[c + base]
            out[p] = acc
        return out

    return _gram_core


if USING_NUMBA:
    _pair_exp_sum = _make_pair_exp_sum_numba()
    _gram_core = _make_gram_core_numba()
else:
    _pair_exp_sum = _pair_exp_sum_numpy
    _gram_core = None


def shadow_log_kernel_pair(a, b, tau, gamma, exclude_equal_t):
    """log of the double-exponential shadow kernel for one shadow pair.

    ``a``, ``b`` are (T, n) uint8 snapshot-major symbol arrays.
    """
    T, n = a.shape
    exp_table = trace_exp_table(n, gamma)
    acc = _pair_exp_sum(a, b, exp_table, exclude_equal_t)
    z = T * (T - 1) if exclude_equal_t else T * T
    return tau * acc / z


def shadow_log_gram(codes, tau, gamma):
    """Lower-level N x N log shadow-kernel Gram over stacked symbol arrays.

    ``codes`` has shape (N, T, n).  Diagonal entries exclude equal-snapshot
    pairs (the self-kernel convention); off-diagonal entries use all T^2
    pairs.  Parallelizes over the upper triangle; entries are each computed
    by a single sequential loop so results are thread-count invariant.
    """
    N, T, n = codes.shape
    exp_table = trace_exp_table(n, gamma)
    pairs = np.array(
        [(i, j) for i in range(N) for j in range(i, N)], dtype=np.int64
    ).reshape(-1, 2)
    sums = np.zeros(len(pairs), dtype=np.float64)
    if USING_NUMBA:
        _gram_core(codes, exp_table, pairs, sums)
    else:
        for p, (i, j) in enumerate(pairs):
            sums[p] = _pair_exp_sum_numpy(codes[i], codes[j], exp_table, i == j)
    log_gram = np.zeros((N, N), dtype=np.float64)
    for p, (i, j) in enumerate(pairs):
        z = T * (T - 1) if i == j else T * T
        log_gram[i, j] = log_gram[j, i] = tau * sums[p] / z
    return log_gram
