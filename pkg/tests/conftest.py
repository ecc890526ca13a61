import numpy as np
import pytest

from shadowkit import simulator


@pytest.fixture
def bell_state():
    amps = np.zeros(4, dtype=np.complex128)
    amps[0] = amps[3] = np.sqrt(0.5)
    return simulator.StateVector(n=2, local_dim=2, amplitudes=amps)


@pytest.fixture
def singlet_state():
    amps = np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / np.sqrt(2)
    return simulator.StateVector(n=2, local_dim=2, amplitudes=amps)


def ghz(n):
    amps = np.zeros(2 ** n, dtype=np.complex128)
    amps[0] = amps[-1] = np.sqrt(0.5)
    return simulator.StateVector(n=n, local_dim=2, amplitudes=amps)


def basis_state(n, index, local_dim=2):
    amps = np.zeros(local_dim ** n, dtype=np.complex128)
    amps[index] = 1.0
    return simulator.StateVector(n=n, local_dim=local_dim, amplitudes=amps)


def random_pure_state(n, seed):
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    amps /= np.linalg.norm(amps)
    return simulator.StateVector(n=n, local_dim=2, amplitudes=amps)
