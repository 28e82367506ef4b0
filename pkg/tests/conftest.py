import numpy as np
import pytest

from permsym.states import StateVector, singlet_qutrits


def random_state(n, d, rng) -> StateVector:
    amps = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
    return StateVector(n, d, amps / np.linalg.norm(amps), copy=False)


def superposed_singlets(theta, phi) -> StateVector:
    """cos(t/2) singlet x |000> + e^{i phi} sin(t/2) |000> x singlet."""
    zeros = StateVector.basis_string(3, [0, 0, 0])
    left = singlet_qutrits().tensor(zeros)
    right = zeros.tensor(singlet_qutrits())
    amps = (
        np.cos(theta / 2) * left.amps
        + np.exp(1j * phi) * np.sin(theta / 2) * right.amps
    )
    return StateVector(6, 3, amps)


def random_unitary(dim, rng) -> np.ndarray:
    """Haar on U(dim) via Ginibre + QR with the phase-fixed diagonal."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    ph = np.diag(r)
    return q * (ph / np.abs(ph))


def random_special_unitary(dim, rng) -> np.ndarray:
    u = random_unitary(dim, rng)
    return u * np.linalg.det(u) ** (-1.0 / dim)


@pytest.fixture
def rng():
    return np.random.default_rng(20240816)
