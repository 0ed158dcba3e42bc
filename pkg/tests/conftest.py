"""Shared helpers for the test suite."""

import numpy as np
import pytest

# Unnormalised vectors spanning the qubit Choi matrices of the flip
# channels: corners, anti-diagonal corners, and the middle cross.
E1 = np.array([1.0, 0.0, 0.0, 1.0])
E2 = np.array([1.0, 0.0, 0.0, -1.0])
E3 = np.array([0.0, 1.0, 1.0, 0.0])


def outer(v):
    return np.outer(v, np.conj(v))


def random_hermitian(rng, n, scale=1.0):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (m + m.conj().T) / 2.0


def random_density(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def channel_action_gap(ch_a, ch_b):
    """Largest deviation of the two channels' action over all basis matrices."""
    from chdisguise import apply

    n = ch_a.dim
    gap = 0.0
    for i in range(n):
        for j in range(n):
            basis = np.zeros((n, n), dtype=complex)
            basis[i, j] = 1.0
            gap = max(gap, float(np.abs(apply(ch_a, basis) - apply(ch_b, basis)).max()))
    return gap


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
