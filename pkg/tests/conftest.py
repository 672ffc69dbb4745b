"""Shared chain factories and independent oracles for the test suite."""

import numpy as np
import pytest

from vortexchain import chain_from_parts, validate_chain


def random_ergodic_chain(rng, size):
    """Dense random chain: Dirichlet rows give full support, hence ergodic."""
    matrix = rng.dirichlet(np.ones(size), size=size)
    return validate_chain(matrix)


def random_reversible_chain(rng, size, low=0.2, high=1.0):
    """Reversible chain with full support (every loop available).

    Entries of the symmetric joint matrix are bounded away from zero so
    feasible vortex strengths stay well above eigensolver noise.
    """
    w = rng.uniform(low, high, size=(size, size))
    joint = w + w.T
    joint = joint / joint.sum()
    pi = joint.sum(axis=1)
    return chain_from_parts(joint / pi[:, None], pi)


def path_chain(size):
    """Reversible chain on a path graph (no loop), uniform stationary law."""
    pi = np.full(size, 1.0 / size)
    w = 1.0 / (4.0 * size)
    joint = np.zeros((size, size))
    for s in range(size - 1):
        joint[s, s + 1] = w
        joint[s + 1, s] = w
    np.fill_diagonal(joint, pi - joint.sum(axis=1))
    return chain_from_parts(joint / pi[:, None], pi)


def star_chain(size):
    """Reversible chain on a star graph (no loop), uniform stationary law."""
    pi = np.full(size, 1.0 / size)
    w = 1.0 / (2.0 * size * (size - 1))
    joint = np.zeros((size, size))
    for leaf in range(1, size):
        joint[0, leaf] = w
        joint[leaf, 0] = w
    np.fill_diagonal(joint, pi - joint.sum(axis=1))
    return chain_from_parts(joint / pi[:, None], pi)


def brute_force_sigma2(matrix, pi, f, lags=4000):
    """Truncated autocovariance-series oracle via explicit matrix powers.

    Independent of the library implementations: forms A^tau and B^tau
    directly and sums the two lag-covariance sequences up to a fixed
    truncation.  Only good to the size of the neglected tail, which is
    plenty for well-mixing test chains.
    """
    a = np.asarray(matrix, dtype=float)
    p = np.asarray(pi, dtype=float)
    fv = np.asarray(f, dtype=float)
    q = np.diag(p)
    b = np.diag(1.0 / p) @ a.T @ q
    mean2 = float(p @ fv) ** 2
    total = float(p @ (fv - p @ fv) ** 2)
    pow_a = np.eye(len(p))
    pow_b = np.eye(len(p))
    for _ in range(lags):
        pow_a = pow_a @ a
        pow_b = pow_b @ b
        total += float(fv @ q @ pow_a @ fv) - mean2
        total += float(fv @ q @ pow_b @ fv) - mean2
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)
