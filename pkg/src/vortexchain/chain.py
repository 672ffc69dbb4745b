"""Finite-state Markov chain representation and structural analysis.

Chains are dense row-stochastic matrices at desk scale (S <= 512).  A
validated chain bundles the transition matrix with its stationary
distribution and two structural flags: reversibility (symmetric joint
distribution) and ergodicity (irreducible and aperiodic transition graph).
All values are immutable and all operations are pure functions.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    NegativeEntry,
    NonErgodic,
    NotStationary,
    Reducible,
    RowSumViolation,
    ZeroSupportState,
)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances for dense double-precision chain algebra.

    Attributes
    ----------
    row : float
        Maximum allowed deviation of a row sum from 1 before the input is
        rejected (smaller deviations are renormalized away).
    entry : float
        Most negative entry that is still clamped to 0 instead of rejected.
    sym : float
        Max-norm threshold under which the joint distribution counts as
        symmetric (reversibility test).
    solve : float
        Residual threshold for stationarity checks and linear solves.
    psd : float
        Eigenvalue threshold for positive-semidefiniteness verdicts.
    """

    row: float = 1e-9
    entry: float = 1e-12
    sym: float = 1e-10
    solve: float = 1e-10
    psd: float = 1e-9


DEFAULT_TOL = Tolerances()


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("chains need at least 2 states")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ErgodicityReport:
    """Outcome of the ergodicity test with its structural diagnosis."""

    ergodic: bool
    irreducible: bool
    aperiodic: bool
    n_components: int
    period: int | None

    def __bool__(self) -> bool:
        return self.ergodic


@dataclass(frozen=True)
class ValidatedChain:
    """A transition matrix together with its stationary distribution and flags.

    Instances are produced by :func:`validate_chain` (or internally by the
    experiment builders); the arrays are read-only so values can be shared
    freely between threads.
    """

    transition: np.ndarray
    stationary: np.ndarray
    reversible: bool
    ergodic: bool
    tol: Tolerances = field(default=DEFAULT_TOL, compare=False)

    @property
    def size(self) -> int:
        return self.transition.shape[0]

    @property
    def joint(self) -> np.ndarray:
        """Joint distribution of two consecutive states, J = diag(pi) @ A."""
        return self.stationary[:, None] * self.transition

    def with_stationary_of(self, other: "ValidatedChain") -> bool:
        """True when this chain shares ``other``'s stationary distribution."""
        return bool(np.max(np.abs(self.stationary - other.stationary)) <= self.tol.solve)


def is_ergodic(matrix) -> ErgodicityReport:
    """Test whether the directed transition graph is irreducible and aperiodic.

    Edges are the strictly positive entries of the matrix.  Aperiodicity is
    decided by the gcd of level differences along edges of a BFS tree, which
    equals the period for a strongly connected graph.

    This is a total function: reducible or periodic inputs return a report
    with ``ergodic=False`` rather than raising.
    """
    a = _as_matrix(matrix)
    adj = a > 0.0
    n_comp, _ = connected_components(csr_matrix(adj), directed=True, connection="strong")
    if n_comp > 1:
        return ErgodicityReport(False, False, False, int(n_comp), None)

    s = a.shape[0]
    level = np.full(s, -1, dtype=int)
    level[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(int(v))
    g = 0
    rows, cols = np.nonzero(adj)
    for u, v in zip(rows, cols):
        g = math.gcd(g, level[u] + 1 - level[v])
    period = abs(g) if g != 0 else 0
    aperiodic = period == 1
    return ErgodicityReport(aperiodic, True, aperiodic, 1, period if period > 0 else None)


def stationary_distribution(matrix, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Stationary distribution of an irreducible transition matrix.

    Solves the singular system (I - A^T) pi = 0 with the normalization row
    sum(pi) = 1 appended, via least squares.  Deterministic and exact at
    desk scale; no power iteration.

    Raises
    ------
    Reducible
        If the transition graph is not strongly connected (the stationary
        distribution would not be unique).
    """
    a = _as_matrix(matrix)
    n_comp, _ = connected_components(csr_matrix(a > 0.0), directed=True, connection="strong")
    if n_comp > 1:
        raise Reducible(f"transition graph has {n_comp} strongly connected components")
    s = a.shape[0]
    system = np.vstack([np.eye(s) - a.T, np.ones((1, s))])
    rhs = np.zeros(s + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    residual = np.max(np.abs(pi @ a - pi))
    if residual > tol.solve:
        raise Reducible(f"stationary solve residual {residual:.3e} exceeds {tol.solve:.1e}")
    return pi


def validate_chain(matrix, tol: Tolerances = DEFAULT_TOL, require_ergodic: bool = False) -> ValidatedChain:
    """Validate a raw square matrix as a Markov chain.

    Entries in [-tol.entry, 0) are clamped to 0 and rows whose sums deviate
    from 1 by at most tol.row are renormalized; anything worse is an error,
    not a warning, so bad inputs cannot pass silently.

    Parameters
    ----------
    matrix : array-like
        Raw S x S matrix, S >= 2, row-major (entry [i, j] is the
        probability of moving from i to j).
    tol : Tolerances
        Numerical thresholds; see :class:`Tolerances`.
    require_ergodic : bool
        Demand an ergodic chain with strictly positive stationary weights.

    Raises
    ------
    NegativeEntry, RowSumViolation, ZeroSupportState
    """
    a = _as_matrix(matrix)
    low = a.min()
    if low < -tol.entry:
        i, j = np.unravel_index(np.argmin(a), a.shape)
        raise NegativeEntry(f"entry [{i},{j}] = {low:.3e} below -{tol.entry:.1e}")
    a = np.clip(a, 0.0, None)

    sums = a.sum(axis=1)
    bad = np.abs(sums - 1.0) > tol.row
    if np.any(bad):
        i = int(np.argmax(np.abs(sums - 1.0)))
        raise RowSumViolation(f"row {i} sums to {sums[i]!r}, deviation beyond {tol.row:.1e}")
    a = a / sums[:, None]

    report = is_ergodic(a)
    if report.irreducible:
        pi = stationary_distribution(a, tol)
    else:
        # Reducible chains keep a valid (non-unique) stationary vector: the
        # least-squares solve below picks the minimum-norm one.
        s = a.shape[0]
        system = np.vstack([np.eye(s) - a.T, np.ones((1, s))])
        rhs = np.zeros(s + 1)
        rhs[-1] = 1.0
        pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)

    if require_ergodic:
        if not report.ergodic:
            raise NonErgodic(
                "chain is not ergodic: "
                + (f"{report.n_components} components" if not report.irreducible else f"period {report.period}")
            )
        if pi.min() <= 0.0:
            raise ZeroSupportState(f"stationary weight {pi.min():.3e} at state {int(np.argmin(pi))}")

    j = pi[:, None] * a
    reversible = bool(np.max(np.abs(j - j.T)) <= tol.sym)
    return ValidatedChain(_frozen(a), _frozen(pi), reversible, report.ergodic, tol)


def chain_from_parts(matrix, pi, tol: Tolerances = DEFAULT_TOL) -> ValidatedChain:
    """Build a ValidatedChain from a matrix and a known stationary distribution.

    Used where the stationary distribution is available analytically (ring
    builders, vortex insertion); the stationarity invariant is still checked.
    """
    a = _as_matrix(matrix)
    p = np.asarray(pi, dtype=float)
    if a.min() < -tol.entry:
        raise NegativeEntry(f"entry {a.min():.3e} below -{tol.entry:.1e}")
    a = np.clip(a, 0.0, None)
    residual = np.max(np.abs(p @ a - p))
    if residual > tol.solve:
        raise NotStationary(f"pi^T A deviates from pi^T by {residual:.3e}")
    sums = a.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > tol.row:
        raise RowSumViolation("row sums deviate beyond tolerance")
    a = a / sums[:, None]
    j = p[:, None] * a
    reversible = bool(np.max(np.abs(j - j.T)) <= tol.sym)
    return ValidatedChain(_frozen(a), _frozen(p), reversible, is_ergodic(a).ergodic, tol)


def reverse_operator(matrix, pi, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Time reversal B of a transition matrix, B[i,j] = pi[j] A[j,i] / pi[i].

    B is row-stochastic, keeps pi stationary, and reversing twice returns
    the original matrix.  For a reversible chain B equals A.

    Raises
    ------
    NotStationary
        If pi is not stationary for the matrix (or not strictly positive).
    """
    a = _as_matrix(matrix)
    p = np.asarray(pi, dtype=float)
    if p.min() <= 0.0:
        raise NotStationary("reverse operator needs strictly positive stationary weights")
    residual = np.max(np.abs(p @ a - p))
    if residual > tol.solve:
        raise NotStationary(f"pi^T A deviates from pi^T by {residual:.3e}")
    return (a.T * p[None, :]) / p[:, None]


def joint_distribution(matrix, pi, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Joint distribution J = diag(pi) @ A of two consecutive states.

    Row sums and column sums of J both equal pi; J is symmetric exactly when
    the chain is reversible.
    """
    a = _as_matrix(matrix)
    p = np.asarray(pi, dtype=float)
    residual = np.max(np.abs(p @ a - p))
    if residual > tol.solve:
        raise NotStationary(f"pi^T A deviates from pi^T by {residual:.3e}")
    return p[:, None] * a
