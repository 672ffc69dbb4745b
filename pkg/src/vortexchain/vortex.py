"""Vortex flows: skew perturbations of a reversible chain's joint distribution.

A balanced skew flow H (skew-symmetric, zero row sums) added to the joint
distribution J raises the probability of moving around a loop one way and
lowers it the other way.  Whenever J +/- H stays non-negative the perturbed
chain keeps the stationary distribution and its estimator variance can only
improve.  This module builds the space of such flows, detects loops to host
them, sizes them against a chain, and performs the insertion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .chain import ValidatedChain, chain_from_parts
from .errors import (
    ConditionIIViolated,
    ConditionIViolated,
    CycleTooShort,
    NotReversible,
    ZeroDirection,
    ZeroFlow,
)
from .variance import hermitian_skew_split, variance_kernel

# Row sums of a balanced flow must vanish exactly up to accumulated rounding.
ROW_SUM_TOL = 1e-14
RECONSTRUCT_TOL = 1e-10


@dataclass(frozen=True)
class SkewFlow:
    """A skew-symmetric matrix with zero row sums, in joint-probability units.

    Only the strict upper triangle is stored, so H = -H^T holds exactly and
    is immune to rounding.
    """

    size: int
    upper: np.ndarray  # strict upper triangle; zeros elsewhere

    def __post_init__(self):
        u = np.asarray(self.upper, dtype=float)
        if u.shape != (self.size, self.size):
            raise ConditionIViolated(f"flow storage has shape {u.shape}, expected square of {self.size}")
        if np.any(np.tril(u) != 0.0):
            raise ConditionIViolated("flow storage must be strictly upper triangular")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "upper", u)
        rows = np.max(np.abs(self.matrix.sum(axis=1)))
        if rows > ROW_SUM_TOL:
            raise ConditionIViolated(f"flow row sums reach {rows:.3e}, beyond {ROW_SUM_TOL:.1e}")

    @property
    def matrix(self) -> np.ndarray:
        return self.upper - self.upper.T

    def is_zero(self) -> bool:
        return not np.any(self.upper)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.upper))) if self.upper.size else 0.0

    def __add__(self, other: "SkewFlow") -> "SkewFlow":
        if self.size != other.size:
            raise ValueError("flow sizes differ")
        return SkewFlow(self.size, self.upper + other.upper)

    def __mul__(self, scalar: float) -> "SkewFlow":
        return SkewFlow(self.size, self.upper * float(scalar))

    __rmul__ = __mul__

    @classmethod
    def zero(cls, size: int) -> "SkewFlow":
        return cls(size, np.zeros((size, size)))

    @classmethod
    def from_matrix(cls, matrix, tol: float = ROW_SUM_TOL) -> "SkewFlow":
        """Build a flow from a full matrix, verifying skewness and row sums."""
        h = np.asarray(matrix, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ConditionIViolated(f"expected a square matrix, got shape {h.shape}")
        skew_err = np.max(np.abs(h + h.T))
        if skew_err > tol:
            raise ConditionIViolated(f"matrix is not skew-symmetric (residual {skew_err:.3e})")
        return cls(h.shape[0], np.triu(h, k=1))


@dataclass(frozen=True)
class Cycle:
    """An oriented simple cycle of at least three distinct states (0-based)."""

    states: tuple[int, ...]

    def __post_init__(self):
        if len(self.states) < 3:
            raise CycleTooShort(f"cycle has {len(self.states)} states; a 2-cycle cannot carry a balanced flow")
        if len(set(self.states)) != len(self.states):
            raise ValueError("cycle states must be distinct")
        if min(self.states) < 0:
            raise ValueError("cycle states must be non-negative indices")

    def __len__(self) -> int:
        return len(self.states)

    def edges(self):
        """Directed edges around the cycle, including the closing edge."""
        n = len(self.states)
        for k in range(n):
            yield self.states[k], self.states[(k + 1) % n]

    def reversed(self) -> "Cycle":
        return Cycle(tuple(reversed(self.states)))


@dataclass(frozen=True)
class VortexBasis:
    """Basis of the balanced-flow space built from zero-sum vectors.

    The generating vectors u_1..u_{S-1} each have a single 1 and a -1 in
    the last position; pairing them as u_i u_j^T - u_j u_i^T yields
    (S-1)(S-2)/2 linearly independent flows that span every balanced flow.
    """

    size: int
    vectors: tuple[np.ndarray, ...]
    pairs: tuple[tuple[int, int], ...]
    matrices: tuple[np.ndarray, ...]

    @property
    def dimension(self) -> int:
        return len(self.pairs)

    def rank(self) -> int:
        """Numeric rank of the flattened basis matrices."""
        if not self.matrices:
            return 0
        stack = np.array([m.ravel() for m in self.matrices])
        return int(np.linalg.matrix_rank(stack))

    def flow(self, i: int, j: int) -> SkewFlow:
        return SkewFlow.from_matrix(self.matrices[self.pairs.index((i, j))])


def zero_sum_vectors(size: int) -> list[np.ndarray]:
    """The S-1 canonical vectors orthogonal to the all-ones vector.

    Vector k has a 1 at position k and a -1 at the last position; they are
    linearly independent and each sums to zero.  For size 2 the single
    vector [1, -1] exists but no flow can be built from it.
    """
    if size < 2:
        raise ValueError("need at least 2 states")
    out = []
    for k in range(size - 1):
        u = np.zeros(size)
        u[k] = 1.0
        u[-1] = -1.0
        out.append(u)
    return out


def vortex_basis(size: int) -> VortexBasis:
    """Basis of all balanced skew flows on ``size`` states.

    Empty for size 2: no non-zero skew matrix with vanishing row sums
    exists on two states.
    """
    vectors = zero_sum_vectors(size)
    pairs = []
    matrices = []
    for i in range(size - 1):
        for j in range(i + 1, size - 1):
            pairs.append((i, j))
            matrices.append(np.outer(vectors[i], vectors[j]) - np.outer(vectors[j], vectors[i]))
    return VortexBasis(size, tuple(vectors), tuple(pairs), tuple(matrices))


def find_loop(chain: ValidatedChain) -> Cycle | None:
    """First simple cycle (length >= 3) of a reversible chain's edge graph.

    The undirected graph has an edge wherever the joint distribution is
    positive off the diagonal.  Returns ``None`` exactly when the states
    are organized in a tree (no vortex can then be hosted).  The cycle
    returned is the first DFS back-edge cycle; no minimality is implied.

    Raises
    ------
    NotReversible
    """
    if not chain.reversible:
        raise NotReversible("loop search is defined on reversible chains")
    j = chain.joint
    size = chain.size
    adjacency = [np.flatnonzero((j[s] > 0.0) & (np.arange(size) != s)) for s in range(size)]

    color = [0] * size  # 0 unvisited, 1 on stack, 2 done
    parent = [-1] * size
    for root in range(size):
        if color[root]:
            continue
        stack = [(root, iter(adjacency[root]))]
        color[root] = 1
        while stack:
            u, it = stack[-1]
            advanced = False
            for v in it:
                v = int(v)
                if v == parent[u]:
                    continue
                if color[v] == 1:
                    # back edge u -> v closes a cycle along the DFS stack
                    path = [u]
                    w = u
                    while w != v:
                        w = parent[w]
                        path.append(w)
                    return Cycle(tuple(reversed(path)))
                if color[v] == 0:
                    parent[v] = u
                    color[v] = 1
                    stack.append((v, iter(adjacency[v])))
                    advanced = True
                    break
            if not advanced:
                color[u] = 2
                stack.pop()
    return None


def cycle_vortex(cycle: Cycle, epsilon: float, size: int) -> SkewFlow:
    """Unit-pattern flow of strength ``epsilon`` around a cycle.

    Puts +epsilon on each directed cycle edge (including the closing one)
    and -epsilon against it; all other entries are zero.  The result is a
    balanced flow by construction.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if max(cycle.states) >= size:
        raise ValueError(f"cycle state {max(cycle.states)} out of range for size {size}")
    upper = np.zeros((size, size))
    for a, b in cycle.edges():
        if a < b:
            upper[a, b] += epsilon
        else:
            upper[b, a] -= epsilon
    return SkewFlow(size, upper)


def compose_vortices(components: list[tuple[Cycle, float]], size: int) -> SkewFlow:
    """Entrywise sum of cycle flows; opposite flows cancel on shared edges."""
    total = SkewFlow.zero(size)
    for cycle, eps in components:
        total = total + cycle_vortex(cycle, eps, size)
    return total


def max_feasible_epsilon(joint: np.ndarray, direction: SkewFlow) -> float:
    """Largest multiple of ``direction`` that keeps J +/- eps*direction non-negative.

    The bound is the tight elementwise one: the minimum of J[i,j] /
    |direction[i,j]| over the direction's support.  Any larger epsilon
    makes some entry negative; a direction touching a zero entry of J
    yields 0.

    Raises
    ------
    ZeroDirection
    """
    if direction.is_zero():
        raise ZeroDirection("flow direction is identically zero")
    j = np.asarray(joint, dtype=float)
    d = direction.matrix
    mask = d != 0.0
    return float(np.min(j[mask] / np.abs(d[mask])))


@dataclass(frozen=True)
class NonReversiblePair:
    """A vortex-carrying chain and its time reversal, sharing one stationary law."""

    forward: ValidatedChain
    backward: ValidatedChain
    flow: SkewFlow
    epsilon_used: float | None = None


def insert_vortex(
    chain: ValidatedChain, flow: SkewFlow, epsilon_used: float | None = None
) -> NonReversiblePair:
    """Perturb a reversible chain's joint distribution by +/- a balanced flow.

    Produces the pair A = T + Q^-1 H and B = T - Q^-1 H.  Both keep the
    stationary distribution of T, and B is the reverse operator of A, so
    the two sample the same law in opposite senses around the flow's loops.

    Raises
    ------
    NotReversible
        T is not reversible.
    ConditionIIViolated
        Some entry of J +/- H would be negative beyond the entry tolerance.
    """
    if not chain.reversible:
        raise NotReversible("vortex insertion starts from a reversible chain")
    if flow.size != chain.size:
        raise ValueError(f"flow is on {flow.size} states, chain on {chain.size}")
    j = chain.joint
    h = flow.matrix
    worst = min(float((j + h).min()), float((j - h).min()))
    if worst < -chain.tol.entry:
        raise ConditionIIViolated(f"J +/- H has entry {worst:.3e}; flow exceeds the feasible region")

    pi = chain.stationary
    step = h / pi[:, None]
    forward = chain_from_parts(np.clip(chain.transition + step, 0.0, None), pi, chain.tol)
    backward = chain_from_parts(np.clip(chain.transition - step, 0.0, None), pi, chain.tol)
    return NonReversiblePair(forward, backward, flow, epsilon_used)


def express_in_basis(flow: SkewFlow, basis: VortexBasis | None = None) -> dict[tuple[int, int], float]:
    """Coefficients of a balanced flow in the canonical vortex basis.

    The basis is linearly independent, so the least-squares solve is the
    unique representation; reconstruction is verified to 1e-10.

    Raises
    ------
    ConditionIViolated
        The flow is not in the balanced-flow span (reconstruction fails).
    """
    if basis is None:
        basis = vortex_basis(flow.size)
    if basis.size != flow.size:
        raise ValueError("basis and flow sizes differ")
    target = flow.matrix.ravel()
    if not basis.matrices:
        if flow.is_zero():
            return {}
        raise ConditionIViolated("no non-zero balanced flow exists on 2 states")
    stack = np.array([m.ravel() for m in basis.matrices]).T
    coeff, *_ = np.linalg.lstsq(stack, target, rcond=None)
    residual = np.max(np.abs(stack @ coeff - target))
    if residual > RECONSTRUCT_TOL:
        raise ConditionIViolated(f"flow is outside the balanced-flow space (residual {residual:.3e})")
    return {basis.pairs[k]: float(coeff[k]) for k in range(len(coeff))}


def strict_improvement_witness(chain: ValidatedChain, flow: SkewFlow) -> np.ndarray:
    """A target function whose variance strictly improves under the vortex.

    With X the Hermitian part of the reversible chain's variance kernel and
    e* an eigenvector of X + H inv(X) H^T that the flow does not
    annihilate, f = Q^-1 X H e* separates the two chains:
    sigma2 of T + Q^-1 H at f is strictly below sigma2 of T at f.  The
    eigenvector with the largest image norm ||H e|| is chosen for
    numerical robustness.

    Raises
    ------
    ZeroFlow
        The guarantee requires a non-zero flow.
    NotReversible
    """
    if flow.is_zero():
        raise ZeroFlow("a strict improvement requires a non-zero flow")
    if not chain.reversible:
        raise NotReversible("the witness is built against a reversible base chain")
    h = flow.matrix
    x = hermitian_skew_split(variance_kernel(chain))[0]
    m = x + h @ np.linalg.solve(x, h.T)
    _, vecs = np.linalg.eigh(m)
    images = h @ vecs
    best = int(np.argmax(np.linalg.norm(images, axis=0)))
    return (x @ images[:, best]) / chain.stationary


def lp_max_feasible_entry(joint: np.ndarray, basis: VortexBasis | None = None) -> float:
    """Largest single entry any feasible balanced flow can carry on this chain.

    Independent feasibility oracle: maximizes H[i,j] by linear programming
    over the basis coefficients subject to J +/- H >= 0, for every state
    pair, and returns the best value found.  A tree-shaped chain admits
    only the zero flow, so the result is 0 there; any chain whose edge
    graph contains a loop gives a strictly positive value.
    """
    j = np.asarray(joint, dtype=float)
    size = j.shape[0]
    if basis is None:
        basis = vortex_basis(size)
    if not basis.matrices:
        return 0.0
    stack = np.array([m.ravel() for m in basis.matrices]).T  # S^2 x K
    a_ub = np.vstack([-stack, stack])
    b_ub = np.concatenate([j.ravel(), j.ravel()])
    bounds = [(None, None)] * stack.shape[1]
    best = 0.0
    for a in range(size):
        for b in range(a + 1, size):
            res = linprog(-stack[a * size + b, :], A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status == 0:
                best = max(best, float(-res.fun))
    return best
