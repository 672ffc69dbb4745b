"""Asymptotic variance of MCMC estimators on finite chains.

Two independent routes are provided: the closed form due to Kenney (one
linear solve with the kernel L = Q + pi pi^T - J) and the truncated
autocovariance series with a geometric tail bound.  A chain ordering test
decides whether one chain's estimator dominates another's for every target
function, via the positive-semidefiniteness of the difference of the
Hermitian parts of the inverted kernels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .chain import ValidatedChain, reverse_operator
from .errors import MismatchedStationary, NonErgodic, SingularInput, SingularLambda, SlowMixing

# sigma^2 is provably non-negative; values in [-CLAMP, 0) are eigensolver
# noise and clamp to 0, anything lower marks an invalid input.
NEGATIVE_CLAMP = 1e-9

LAG_CAP = 10**6


@dataclass(frozen=True)
class VarianceReport:
    """Asymptotic variance value with the method used and diagnostics."""

    sigma2: float
    method: str  # "kenney" | "series" | "empirical"
    vf: float
    correction: float | None = None
    truncation_lag: int | None = None
    warnings: tuple[str, ...] = ()
    standard_error: float | None = None

    def to_dict(self) -> dict:
        out = {
            "sigma2": self.sigma2,
            "method": self.method,
            "vf": self.vf,
            "truncation_lag": self.truncation_lag,
            "warnings": list(self.warnings),
        }
        if self.standard_error is not None:
            out["standard_error"] = self.standard_error
        return out


class Ordering(enum.Enum):
    """Verdict of an asymptotic-variance comparison over all target functions."""

    A_DOMINATES = "A_dominates"          # sigma2_A(f) <= sigma2_A'(f) for every f, not equal
    A_PRIME_DOMINATES = "A_prime_dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class ComparisonResult:
    ordering: Ordering
    min_eigenvalue: float
    max_eigenvalue: float
    condition3_ordering: Ordering | None = None

    def to_dict(self) -> dict:
        out = {
            "ordering": self.ordering.value,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
        }
        if self.condition3_ordering is not None:
            out["condition3_ordering"] = self.condition3_ordering.value
        return out


def hermitian_skew_split(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Split a square matrix into Hermitian and skew parts, X = H + S.

    H = (X + X^T)/2 is symmetric, S = (X - X^T)/2 is skew-symmetric, and
    the two reconstruct X exactly.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    return (x + x.T) / 2.0, (x - x.T) / 2.0


def variance_kernel(chain: ValidatedChain) -> np.ndarray:
    """Kernel L = Q + pi pi^T - J whose Hermitian part is positive definite."""
    pi = chain.stationary
    return np.diag(pi) + np.outer(pi, pi) - chain.joint


def function_variance(pi: np.ndarray, f: np.ndarray) -> float:
    """Variance of f under the distribution pi."""
    mean = float(pi @ f)
    return float(pi @ (f - mean) ** 2)


def _check_f(chain: ValidatedChain, f) -> np.ndarray:
    v = np.asarray(f, dtype=float)
    if v.shape != (chain.size,):
        raise ValueError(f"target function has shape {v.shape}, chain has {chain.size} states")
    if not np.all(np.isfinite(v)):
        raise ValueError("target function contains non-finite values")
    return v


def _finalize_sigma2(raw: float) -> float:
    if raw < -NEGATIVE_CLAMP:
        raise SingularLambda(f"asymptotic variance came out {raw:.3e} < -{NEGATIVE_CLAMP:.1e}; input chain is invalid")
    return max(raw, 0.0)


def asymptotic_variance_kenney(
    chain: ValidatedChain, f, allow_nonergodic: bool = False
) -> VarianceReport:
    """Exact asymptotic variance via Kenney's closed form.

    sigma2 = V[f] + 2 (Qf)^T [L^-1]_H (Qf) - 2 f^T Q f with L the variance
    kernel; evaluated through one factorized linear solve, never an explicit
    inverse.  Requires an ergodic chain; pass ``allow_nonergodic`` to
    evaluate on a periodic irreducible chain anyway (the report is flagged,
    since the closed form stays finite even though the series derivation
    breaks down).

    Raises
    ------
    NonErgodic
        Chain is not ergodic and no override was given.
    SingularLambda
        The kernel solve failed, which cannot happen for a valid chain.
    """
    fv = _check_f(chain, f)
    warnings: tuple[str, ...] = ()
    if not chain.ergodic:
        if not allow_nonergodic:
            raise NonErgodic("chain is not ergodic; pass allow_nonergodic=True to evaluate anyway")
        warnings = ("non-ergodic input: closed form evaluated outside its derivation",)

    pi = chain.stationary
    qf = pi * fv
    kernel = variance_kernel(chain)
    try:
        lu = lu_factor(kernel)
        x = lu_solve(lu, qf)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularLambda(f"variance kernel solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularLambda("variance kernel solve produced non-finite values")

    vf = function_variance(pi, fv)
    correction = 2.0 * float(qf @ x) - 2.0 * float(fv @ qf)
    sigma2 = _finalize_sigma2(vf + correction)
    return VarianceReport(sigma2, "kenney", vf, correction=correction, warnings=warnings)


def asymptotic_variance_series(
    chain: ValidatedChain, f, tail_tol: float = 1e-10, lag_cap: int = LAG_CAP
) -> VarianceReport:
    """Asymptotic variance by accumulating the autocovariance series.

    Sums c_A(tau) + c_B(tau) over lags, where B is the reverse operator,
    until the geometric tail bound derived from the second-largest
    eigenvalue modulus of A drops below ``tail_tol``.  When the eigensolve
    is unreliable the fallback stops after the increment has stayed below
    ``tail_tol`` for 100 consecutive lags.

    Raises
    ------
    NonErgodic
        The series requires A^tau to converge, so periodic chains are
        refused outright (no override).
    SlowMixing
        Tail bound not reached within ``lag_cap`` lags.
    """
    fv = _check_f(chain, f)
    if not chain.ergodic:
        raise NonErgodic("autocovariance series diverges on non-ergodic chains")

    a = chain.transition
    pi = chain.stationary
    b = reverse_operator(a, pi, chain.tol)
    mean = float(pi @ fv)
    mean2 = mean * mean
    vf = function_variance(pi, fv)

    # Geometric decay rate: second-largest eigenvalue modulus of A.
    slem = None
    try:
        eig = np.linalg.eigvals(a)
        mods = np.sort(np.abs(eig))[::-1]
        candidate = float(mods[1])
        if np.isfinite(candidate) and candidate < 1.0 - 1e-12:
            slem = candidate
    except np.linalg.LinAlgError:
        slem = None

    va = fv.copy()
    vb = fv.copy()
    total = 0.0
    small_streak = 0
    truncation = None
    recent: list[float] = []  # oscillating terms pass through zero, so the
    for tau in range(1, lag_cap + 1):  # tail bound uses a short window max
        va = a @ va
        vb = b @ vb
        c_a = float(pi @ (fv * va)) - mean2
        c_b = float(pi @ (fv * vb)) - mean2
        term = c_a + c_b
        total += term
        recent.append(abs(term))
        if len(recent) > 8:
            recent.pop(0)
        if slem is not None:
            tail = max(recent) * slem / (1.0 - slem)
            if tail < tail_tol:
                truncation = tau
                break
        else:
            small_streak = small_streak + 1 if abs(term) < tail_tol else 0
            if small_streak >= 100:
                truncation = tau
                break
    if truncation is None:
        raise SlowMixing(f"series tail bound not reached within {lag_cap} lags")

    sigma2 = _finalize_sigma2(vf + total)
    return VarianceReport(sigma2, "series", vf, correction=total, truncation_lag=truncation)


def hermitian_inverse_residual(matrix) -> float:
    """Max-norm residual of the split-inverse identity.

    For invertible X with invertible Hermitian part the identity
    ``inv([X^-1]_H) = [X]_H + [X]_S^T inv([X]_H) [X]_S`` holds; this
    evaluates both sides and returns the largest absolute difference.
    Exposed as a public test utility.

    Raises
    ------
    SingularInput
        X, [X]_H or [X^-1]_H is numerically singular.
    """
    x = np.asarray(matrix, dtype=float)
    h, s = hermitian_skew_split(x)
    try:
        xinv = np.linalg.inv(x)
        hinv_of_inv = np.linalg.inv(hermitian_skew_split(xinv)[0])
        rhs = h + s.T @ np.linalg.solve(h, s)
    except np.linalg.LinAlgError as exc:
        raise SingularInput(f"matrix not invertible where required: {exc}") from exc
    if not np.all(np.isfinite(hinv_of_inv)) or not np.all(np.isfinite(rhs)):
        raise SingularInput("inverse produced non-finite values")
    return float(np.max(np.abs(hinv_of_inv - rhs)))


def _inverse_hermitian_part(chain: ValidatedChain) -> np.ndarray:
    kernel = variance_kernel(chain)
    try:
        inv = np.linalg.inv(kernel)
    except np.linalg.LinAlgError as exc:
        raise SingularLambda(f"variance kernel not invertible: {exc}") from exc
    return hermitian_skew_split(inv)[0]


def _psd_verdict(diff: np.ndarray, tol_psd: float) -> tuple[Ordering, float, float]:
    eigs = np.linalg.eigvalsh(diff)
    lo, hi = float(eigs[0]), float(eigs[-1])
    if lo >= -tol_psd and hi <= tol_psd:
        return Ordering.EQUAL, lo, hi
    if lo >= -tol_psd:
        return Ordering.A_DOMINATES, lo, hi
    if hi <= tol_psd:
        return Ordering.A_PRIME_DOMINATES, lo, hi
    return Ordering.INCOMPARABLE, lo, hi


def compare_asymptotic(
    chain_a: ValidatedChain, chain_a_prime: ValidatedChain, diagnostics: bool = False
) -> ComparisonResult:
    """Compare two chains' asymptotic variance over all target functions.

    The verdict is decided by the eigenvalues of
    D = [inv(L')]_H - [inv(L)]_H: A dominates when D is positive
    semidefinite and not numerically zero, meaning sigma2_A(f) <=
    sigma2_A'(f) for every f.  Both chains must share a stationary
    distribution.  With ``diagnostics`` the equivalent ordering of
    [J]_H - [J]_S^T inv([L]_H) [J]_S is evaluated as a cross-check.

    Raises
    ------
    MismatchedStationary
    """
    tol = chain_a.tol
    if chain_a.size != chain_a_prime.size or not chain_a.with_stationary_of(chain_a_prime):
        raise MismatchedStationary("chains do not share a stationary distribution")

    diff = _inverse_hermitian_part(chain_a_prime) - _inverse_hermitian_part(chain_a)
    ordering, lo, hi = _psd_verdict(diff, tol.psd)

    cond3 = None
    if diagnostics:
        def condition3_side(chain: ValidatedChain) -> np.ndarray:
            jh, js = hermitian_skew_split(chain.joint)
            kh = hermitian_skew_split(variance_kernel(chain))[0]
            return jh - js.T @ np.linalg.solve(kh, js)

        cond3_diff = condition3_side(chain_a_prime) - condition3_side(chain_a)
        cond3 = _psd_verdict(cond3_diff, tol.psd)[0]

    return ComparisonResult(ordering, lo, hi, cond3)
