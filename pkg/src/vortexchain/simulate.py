"""Trajectory sampling and empirical estimation.

Everything here is a pure function of (chain, parameters, seed): trajectories
are drawn by inverse-CDF over precomputed cumulative row sums from a PCG64
generator, and replica seeds are derived as ``seed + replica_index`` so
parallel and serial runs agree bit for bit.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .chain import ValidatedChain
from .errors import (
    BudgetExceeded,
    InsufficientReplicas,
    InvalidStart,
    LagTooLarge,
    Reducible,
)

GENERATOR_NAME = "pcg64"

# Total step cap across all replicas of one empirical hitting-time run.
HITTING_STEP_BUDGET = 10**8

THREADS_ENV = "VORTEXCHAIN_THREADS"


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_replicas(fn, n: int) -> list:
    """Run fn(0..n-1), in a thread pool if configured; order-stable output."""
    threads = _thread_count()
    if threads <= 1 or n <= 1:
        return [fn(r) for r in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


@dataclass(frozen=True)
class Trajectory:
    """A sampled state path with its reproducibility metadata."""

    states: np.ndarray
    seed: int
    chain: ValidatedChain
    generator: str = GENERATOR_NAME

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class TrajectoryStats:
    """Per-run summaries: estimator mean, autocovariances, coverage, hits."""

    estimate: float
    autocov: np.ndarray
    coverage: float
    hitting_times: dict[int, int | None]


class _RowSampler:
    """Inverse-CDF sampling over each row's positive support.

    Restricting to the positive entries guarantees a sampled step can never
    land on a zero-probability transition, even at cumulative-sum rounding
    boundaries.
    """

    def __init__(self, chain: ValidatedChain):
        self.support: list[list[int]] = []
        self.cums: list[list[float]] = []
        for row in chain.transition:
            idx = np.flatnonzero(row > 0.0)
            cum = np.cumsum(row[idx])
            cum[-1] = 1.0
            self.support.append([int(i) for i in idx])
            self.cums.append([float(c) for c in cum])

    def walk(self, start: int, uniforms: list[float], out: np.ndarray) -> int:
        s = start
        out[0] = s
        sup, cums = self.support, self.cums
        for t, u in enumerate(uniforms, start=1):
            s = sup[s][bisect_right(cums[s], u)]
            out[t] = s
        return s


def sample_trajectory(chain: ValidatedChain, start: int, length: int, seed: int) -> Trajectory:
    """Sample a trajectory of ``length`` states starting from ``start``.

    Each step draws from the current row by inverse CDF; the result is a
    deterministic function of the seed.  The start state is included, so
    the path makes ``length - 1`` transitions.

    Raises
    ------
    InvalidStart
    """
    if not 0 <= start < chain.size:
        raise InvalidStart(f"start state {start} out of range [0, {chain.size})")
    if length < 1:
        raise ValueError("trajectory length must be >= 1")
    states = np.empty(length, dtype=np.int64)
    if length == 1:
        states[0] = start
    else:
        rng = np.random.default_rng(seed)
        uniforms = rng.random(length - 1).tolist()
        _RowSampler(chain).walk(start, uniforms, states)
    states.setflags(write=False)
    return Trajectory(states, seed, chain)


def mcmc_estimate(trajectory: Trajectory, f) -> float:
    """Arithmetic mean of f along the trajectory."""
    fv = np.asarray(f, dtype=float)
    if fv.shape != (trajectory.chain.size,):
        raise ValueError(f"target function has shape {fv.shape}, chain has {trajectory.chain.size} states")
    return float(fv[trajectory.states].mean())


def empirical_autocovariance(trajectory: Trajectory, f, max_lag: int, normalized: bool = False) -> np.ndarray:
    """Biased lag autocovariances of f along the trajectory.

    Divides by T at every lag (not T - lag) and centers by the trajectory
    mean; lags run 0..max_lag.  ``normalized`` divides by the lag-0 value.
    The cap max_lag < T/10 keeps the largest lags from being noise-only.

    Raises
    ------
    LagTooLarge
    """
    t = len(trajectory)
    if max_lag >= t / 10.0:
        raise LagTooLarge(f"max_lag {max_lag} not below T/10 = {t / 10.0}")
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    fv = np.asarray(f, dtype=float)
    y = fv[trajectory.states]
    return _autocov(y, max_lag, normalized)


def _autocov(y: np.ndarray, max_lag: int, normalized: bool) -> np.ndarray:
    t = len(y)
    yc = y - y.mean()
    out = np.empty(max_lag + 1)
    for tau in range(max_lag + 1):
        out[tau] = float(yc[: t - tau] @ yc[tau:]) / t
    if normalized:
        if out[0] == 0.0:
            raise LagTooLarge("lag-0 autocovariance is zero; nothing to normalize by")
        out = out / out[0]
    return out


def distinct_state_coverage(trajectory: Trajectory) -> float:
    """Fraction of the state space the trajectory visited."""
    return len(np.unique(trajectory.states)) / trajectory.chain.size


def first_hits(trajectory: Trajectory, targets) -> dict[int, int | None]:
    """Step index of the first visit to each target (None when never reached)."""
    out: dict[int, int | None] = {}
    for target in targets:
        pos = np.flatnonzero(trajectory.states == target)
        out[int(target)] = int(pos[0]) if pos.size else None
    return out


def trajectory_stats(trajectory: Trajectory, f, max_lag: int | None = None, targets=()) -> TrajectoryStats:
    """Bundle the standard per-run summaries for one trajectory."""
    if max_lag is None:
        max_lag = max(0, min(100, (len(trajectory) - 1) // 10))
    return TrajectoryStats(
        estimate=mcmc_estimate(trajectory, f),
        autocov=empirical_autocovariance(trajectory, f, max_lag),
        coverage=distinct_state_coverage(trajectory),
        hitting_times=first_hits(trajectory, targets),
    )


@dataclass(frozen=True)
class EmpiricalVariance:
    """T * Var[mu_T] across replicas, with a jackknife standard error."""

    estimate: float
    standard_error: float
    replicas: int
    length: int
    replica_means: np.ndarray


def empirical_asymptotic_variance(
    chain: ValidatedChain,
    f,
    length: int,
    replicas: int,
    seed: int,
    start: int | None = None,
    burn_in: int | None = None,
) -> EmpiricalVariance:
    """Estimate T * Var[mu_T] from independent replica trajectories.

    Replica r uses generator seed ``seed + r``.  By default the start state
    of each replica is drawn from the stationary distribution and no
    burn-in is applied; with a fixed ``start`` the default burn-in is 10*S
    steps.  The standard error is the delete-one jackknife of the variance
    statistic.

    Raises
    ------
    InsufficientReplicas
    """
    if replicas < 2:
        raise InsufficientReplicas(f"need at least 2 replicas, got {replicas}")
    fv = np.asarray(f, dtype=float)
    if burn_in is None:
        burn_in = 0 if start is None else 10 * chain.size

    pi_cum = np.cumsum(chain.stationary)
    pi_cum[-1] = 1.0
    sampler = _RowSampler(chain)
    total_steps = length + burn_in

    def one(r: int) -> float:
        # One generator stream per replica, seeded seed + r; a stationary
        # start consumes the stream's first uniform.
        rng = np.random.default_rng(seed + r)
        if start is None:
            s0 = int(np.searchsorted(pi_cum, rng.random(), side="right"))
        else:
            s0 = start
        path = np.empty(total_steps, dtype=np.int64)
        sampler.walk(s0, rng.random(total_steps - 1).tolist(), path)
        return float(fv[path[burn_in:]].mean())

    means = np.array(_map_replicas(one, replicas))
    estimate = length * float(np.var(means, ddof=1))

    # Delete-one jackknife over the replica means.
    n = replicas
    total = means.sum()
    total_sq = (means**2).sum()
    loo = np.empty(n)
    for i in range(n):
        m = (total - means[i]) / (n - 1)
        ss = total_sq - means[i] ** 2
        loo[i] = length * (ss - (n - 1) * m * m) / (n - 2) if n > 2 else estimate
    se = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    return EmpiricalVariance(estimate, se, replicas, length, means)


def mean_hitting_time_exact(chain: ValidatedChain, source: int, target: int) -> float:
    """Expected number of steps to first reach ``target`` from ``source``.

    Solves the linear system h(target) = 0, h(i) = 1 + sum_j A[i,j] h(j)
    exactly.

    Raises
    ------
    Reducible
    """
    if not 0 <= source < chain.size or not 0 <= target < chain.size:
        raise InvalidStart("source/target out of range")
    n_comp, _ = connected_components(
        csr_matrix(chain.transition > 0.0), directed=True, connection="strong"
    )
    if n_comp > 1:
        raise Reducible("hitting times need an irreducible chain")
    a = chain.transition
    size = chain.size
    system = np.eye(size) - a
    system[target, :] = 0.0
    system[target, target] = 1.0
    rhs = np.ones(size)
    rhs[target] = 0.0
    h = np.linalg.solve(system, rhs)
    return float(h[source])


@dataclass(frozen=True)
class HittingEstimate:
    mean: float
    standard_error: float
    replicas: int


def empirical_hitting_time(
    chain: ValidatedChain,
    source: int,
    target: int,
    replicas: int,
    seed: int,
    step_budget: int = HITTING_STEP_BUDGET,
) -> HittingEstimate:
    """Monte Carlo mean first-passage time from source to target.

    Replica r walks from ``source`` with generator seed ``seed + r`` until
    it reaches ``target``.  The total number of simulated steps across all
    replicas is capped.

    Raises
    ------
    BudgetExceeded
    """
    if replicas < 1:
        raise ValueError("need at least 1 replica")
    if not 0 <= source < chain.size or not 0 <= target < chain.size:
        raise InvalidStart("source/target out of range")
    sampler = _RowSampler(chain)
    spent = 0
    block = 4096

    def one(r: int) -> int:
        nonlocal spent
        rng = np.random.default_rng(seed + r)
        s = source
        steps = 0
        while True:
            if spent >= step_budget:
                raise BudgetExceeded(f"hitting-time simulation exceeded {step_budget} total steps")
            used = 0
            for u in rng.random(block).tolist():
                s = sampler.support[s][bisect_right(sampler.cums[s], u)]
                steps += 1
                used += 1
                if s == target:
                    spent += used
                    return steps
            spent += block

    # Budget accounting is shared state, so replicas run serially here.
    counts = np.array([one(r) for r in range(replicas)], dtype=float)
    se = float(counts.std(ddof=1) / np.sqrt(replicas)) if replicas > 1 else 0.0
    return HittingEstimate(float(counts.mean()), se, replicas)
