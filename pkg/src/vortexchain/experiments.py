"""Ring test chains and end-to-end experiments.

The uniform ring is the classical hard case for reversible samplers: a
random walk needs ~S^2/4 steps to reach the far side, while a ring vortex
pushes the walk around with a drift and cuts that to ~S/(2*eps).  The
two-peak ring adds a bimodal target the reversible walk cannot cross.

Epsilon units: flows are sized in joint-distribution units internally.  The
CLI-facing probability unit is the *asymmetry* the vortex creates on a
uniform ring, eps_prob = P(forward) - P(backward); the two are related by
eps_joint = pi_s * eps_prob / 2.  The deterministic cycle sits at
eps_prob = 1, i.e. eps_joint = 1/(2S).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ValidatedChain, chain_from_parts
from .errors import BadParams, Infeasible, LagTooLarge
from .simulate import (
    GENERATOR_NAME,
    empirical_asymptotic_variance,
    empirical_hitting_time,
    mean_hitting_time_exact,
    sample_trajectory,
    distinct_state_coverage,
    _autocov,
)
from .variance import asymptotic_variance_kenney
from .vortex import Cycle, SkewFlow, cycle_vortex, find_loop, insert_vortex, max_feasible_epsilon

DEFAULT_KAPPA = 1.0
DEFAULT_VORTEX_STRENGTH = 0.9  # fraction of the feasibility bound

# Two-peak targets on even rings need a vanishing alternating sum; beyond
# this total-variation deviation the projection is reported as infeasible.
PROJECTION_TV_LIMIT = 0.01

EPS_GRID_POINTS = 16

# The correlation columns are estimated from a trajectory 20x longer than
# the coverage panels, keeping the lag cap satisfied at the default
# T=1000 / lags=600 while the panels themselves stay at length T.
CORRELATION_LENGTH_FACTOR = 20


@dataclass(frozen=True)
class RingSpec:
    """Parameters of a ring experiment."""

    size: int
    forward_prob: float = 0.5
    vortex_epsilon_prob: float | None = None  # asymmetry units, optional
    profile: str = "uniform"  # "uniform" | "two_peak"
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if self.size < 3:
            raise BadParams(f"a ring needs at least 3 states, got {self.size}")
        if not 0.0 < self.forward_prob < 1.0:
            raise BadParams(f"forward probability must be in (0, 1), got {self.forward_prob}")
        if self.vortex_epsilon_prob is not None and not 0.0 <= self.vortex_epsilon_prob <= 1.0:
            raise BadParams(f"vortex asymmetry must be in [0, 1], got {self.vortex_epsilon_prob}")
        if self.profile not in ("uniform", "two_peak"):
            raise BadParams(f"unknown profile {self.profile!r}")


def build_uniform_ring(size: int, forward_prob: float) -> ValidatedChain:
    """Nearest-neighbour ring walk with uniform stationary distribution.

    Moves to s+1 with ``forward_prob`` and to s-1 otherwise (mod size);
    holding probability is zero.  The matrix is doubly stochastic for every
    forward probability, so the stationary distribution is uniform;
    reversibility holds exactly at 1/2.
    """
    if size < 3:
        raise BadParams(f"a ring needs at least 3 states, got {size}")
    if not 0.0 < forward_prob < 1.0:
        raise BadParams(f"forward probability must be in (0, 1), got {forward_prob}")
    a = np.zeros((size, size))
    for s in range(size):
        a[s, (s + 1) % size] = forward_prob
        a[s, (s - 1) % size] = 1.0 - forward_prob
    return chain_from_parts(a, np.full(size, 1.0 / size))


def twopeak_profile(size: int, kappa: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Bimodal ring target and its projection onto the solvable set.

    The raw target is pi(s) proportional to exp(kappa * cos(4 pi s / S)),
    two peaks half a ring apart.  A zero-holding nearest-neighbour chain
    on an even ring exists only when the alternating sum of pi vanishes,
    so the target is orthogonally projected onto that hyperplane.  Returns
    (raw, projected, total-variation deviation).
    """
    s = np.arange(size)
    raw = np.exp(kappa * np.cos(4.0 * np.pi * s / size))
    raw = raw / raw.sum()
    alt = np.where(s % 2 == 0, 1.0, -1.0)
    defect = float(alt @ raw)
    projected = raw - (defect / size) * alt
    projected = projected / projected.sum()
    deviation = 0.5 * float(np.abs(projected - raw).sum())
    return raw, projected, deviation


def build_twopeak_ring(size: int, kappa: float = DEFAULT_KAPPA) -> ValidatedChain:
    """Reversible zero-holding ring chain with a two-peak stationary law.

    Solves the symmetric edge-weight system w[s] + w[s-1] = pi[s] around
    the cycle.  On an even ring the system has a one-parameter family of
    solutions; the free parameter is set to the midpoint of its feasible
    interval, which reduces to equal edge weights 1/(2S) in the uniform
    limit.

    Raises
    ------
    BadParams
        Odd size (peaks must sit exactly half a ring apart), size < 8, or
        non-positive kappa.
    Infeasible
        The projection deviates by more than 1% total variation, or no
        strictly positive edge-weight solution exists.
    """
    if size < 8 or size % 2 != 0:
        raise BadParams(f"two-peak profile needs an even ring of at least 8 states, got {size}")
    if kappa <= 0.0:
        raise BadParams(f"kappa must be positive, got {kappa}")
    _, pi, deviation = twopeak_profile(size, kappa)
    if deviation > PROJECTION_TV_LIMIT:
        raise Infeasible(
            f"two-peak target needed a {deviation:.3%} total-variation projection "
            f"to admit a zero-holding ring chain (limit {PROJECTION_TV_LIMIT:.0%})"
        )

    # w[s] = (-1)^s * t + c[s] solves the recursion; t is the free parameter.
    c = np.zeros(size)
    for k in range(1, size):
        c[k] = pi[k] - c[k - 1]
    sign = np.where(np.arange(size) % 2 == 0, 1.0, -1.0)
    t_lo = float(np.max(-c[::2]))
    t_hi = float(np.min(c[1::2]))
    if t_lo >= t_hi:
        raise Infeasible("no strictly positive edge weights exist for this target")
    w = sign * (0.5 * (t_lo + t_hi)) + c

    a = np.zeros((size, size))
    for s in range(size):
        a[s, (s + 1) % size] = w[s] / pi[s]
        a[s, (s - 1) % size] = w[(s - 1) % size] / pi[s]
    return chain_from_parts(a, pi)


def ring_cycle(size: int) -> Cycle:
    """The full ring as an oriented cycle 0 -> 1 -> ... -> S-1 -> 0."""
    return Cycle(tuple(range(size)))


def ring_flow(size: int, epsilon_joint: float) -> SkewFlow:
    """Ring vortex of the given strength in joint units."""
    return cycle_vortex(ring_cycle(size), epsilon_joint, size)


def eps_prob_to_joint(eps_prob: float, pi_edge_min: float) -> float:
    """Convert a transition-asymmetry epsilon to joint units.

    On a uniform ring every state has the same weight and the conversion is
    eps_joint = eps_prob / (2 S); in general the reference weight is the
    smallest stationary weight along the flow's support, so the stated
    asymmetry is the largest one realized anywhere on the loop.
    """
    return 0.5 * eps_prob * pi_edge_min


@dataclass(frozen=True)
class ExperimentReport:
    """Deterministic experiment output; serializes to plain JSON."""

    scenario: str
    seed: int
    payload: dict = field(compare=False)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "generator": GENERATOR_NAME, **self.payload}


def epsilon_grid(eps_max: float, points: int = EPS_GRID_POINTS) -> np.ndarray:
    """Geometric grid from eps_max/64 to eps_max with a leading zero."""
    if eps_max <= 0.0:
        return np.array([0.0])
    geo = eps_max / 64.0 * (64.0 ** (np.arange(points) / (points - 1)))
    geo[-1] = eps_max
    return np.concatenate([[0.0], geo])


def run_ring_experiment(
    spec: RingSpec,
    seed: int,
    hitting_replicas: int = 2000,
    variance_replicas: int = 64,
    variance_lengths: tuple[int, ...] = (10**3, 10**4, 10**5),
) -> ExperimentReport:
    """Hitting times, the epsilon sweep, and the deterministic-limit scaling.

    Three blocks, all on the ring of the given size:

    * expected steps to the antipodal state, exact for the reversible walk
      and exact + empirical for the vortex walk at the requested asymmetry;
    * closed-form variance of f(s) = cos(2 pi s / S) on a geometric grid
      of vortex strengths up to the feasibility bound;
    * empirical T * Var[mu_T] at the full-strength vortex for growing T,
      with its log-log slope (the deterministic cycle drives it to zero).
    """
    if spec.profile != "uniform":
        raise BadParams("ring experiment is defined on the uniform profile")
    size = spec.size
    base = build_uniform_ring(size, spec.forward_prob)
    f = np.cos(2.0 * np.pi * np.arange(size) / size)
    antipode = size // 2

    hitting: dict = {
        "source": 1,
        "target": antipode + 1,
        "reversible_exact": {"value": mean_hitting_time_exact(base, 0, antipode), "method": "exact"},
    }
    eps_prob = spec.vortex_epsilon_prob
    vortex_pair = None
    if eps_prob is not None and eps_prob > 0.0:
        eps_joint = eps_prob_to_joint(eps_prob, 1.0 / size)
        vortex_pair = insert_vortex(base, ring_flow(size, eps_joint), epsilon_used=eps_joint)
        est = empirical_hitting_time(vortex_pair.forward, 0, antipode, hitting_replicas, seed)
        hitting["vortex_exact"] = {
            "value": mean_hitting_time_exact(vortex_pair.forward, 0, antipode),
            "method": "exact",
        }
        hitting["vortex_empirical"] = {
            "value": est.mean,
            "standard_error": est.standard_error,
            "replicas": est.replicas,
            "method": "empirical",
        }
        hitting["epsilon_prob"] = eps_prob
        hitting["epsilon_joint"] = eps_joint
        hitting["drift_reference"] = size / (2.0 * eps_prob)

    direction = ring_flow(size, 1.0)
    eps_max = max_feasible_epsilon(base.joint, direction)
    grid = epsilon_grid(eps_max)
    sweep = []
    for eps in grid:
        if eps == 0.0:
            chain = base
        else:
            chain = insert_vortex(base, ring_flow(size, eps), epsilon_used=eps).forward
        # The zero-holding ring is periodic, so the closed form is evaluated
        # under the non-ergodic override; the matrix algebra behind the
        # monotone guarantee does not need aperiodicity.
        report = asymptotic_variance_kenney(chain, f, allow_nonergodic=True)
        sweep.append(report.sigma2)
    sweep_block = {
        "f": "cos(2*pi*s/S)",
        "epsilon_max_joint": eps_max,
        "epsilons_joint": [float(e) for e in grid],
        "sigma2_kenney": sweep,
        "method": "kenney",
    }

    limit_chain = insert_vortex(base, ring_flow(size, eps_max), epsilon_used=eps_max).forward
    t_var = []
    for k, length in enumerate(variance_lengths):
        est = empirical_asymptotic_variance(
            limit_chain, f, length, variance_replicas, seed + 10_000 * (k + 1)
        )
        t_var.append(max(est.estimate, 1e-300))  # floor for the log-log fit
    if len(variance_lengths) >= 2:
        logs_t = np.log10(np.asarray(variance_lengths, dtype=float))
        logs_v = np.log10(np.array(t_var))
        slope = float(np.polyfit(logs_t, logs_v, 1)[0])
    else:
        slope = None
    limit_block = {
        "epsilon_joint": eps_max,
        "lengths": list(variance_lengths),
        "t_var_empirical": t_var,
        "replicas": variance_replicas,
        "loglog_slope": slope,
        "method": "empirical",
    }

    return ExperimentReport(
        "ring",
        seed,
        {
            "spec": {
                "size": size,
                "forward_prob": spec.forward_prob,
                "vortex_epsilon_prob": eps_prob,
                "profile": spec.profile,
            },
            "hitting": hitting,
            "epsilon_sweep": sweep_block,
            "deterministic_limit": limit_block,
        },
    )


@dataclass(frozen=True)
class CorrelationResult:
    """Correlation curves and coverage for the two-peak vortex experiment."""

    taus: np.ndarray
    corr_reversible: np.ndarray
    corr_vortex: np.ndarray
    coverage_reversible: float
    coverage_vortex: float
    report: ExperimentReport

    def csv_rows(self):
        for k, tau in enumerate(self.taus):
            yield int(tau), float(self.corr_reversible[k]), float(self.corr_vortex[k])


def run_correlation_experiment(
    size: int = 128,
    kappa: float = DEFAULT_KAPPA,
    length: int = 1000,
    lags: int = 600,
    seed: int = 0,
    strength: float = DEFAULT_VORTEX_STRENGTH,
) -> CorrelationResult:
    """Two-peak ring, with and without the ring vortex.

    Coverage is measured on one trajectory of ``length`` steps per arm,
    started at the main peak.  The lag-correlation columns (normalized by
    the lag-0 value) are estimated from longer trajectories of
    20 * ``length`` steps so the requested lags stay within the estimator's
    cap.  Derived seeds: seed, seed+1 for the coverage arms, seed+2,
    seed+3 for the correlation arms.  The vortex strength is the given
    fraction of the feasibility bound and is recorded in the report.
    """
    if lags < 1:
        raise BadParams("need at least one lag")
    corr_length = CORRELATION_LENGTH_FACTOR * length
    if lags >= corr_length / 10.0:
        raise LagTooLarge(
            f"lags {lags} needs a correlation trajectory longer than {10 * lags} steps; "
            f"got {corr_length} from length {length}"
        )
    base = build_twopeak_ring(size, kappa)
    cycle = find_loop(base)
    if cycle is None:  # a ring always has its loop; defensive only
        raise Infeasible("no loop in transition graph")
    direction = cycle_vortex(cycle, 1.0, size)
    eps_max = max_feasible_epsilon(base.joint, direction)
    eps = strength * eps_max
    pair = insert_vortex(base, eps * direction, epsilon_used=eps)

    f = np.cos(4.0 * np.pi * np.arange(size) / size)
    start = int(np.argmax(base.stationary))

    cover_rev = sample_trajectory(base, start, length, seed)
    cover_vor = sample_trajectory(pair.forward, start, length, seed + 1)
    corr_rev_traj = sample_trajectory(base, start, corr_length, seed + 2)
    corr_vor_traj = sample_trajectory(pair.forward, start, corr_length, seed + 3)

    corr_rev = _autocov(f[corr_rev_traj.states], lags, normalized=True)
    corr_vor = _autocov(f[corr_vor_traj.states], lags, normalized=True)
    taus = np.arange(1, lags + 1)
    corr_rev, corr_vor = corr_rev[1:], corr_vor[1:]

    seg = corr_vor[: min(200, lags)]
    sign_changes_200 = int(np.sum(np.sign(seg[:-1]) != np.sign(seg[1:])))
    report = ExperimentReport(
        "correlation",
        seed,
        {
            "spec": {"size": size, "kappa": kappa, "length": length, "lags": lags, "strength": strength},
            "epsilon_joint": eps,
            "epsilon_max_joint": eps_max,
            "f": "cos(4*pi*s/S)",
            "start_state": start + 1,
            "coverage": {
                "reversible": distinct_state_coverage(cover_rev),
                "vortex": distinct_state_coverage(cover_vor),
                "length": length,
                "method": "empirical",
            },
            "correlation": {
                "length": corr_length,
                "sum_abs_reversible": float(np.abs(corr_rev).sum()),
                "sum_abs_vortex": float(np.abs(corr_vor).sum()),
                "vortex_sign_changes_to_200": sign_changes_200,
                "method": "empirical",
            },
        },
    )
    return CorrelationResult(
        taus,
        corr_rev,
        corr_vor,
        distinct_state_coverage(cover_rev),
        distinct_state_coverage(cover_vor),
        report,
    )
