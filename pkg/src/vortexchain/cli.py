"""Batch command-line interface.

Subcommands: validate, variance, compare, vortex {basis,suggest,insert,max-eps},
simulate, hitting, experiment {ring,correlation}.  All output is JSON (or CSV
for trajectory/correlation artifacts); state indices in files, arguments and
outputs are 1-based.  Exit codes: 0 success, 1 validation error,
2 infeasibility, 3 budget exceeded, 64 usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments, fileio, simulate, variance, vortex
from .errors import BadParams, InvalidStart, VortexChainError

USAGE_EXIT = 64

# Trajectories longer than this are summarized, never written to disk.
MAX_STORED_TRAJECTORY = 10**7


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _emit(payload: dict, out: str | None) -> None:
    text = fileio.dumps(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _state_index(value: int, size: int, what: str) -> int:
    if not 1 <= value <= size:
        raise InvalidStart(f"{what} {value} out of range 1..{size}")
    return value - 1


def _cmd_validate(args) -> int:
    chain = fileio.load_chain(args.chain)
    _emit(
        {
            "size": chain.size,
            "reversible": chain.reversible,
            "ergodic": chain.ergodic,
            "pi": [float(x) for x in chain.stationary],
        },
        args.out,
    )
    return 0


def _cmd_variance(args) -> int:
    chain = fileio.load_chain(args.chain)
    f = fileio.load_function(args.f)
    payload: dict = {}
    if args.method in ("kenney", "both"):
        payload["kenney"] = variance.asymptotic_variance_kenney(
            chain, f, allow_nonergodic=args.allow_nonergodic
        ).to_dict()
    if args.method in ("series", "both"):
        payload["series"] = variance.asymptotic_variance_series(chain, f, tail_tol=args.tail_tol).to_dict()
    if args.method == "empirical":
        est = simulate.empirical_asymptotic_variance(chain, f, args.length, args.replicas, args.seed)
        payload["empirical"] = variance.VarianceReport(
            est.estimate,
            "empirical",
            variance.function_variance(chain.stationary, np.asarray(f, dtype=float)),
            standard_error=est.standard_error,
        ).to_dict()
    _emit(payload, args.out)
    return 0


def _cmd_compare(args) -> int:
    chain_a = fileio.load_chain(args.chain)
    chain_b = fileio.load_chain(args.chain_prime)
    result = variance.compare_asymptotic(chain_a, chain_b, diagnostics=args.diagnostics)
    _emit(result.to_dict(), args.out)
    return 0


def _cmd_vortex_basis(args) -> int:
    basis = vortex.vortex_basis(args.size)
    payload = {
        "size": basis.size,
        "dimension": basis.dimension,
        "rank": basis.rank(),
        "pairs": [[i + 1, j + 1] for i, j in basis.pairs],
    }
    _emit(payload, args.out)
    return 0


def _cmd_vortex_suggest(args) -> int:
    chain = fileio.load_chain(args.chain)
    cycle = vortex.find_loop(chain)
    if cycle is None:
        _emit({"error": "Infeasible", "message": "no loop in transition graph"}, args.out)
        return 2
    direction = vortex.cycle_vortex(cycle, 1.0, chain.size)
    eps_max = vortex.max_feasible_epsilon(chain.joint, direction)
    _emit(
        {
            "cycle": [s + 1 for s in cycle.states],
            "epsilon_max_joint": eps_max,
            "suggested_epsilon_joint": experiments.DEFAULT_VORTEX_STRENGTH * eps_max,
        },
        args.out,
    )
    return 0


def _resolve_flow(args, chain) -> vortex.SkewFlow:
    if args.flow:
        flow = fileio.load_flow(args.flow)
        if args.eps is not None:
            flow = args.eps * flow if args.eps_unit == "joint" else _prob_scaled(flow, args.eps, chain)
        return flow
    if not args.cycle:
        raise BadParams("need either --flow or --cycle")
    cycle = fileio.load_cycle(args.cycle)
    if args.eps is None:
        raise BadParams("--eps is required with --cycle")
    direction = vortex.cycle_vortex(cycle, 1.0, chain.size)
    if args.eps_unit == "joint":
        return args.eps * direction
    return _prob_scaled(direction, args.eps, chain)


def _prob_scaled(direction: vortex.SkewFlow, eps_prob: float, chain) -> vortex.SkewFlow:
    support = np.any(direction.matrix != 0.0, axis=1)
    pi_min = float(chain.stationary[support].min())
    return experiments.eps_prob_to_joint(eps_prob, pi_min) * direction


def _cmd_vortex_insert(args) -> int:
    chain = fileio.load_chain(args.chain)
    flow = _resolve_flow(args, chain)
    pair = vortex.insert_vortex(chain, flow, epsilon_used=args.eps)
    payload = {
        "forward": fileio.chain_to_dict(pair.forward),
        "backward": fileio.chain_to_dict(pair.backward),
        "flow": fileio.flow_to_dict(pair.flow),
        "epsilon_used": args.eps,
        "epsilon_unit": args.eps_unit if args.eps is not None else None,
    }
    _emit(payload, args.out)
    return 0


def _cmd_vortex_max_eps(args) -> int:
    chain = fileio.load_chain(args.chain)
    if args.flow:
        direction = fileio.load_flow(args.flow)
    elif args.cycle:
        direction = vortex.cycle_vortex(fileio.load_cycle(args.cycle), 1.0, chain.size)
    else:
        raise BadParams("need either --flow or --cycle")
    eps_max = vortex.max_feasible_epsilon(chain.joint, direction)
    _emit({"epsilon_max_joint": eps_max}, args.out)
    return 0


def _cmd_simulate(args) -> int:
    chain = fileio.load_chain(args.chain)
    start = _state_index(args.start, chain.size, "start state")
    if args.out and args.length > MAX_STORED_TRAJECTORY:
        raise BadParams(
            f"trajectories above {MAX_STORED_TRAJECTORY} steps are summarized, not stored; drop --out"
        )
    trajectory = simulate.sample_trajectory(chain, start, args.length, args.seed)
    payload: dict = {
        "length": args.length,
        "seed": args.seed,
        "generator": trajectory.generator,
        "coverage": simulate.distinct_state_coverage(trajectory),
    }
    if args.f:
        f = fileio.load_function(args.f)
        stats = simulate.trajectory_stats(
            trajectory,
            f,
            max_lag=args.max_lag,
            targets=[_state_index(t, chain.size, "target") for t in args.targets],
        )
        payload["estimate"] = stats.estimate
        payload["autocov"] = [float(x) for x in stats.autocov]
        payload["hitting_times"] = {str(k + 1): v for k, v in stats.hitting_times.items()}
    if args.out:
        fileio.write_trajectory_csv(trajectory, args.out)
        payload["trajectory_csv"] = args.out
    sys.stdout.write(fileio.dumps(payload))
    return 0


def _cmd_hitting(args) -> int:
    chain = fileio.load_chain(args.chain)
    source = _state_index(args.source, chain.size, "source")
    target = _state_index(args.target, chain.size, "target")
    payload: dict = {
        "source": args.source,
        "target": args.target,
        "exact": {"value": simulate.mean_hitting_time_exact(chain, source, target), "method": "exact"},
    }
    if args.replicas:
        est = simulate.empirical_hitting_time(chain, source, target, args.replicas, args.seed)
        payload["empirical"] = {
            "value": est.mean,
            "standard_error": est.standard_error,
            "replicas": est.replicas,
            "method": "empirical",
        }
    _emit(payload, args.out)
    return 0


def _cmd_experiment_ring(args) -> int:
    spec = experiments.RingSpec(args.size, args.p, vortex_epsilon_prob=_ring_eps(args))
    report = experiments.run_ring_experiment(
        spec,
        args.seed,
        hitting_replicas=args.hitting_replicas,
        variance_replicas=args.variance_replicas,
    )
    _emit(report.to_dict(), args.out)
    return 0


def _ring_eps(args) -> float | None:
    if args.eps is None:
        return None
    if args.eps_unit == "prob":
        return args.eps
    return 2.0 * args.eps * args.size  # joint -> asymmetry on the uniform ring


def _cmd_experiment_correlation(args) -> int:
    result = experiments.run_correlation_experiment(
        size=args.size,
        kappa=args.kappa,
        length=args.length,
        lags=args.lags,
        seed=args.seed,
        strength=args.strength,
    )
    fileio.write_correlation_csv(result, args.out)
    payload = result.report.to_dict()
    payload["csv"] = args.out
    if args.report:
        fileio.write_json(payload, args.report)
    sys.stdout.write(fileio.dumps(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vortexchain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a chain file")
    p.add_argument("--chain", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("variance", help="asymptotic variance of f on a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--method", choices=["kenney", "series", "both", "empirical"], default="both")
    p.add_argument("--tail-tol", type=float, default=1e-10)
    p.add_argument("--allow-nonergodic", action="store_true")
    p.add_argument("--length", type=int, default=10**4, help="empirical method only")
    p.add_argument("--replicas", type=int, default=200, help="empirical method only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_variance)

    p = sub.add_parser("compare", help="order two chains by asymptotic variance")
    p.add_argument("--chain", required=True)
    p.add_argument("--chain-prime", required=True)
    p.add_argument("--diagnostics", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_compare)

    pv = sub.add_parser("vortex", help="vortex construction tools")
    vsub = pv.add_subparsers(dest="vortex_command", required=True)

    p = vsub.add_parser("basis", help="balanced-flow basis summary")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_vortex_basis)

    p = vsub.add_parser("suggest", help="find a loop and its feasible strength")
    p.add_argument("--chain", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_vortex_suggest)

    p = vsub.add_parser("insert", help="insert a vortex into a reversible chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--flow", help="flow file used as the direction")
    p.add_argument("--cycle", help="cycle file; unit flow around it is the direction")
    p.add_argument("--eps", type=float, help="strength; scales the direction (prob units assume a unit flow)")
    p.add_argument("--eps-unit", choices=["joint", "prob"], default="joint")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_vortex_insert)

    p = vsub.add_parser("max-eps", help="feasibility bound for a flow direction")
    p.add_argument("--chain", required=True)
    p.add_argument("--flow")
    p.add_argument("--cycle")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_vortex_max_eps)

    p = sub.add_parser("simulate", help="sample a trajectory and summarize it")
    p.add_argument("--chain", required=True)
    p.add_argument("--start", type=int, required=True, help="1-based start state")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--f")
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--targets", type=int, nargs="*", default=[])
    p.add_argument("--out", help="trajectory CSV path")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("hitting", help="mean first-passage time")
    p.add_argument("--chain", required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--replicas", type=int, default=0, help="0 = exact only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_hitting)

    pe = sub.add_parser("experiment", help="paper-scale experiments")
    esub = pe.add_subparsers(dest="experiment_command", required=True)

    p = esub.add_parser("ring", help="uniform-ring hitting/sweep/limit experiment")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-unit", choices=["joint", "prob"], default="prob")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hitting-replicas", type=int, default=2000)
    p.add_argument("--variance-replicas", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_experiment_ring)

    p = esub.add_parser("correlation", help="two-peak ring correlation experiment")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--kappa", type=float, default=experiments.DEFAULT_KAPPA)
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--lags", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strength", type=float, default=experiments.DEFAULT_VORTEX_STRENGTH)
    p.add_argument("--out", required=True, help="correlation CSV path")
    p.add_argument("--report", help="optional JSON report path")
    p.set_defaults(fn=_cmd_experiment_correlation)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    try:
        return args.fn(args)
    except VortexChainError as exc:
        sys.stdout.write(fileio.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return exc.exit_code
    except (ValueError, OSError, KeyError) as exc:
        sys.stdout.write(fileio.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
