"""JSON and CSV schemas for chains, flows, cycles, and experiment artifacts.

External files use 1-based state indices; the Python API is 0-based
throughout.  Floats are written as shortest round-trip decimals, so a rerun
with the same seed reproduces files byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chain import DEFAULT_TOL, Tolerances, ValidatedChain, chain_from_parts, validate_chain
from .errors import ConditionIViolated
from .simulate import Trajectory
from .vortex import Cycle, SkewFlow


def _fmt(x) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


def dumps(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def write_json(payload: dict, path) -> None:
    Path(path).write_text(dumps(payload), encoding="utf-8")


def chain_to_dict(chain: ValidatedChain) -> dict:
    return {
        "size": chain.size,
        "transition": [[float(x) for x in row] for row in chain.transition],
        "pi": [float(x) for x in chain.stationary],
    }


def load_chain(path, tol: Tolerances = DEFAULT_TOL) -> ValidatedChain:
    """Read a chain file; a supplied ``pi`` is verified and kept."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    matrix = np.asarray(data["transition"], dtype=float)
    if "size" in data and int(data["size"]) != matrix.shape[0]:
        raise ValueError(f"size field {data['size']} does not match matrix of {matrix.shape[0]} rows")
    chain = validate_chain(matrix, tol)
    if data.get("pi") is not None:
        pi = np.asarray(data["pi"], dtype=float)
        return chain_from_parts(chain.transition, pi, tol)
    return chain


def save_chain(chain: ValidatedChain, path) -> None:
    write_json(chain_to_dict(chain), path)


def flow_to_dict(flow: SkewFlow) -> dict:
    rows, cols = np.nonzero(flow.upper)
    triples = [[int(i) + 1, int(j) + 1, float(flow.upper[i, j])] for i, j in zip(rows, cols)]
    return {"size": flow.size, "triples": triples}


def load_flow(path) -> SkewFlow:
    """Read a flow file: strict-upper triples [i, j, value], 1-based, i < j."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    size = int(data["size"])
    upper = np.zeros((size, size))
    for i, j, value in data["triples"]:
        i, j = int(i) - 1, int(j) - 1
        if not 0 <= i < j < size:
            raise ConditionIViolated(f"triple indices ({i + 1}, {j + 1}) must satisfy 1 <= i < j <= {size}")
        upper[i, j] = float(value)
    return SkewFlow(size, upper)


def save_flow(flow: SkewFlow, path) -> None:
    write_json(flow_to_dict(flow), path)


def cycle_to_dict(cycle: Cycle) -> dict:
    return {"states": [s + 1 for s in cycle.states]}


def load_cycle(path) -> Cycle:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return Cycle(tuple(int(s) - 1 for s in data["states"]))


def save_cycle(cycle: Cycle, path) -> None:
    write_json(cycle_to_dict(cycle), path)


def load_function(path) -> np.ndarray:
    """Read a target-function file: {"values": [...]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return np.asarray(data["values"], dtype=float)


def save_function(values, path) -> None:
    write_json({"values": [float(x) for x in np.asarray(values, dtype=float)]}, path)


def trajectory_csv(trajectory: Trajectory) -> str:
    """CSV body with header ``step,state``; states are written 1-based."""
    lines = ["step,state"]
    lines.extend(f"{t},{int(s) + 1}" for t, s in enumerate(trajectory.states))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    Path(path).write_text(trajectory_csv(trajectory), encoding="utf-8")


def correlation_csv(result) -> str:
    """CSV body for a correlation experiment: tau and both arms' curves."""
    lines = ["tau,corr_reversible,corr_vortex"]
    lines.extend(f"{tau},{_fmt(r)},{_fmt(v)}" for tau, r, v in result.csv_rows())
    return "\n".join(lines) + "\n"


def write_correlation_csv(result, path) -> None:
    Path(path).write_text(correlation_csv(result), encoding="utf-8")
