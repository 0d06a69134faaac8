"""Problem and trajectory files, sample export and the random-walk generator.

Both file kinds are JSON documents carrying a ``format_version`` field.  A
problem file lists waypoints plus optional objective, constraint and solver
sections; anything omitted takes the benchmark defaults.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .am_solver import SolverConfig
from .cost import ObjectiveConfig
from .exceptions import ProblemFileError
from .feasibility import (
    DEFAULT_EPSILON,
    ConstraintSpec,
    builtin_accel_constraint,
    builtin_obstacle_constraint,
    builtin_speed_constraint,
)
from .trajectory import DIM, Trajectory, default_fixed_mask, eval_trajectory

__all__ = [
    "FORMAT_VERSION",
    "ProblemFile",
    "load_problem",
    "save_problem",
    "problem_from_dict",
    "load_trajectory",
    "save_trajectory",
    "trajectory_to_dict",
    "dump_samples",
    "write_samples_csv",
    "random_walk_problem",
    "SAMPLE_COLUMNS",
]

FORMAT_VERSION = 1
SAMPLE_COLUMNS = ("t", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az")

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["waypoints"],
    "additionalProperties": False,
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "order": {"type": "integer", "minimum": 3},
        "waypoints": {"type": "array", "items": _vec3, "minItems": 2},
        "objective": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rho": _pos,
                "d_min": {"type": "integer", "minimum": 1},
                "d_max": {"type": "integer", "minimum": 1},
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0},
                            "minItems": 1},
            },
        },
        "constraints": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "v_max": {"anyOf": [_pos, {"type": "null"}]},
                "a_max": {"anyOf": [_pos, {"type": "null"}]},
                "epsilon": {"type": "number", "minimum": 0},
                "obstacles": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["center", "r_safe"],
                        "additionalProperties": False,
                        "properties": {"center": _vec3, "r_safe": _pos},
                    },
                },
            },
        },
        "fixed": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["waypoint", "order", "value"],
                "additionalProperties": False,
                "properties": {
                    "waypoint": {"type": "integer", "minimum": 0},
                    "order": {"type": "integer", "minimum": 0},
                    "value": _vec3,
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "delta": _pos,
                "mode": {"enum": ["absolute", "relative"]},
            },
        },
    },
}

TRAJECTORY_SCHEMA = {
    "type": "object",
    "required": ["format_version", "order", "durations", "derivatives"],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "order": {"type": "integer", "minimum": 3},
        "durations": {"type": "array", "items": _pos, "minItems": 1},
        "derivatives": {"type": "array", "items": {"type": "array", "items": _vec3}},
        "fixed_mask": {"type": "array"},
        "constraints": PROBLEM_SCHEMA["properties"]["constraints"],
    },
}


@dataclass
class ProblemFile:
    """A parsed problem with every default filled in."""

    waypoints: np.ndarray
    order: int = 5
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    v_max: float | None = 5.0
    a_max: float | None = 3.5
    epsilon: float = DEFAULT_EPSILON
    obstacles: list[tuple[tuple[float, float, float], float]] = field(default_factory=list)
    fixed: list[tuple[int, int, tuple[float, float, float]]] = field(default_factory=list)
    max_iterations: int = 1000
    delta: float = 1e-3
    mode: str = "relative"

    @property
    def num_pieces(self) -> int:
        return self.waypoints.shape[0] - 1

    def constraints(self) -> list[ConstraintSpec]:
        out = []
        if self.v_max is not None:
            out.append(builtin_speed_constraint(self.v_max, self.epsilon))
        if self.a_max is not None:
            out.append(builtin_accel_constraint(self.a_max, self.epsilon))
        for center, r in self.obstacles:
            out.append(builtin_obstacle_constraint(center, r, self.epsilon))
        return out

    def solver_config(self, **kw) -> SolverConfig:
        return SolverConfig(max_iterations=self.max_iterations, stop_threshold=self.delta,
                            relative=self.mode == "relative", **kw)

    def boundary(self) -> tuple[np.ndarray, np.ndarray]:
        """Waypoint derivative blocks and fixed mask.

        First and last waypoints are fixed at rest, interior higher
        derivatives are free unless overridden in ``fixed``.
        """
        S = (self.order + 1) // 2
        mask = default_fixed_mask(self.num_pieces, S)
        d = np.zeros(mask.shape)
        d[:, 0, :] = self.waypoints
        for m, k, value in self.fixed:
            d[m, k] = value
            mask[m, k] = True
        return d, mask

    def to_dict(self) -> dict:
        obj = self.objective
        return {
            "format_version": FORMAT_VERSION,
            "order": self.order,
            "waypoints": self.waypoints.tolist(),
            "objective": {"rho": obj.rho, "d_min": obj.d_min, "d_max": obj.d_max,
                          "weights": list(obj.weights)},
            "constraints": {
                "v_max": self.v_max,
                "a_max": self.a_max,
                "epsilon": self.epsilon,
                "obstacles": [{"center": list(c), "r_safe": r} for c, r in self.obstacles],
            },
            "fixed": [{"waypoint": m, "order": k, "value": list(v)} for m, k, v in self.fixed],
            "solver": {"max_iterations": self.max_iterations, "delta": self.delta,
                       "mode": self.mode},
        }


def _validate(doc, schema, what):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ProblemFileError(f"invalid {what}: " + "; ".join(msgs), msgs)


def _parse(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(
            f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}",
            [f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc


def problem_from_dict(doc: dict) -> ProblemFile:
    _validate(doc, PROBLEM_SCHEMA, "problem")
    order = doc.get("order", 5)
    o = doc.get("objective", {})
    c = doc.get("constraints", {})
    s = doc.get("solver", {})
    errors = []
    try:
        objective = ObjectiveConfig(rho=float(o.get("rho", 512.0)), d_min=o.get("d_min", 3),
                                    d_max=o.get("d_max", 3), weights=tuple(o.get("weights", [1.0])),
                                    order=order)
    except ValueError as exc:
        errors.append(f"objective: {exc}")
        objective = None
    wp = np.array(doc["waypoints"], dtype=float)
    S = (order + 1) // 2
    fixed = []
    for j, f in enumerate(doc.get("fixed", [])):
        if f["waypoint"] > wp.shape[0] - 1 or f["order"] >= S:
            errors.append(f"fixed/{j}: waypoint or derivative order out of range")
        elif f["order"] == 0:
            errors.append(f"fixed/{j}: positions come from the waypoint list")
        fixed.append((f["waypoint"], f["order"], tuple(float(x) for x in f["value"])))
    if errors:
        raise ProblemFileError("invalid problem: " + "; ".join(errors), errors)
    return ProblemFile(
        waypoints=wp,
        order=order,
        objective=objective,
        v_max=c.get("v_max", 5.0),
        a_max=c.get("a_max", 3.5),
        epsilon=c.get("epsilon", DEFAULT_EPSILON),
        obstacles=[(tuple(float(x) for x in ob["center"]), float(ob["r_safe"]))
                   for ob in c.get("obstacles", [])],
        fixed=fixed,
        max_iterations=s.get("max_iterations", 1000),
        delta=s.get("delta", 1e-3),
        mode=s.get("mode", "relative"),
    )


def load_problem(path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from exc
    return problem_from_dict(_parse(text, str(path)))


def save_problem(problem: ProblemFile, path) -> None:
    Path(path).write_text(json.dumps(problem.to_dict(), indent=2) + "\n")


def trajectory_to_dict(traj: Trajectory, constraints: dict | None = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "order": traj.order,
        "durations": traj.durations.tolist(),
        "derivatives": traj.derivatives.tolist(),
        "fixed_mask": traj.fixed_mask.tolist(),
    }
    if constraints is not None:
        doc["constraints"] = constraints
    return doc


def save_trajectory(traj: Trajectory, path, constraints: dict | None = None) -> None:
    """Write ``traj`` as JSON; ``constraints`` is an optional problem-style
    constraints section stored alongside for later checking."""
    Path(path).write_text(json.dumps(trajectory_to_dict(traj, constraints), indent=2) + "\n")


def load_trajectory(path) -> tuple[Trajectory, dict | None]:
    """Trajectory and the constraints section stored with it (if any)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from exc
    doc = _parse(text, str(path))
    _validate(doc, TRAJECTORY_SCHEMA, "trajectory")
    d = np.array(doc["derivatives"], dtype=float)
    mask = (np.array(doc["fixed_mask"], dtype=bool) if "fixed_mask" in doc
            else default_fixed_mask(d.shape[0] - 1, d.shape[1]))
    try:
        traj = Trajectory(doc["order"], d, doc["durations"], mask)
    except ValueError as exc:
        raise ProblemFileError(f"invalid trajectory: {exc}", [str(exc)]) from exc
    return traj, doc.get("constraints")


def dump_samples(traj: Trajectory, dt: float) -> np.ndarray:
    """Rows ``t, position, velocity, acceleration`` at ``t = 0, dt, ...``.

    The last row always lands exactly on the total duration.
    """
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    total = traj.total_duration
    n = int(np.floor(total / dt + 1e-9))
    t = dt * np.arange(n + 1)
    t = t[t < total - 1e-9 * max(1.0, total)]
    t = np.append(t, total)
    rows = np.empty((t.size, 1 + 3 * DIM))
    rows[:, 0] = t
    for r, tt in enumerate(t):
        for i in range(3):
            rows[r, 1 + DIM * i:1 + DIM * (i + 1)] = eval_trajectory(traj, tt, i)
    return rows


def write_samples_csv(rows: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SAMPLE_COLUMNS)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


def random_walk_problem(num_pieces: int, seed: int | None = None) -> ProblemFile:
    """Waypoints from a random walk with i.i.d. steps uniform on ``[-3, 8]``
    per axis, starting at the origin, with the benchmark settings attached."""
    if num_pieces < 1:
        raise ValueError("num_pieces must be at least 1")
    rng = np.random.default_rng(seed)
    steps = rng.uniform(-3.0, 8.0, size=(num_pieces, DIM))
    wp = np.vstack([np.zeros(DIM), np.cumsum(steps, axis=0)])
    return ProblemFile(waypoints=wp)
