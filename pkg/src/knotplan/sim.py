"""Constraint-projection rope simulator that executes move plans.

The rope is a chain of nodes under distance constraints, a table
half-space with friction, self-collision, and an optional two-node rigid
pin standing in for the gripper (the second pinned node conveys yaw, so a
quarter-turn of the gripper actually twists the rope). Integration is
substepped position-based dynamics; see _kernels for the inner loop.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .curve import Curve
from .errors import (
    GraspMissError,
    InsufficientControlPointsError,
    InvalidArcError,
    NumericalBlowupError,
)
from .moves import GripperAction, MovePlan

ARC_ANGLE_BOUNDS = (math.pi / 2.0, 3.0 * math.pi / 2.0)


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 60
    rope_length: float = 0.88
    rope_radius: float = 0.004
    gravity: float = 9.81
    dt: float = 1.0 / 240.0
    solver_iterations: int = 20
    substeps: int = 4
    friction_coeff: float = 0.4
    gripper_speed: float = 0.1
    damping: float = 0.995
    # artifact knobs beyond the core dynamics set
    gripper_yaw_rate: float = 1.0
    settle_time: float = 1.0
    self_collision: str = "pairs"  # "pairs" or "capsule"

    def __post_init__(self):
        if self.node_count < 3:
            raise ValueError(f"node_count must be >= 3, got {self.node_count}")
        for name in ("rope_length", "rope_radius", "dt", "gripper_speed", "gripper_yaw_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("gravity", "friction_coeff", "settle_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.solver_iterations < 1 or self.substeps < 1:
            raise ValueError("solver_iterations and substeps must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")
        if self.self_collision not in ("pairs", "capsule"):
            raise ValueError("self_collision must be 'pairs' or 'capsule'")
        if self.dt * self.gripper_speed >= self.rest_spacing:
            raise ValueError("dt * gripper_speed must stay below the rest spacing")

    @property
    def rest_spacing(self) -> float:
        return self.rope_length / (self.node_count - 1)

    @property
    def substep_duration(self) -> float:
        return self.dt / self.substeps

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "rope_length": self.rope_length,
            "rope_radius": self.rope_radius,
            "gravity": self.gravity,
            "dt": self.dt,
            "solver_iterations": self.solver_iterations,
            "substeps": self.substeps,
            "friction_coeff": self.friction_coeff,
            "gripper_speed": self.gripper_speed,
            "damping": self.damping,
            "gripper_yaw_rate": self.gripper_yaw_rate,
            "settle_time": self.settle_time,
            "self_collision": self.self_collision,
        }


@dataclass
class PinState:
    """Gripper attachment: the grasped node plus one neighbor that conveys
    the gripper's yaw (offsets are fixed in the gripper frame)."""

    node: int
    neighbor: int
    local_offsets: np.ndarray  # (2, 3)
    position: np.ndarray  # gripper position
    yaw: float

    def copy(self) -> "PinState":
        return PinState(
            node=self.node,
            neighbor=self.neighbor,
            local_offsets=self.local_offsets.copy(),
            position=self.position.copy(),
            yaw=self.yaw,
        )

    def to_dict(self) -> dict:
        return {"node": self.node, "position": self.position.tolist(), "yaw": self.yaw}


@dataclass
class SimState:
    positions: np.ndarray
    velocities: np.ndarray
    pinned: PinState | None = None
    time: float = 0.0

    def copy(self) -> "SimState":
        return SimState(
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            pinned=self.pinned.copy() if self.pinned else None,
            time=self.time,
        )


def init_symmetric_arc(
    config: SimConfig,
    arc_angle: float,
    origin=(0.0, 0.0),
    yaw: float = 0.0,
    bounds=ARC_ANGLE_BOUNDS,
) -> SimState:
    """Rope at rest on the table along a symmetric circular arc.

    Nodes are spaced exactly one rest spacing apart (equal chords on the
    circumscribed circle), the arc is symmetric about its bisector, and
    the whole shape is placed by rotating about its centroid by `yaw` and
    translating the centroid to `origin`.
    """
    if not bounds[0] <= arc_angle <= bounds[1]:
        raise InvalidArcError(
            f"arc angle {arc_angle:.4f} outside [{bounds[0]:.4f}, {bounds[1]:.4f}]"
        )
    n = config.node_count
    spacing = config.rest_spacing
    step_angle = arc_angle / (n - 1)
    radius = spacing / (2.0 * math.sin(step_angle / 2.0))
    angles = -arc_angle / 2.0 + step_angle * np.arange(n)
    pts = np.column_stack(
        [
            radius * np.cos(angles),
            radius * np.sin(angles),
            np.full(n, config.rope_radius),
        ]
    )
    centroid = pts[:, :2].mean(axis=0)
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    pts[:, :2] = (pts[:, :2] - centroid) @ rot.T + np.asarray(origin, dtype=float)
    return SimState(positions=pts, velocities=np.zeros((n, 3)))


def _pin_arrays(state: SimState):
    if state.pinned is None:
        return np.empty(0, np.int64), np.empty((0, 3))
    pin = state.pinned
    return (
        np.array([pin.node, pin.neighbor], dtype=np.int64),
        pin.local_offsets.copy(),
    )


def _run_span(
    state: SimState,
    config: SimConfig,
    pin_pos: np.ndarray,
    pin_yaw: np.ndarray,
    recorder=None,
) -> np.ndarray:
    """Advance the state by pin_pos.shape[0] substeps; returns the
    per-substep stats array. Raises NumericalBlowupError on divergence."""
    n_sub = pin_pos.shape[0]
    stats = np.empty((n_sub, _kernels.N_STATS))
    want_record = recorder is not None
    record = np.empty((n_sub if want_record else 0, config.node_count, 3))
    pin_nodes, pin_local = _pin_arrays(state)
    status, done = _kernels.run_span(
        state.positions,
        state.velocities,
        config.rest_spacing,
        config.rope_radius,
        config.friction_coeff,
        config.gravity,
        config.damping ** (1.0 / config.substeps),
        config.substep_duration,
        config.solver_iterations,
        config.self_collision == "capsule",
        pin_nodes,
        pin_local,
        pin_pos,
        pin_yaw,
        10.0 * config.rope_length,
        stats,
        record,
        want_record,
    )
    if want_record:
        recorder.extend(state, config, record[:done], pin_pos[:done], pin_yaw[:done])
    state.time += done * config.substep_duration
    if state.pinned is not None and done > 0:
        state.pinned.position = pin_pos[done - 1].copy()
        state.pinned.yaw = float(pin_yaw[done - 1])
    if status == _kernels.STATUS_BLOWUP:
        raise NumericalBlowupError(
            f"simulation diverged at t={state.time:.3f} s "
            f"(coordinate beyond {10.0 * config.rope_length:.2f} m)"
        )
    return stats[:done]


def _hold_trajectory(state: SimState, n_sub: int):
    if state.pinned is None:
        return np.zeros((n_sub, 3)), np.zeros(n_sub)
    pin = state.pinned
    return (
        np.repeat(pin.position[None, :], n_sub, axis=0),
        np.full(n_sub, pin.yaw),
    )


def step(state: SimState, config: SimConfig) -> SimState:
    """One frame of duration dt (substepped); returns a new state."""
    out = state.copy()
    pin_pos, pin_yaw = _hold_trajectory(out, config.substeps)
    _run_span(out, config, pin_pos, pin_yaw)
    return out


def simulate_free(state: SimState, config: SimConfig, duration: float, recorder=None):
    """Advance `duration` seconds with the current pin held still (or no
    pin); returns (new state, per-substep stats)."""
    out = state.copy()
    n_sub = int(math.ceil(duration / config.substep_duration))
    pin_pos, pin_yaw = _hold_trajectory(out, n_sub)
    stats = _run_span(out, config, pin_pos, pin_yaw, recorder)
    return out, stats


class TrajectoryRecorder:
    """Collects one record per frame (time, node positions, pin state)."""

    def __init__(self):
        self.frames = []
        self._substep_accum = 0

    def extend(self, state, config, record, pin_pos, pin_yaw):
        has_pin = state.pinned is not None
        node = state.pinned.node if has_pin else None
        base_time = state.time
        for t in range(record.shape[0]):
            self._substep_accum += 1
            if self._substep_accum % config.substeps != 0:
                continue
            pin = None
            if has_pin:
                pin = {
                    "node": node,
                    "position": [float(v) for v in pin_pos[t]],
                    "yaw": float(pin_yaw[t]),
                }
            self.frames.append(
                {
                    "time": base_time + (t + 1) * config.substep_duration,
                    "positions": record[t].tolist(),
                    "pin": pin,
                }
            )

    def dump(self, fileobj):
        for frame in self.frames:
            fileobj.write(json.dumps(frame) + "\n")


def execute_plan(
    state: SimState,
    plan: MovePlan,
    config: SimConfig,
    recorder: TrajectoryRecorder | None = None,
) -> SimState:
    """Run one move plan: pin the nearest node on close, drive the pin
    between waypoints at gripper speed, release and settle on open.

    The tip move is executed with capsule self-collision regardless of the
    configured mode, since knot closure squeezes strands between nodes.
    """
    if plan.primitive == "X" and config.self_collision != "capsule":
        config = replace(config, self_collision="capsule")
    out = state.copy()
    for k, wp in enumerate(plan.waypoints):
        if k > 0 and out.pinned is not None:
            _run_leg(out, config, wp, recorder)
        if wp.gripper is GripperAction.CLOSE:
            _attach(out, wp, config)
        elif wp.gripper is GripperAction.OPEN:
            out.pinned = None
            settled, _ = simulate_free(out, config, config.settle_time, recorder)
            out = settled
    return out


def _attach(state: SimState, waypoint, config: SimConfig):
    dists = np.linalg.norm(state.positions - waypoint.pose.position, axis=1)
    node = int(np.argmin(dists))
    tol = 2.0 * config.rest_spacing
    if dists[node] > tol:
        raise GraspMissError(
            f"nearest rope node is {dists[node]:.4f} m from the grasp "
            f"(tolerance {tol:.4f} m)"
        )
    neighbor = node + 1 if node + 1 < config.node_count else node - 1
    yaw0 = waypoint.pose.yaw
    c, s = math.cos(-yaw0), math.sin(-yaw0)
    world_off = state.positions[neighbor] - state.positions[node]
    local_neighbor = np.array(
        [
            c * world_off[0] - s * world_off[1],
            s * world_off[0] + c * world_off[1],
            world_off[2],
        ]
    )
    state.pinned = PinState(
        node=node,
        neighbor=neighbor,
        local_offsets=np.vstack([np.zeros(3), local_neighbor]),
        position=state.positions[node].copy(),
        yaw=yaw0,
    )


def _run_leg(state: SimState, config: SimConfig, waypoint, recorder):
    pin = state.pinned
    p0, y0 = pin.position, pin.yaw
    p1 = waypoint.pose.position
    y1 = waypoint.pose.yaw
    dyaw = math.remainder(y1 - y0, 2.0 * math.pi)
    dist = float(np.linalg.norm(p1 - p0))
    duration = max(dist / config.gripper_speed, abs(dyaw) / config.gripper_yaw_rate)
    if duration <= 0.0:
        pin.position = p1.copy()
        pin.yaw = y1
        return
    n_sub = int(math.ceil(duration / config.substep_duration))
    frac = (np.arange(n_sub, dtype=float) + 1.0) / n_sub
    pin_pos = p0[None, :] + frac[:, None] * (p1 - p0)[None, :]
    pin_yaw = y0 + frac * dyaw
    _run_span(state, config, pin_pos, pin_yaw, recorder)
    pin.position = p1.copy()
    pin.yaw = y1


def true_curve(state: SimState, num_points: int, rope_length: float) -> Curve:
    """Ground-truth readout: the node chain resampled uniformly by arc
    length to `num_points` control points. Requesting the native node
    count returns the chain verbatim."""
    if num_points < 2:
        raise InsufficientControlPointsError(f"need M >= 2, got {num_points}")
    pts = state.positions
    if num_points == pts.shape[0]:
        return Curve(pts.copy(), rope_length)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    targets = np.linspace(0.0, cum[-1], num_points)
    resampled = np.column_stack(
        [np.interp(targets, cum, pts[:, ax]) for ax in range(3)]
    )
    return Curve(resampled, rope_length)
