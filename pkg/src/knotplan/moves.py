"""Waypoint programs for the three tying primitives and their composition.

Each plan is an ordered list of gripper waypoints (pose + action + label)
computed purely from the observed curve: RI twists the middle into a loop,
RII slides the middle over the loop toward the under tip, and the tip move
X carries the rope end across the crossing to the far side of the loop.
Executing RI, RII, and the tip move in sequence produces an overhand knot.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .curve import Curve, evaluate, geodesic
from .errors import AmbiguousTopologyError, GateFailedError
from .poses import Pose, grasp_pose, lifted, rotated_about_z, translated_to
from .topology import (
    DEFAULT_MIN_GAP,
    CrossingDiagram,
    centroid_grasp_point,
    crossing_landmarks,
    is_overhand,
    project_and_find_crossings,
)

# Where no better height is known, placed rope should not be driven below
# one rope radius above the table.
DEFAULT_PLACE_CLEARANCE = 0.004


class GripperAction(str, Enum):
    CLOSE = "close"
    OPEN = "open"
    NONE = "none"


@dataclass(frozen=True)
class Waypoint:
    pose: Pose
    gripper: GripperAction
    label: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "gripper": self.gripper.value,
            "pose": self.pose.to_dict(),
        }


EXPECTED_CROSSING_DELTA = {"RI": 1, "RII": 2, "X": 2}


@dataclass(frozen=True)
class MovePlan:
    primitive: str
    waypoints: tuple
    expected_crossing_delta: int

    def __post_init__(self):
        if self.primitive not in EXPECTED_CROSSING_DELTA:
            raise ValueError(f"unknown primitive {self.primitive!r}")
        if len(self.waypoints) < 3:
            raise ValueError("a move plan needs at least 3 waypoints")
        if self.waypoints[0].gripper is not GripperAction.CLOSE:
            raise ValueError("a move plan must begin by closing the gripper")
        if self.waypoints[-1].gripper is not GripperAction.OPEN:
            raise ValueError("a move plan must end by opening the gripper")
        if self.expected_crossing_delta != EXPECTED_CROSSING_DELTA[self.primitive]:
            raise ValueError(
                f"{self.primitive} changes the crossing count by "
                f"{EXPECTED_CROSSING_DELTA[self.primitive]}"
            )

    def to_dict(self) -> dict:
        return {
            "primitive": self.primitive,
            "expected_crossing_delta": self.expected_crossing_delta,
            "waypoints": [w.to_dict() for w in self.waypoints],
        }

    def to_table(self) -> str:
        """Human-readable one-line-per-waypoint summary."""
        lines = [f"{self.primitive} plan ({len(self.waypoints)} waypoints)"]
        for i, w in enumerate(self.waypoints):
            x, y, z = w.pose.position
            lines.append(
                f"  {i + 1}. {w.label:<16} gripper={w.gripper.value:<5} "
                f"pos=({x:+.4f}, {y:+.4f}, {z:+.4f}) yaw={w.pose.yaw:+.3f}"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class PlannerParams:
    """Tuning constants of the waypoint planner.

    lam picks the two near-tip curvilinear lengths used by the twist move,
    gamma scales lift heights from rope-distance, r bounds the grasp-node
    search window of the tip move, and num_points is the control-point
    count the observed curve is expected to carry.
    """

    lam: float = 0.1
    gamma: float = 0.4
    r: int = 5
    num_points: int = 30
    geodesic_mode: str = "arc"

    def __post_init__(self):
        if not 0.0 < self.lam < 0.5:
            raise ValueError(f"lam must be in (0, 0.5), got {self.lam}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if self.num_points < 2:
            raise ValueError(f"num_points must be >= 2, got {self.num_points}")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "gamma": self.gamma,
            "r": self.r,
            "num_points": self.num_points,
            "geodesic_mode": self.geodesic_mode,
        }


def plan_RI(curve: Curve, params: PlannerParams, min_gap: float = DEFAULT_MIN_GAP) -> MovePlan:
    """Twist move: grasp the middle, lift, carry it to the midpoint between
    the two near-tip points, rotate a quarter turn, and lay it back down
    where it was picked up. Adds one crossing.

    The rope must be crossing-free (symmetric curved start).
    """
    pre = project_and_find_crossings(curve, min_gap)
    if pre.num_crossings != 0:
        raise AmbiguousTopologyError(
            f"twist move expects a crossing-free rope, found {pre.num_crossings}"
        )
    grasp = grasp_pose(curve, 0.5)
    h = params.gamma * geodesic(curve, params.lam, 1.0 - params.lam, mode=params.geodesic_mode)
    lift = lifted(grasp, h)
    mid = 0.5 * (evaluate(curve, params.lam) + evaluate(curve, 1.0 - params.lam))
    carry = translated_to(lift, mid[0], mid[1], lift.position[2])
    turned = rotated_about_z(carry, math.pi / 2.0)
    back = translated_to(turned, grasp.position[0], grasp.position[1], lift.position[2])
    down = translated_to(back, grasp.position[0], grasp.position[1], grasp.position[2])
    return MovePlan(
        primitive="RI",
        waypoints=(
            Waypoint(grasp, GripperAction.CLOSE, "RI-grasp"),
            Waypoint(lift, GripperAction.NONE, "RI-lift"),
            Waypoint(carry, GripperAction.NONE, "RI-translate"),
            Waypoint(turned, GripperAction.NONE, "RI-rotate"),
            Waypoint(back, GripperAction.NONE, "RI-return"),
            Waypoint(down, GripperAction.OPEN, "RI-place"),
        ),
        expected_crossing_delta=1,
    )


def plan_RII(curve: Curve, diagram: CrossingDiagram, params: PlannerParams) -> MovePlan:
    """Slide move: grasp the middle, lift proportionally to the rope length
    between the crossing passages, carry it over the crossing bottom and on
    to the under tip, and place it there. Adds two crossings.

    Requires exactly one crossing in the diagram.
    """
    marks = crossing_landmarks(diagram, curve, geodesic_mode=params.geodesic_mode)
    grasp = grasp_pose(curve, 0.5)
    h = params.gamma * geodesic(curve, marks.s_cb, marks.s_ct, mode=params.geodesic_mode)
    lift = lifted(grasp, h)
    over_cb = evaluate(curve, marks.s_cb)
    over_tip = evaluate(curve, marks.s_cb_tip)
    carry_cb = translated_to(lift, over_cb[0], over_cb[1], lift.position[2])
    carry_tip = translated_to(lift, over_tip[0], over_tip[1], lift.position[2])
    place = translated_to(carry_tip, over_tip[0], over_tip[1], over_tip[2])
    return MovePlan(
        primitive="RII",
        waypoints=(
            Waypoint(grasp, GripperAction.CLOSE, "RII-grasp"),
            Waypoint(lift, GripperAction.NONE, "RII-lift"),
            Waypoint(carry_cb, GripperAction.NONE, "RII-over-crossing"),
            Waypoint(carry_tip, GripperAction.NONE, "RII-over-undertip"),
            Waypoint(place, GripperAction.OPEN, "RII-place"),
        ),
        expected_crossing_delta=2,
    )


def plan_X(
    curve: Curve,
    diagram: CrossingDiagram,
    params: PlannerParams,
    crossing: int | None = None,
    place_clearance: float = DEFAULT_PLACE_CLEARANCE,
) -> MovePlan:
    """Tip move: grasp near the under tip (hull-centroid heuristic), lift,
    and carry the tip to the reflection of the over tip through the
    crossing top, so the rope end lands past the crossing on the far side
    of the loop. Adds two crossings.

    With several crossings the caller may designate one; by default the
    crossing whose passages are closest together along the curve (the loop
    crossing) is used. The place height is clamped to `place_clearance`.
    """
    if crossing is None:
        crossing = designate_loop_crossing(diagram)
    marks = crossing_landmarks(
        diagram, curve, crossing=crossing, geodesic_mode=params.geodesic_mode
    )
    grasp_node = centroid_grasp_point(curve, marks.undertip, params.r)
    s_grasp = grasp_node / (curve.num_points - 1)
    grasp = grasp_pose(curve, s_grasp)
    h = params.gamma * geodesic(curve, marks.s_cb, marks.s_ct, mode=params.geodesic_mode)
    top = evaluate(curve, marks.s_ct)
    over_tip_pos = evaluate(curve, marks.s_ct_tip)
    target = top + (top - over_tip_pos)
    target_z = max(float(target[2]), place_clearance)
    lift = lifted(grasp, h)
    carry = translated_to(lift, target[0], target[1], lift.position[2])
    lower = translated_to(carry, target[0], target[1], target_z)
    return MovePlan(
        primitive="X",
        waypoints=(
            Waypoint(grasp, GripperAction.CLOSE, "X-grasp"),
            Waypoint(lift, GripperAction.NONE, "X-lift"),
            Waypoint(carry, GripperAction.NONE, "X-over-target"),
            Waypoint(lower, GripperAction.NONE, "X-lower"),
            Waypoint(lower, GripperAction.OPEN, "X-place"),
        ),
        expected_crossing_delta=2,
    )


def designate_loop_crossing(diagram: CrossingDiagram) -> int:
    """Pick the crossing whose two passages are closest together along the
    curve: in the tying sequence that is the loop made by the twist move,
    which the tip must be carried across."""
    if diagram.num_crossings == 0:
        # Let landmark computation raise the canonical error.
        return 0
    spans = [abs(c.s_over - c.s_under) for c in diagram.crossings]
    return int(np.argmin(spans))


@dataclass(frozen=True)
class OverhandOutcome:
    """The three executed plans plus the crossing count observed after each
    stage (initial, post-RI, post-RII, post-X)."""

    plans: tuple
    crossing_counts: tuple
    knotted: bool = field(default=True)


def plan_overhand(
    observe,
    execute,
    params: PlannerParams,
    min_gap: float = DEFAULT_MIN_GAP,
) -> OverhandOutcome:
    """Run the full tying sequence with re-observation between moves.

    `observe()` returns the current curve; `execute(plan)` realizes one
    move on the rope. Each plan is computed from the freshest observation.
    Gates: the twist move must add exactly one crossing and the slide move
    exactly two; after the tip move the diagram must verify as an overhand
    knot. A failed gate raises GateFailedError tagged with the move id.
    """
    curve0 = observe()
    count0 = project_and_find_crossings(curve0, min_gap).num_crossings
    ri = plan_RI(curve0, params, min_gap=min_gap)
    execute(ri)

    curve1 = observe()
    diagram1 = project_and_find_crossings(curve1, min_gap)
    if diagram1.num_crossings - count0 != ri.expected_crossing_delta:
        raise GateFailedError(
            "RI",
            f"expected crossing delta {ri.expected_crossing_delta}, "
            f"observed {diagram1.num_crossings - count0}",
        )
    rii = plan_RII(curve1, diagram1, params)
    execute(rii)

    curve2 = observe()
    diagram2 = project_and_find_crossings(curve2, min_gap)
    if diagram2.num_crossings - diagram1.num_crossings != rii.expected_crossing_delta:
        raise GateFailedError(
            "RII",
            f"expected crossing delta {rii.expected_crossing_delta}, "
            f"observed {diagram2.num_crossings - diagram1.num_crossings}",
        )
    x = plan_X(curve2, diagram2, params)
    execute(x)

    curve3 = observe()
    diagram3 = project_and_find_crossings(curve3, min_gap)
    if not is_overhand(diagram3):
        raise GateFailedError("X", "final configuration does not verify as an overhand knot")
    return OverhandOutcome(
        plans=(ri, rii, x),
        crossing_counts=(
            count0,
            diagram1.num_crossings,
            diagram2.num_crossings,
            diagram3.num_crossings,
        ),
    )
