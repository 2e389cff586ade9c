"""knotplan: topological waypoint planning for one-handed overhand knot
tying, validated on a constraint-projection rope simulator."""

from . import errors
from .curve import (
    Curve,
    evaluate,
    from_csv,
    from_json,
    geodesic,
    index_of,
    nearest_control_point,
    polyline_length,
    same_segment,
    tangent,
    to_csv,
    to_json,
)
from .harness import (
    ExperimentConfig,
    SamplerConfig,
    TrialResult,
    config_from_dict,
    run_single_trial,
    run_trials,
    summarize,
    wilson_interval,
)
from .moves import (
    GripperAction,
    MovePlan,
    OverhandOutcome,
    PlannerParams,
    Waypoint,
    plan_overhand,
    plan_RI,
    plan_RII,
    plan_X,
)
from .observe import ObservationConfig, observe
from .poses import Pose, grasp_pose, lifted, rotated_about_z
from .render import render_scene
from .sim import (
    SimConfig,
    SimState,
    TrajectoryRecorder,
    execute_plan,
    init_symmetric_arc,
    simulate_free,
    step,
    true_curve,
)
from .topology import (
    Crossing,
    CrossingDiagram,
    CrossingLandmarks,
    GaussCode,
    centroid_grasp_point,
    crossing_landmarks,
    gauss_code,
    is_overhand,
    project_and_find_crossings,
)

__version__ = "0.1.0"
