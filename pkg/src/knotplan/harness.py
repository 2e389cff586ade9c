"""Batch experiment runner: seeded trials, failure taxonomy, summaries.

Each trial samples a symmetric arc, runs the full tying sequence through
the observation emulator and the simulator, and records per-move outcomes.
Trials are independent and individually seeded, so parallel and serial
execution produce identical result sequences.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .curve import Curve
from .errors import (
    ConfigError,
    GateFailedError,
    GraspMissError,
    KnotPlanError,
    NumericalBlowupError,
)
from .moves import PlannerParams, plan_overhand
from .observe import ObservationConfig, observe
from .sim import SimConfig, execute_plan, init_symmetric_arc, true_curve
from .topology import DEFAULT_MIN_GAP, project_and_find_crossings

MOVES = ("RI", "RII", "X")

# Published physical-robot results quoted for context in reports. They come
# from hardware experiments and are never recomputed here.
PHYSICAL_BASELINE = {
    "per_move": {"RI": 0.937, "RII": 0.867, "X": 0.615},
    "overall": 0.50,
    "trials": 16,
    "note": "physical-robot baseline, not reproduced by this simulation",
}
LITERATURE_OVERALL = {
    "DDOD": 0.66,
    "GSP": 0.6,
    "Imitation": 0.38,
    "note": "published physical-robot success rates, never executed here",
}


@dataclass(frozen=True)
class SamplerConfig:
    """Initial-configuration distribution: a symmetric arc with randomized
    opening angle, yaw, and placement inside the workspace square."""

    arc_angle_deg: tuple = (100.0, 200.0)
    workspace: float = 1.0

    def __post_init__(self):
        lo, hi = self.arc_angle_deg
        if not (0 < lo <= hi):
            raise ConfigError(f"bad arc angle range {self.arc_angle_deg}")
        if self.workspace <= 0:
            raise ConfigError("workspace must be positive")

    def to_dict(self) -> dict:
        return {"arc_angle_deg": list(self.arc_angle_deg), "workspace": self.workspace}


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    planner: PlannerParams = field(default_factory=PlannerParams)
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    min_gap: float = DEFAULT_MIN_GAP
    workers: int = 1

    def __post_init__(self):
        if self.min_gap < 0:
            raise ConfigError("min_gap must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "sim": self.sim.to_dict(),
            "planner": self.planner.to_dict(),
            "observation": self.observation.to_dict(),
            "sampler": self.sampler.to_dict(),
            "min_gap": self.min_gap,
            "workers": self.workers,
        }


_SECTION_BUILDERS = {
    "sim": SimConfig,
    "observation": ObservationConfig,
    "sampler": SamplerConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from parsed JSON; unknown keys anywhere are a
    ConfigError so typos cannot silently change an experiment."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"sim", "planner", "observation", "sampler", "min_gap", "workers"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    try:
        for section, builder in _SECTION_BUILDERS.items():
            if section in data:
                sec = dict(data[section])
                if section == "sampler" and "arc_angle_deg" in sec:
                    sec["arc_angle_deg"] = tuple(sec["arc_angle_deg"])
                kwargs[section] = builder(**sec)
        if "planner" in data:
            sec = dict(data["planner"])
            if "lambda" in sec:
                sec["lam"] = sec.pop("lambda")
            kwargs["planner"] = PlannerParams(**sec)
        if "min_gap" in data:
            kwargs["min_gap"] = float(data["min_gap"])
        if "workers" in data:
            kwargs["workers"] = int(data["workers"])
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


@dataclass
class TrialResult:
    trial: int
    seed: int
    moves: dict  # move -> {"passed": bool, "reason": str | None}
    success: bool
    crossings: list  # crossing count observed at each stage boundary
    wall_time: float

    def to_record(self, include_wall_time: bool = False) -> dict:
        rec = {
            "trial": self.trial,
            "seed": self.seed,
            "moves": self.moves,
            "success": self.success,
            "crossings": self.crossings,
        }
        if include_wall_time:
            rec["wall_time"] = self.wall_time
        return rec


def _failure_reason(exc: Exception, move: str) -> str:
    if isinstance(exc, GateFailedError):
        return "NotOverhand" if exc.move == "X" else f"GateFailed:{exc.move}"
    if isinstance(exc, GraspMissError):
        return "GraspMiss"
    if isinstance(exc, NumericalBlowupError):
        return "NumericalBlowup"
    return f"{type(exc).__name__}:{move}"


def run_single_trial(
    trial: int,
    seed: int,
    config: ExperimentConfig,
    keep_artifacts: bool = False,
):
    """One seeded trial. Returns (TrialResult, artifacts) where artifacts
    is (final_curve, plans) when requested, else None."""
    t0 = time.perf_counter()
    sseq = np.random.SeedSequence(seed)
    arc_rng = np.random.default_rng(sseq.spawn(1)[0])
    obs_seeds = [int(v) for v in sseq.generate_state(4, np.uint32)]

    lo, hi = config.sampler.arc_angle_deg
    arc_angle = math.radians(arc_rng.uniform(lo, hi))
    yaw = arc_rng.uniform(0.0, 2.0 * math.pi)
    half = config.sampler.workspace / 4.0
    origin = arc_rng.uniform(-half, half, size=2)

    state = init_symmetric_arc(config.sim, arc_angle, origin=origin, yaw=yaw)
    holder = {"state": state, "executing": None, "executed": []}
    counts: list = []
    plans: list = []

    def observe_fn() -> Curve:
        truth = true_curve(
            holder["state"], config.planner.num_points, config.sim.rope_length
        )
        obs_cfg = replace(config.observation, seed=obs_seeds[min(len(counts), 3)])
        seen = observe(truth, obs_cfg)
        counts.append(project_and_find_crossings(seen, config.min_gap).num_crossings)
        return seen

    def execute_fn(plan):
        holder["executing"] = plan.primitive
        plans.append(plan)
        holder["state"] = execute_plan(holder["state"], plan, config.sim)
        holder["executed"].append(plan.primitive)
        holder["executing"] = None

    moves = {}
    success = False
    try:
        plan_overhand(observe_fn, execute_fn, config.planner, min_gap=config.min_gap)
        for move in MOVES:
            moves[move] = {"passed": True, "reason": None}
        success = True
    except Exception as exc:  # per-trial failures never abort the batch
        failed_move = _attribute_failure(exc, holder)
        for move in MOVES:
            if move == failed_move:
                moves[move] = {"passed": False, "reason": _failure_reason(exc, move)}
                break
            moves[move] = {"passed": True, "reason": None}

    result = TrialResult(
        trial=trial,
        seed=seed,
        moves=moves,
        success=success,
        crossings=counts,
        wall_time=time.perf_counter() - t0,
    )
    artifacts = None
    if keep_artifacts:
        final = true_curve(
            holder["state"], config.planner.num_points, config.sim.rope_length
        )
        artifacts = (final, plans)
    return result, artifacts


def _attribute_failure(exc: Exception, holder: dict) -> str:
    if isinstance(exc, GateFailedError):
        return exc.move
    if holder["executing"] is not None:
        return holder["executing"]
    executed = holder["executed"]
    if not executed:
        return "RI"
    nxt = {"RI": "RII", "RII": "X", "X": "X"}
    return nxt[executed[-1]]


def trial_seeds(master_seed: int, n: int) -> list:
    """Per-trial seeds derived from the master seed; independent of worker
    scheduling."""
    return [int(v) for v in np.random.SeedSequence(master_seed).generate_state(n, np.uint32)]


def run_trials(
    n: int,
    config: ExperimentConfig,
    master_seed: int = 0,
    keep_artifacts: bool = False,
):
    """Run n seeded trials (parallel up to config.workers) and summarize.

    Returns (results, summary, artifacts) with results ordered by trial id
    regardless of completion order.
    """
    if n < 1:
        raise ConfigError(f"need at least 1 trial, got {n}")
    seeds = trial_seeds(master_seed, n)

    def job(i):
        return run_single_trial(i, seeds[i], config, keep_artifacts=keep_artifacts)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(job, range(n)))
    else:
        outcomes = [job(i) for i in range(n)]
    results = [r for r, _ in outcomes]
    artifacts = [a for _, a in outcomes]
    return results, summarize(results), artifacts


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def summarize(results) -> dict:
    """Aggregate rates in the shape of a per-move success table: each move
    is scored over the trials that reached it, alongside the overall rate
    and Wilson 95% intervals."""
    if not results:
        raise ValueError("need at least one result")
    n = len(results)
    per_move = {}
    for move in MOVES:
        attempts = sum(1 for r in results if move in r.moves)
        passes = sum(1 for r in results if r.moves.get(move, {}).get("passed"))
        rate = passes / attempts if attempts else 0.0
        lo, hi = wilson_interval(passes, attempts)
        per_move[move] = {
            "attempts": attempts,
            "passes": passes,
            "rate": rate,
            "wilson95": [lo, hi],
        }
    successes = sum(1 for r in results if r.success)
    lo, hi = wilson_interval(successes, n)
    reasons = {}
    for r in results:
        for move in MOVES:
            info = r.moves.get(move)
            if info and not info["passed"]:
                reasons[info["reason"]] = reasons.get(info["reason"], 0) + 1
    return {
        "trials": n,
        "successes": successes,
        "overall_rate": successes / n,
        "overall_wilson95": [lo, hi],
        "per_move": per_move,
        "failure_reasons": dict(sorted(reasons.items())),
        "reference_baselines": {
            "physical": PHYSICAL_BASELINE,
            "literature_overall": LITERATURE_OVERALL,
        },
    }


def results_to_jsonl(results) -> str:
    """Deterministic one-record-per-trial JSONL (wall time excluded so the
    bytes depend only on the seed and config)."""
    return "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in results)


def results_to_csv(results) -> str:
    """Per-trial CSV including measured wall time."""
    header = (
        "trial,seed,success,ri_passed,rii_passed,x_passed,failure_reason,"
        "crossings_initial,crossings_after_ri,crossings_after_rii,"
        "crossings_after_x,wall_time_s"
    )
    lines = [header]
    for r in results:
        reason = ""
        flags = []
        for move in MOVES:
            info = r.moves.get(move)
            if info is None:
                flags.append("")
            else:
                flags.append(str(info["passed"]).lower())
                if not info["passed"]:
                    reason = info["reason"]
        stages = list(r.crossings) + [""] * (4 - len(r.crossings))
        lines.append(
            f"{r.trial},{r.seed},{str(r.success).lower()},{flags[0]},{flags[1]},"
            f"{flags[2]},{reason},{stages[0]},{stages[1]},{stages[2]},{stages[3]},"
            f"{r.wall_time:.3f}"
        )
    return "\n".join(lines) + "\n"
