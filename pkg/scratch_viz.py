"""Scratch: visualize RI execution stage by stage."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import knotplan as kp
from knotplan.sim import execute_plan, init_symmetric_arc, true_curve, TrajectoryRecorder
from knotplan.moves import plan_RI, PlannerParams

cfg = kp.SimConfig()
params = PlannerParams()

state = init_symmetric_arc(cfg, np.pi)
c0 = true_curve(state, params.num_points, cfg.rope_length)
ri = plan_RI(c0, params)

rec = TrajectoryRecorder()
final = execute_plan(state, ri, cfg, recorder=rec)

frames = rec.frames
print("frames:", len(frames))
n_show = 12
idx = np.linspace(0, len(frames) - 1, n_show).astype(int)
fig, axes = plt.subplots(3, 4, figsize=(16, 12))
for ax, k in zip(axes.ravel(), idx):
    p = np.array(frames[k]["positions"])
    ax.plot(p[:, 0], p[:, 1], "-", lw=1.5, color="#1f4e79")
    sc = ax.scatter(p[:, 0], p[:, 1], c=p[:, 2], s=6, cmap="viridis", vmin=0, vmax=0.02)
    ax.plot(p[0, 0], p[0, 1], "rs", ms=6)  # head
    pin = frames[k]["pin"]
    if pin:
        ax.plot(pin["position"][0], pin["position"][1], "k+", ms=12)
    ax.set_title(f"t={frames[k]['time']:.2f}s  zmax={p[:,2].max():.3f}")
    ax.set_aspect("equal")
    ax.set_xlim(-0.45, 0.45)
    ax.set_ylim(-0.45, 0.45)
plt.tight_layout()
plt.savefig("/tmp/ri_stages.png", dpi=70)
print("saved /tmp/ri_stages.png")
