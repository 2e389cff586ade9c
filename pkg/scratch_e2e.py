"""Scratch: step through RI -> RII -> X on a semicircle and inspect."""
import numpy as np

import knotplan as kp
from knotplan.sim import execute_plan, init_symmetric_arc, true_curve
from knotplan.topology import project_and_find_crossings, crossing_landmarks
from knotplan.moves import plan_RI, plan_RII, plan_X, PlannerParams, designate_loop_crossing

cfg = kp.SimConfig()
params = PlannerParams()
MIN_GAP = 0.002

state = init_symmetric_arc(cfg, np.pi)


def look(state, tag):
    c = true_curve(state, params.num_points, cfg.rope_length)
    d = project_and_find_crossings(c, MIN_GAP)
    print(f"--- {tag}: {d.num_crossings} crossings")
    for i, cr in enumerate(d.crossings):
        print(
            f"    [{i}] s_over={cr.s_over:.3f} s_under={cr.s_under:.3f} "
            f"gap={cr.height_gap*1000:.1f}mm sign={cr.sign} pos={cr.position_2d.round(3)}"
        )
    print(f"    gauss: {kp.gauss_code(d).to_text()}  overhand: {kp.is_overhand(d)}")
    zr = state.positions[:, 2]
    print(f"    z range: {zr.min():.4f}..{zr.max():.4f}  head={state.positions[0,:2].round(3)} tail={state.positions[-1,:2].round(3)}")
    return c, d


c0, d0 = look(state, "initial")

ri = plan_RI(c0, params, MIN_GAP)
print(ri.to_table())
state = execute_plan(state, ri, cfg)
c1, d1 = look(state, "post-RI")

if d1.num_crossings == 1:
    marks = crossing_landmarks(d1, c1)
    print(f"    landmarks: s_cb={marks.s_cb:.3f} s_ct={marks.s_ct:.3f} undertip={marks.undertip} overtip={marks.overtip}")
    rii = plan_RII(c1, d1, params)
    print(rii.to_table())
    state = execute_plan(state, rii, cfg)
    c2, d2 = look(state, "post-RII")

    if d2.num_crossings >= 1:
        print(f"    designated loop crossing: {designate_loop_crossing(d2)}")
        x = plan_X(c2, d2, params, place_clearance=cfg.rope_radius)
        print(x.to_table())
        state = execute_plan(state, x, cfg)
        c3, d3 = look(state, "post-X")
