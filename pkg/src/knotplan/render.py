"""Top-down orthographic SVG scenes: rope, crossings, planned waypoints.

Output is plain SVG text assembled with fixed-precision formatting, so
identical inputs produce byte-identical documents.
"""

import numpy as np

from .curve import Curve, polyline_length
from .sim import SimState
from .topology import DEFAULT_MIN_GAP, project_and_find_crossings

_ROPE_STYLE = 'fill="none" stroke="#1f4e79" stroke-width="3" stroke-linejoin="round" stroke-linecap="round"'
_TRACE_STYLE = 'fill="none" stroke="#c8c8c8" stroke-width="1"'
_MASK_STYLE = 'fill="none" stroke="#ffffff" stroke-width="7" stroke-linecap="butt"'


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _View:
    """World (x, y) to pixel mapping with y flipped."""

    def __init__(self, lo, hi, width):
        span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-6)
        pad = 0.08 * span
        self.lo = lo - pad
        self.scale = width / (span + 2 * pad)
        self.width = width
        self.height = width

    def px(self, p) -> str:
        x = (p[0] - self.lo[0]) * self.scale
        y = self.height - (p[1] - self.lo[1]) * self.scale
        return f"{_fmt(x)},{_fmt(y)}"

    def px_xy(self, p):
        x = (p[0] - self.lo[0]) * self.scale
        y = self.height - (p[1] - self.lo[1]) * self.scale
        return x, y


def _extract(source):
    """Accepts a SimState, a Curve, or a frame trajectory (list of dicts
    with 'positions'); returns (points, history)."""
    if isinstance(source, SimState):
        return source.positions, None
    if isinstance(source, Curve):
        return source.control_points, None
    frames = list(source)
    if not frames:
        raise ValueError("empty trajectory")
    history = [np.asarray(f["positions"], dtype=float) for f in frames]
    return history[-1], history


def render_scene(source, plan=None, min_gap: float = DEFAULT_MIN_GAP, width: int = 640) -> str:
    """SVG document for one planning or execution scene.

    Draws the rope projected onto the table with classic knot-diagram
    breaks in the under strand at each crossing, crossing id labels, an
    optional motion trace when `source` is a trajectory, and the plan's
    waypoints with frame arrows (x red, y green) and labels.
    """
    pts, history = _extract(source)
    curve = Curve(np.asarray(pts, dtype=float), max(polyline_length(pts), 1e-9))
    diagram = project_and_find_crossings(curve, min_gap)
    p2 = curve.control_points[:, :2]

    bounds = [p2]
    if plan is not None:
        bounds.append(np.array([w.pose.position[:2] for w in plan.waypoints]))
    if history is not None:
        bounds.extend(h[:, :2] for h in history)
    allp = np.vstack(bounds)
    view = _View(allp.min(axis=0), allp.max(axis=0), width)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{view.width}" '
        f'height="{view.height}" viewBox="0 0 {view.width} {view.height}">',
        f'<rect width="{view.width}" height="{view.height}" fill="#ffffff"/>',
    ]

    if history is not None:
        stride = max(1, len(history) // 60)
        for frame in history[::stride]:
            path = " ".join(view.px(p) for p in frame[:, :2])
            parts.append(f'<polyline points="{path}" {_TRACE_STYLE}/>')

    rope_path = " ".join(view.px(p) for p in p2)
    parts.append(f'<polyline points="{rope_path}" {_ROPE_STYLE}/>')

    m1 = curve.num_points - 1
    break_len = 7.0 / view.scale  # world length hidden under the mask
    for cid, c in enumerate(diagram.crossings):
        # break the under strand, then restore the over strand on top
        u_dir = _strand_direction(p2, c.s_under, m1)
        a = view.px_xy(c.position_2d - u_dir * break_len)
        b = view.px_xy(c.position_2d + u_dir * break_len)
        parts.append(
            f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" x2="{_fmt(b[0])}" '
            f'y2="{_fmt(b[1])}" {_MASK_STYLE}/>'
        )
        seg = min(int(c.s_over * m1), m1 - 1)
        over_piece = " ".join(view.px(p) for p in p2[seg : seg + 2])
        parts.append(f'<polyline points="{over_piece}" {_ROPE_STYLE}/>')
        lx, ly = view.px_xy(c.position_2d)
        parts.append(
            f'<text x="{_fmt(lx + 8)}" y="{_fmt(ly - 8)}" font-size="12" '
            f'fill="#808080">{cid + 1}</text>'
        )

    head = view.px_xy(p2[0])
    parts.append(
        f'<circle cx="{_fmt(head[0])}" cy="{_fmt(head[1])}" r="4" fill="#1f4e79"/>'
    )

    if plan is not None:
        arrow = 0.03  # meters
        for w in plan.waypoints:
            pos = w.pose.position[:2]
            cx, cy = view.px_xy(pos)
            parts.append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="5" fill="none" '
                f'stroke="#d07000" stroke-width="1.5"/>'
            )
            for axis, color in ((w.pose.x_axis, "#cc2222"), (w.pose.y_axis, "#22aa22")):
                tip = pos + axis[:2] * arrow
                tx, ty = view.px_xy(tip)
                parts.append(
                    f'<line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(tx)}" '
                    f'y2="{_fmt(ty)}" stroke="{color}" stroke-width="1.5"/>'
                )
            parts.append(
                f'<text x="{_fmt(cx + 7)}" y="{_fmt(cy + 12)}" font-size="11" '
                f'fill="#d07000">{w.label}</text>'
            )

    parts.append("</svg>")
    return "\n".join(parts)


def _strand_direction(p2: np.ndarray, s: float, m1: int) -> np.ndarray:
    seg = min(int(s * m1), m1 - 1)
    d = p2[seg + 1] - p2[seg]
    norm = np.linalg.norm(d)
    return d / norm if norm > 1e-12 else np.array([1.0, 0.0])
