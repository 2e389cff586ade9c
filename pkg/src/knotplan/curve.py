"""Piecewise-linear rope curve and curvilinear-coordinate arithmetic.

The rope state is an ordered chain of M control points. Positions along it
are addressed by a normalized curvilinear length s in [0, 1] (0 = head,
1 = tail), uniform in control-point index: s maps to the fractional index
f = s * (M - 1).
"""

import csv
import io
import json
import math
import warnings

import numpy as np

from .errors import (
    CurveLengthMismatchWarning,
    DegenerateSegmentError,
    InsufficientControlPointsError,
    OutOfRangeError,
)

# Segments shorter than this (meters) have no usable direction.
DEGENERATE_SEGMENT_LENGTH = 1e-12

GEODESIC_MODES = ("arc", "literal")


class Curve:
    """Ordered control points (M x 3, meters) plus the rope's rest length.

    Immutable: the point array is copied on construction and marked
    read-only. The polyline arc length is checked against the declared
    length; a mismatch beyond `length_tolerance` (relative) is reported as
    a warning, never silently accepted.
    """

    def __init__(self, control_points, length: float, length_tolerance: float = 0.05):
        pts = np.array(control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"control points must be (M, 3), got {pts.shape}")
        if pts.shape[0] < 2:
            raise InsufficientControlPointsError(
                f"need at least 2 control points, got {pts.shape[0]}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("control points must be finite")
        if not (length > 0.0) or not math.isfinite(length):
            raise ValueError(f"length must be positive and finite, got {length}")
        pts.setflags(write=False)
        self.control_points = pts
        self.length = float(length)
        poly = polyline_length(pts)
        if poly > 0 and abs(poly - self.length) / self.length > length_tolerance:
            warnings.warn(
                f"polyline arc length {poly:.6g} m deviates from declared "
                f"length {self.length:.6g} m by more than "
                f"{length_tolerance:.0%}",
                CurveLengthMismatchWarning,
                stacklevel=2,
            )

    @property
    def num_points(self) -> int:
        return self.control_points.shape[0]

    @property
    def head(self) -> np.ndarray:
        return self.control_points[0]

    @property
    def tail(self) -> np.ndarray:
        return self.control_points[-1]

    def __repr__(self):
        return f"Curve(M={self.num_points}, length={self.length:.4g} m)"


def polyline_length(points: np.ndarray) -> float:
    """Sum of consecutive control-point distances."""
    diffs = np.diff(np.asarray(points, dtype=float), axis=0)
    return float(np.sum(np.linalg.norm(diffs, axis=1)))


def _check_s(s: float) -> float:
    s = float(s)
    if math.isnan(s) or s < 0.0 or s > 1.0:
        raise OutOfRangeError(f"curvilinear length must be in [0, 1], got {s}")
    return s


def evaluate(curve: Curve, s: float) -> np.ndarray:
    """Point on the curve at curvilinear length s.

    Linear interpolation at fractional index f = s * (M - 1); s=0 is the
    head control point, s=1 the tail.
    """
    s = _check_s(s)
    pts = curve.control_points
    f = s * (curve.num_points - 1)
    lo = min(int(math.floor(f)), curve.num_points - 2)
    t = f - lo
    return pts[lo] * (1.0 - t) + pts[lo + 1] * t


def index_of(s: float, num_points: int) -> int:
    """Control-point index nearest to s: nint(s * (M - 1)).

    Ties (exact .5 fractions) round half away from zero, so the result is
    deterministic where the rounding rule would otherwise be ambiguous.
    """
    if num_points < 2:
        raise InsufficientControlPointsError(f"need M >= 2, got {num_points}")
    s = _check_s(s)
    f = s * (num_points - 1)
    # f >= 0, so floor(f + 0.5) rounds half away from zero.
    return min(int(math.floor(f + 0.5)), num_points - 1)


def same_segment(s_i: float, s_j: float, num_points: int) -> bool:
    """Whether two curvilinear lengths land on the same segment:
    |idx_i - idx_j| <= 1."""
    return abs(index_of(s_i, num_points) - index_of(s_j, num_points)) <= 1


def geodesic(curve: Curve, s_i: float, s_j: float, mode: str = "arc") -> float:
    """Distance along the rope between two curvilinear lengths, in meters.

    mode="arc" (default): exact polyline arc length between S(s_i) and
    S(s_j) -- partial segments at both ends plus full interior segments.
    Symmetric, satisfies the triangle inequality along the curve, and
    geodesic(0, 1) equals the total polyline length exactly.

    mode="literal": the segment-index-weighted chord formula, evaluated
    as written: on the same segment it is |s_j - s_i| * ||S(s_j) - S(s_i)||;
    otherwise |1 - s_j| and |s_j| weight the chords from each query point
    to its nearest control point, plus the full control-point spans between
    those two anchors. Kept for fidelity comparisons; not symmetric.
    """
    s_i = _check_s(s_i)
    s_j = _check_s(s_j)
    if mode == "arc":
        return _geodesic_arc(curve, s_i, s_j)
    if mode == "literal":
        return _geodesic_literal(curve, s_i, s_j)
    raise ValueError(f"mode must be one of {GEODESIC_MODES}, got {mode!r}")


def _geodesic_arc(curve: Curve, s_i: float, s_j: float) -> float:
    m1 = curve.num_points - 1
    lo, hi = sorted((s_i * m1, s_j * m1))
    if hi == lo:
        return 0.0
    # Break the span at every interior control point; each consecutive pair
    # then lies within one segment where Euclidean distance is arc length.
    interior = np.arange(math.floor(lo) + 1, math.ceil(hi))
    breaks = np.concatenate(([lo], interior, [hi]))
    pts = np.array([evaluate(curve, f / m1) for f in breaks])
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def _geodesic_literal(curve: Curve, s_i: float, s_j: float) -> float:
    m = curve.num_points
    p_i = evaluate(curve, s_i)
    p_j = evaluate(curve, s_j)
    if abs(index_of(s_j, m) - index_of(s_i, m)) <= 1:
        return abs(s_j - s_i) * float(np.linalg.norm(p_j - p_i))
    end_i = nearest_control_point(curve, s_i)
    end_j = nearest_control_point(curve, s_j)
    pts = curve.control_points
    total = abs(1.0 - s_j) * float(np.linalg.norm(p_i - pts[end_i]))
    total += abs(s_j) * float(np.linalg.norm(p_j - pts[end_j]))
    for k in range(end_i + 1, end_j + 1):
        total += float(np.linalg.norm(pts[k] - pts[k - 1]))
    return total


def nearest_control_point(curve: Curve, s: float) -> int:
    """Index of the control point nearest (l2) to S(s); ties go to the
    smaller index."""
    p = evaluate(curve, s)
    dists = np.linalg.norm(curve.control_points - p, axis=1)
    return int(np.argmin(dists))


def tangent(curve: Curve, s: float) -> np.ndarray:
    """Unit tangent at s, oriented head to tail.

    Inside a segment this is the segment direction; exactly at an interior
    control point it is the normalized mean of the two adjacent segment
    directions; at the endpoints, the single adjacent segment direction.
    """
    s = _check_s(s)
    pts = curve.control_points
    m1 = curve.num_points - 1
    f = s * m1
    nearest = round(f)
    if abs(f - nearest) < 1e-12 and 0 < nearest < m1:
        d0 = _segment_direction(pts, nearest - 1)
        d1 = _segment_direction(pts, nearest)
        mean = 0.5 * (d0 + d1)
        norm = np.linalg.norm(mean)
        if norm < DEGENERATE_SEGMENT_LENGTH:
            raise DegenerateSegmentError(
                f"adjacent segment directions cancel at control point {nearest}"
            )
        return mean / norm
    seg = min(int(math.floor(f)), m1 - 1)
    return _segment_direction(pts, seg)


def _segment_direction(pts: np.ndarray, seg: int) -> np.ndarray:
    d = pts[seg + 1] - pts[seg]
    norm = np.linalg.norm(d)
    if norm < DEGENERATE_SEGMENT_LENGTH:
        raise DegenerateSegmentError(f"segment {seg} has near-zero length")
    return d / norm


# --- serialization ---------------------------------------------------------


def to_json(curve: Curve) -> str:
    """JSON with a point array and the declared length."""
    return json.dumps(
        {
            "control_points": curve.control_points.tolist(),
            "length": curve.length,
        }
    )


def from_json(text: str) -> Curve:
    data = json.loads(text)
    return Curve(data["control_points"], data["length"])


def to_csv(curve: Curve) -> str:
    """One x,y,z row per control point (length is not stored; it is
    recomputed as the polyline length on load unless supplied)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    for p in curve.control_points:
        writer.writerow([repr(float(v)) for v in p])
    return buf.getvalue()


def from_csv(text: str, length: float | None = None) -> Curve:
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    pts = np.array([[float(v) for v in row] for row in rows])
    if length is None:
        length = polyline_length(pts)
    return Curve(pts, length)
