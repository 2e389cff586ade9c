"""Planar crossing structure of the rope and derived landmarks.

The rope is projected onto the table plane (drop z). Crossings are
transverse intersections of non-adjacent projected segments; over/under is
decided by the interpolated height of each strand at the intersection.
From the diagram the planner derives the crossing-top/bottom curvilinear
lengths, the under/over tips, and the hull-centroid grasp node; the
verifier closes the open diagram and tests tricolorability.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import MultiPoint

from .curve import Curve, evaluate, geodesic
from .errors import (
    AmbiguousTopologyError,
    DegenerateCrossingError,
    NoCrossingFoundError,
)

# Default minimum vertical separation (meters) for a resolvable crossing:
# half the default rope radius region, below which strands are physically
# ambiguous.
DEFAULT_MIN_GAP = 0.002


@dataclass(frozen=True)
class Crossing:
    """One transverse self-intersection of the projected rope."""

    position_2d: np.ndarray
    s_over: float
    s_under: float
    height_gap: float
    sign: int

    def __post_init__(self):
        if self.s_over == self.s_under:
            raise ValueError("over and under passages must differ")
        if not self.height_gap > 0:
            raise ValueError("height gap must be positive")

    @property
    def first_passage(self) -> float:
        return min(self.s_over, self.s_under)


@dataclass(frozen=True)
class Passage:
    """One traversal of a crossing, in curve order."""

    s: float
    crossing: int
    over: bool


@dataclass(frozen=True)
class CrossingDiagram:
    """Crossings ordered by first passage plus the 2k passages in curve
    order; carries the projected polyline so closure routing and rendering
    need no second look at the curve."""

    crossings: tuple
    passage_sequence: tuple
    projected_points: np.ndarray = field(repr=False)

    def __post_init__(self):
        seen = {}
        last_s = -1.0
        for p in self.passage_sequence:
            if p.s <= last_s:
                raise ValueError("passages must be strictly ordered by s")
            last_s = p.s
            seen.setdefault(p.crossing, []).append(p.over)
        for cid, tags in seen.items():
            if sorted(tags) != [False, True]:
                raise ValueError(f"crossing {cid} must appear once over, once under")
        if len(seen) != len(self.crossings):
            raise ValueError("every crossing needs exactly two passages")

    @property
    def num_crossings(self) -> int:
        return len(self.crossings)

    def to_dict(self) -> dict:
        return {
            "crossings": [
                {
                    "position_2d": c.position_2d.tolist(),
                    "s_over": c.s_over,
                    "s_under": c.s_under,
                    "height_gap": c.height_gap,
                    "sign": c.sign,
                }
                for c in self.crossings
            ],
            "passages": [
                {"s": p.s, "crossing": p.crossing, "over": p.over}
                for p in self.passage_sequence
            ],
        }


@dataclass(frozen=True)
class GaussCode:
    """Crossing passages along the curve as (id, over) tokens; ids are
    numbered by first passage, starting at 1."""

    tokens: tuple

    def __post_init__(self):
        seen = {}
        for cid, over in self.tokens:
            seen.setdefault(cid, []).append(over)
        for cid, tags in seen.items():
            if sorted(tags) != [False, True]:
                raise ValueError(f"id {cid} must appear once over, once under")

    def to_text(self) -> str:
        return " ".join(f"{'O' if over else 'U'}{cid}" for cid, over in self.tokens)

    def to_dict(self) -> dict:
        return {"tokens": [[cid, over] for cid, over in self.tokens]}


def project_and_find_crossings(curve: Curve, min_gap: float = DEFAULT_MIN_GAP) -> CrossingDiagram:
    """All transverse intersections between non-adjacent projected segments.

    Over/under comes from the interpolated z of each strand at the
    intersection; crossings whose vertical separation is below `min_gap`
    (or exactly zero) are dropped as unresolvable. Collinearly overlapping
    segment pairs are non-transverse and raise DegenerateCrossingError.
    """
    pts = curve.control_points
    m1 = curve.num_points - 1
    p2 = pts[:, :2]
    a = p2[:-1]
    d = p2[1:] - p2[:-1]
    z0 = pts[:-1, 2]
    dz = pts[1:, 2] - pts[:-1, 2]
    n_seg = m1

    ii, jj = np.triu_indices(n_seg, k=2)
    if ii.size:
        di, dj = d[ii], d[jj]
        denom = di[:, 0] * dj[:, 1] - di[:, 1] * dj[:, 0]
        offset = a[jj] - a[ii]
        scale = np.linalg.norm(di, axis=1) * np.linalg.norm(dj, axis=1)
        parallel = np.abs(denom) <= 1e-15 * np.maximum(scale, 1e-300)
        _reject_collinear_overlaps(a, d, ii, jj, parallel, offset)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (offset[:, 0] * dj[:, 1] - offset[:, 1] * dj[:, 0]) / denom
            u = (offset[:, 0] * di[:, 1] - offset[:, 1] * di[:, 0]) / denom
        hits = (~parallel) & (t > 0.0) & (t < 1.0) & (u > 0.0) & (u < 1.0)
    else:
        hits = np.zeros(0, dtype=bool)

    crossings = []
    for k in np.nonzero(hits)[0]:
        i, j = int(ii[k]), int(jj[k])
        ti, tj = float(t[k]), float(u[k])
        zi = z0[i] + dz[i] * ti
        zj = z0[j] + dz[j] * tj
        gap = abs(zi - zj)
        if gap < min_gap or gap == 0.0:
            continue
        s_i = (i + ti) / m1
        s_j = (j + tj) / m1
        pos = a[i] + d[i] * ti
        if zi > zj:
            s_over, s_under = s_i, s_j
            d_over, d_under = d[i], d[j]
        else:
            s_over, s_under = s_j, s_i
            d_over, d_under = d[j], d[i]
        cross2 = d_over[0] * d_under[1] - d_over[1] * d_under[0]
        crossings.append(
            Crossing(
                position_2d=pos.copy(),
                s_over=s_over,
                s_under=s_under,
                height_gap=gap,
                sign=1 if cross2 > 0 else -1,
            )
        )

    crossings.sort(key=lambda c: c.first_passage)
    passages = []
    for cid, c in enumerate(crossings):
        passages.append(Passage(s=c.s_over, crossing=cid, over=True))
        passages.append(Passage(s=c.s_under, crossing=cid, over=False))
    passages.sort(key=lambda p: p.s)
    return CrossingDiagram(
        crossings=tuple(crossings),
        passage_sequence=tuple(passages),
        projected_points=p2.copy(),
    )


def _reject_collinear_overlaps(a, d, ii, jj, parallel, offset):
    """Raise if any parallel segment pair is collinear and overlapping."""
    for k in np.nonzero(parallel)[0]:
        i, j = int(ii[k]), int(jj[k])
        length_i = float(np.linalg.norm(d[i]))
        if length_i < 1e-300:
            continue
        perp = offset[k, 0] * d[i][1] - offset[k, 1] * d[i][0]
        span = max(float(np.linalg.norm(offset[k])), length_i)
        if abs(perp) > 1e-12 * length_i * span:
            continue
        # Collinear: overlap iff the 1-D spans along the shared axis meet.
        axis = d[i] / length_i
        t0 = float((a[j] - a[i]) @ axis)
        t1 = float((a[j] + d[j] - a[i]) @ axis)
        lo, hi = min(t0, t1), max(t0, t1)
        if min(length_i, hi) - max(0.0, lo) > 1e-15:
            raise DegenerateCrossingError(
                f"segments {i} and {j} overlap collinearly in projection"
            )


@dataclass(frozen=True)
class CrossingLandmarks:
    """Curvilinear landmarks of one designated crossing."""

    s_cb: float  # under-strand passage (crossing bottom)
    s_ct: float  # over-strand passage (crossing top)
    undertip: int  # tip id (0=head, 1=tail) geodesically nearest s_cb
    overtip: int  # tip id nearest s_ct

    @property
    def s_cb_tip(self) -> float:
        return float(self.undertip)

    @property
    def s_ct_tip(self) -> float:
        return float(self.overtip)


def crossing_landmarks(
    diagram: CrossingDiagram,
    curve: Curve,
    crossing: int | None = None,
    geodesic_mode: str = "arc",
) -> CrossingLandmarks:
    """Crossing top/bottom and the tips nearest to each, for one crossing.

    With more than one crossing the caller must designate which; ties in
    the tip comparison go to the head (tip 0).
    """
    if diagram.num_crossings == 0:
        raise NoCrossingFoundError("diagram has no crossings")
    if crossing is None:
        if diagram.num_crossings != 1:
            raise AmbiguousTopologyError(
                f"expected exactly 1 crossing, found {diagram.num_crossings}; "
                "designate one explicitly"
            )
        crossing = 0
    c = diagram.crossings[crossing]
    return CrossingLandmarks(
        s_cb=c.s_under,
        s_ct=c.s_over,
        undertip=_nearest_tip(curve, c.s_under, geodesic_mode),
        overtip=_nearest_tip(curve, c.s_over, geodesic_mode),
    )


def _nearest_tip(curve: Curve, s: float, mode: str) -> int:
    to_head = geodesic(curve, s, 0.0, mode=mode)
    to_tail = geodesic(curve, s, 1.0, mode=mode)
    return 0 if to_head <= to_tail else 1


def centroid_grasp_point(curve: Curve, undertip: int, r: int) -> int:
    """Grasp node for the tip move: the control point nearest the convex
    hull's area centroid, restricted to indices within r nodes of the
    undertip's end of the rope.

    A degenerate (collinear) hull falls back to the midpoint of the
    bounding segment as the centroid.
    """
    m = curve.num_points
    if not 0 <= r < m:
        raise ValueError(f"need M > r >= 0, got r={r}, M={m}")
    if undertip not in (0, 1):
        raise ValueError(f"undertip must be 0 or 1, got {undertip}")
    p2 = curve.control_points[:, :2]
    centroid = _hull_centroid(p2)
    tip_node = 0 if undertip == 0 else m - 1
    lo = max(0, tip_node - r)
    hi = min(m - 1, tip_node + r)
    window = np.arange(lo, hi + 1)
    dists = np.linalg.norm(p2[window] - centroid, axis=1)
    return int(window[np.argmin(dists)])


def _hull_centroid(points_2d: np.ndarray) -> np.ndarray:
    hull = MultiPoint([tuple(p) for p in points_2d]).convex_hull
    if hull.geom_type == "Polygon":
        return np.asarray(hull.centroid.coords[0])
    coords = np.asarray(hull.coords)
    return 0.5 * (coords[0] + coords[-1])


def gauss_code(diagram: CrossingDiagram) -> GaussCode:
    """Passage tokens in curve order; ids numbered by first passage."""
    return GaussCode(
        tokens=tuple((p.crossing + 1, p.over) for p in diagram.passage_sequence)
    )


# --- knot verification ------------------------------------------------------


def is_overhand(diagram: CrossingDiagram) -> bool:
    """Whether the open diagram closes into the overhand (trefoil) knot.

    The open curve is closed tail-to-head through the unbounded exterior,
    with the closure strand passing over everything it crosses; the closed
    diagram is then tested for tricolorability (colors in Z/3 per arc, the
    two under-arc colors at each crossing summing to twice the over-arc
    color, at least two distinct colors). The overhand closure is
    tricolorable; the unknot never is, regardless of extra reducible
    crossings.
    """
    n_arcs, constraints = closed_coloring_system(diagram)
    return _tricolorable(n_arcs, constraints)


def closed_coloring_system(diagram: CrossingDiagram):
    """Arc count and per-crossing (in, out, over) arc indices of the
    over-routed closure of the diagram."""
    p2 = diagram.projected_points
    open_tokens = [(p.s, p.crossing, p.over) for p in diagram.passage_sequence]
    next_id = diagram.num_crossings

    tail_hits, tail_seg = _route_exterior_ray(p2, tip="tail")
    head_hits, head_seg = _route_exterior_ray(p2, tip="head", avoid=tail_seg)

    curve_tokens = list(open_tokens)
    closure_tokens = []
    for ray_hits, reverse in ((tail_hits, False), (head_hits, True)):
        ordered = sorted(ray_hits, key=lambda h: h[0], reverse=reverse)
        for _, s_hit in ordered:
            curve_tokens.append((s_hit, next_id, False))
            closure_tokens.append((next_id, True))
            next_id += 1
    curve_tokens.sort(key=lambda tok: tok[0])

    cyclic = [(cid, over) for _, cid, over in curve_tokens]
    cyclic.extend(closure_tokens)
    return _arcs_and_constraints(cyclic)


def _arcs_and_constraints(cyclic_tokens):
    """Split a cyclic over/under token list into arcs at under passages and
    emit the coloring constraint (in, out, over) per crossing."""
    n = len(cyclic_tokens)
    under_pos = [i for i, (_, over) in enumerate(cyclic_tokens) if not over]
    k = len(under_pos)
    if k == 0:
        return 1, []

    def arc_at(pos: int) -> int:
        j = bisect_right(under_pos, pos) - 1
        return j % k

    constraints = []
    over_of = {cid: i for i, (cid, over) in enumerate(cyclic_tokens) if over}
    for j, pos in enumerate(under_pos):
        cid = cyclic_tokens[pos][0]
        out_arc = j
        in_arc = (j - 1) % k
        over_arc = arc_at(over_of[cid])
        constraints.append((in_arc, out_arc, over_arc))
    return k, constraints


def _tricolorable(n_arcs: int, constraints) -> bool:
    """Existence of a coloring with >= 2 distinct colors: the GF(3)
    solution space (which always contains the constants) must have
    dimension >= 2."""
    if n_arcs < 2:
        return False
    rows = np.zeros((len(constraints), n_arcs), dtype=np.int64)
    for row, (a_in, a_out, a_over) in enumerate(constraints):
        # a + b = 2c (mod 3)  <=>  a + b + c = 0 (mod 3)
        rows[row, a_in] += 1
        rows[row, a_out] += 1
        rows[row, a_over] += 1
    rows %= 3
    return n_arcs - _gf3_rank(rows) >= 2


def _gf3_rank(mat: np.ndarray) -> int:
    m = mat.copy()
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        pivot = None
        for row in range(rank, rows):
            if m[row, col] % 3 != 0:
                pivot = row
                break
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        inv = 1 if m[rank, col] % 3 == 1 else 2  # inverse of 1 is 1, of 2 is 2
        m[rank] = (m[rank] * inv) % 3
        for row in range(rows):
            if row != rank and m[row, col] % 3 != 0:
                m[row] = (m[row] - m[row, col] * m[rank]) % 3
        rank += 1
        if rank == rows:
            break
    return rank


def _route_exterior_ray(p2: np.ndarray, tip: str, avoid=None):
    """Straight ray from a rope tip out past the bounding circle, crossing
    strand segments only transversally.

    Returns (hits, ray_segment) where hits are (ray_param, s_of_hit) pairs
    and ray_segment is (tip_point, end_point). The candidate direction is
    swept deterministically until every intersection is clean and the ray
    does not cross `avoid` (the other tip's ray).
    """
    m = p2.shape[0]
    m1 = m - 1
    if tip == "tail":
        q = p2[-1]
        skip_seg = m1 - 1
    else:
        q = p2[0]
        skip_seg = 0
    center = 0.5 * (p2.min(axis=0) + p2.max(axis=0))
    radius = float(np.max(np.linalg.norm(p2 - center, axis=1))) * 2.0 + 1.0

    base = math.atan2(q[1] - center[1], q[0] - center[0])
    best = None
    for k in range(64):
        theta = base + 2.0 * math.pi * k / 64.0 + 0.0123456789
        direction = np.array([math.cos(theta), math.sin(theta)])
        end = q + direction * (radius * 2.0)
        hits, clean = _ray_hits(p2, q, end, skip_seg, m1)
        if clean and avoid is not None:
            if _segments_cross(q, end, avoid[0], avoid[1]):
                clean = False
        if clean:
            return hits, (q, end)
        if best is None:
            best = (hits, (q, end))
    # Pathological data: fall back to the first candidate.
    return best


def _ray_hits(p2, q, end, skip_seg, m1):
    hits = []
    d_ray = end - q
    for seg in range(m1):
        if seg == skip_seg:
            continue
        a = p2[seg]
        d_seg = p2[seg + 1] - a
        denom = d_ray[0] * d_seg[1] - d_ray[1] * d_seg[0]
        scale = float(np.linalg.norm(d_ray) * np.linalg.norm(d_seg))
        if abs(denom) <= 1e-12 * max(scale, 1e-300):
            off = a - q
            perp = off[0] * d_ray[1] - off[1] * d_ray[0]
            if abs(perp) <= 1e-12 * max(scale, 1e-300):
                return [], False  # collinear with the ray: pick another angle
            continue
        off = a - q
        t = (off[0] * d_seg[1] - off[1] * d_seg[0]) / denom
        u = (off[0] * d_ray[1] - off[1] * d_ray[0]) / denom
        if 0.0 < t < 1.0 and 0.0 < u < 1.0:
            if u < 1e-6 or u > 1.0 - 1e-6 or t < 1e-9:
                return [], False  # grazing a joint or the tip: not clean
            hits.append((t, (seg + u) / m1))
    return hits, True


def _segments_cross(a0, a1, b0, b1) -> bool:
    def ccw(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    return (
        ccw(a0, a1, b0) * ccw(a0, a1, b1) < 0
        and ccw(b0, b1, a0) * ccw(b0, b1, a1) < 0
    )
