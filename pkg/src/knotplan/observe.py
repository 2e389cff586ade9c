"""Emulated tracker imperfections.

The planner never sees the simulator's ground truth directly; this module
degrades a curve the way a depth-camera tracker would: isotropic position
noise, z quantization at the depth resolution, and chord infill of the
under-strand points a crossing hides from the camera. Rope tips are
assumed reliably identifiable (one tip is marked) and are never occluded.
"""

from dataclasses import dataclass

import numpy as np

from .curve import Curve
from .topology import project_and_find_crossings


@dataclass(frozen=True)
class ObservationConfig:
    noise_sigma: float = 0.0
    depth_quantization: float = 0.0
    occlusion_radius: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("noise_sigma", "depth_quantization", "occlusion_radius"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return {
            "noise_sigma": self.noise_sigma,
            "depth_quantization": self.depth_quantization,
            "occlusion_radius": self.occlusion_radius,
            "seed": self.seed,
        }


def observe(curve: Curve, config: ObservationConfig) -> Curve:
    """Degraded copy of the curve; the all-zero config returns the input
    unchanged (bit-exact).

    Applied in order: Gaussian noise on every control point, z rounded to
    the nearest quantization step, then under-strand points within the
    occlusion radius of each true crossing replaced by the chord between
    their nearest unoccluded neighbors. Tips keep their indices and are
    exempt from occlusion.
    """
    if (
        config.noise_sigma == 0.0
        and config.depth_quantization == 0.0
        and config.occlusion_radius == 0.0
    ):
        return curve

    pts = curve.control_points.copy()
    if config.noise_sigma > 0.0:
        rng = np.random.default_rng(config.seed)
        pts += rng.normal(0.0, config.noise_sigma, size=pts.shape)
    if config.depth_quantization > 0.0:
        q = config.depth_quantization
        pts[:, 2] = np.round(pts[:, 2] / q) * q
    if config.occlusion_radius > 0.0:
        occluded = _occluded_mask(curve, config.occlusion_radius)
        _infill(pts, occluded)
    return Curve(pts, curve.length, length_tolerance=np.inf)


def _occluded_mask(curve: Curve, radius: float) -> np.ndarray:
    """Control points hidden by a crossing: on the under strand (closer in
    index to the under passage than to the over one) and within the 2-D
    radius of the crossing. Computed from the true curve. Tips never
    qualify."""
    m = curve.num_points
    diagram = project_and_find_crossings(curve, min_gap=0.0)
    mask = np.zeros(m, dtype=bool)
    p2 = curve.control_points[:, :2]
    m1 = m - 1
    for c in diagram.crossings:
        near = np.linalg.norm(p2 - c.position_2d, axis=1) <= radius
        idx = np.arange(m)
        under_dist = np.abs(idx - c.s_under * m1)
        over_dist = np.abs(idx - c.s_over * m1)
        mask |= near & (under_dist < over_dist)
    mask[0] = False
    mask[-1] = False
    return mask


def _infill(pts: np.ndarray, occluded: np.ndarray):
    """Replace each occluded run by linear interpolation between its
    nearest unoccluded neighbors (in place)."""
    m = pts.shape[0]
    i = 0
    while i < m:
        if not occluded[i]:
            i += 1
            continue
        start = i
        while i < m and occluded[i]:
            i += 1
        left = start - 1
        right = i
        span = right - left
        for k in range(start, right):
            t = (k - left) / span
            pts[k] = pts[left] * (1.0 - t) + pts[right] * t
