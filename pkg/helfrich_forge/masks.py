"""
Active-subdomain masks for parametric patches.

A mask answers two questions: which parameter points are active (`contains`)
and, for a batch of parameter rectangles, whether each lies fully inside,
fully outside or across the mask boundary (`classify`). The quadrature engine
only refines boundary cells.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

OUTSIDE, INSIDE, BOUNDARY = 0, 1, 2

Disc = Tuple[float, float, float]


def _rect_disc_distances(u0, u1, v0, v1, cx, cy):
    """Nearest and farthest distance from (cx, cy) to each rectangle."""
    nu = np.clip(cx, u0, u1) - cx
    nv = np.clip(cy, v0, v1) - cy
    dmin = np.hypot(nu, nv)
    fu = np.maximum(np.abs(u0 - cx), np.abs(u1 - cx))
    fv = np.maximum(np.abs(v0 - cy), np.abs(v1 - cy))
    dmax = np.hypot(fu, fv)
    return dmin, dmax


@dataclass(frozen=True)
class DiscMask:
    """
    Planar region in parameter space: inside every `keep` disc and outside
    every `holes` disc. Discs are (centre_u, centre_v, radius).
    """
    keep: Tuple[Disc, ...] = ()
    holes: Tuple[Disc, ...] = ()

    def contains(self, patch, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        ok = np.ones(np.broadcast(u, v).shape, dtype=bool)
        for cx, cy, rad in self.keep:
            ok &= np.hypot(u - cx, v - cy) < rad
        for cx, cy, rad in self.holes:
            ok &= np.hypot(u - cx, v - cy) > rad
        return ok

    def classify(self, patch, u0, u1, v0, v1):
        n = len(u0)
        all_in = np.ones(n, dtype=bool)
        any_out = np.zeros(n, dtype=bool)
        resolved = np.ones(n, dtype=bool)
        diag = np.hypot(u1 - u0, v1 - v0)
        for (cx, cy, rad), is_hole in [(d, False) for d in self.keep] + [(d, True) for d in self.holes]:
            dmin, dmax = _rect_disc_distances(u0, u1, v0, v1, cx, cy)
            inside_disc = dmax <= rad
            outside_disc = dmin >= rad
            good, bad = (outside_disc, inside_disc) if is_hole else (inside_disc, outside_disc)
            all_in &= good
            any_out |= bad
            crossing = ~(inside_disc | outside_disc)
            resolved &= ~crossing | (diag <= 0.25 * rad)
        codes = np.where(any_out, OUTSIDE, np.where(all_in, INSIDE, BOUNDARY))
        return codes, resolved

    @property
    def discs(self):
        return self.keep + self.holes

    def area(self, clip: Disc = None) -> float:
        """
        Exact area for one keep disc with disjoint holes inside it, optionally
        intersected with the disc `clip`.
        """
        if len(self.keep) != 1:
            raise ValueError('exact area needs exactly one keep disc')
        if clip is None:
            return float(np.pi * (self.keep[0][2] ** 2 - sum(r ** 2 for _, _, r in self.holes)))
        return lens_area(self.keep[0], clip) - sum(lens_area(h, clip) for h in self.holes)


def lens_area(a: Disc, b: Disc) -> float:
    """Area of the intersection of two discs."""
    (x1, y1, r1), (x2, y2, r2) = a, b
    d = float(np.hypot(x1 - x2, y1 - y2))
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return float(np.pi * min(r1, r2) ** 2)
    c1 = np.clip((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0)
    c2 = np.clip((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0)
    k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return float(r1 * r1 * np.arccos(c1) + r2 * r2 * np.arccos(c2) - 0.5 * np.sqrt(max(k, 0.0)))


@dataclass(frozen=True)
class BallMask:
    """Points of the patch whose image lies in the open ball B_radius(centre)."""
    center: Tuple[float, float, float]
    radius: float
    samples: int = 5

    def contains(self, patch, u, v):
        p = patch.points(u, v)
        return np.linalg.norm(p - np.asarray(self.center), axis=-1) < self.radius

    def plane_section(self, patch, height: float):
        """The ball's trace on the horizontal plane patch at native `height`, as a native disc."""
        cx, cy, cz = self.center
        ox, oy, oz = patch.offset
        dz = oz + patch.scale * height - cz
        if abs(dz) >= self.radius:
            return (0.0, 0.0, 0.0)
        radius = np.sqrt(self.radius ** 2 - dz ** 2)
        return ((cx - ox) / patch.scale, (cy - oy) / patch.scale, float(radius / patch.scale))

    def classify(self, patch, u0, u1, v0, v1):
        k = self.samples
        a = np.linspace(0.0, 1.0, k)
        uu = u0[:, None, None] + (u1 - u0)[:, None, None] * a[None, :, None]
        vv = v0[:, None, None] + (v1 - v0)[:, None, None] * a[None, None, :]
        uu, vv = np.broadcast_arrays(uu, vv)
        p = patch.points(uu, vv)
        d = np.linalg.norm(p - np.asarray(self.center), axis=-1).reshape(len(u0), -1)
        step_u = np.linalg.norm(np.diff(p, axis=1), axis=-1).reshape(len(u0), -1).max(axis=1)
        step_v = np.linalg.norm(np.diff(p, axis=2), axis=-1).reshape(len(u0), -1).max(axis=1)
        spacing = np.maximum(step_u, step_v)
        dmin = d.min(axis=1)
        dmax = d.max(axis=1)
        # d deviates from its sampled range by at most ~ spacing^2 * curvature / 8
        curvature = 2.0 / np.maximum(dmin, spacing) + 2.0
        margin = 0.25 * spacing ** 2 * curvature
        inside = dmax + margin < self.radius
        outside = dmin - margin > self.radius
        codes = np.where(outside, OUTSIDE, np.where(inside, INSIDE, BOUNDARY))
        resolved = spacing * (k - 1) <= 0.25 * self.radius
        return codes, resolved


@dataclass(frozen=True)
class IntersectionMask:
    """Active where every member mask is active."""
    members: Tuple[object, ...]

    def contains(self, patch, u, v):
        ok = self.members[0].contains(patch, u, v)
        for mask in self.members[1:]:
            ok = ok & mask.contains(patch, u, v)
        return ok

    def classify(self, patch, u0, u1, v0, v1):
        all_in = np.ones(len(u0), dtype=bool)
        any_out = np.zeros(len(u0), dtype=bool)
        resolved = np.ones(len(u0), dtype=bool)
        for mask in self.members:
            codes, res = mask.classify(patch, u0, u1, v0, v1)
            all_in &= codes == INSIDE
            any_out |= codes == OUTSIDE
            resolved &= res
        codes = np.where(any_out, OUTSIDE, np.where(all_in, INSIDE, BOUNDARY))
        return codes, resolved


def combine_masks(*masks):
    """Intersection of the given masks, ignoring None; None if nothing is left."""
    present = tuple(m for m in masks if m is not None)
    if not present:
        return None
    if len(present) == 1:
        return present[0]
    return IntersectionMask(present)
