"""
Adaptive tensor Gauss-Legendre quadrature of curvature densities over patches.

Every patch integrates the five densities of QUANTITIES at once. Unmasked
cells are bisected until their 4-child sum agrees with the parent value to a
share of the patch tolerance proportional to the cell's parameter area. Cells
cut by a mask boundary use a masked-node rule and are refined as a group
until the level-to-level change of their total fits the same share. Error
estimates are differences between successive levels.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from helfrich_forge.masks import BOUNDARY, INSIDE, OUTSIDE, BallMask, DiscMask, combine_masks
from helfrich_forge.surface_core import curvature_at

logger = logging.getLogger(__name__)

QUANTITIES = ('area', 'willmore', 'gauss', 'mean', 'sff')

NODES, WEIGHTS = np.polynomial.legendre.leggauss(7)

# Refinement stops once this many cells are pending on one patch.
MAX_CELLS = 400_000


@dataclass
class PatchIntegral:
    """Totals of QUANTITIES on one patch, with level-difference error estimates."""
    name: str
    values: np.ndarray
    error: np.ndarray
    cells: int
    converged: bool

    def as_dict(self) -> dict:
        return {q: float(self.values[i]) for i, q in enumerate(QUANTITIES)}


def densities(patch, u, v, check=False):
    """Stacked densities (1, H^2/4, K, H, |A|^2) times the area element."""
    point = curvature_at(patch, u, v, check=check)
    H2 = point.H ** 2
    dens = np.stack([np.ones_like(H2), 0.25 * H2, point.K, point.H, point.sff], axis=-1)
    return dens * point.dA[..., None]


class _Cells:
    """Parameter rectangles processed together at one refinement level."""

    def __init__(self, u0, u1, v0, v1, values=None, last_err=None):
        self.u0, self.u1, self.v0, self.v1 = u0, u1, v0, v1
        self.values = values
        self.last_err = last_err

    def __len__(self):
        return len(self.u0)

    @property
    def area(self):
        return (self.u1 - self.u0) * (self.v1 - self.v0)

    def take(self, keep):
        pick = lambda a: None if a is None else a[keep]
        return _Cells(self.u0[keep], self.u1[keep], self.v0[keep], self.v1[keep],
                      pick(self.values), pick(self.last_err))

    def split(self):
        """Four children per cell, grouped by parent (parent i owns rows 4i..4i+3)."""
        um = 0.5 * (self.u0 + self.u1)
        vm = 0.5 * (self.v0 + self.v1)
        u0 = np.stack([self.u0, um, self.u0, um], axis=1).ravel()
        u1 = np.stack([um, self.u1, um, self.u1], axis=1).ravel()
        v0 = np.stack([self.v0, self.v0, vm, vm], axis=1).ravel()
        v1 = np.stack([vm, vm, self.v1, self.v1], axis=1).ravel()
        return _Cells(u0, u1, v0, v1)

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            return _Cells(*(np.empty(0) for _ in range(4)), np.empty((0, 5)), np.empty((0, 5)))
        join = lambda attr: np.concatenate([getattr(p, attr) for p in parts])
        return _Cells(join('u0'), join('u1'), join('v0'), join('v1'), join('values'), join('last_err'))


def _rule(patch, cells, mask=None, check=False):
    """Tensor 7x7 Gauss-Legendre sums per cell; inactive nodes get zero weight when masked."""
    if len(cells) == 0:
        return np.empty((0, len(QUANTITIES)))
    hu = 0.5 * (cells.u1 - cells.u0)
    hv = 0.5 * (cells.v1 - cells.v0)
    U = (0.5 * (cells.u0 + cells.u1))[:, None, None] + hu[:, None, None] * NODES[None, :, None]
    V = (0.5 * (cells.v0 + cells.v1))[:, None, None] + hv[:, None, None] * NODES[None, None, :]
    U, V = np.broadcast_arrays(U, V)
    W = (hu * hv)[:, None, None] * WEIGHTS[None, :, None] * WEIGHTS[None, None, :]
    if mask is not None:
        W = W * mask.contains(patch, U, V)
    return np.einsum('cij,cijq->cq', W, densities(patch, U, V, check=check))


def _initial_cells(patch):
    (u0, u1), (v0, v1) = patch.domain.u_range, patch.domain.v_range
    u_edges = np.unique([u0, u1] + [b for b in patch.breaks_u if u0 < b < u1])
    n_v = max(1, int(np.ceil((v1 - v0) / (np.pi / 2) - 1e-9)))
    v_edges = np.linspace(v0, v1, n_v + 1)
    U0, V0 = np.meshgrid(u_edges[:-1], v_edges[:-1], indexing='ij')
    U1, V1 = np.meshgrid(u_edges[1:], v_edges[1:], indexing='ij')
    return _Cells(U0.ravel(), U1.ravel(), V0.ravel(), V1.ravel())


def _integrate_revolution(patch, tol, max_depth):
    """1D adaptive rule in the profile parameter; the azimuth contributes its range."""
    (u0, u1), (v0, v1) = patch.domain.u_range, patch.domain.v_range
    edges = np.unique([u0, u1] + [b for b in patch.breaks_u if u0 < b < u1])
    a, b = edges[:-1], edges[1:]
    width = v1 - v0

    def rule(a, b, check=False):
        h = 0.5 * (b - a)
        t = (0.5 * (a + b))[:, None] + h[:, None] * NODES[None, :]
        dens = densities(patch, t, np.zeros_like(t) + v0, check=check)
        return width * np.einsum('cj,cjq->cq', h[:, None] * WEIGHTS[None, :], dens)

    values = rule(a, b, check=True)
    total = np.zeros(len(QUANTITIES))
    err = np.zeros(len(QUANTITIES))
    share = 0.5 * tol / (u1 - u0)
    cells = 0
    last = np.zeros_like(values)
    for _ in range(2 * max_depth):
        if len(a) == 0:
            break
        mid = 0.5 * (a + b)
        ca = np.stack([a, mid], axis=1).ravel()
        cb = np.stack([mid, b], axis=1).ravel()
        child = rule(ca, cb)
        csum = child.reshape(-1, 2, len(QUANTITIES)).sum(axis=1)
        diff = np.abs(csum - values)
        ok = diff.max(axis=1) <= share * (b - a)
        total += csum[ok].sum(axis=0)
        err += diff[ok].sum(axis=0)
        cells += 2 * int(ok.sum())
        again = np.repeat(~ok, 2)
        a, b, values = ca[again], cb[again], child[again]
        last = np.repeat(diff[~ok], 2, axis=0) / 2.0
    if len(a):
        total += values.sum(axis=0)
        err += last.sum(axis=0)
        cells += len(a)
    converged = bool(err.max() <= tol)
    return PatchIntegral(patch.name, total, err, cells, converged)


def _flat_area(patch, extra_mask):
    """Native area of a Cartesian plane patch cut by discs, when it has a closed form."""
    if patch.kind != 'plane-annulus' or getattr(patch.chart, 'polar', True):
        return None
    if not isinstance(patch.mask, DiscMask) or len(patch.mask.keep) != 1:
        return None
    if extra_mask is None:
        return patch.mask.area()
    if isinstance(extra_mask, BallMask):
        return patch.mask.area(clip=extra_mask.plane_section(patch, patch.chart.height))
    return None


def integrate_patch(patch, tol: float, max_depth: int = 12, extra_mask=None) -> PatchIntegral:
    """
    Integrate QUANTITIES over the active part of one patch.

    Args:
        patch: The patch to integrate
        tol: Absolute error budget for this patch
        max_depth: Maximum number of bisection levels
        extra_mask: Optional mask intersected with the patch's own mask

    Returns:
        PatchIntegral with world-scale totals
    """
    mask = combine_masks(patch.mask, extra_mask)
    if patch.kind == 'revolution' and mask is None:
        return _integrate_revolution(patch, tol, max_depth)
    exact = _flat_area(patch, extra_mask)
    if exact is not None:
        # flat: H = K = 0, only the exact masked area contributes
        values = np.zeros(len(QUANTITIES))
        values[0] = exact * patch.scale ** 2
        return PatchIntegral(patch.name, values, np.zeros(len(QUANTITIES)), 1, True)

    share = 0.5 * tol / patch.domain.area
    zero = np.zeros(len(QUANTITIES))
    cells = _initial_cells(patch)
    if mask is None:
        codes = np.full(len(cells), INSIDE)
    else:
        codes, _ = mask.classify(patch, cells.u0, cells.u1, cells.v0, cells.v1)
    inner = cells.take(codes == INSIDE)
    bnd = cells.take(codes == BOUNDARY)
    inner.values = _rule(patch, inner, check=True)
    bnd.values = _rule(patch, bnd, mask=mask, check=True)
    inner.last_err = np.zeros_like(inner.values)
    bnd.last_err = np.zeros_like(bnd.values)
    bnd_err = zero.copy()

    total = zero.copy()
    err = zero.copy()
    accepted = 0
    for depth in range(1, max_depth + 1):
        if len(inner) == 0 and len(bnd) == 0:
            break
        if len(inner) + len(bnd) > MAX_CELLS:
            logger.warning(f"Patch '{patch.name}': {len(inner) + len(bnd)} pending cells, stopping at depth {depth}")
            break
        pending = []
        if len(inner):
            children = inner.split()
            child_values = _rule(patch, children)
            csum = child_values.reshape(-1, 4, len(QUANTITIES)).sum(axis=1)
            diff = np.abs(csum - inner.values)
            ok = diff.max(axis=1) <= share * inner.area
            total += csum[ok].sum(axis=0)
            err += diff[ok].sum(axis=0)
            accepted += 4 * int(ok.sum())
            again = np.repeat(~ok, 4)
            children = children.take(again)
            children.values = child_values[again]
            children.last_err = np.repeat(diff[~ok], 4, axis=0) / 4.0
            pending.append(children)
        if len(bnd):
            children = bnd.split()
            codes, resolved = mask.classify(patch, children.u0, children.u1, children.v0, children.v1)
            values = np.zeros((len(children), len(QUANTITIES)))
            in_sel, bd_sel = codes == INSIDE, codes == BOUNDARY
            values[in_sel] = _rule(patch, children.take(in_sel))
            values[bd_sel] = _rule(patch, children.take(bd_sel), mask=mask)
            bnd_err = np.abs(values.sum(axis=0) - bnd.values.sum(axis=0))
            if bnd_err.max() <= share * bnd.area.sum() and resolved[bd_sel].all():
                total += values.sum(axis=0)
                err += bnd_err
                accepted += int((codes != OUTSIDE).sum())
                bnd = _Cells.concat([])
            else:
                children.values = values
                children.last_err = np.zeros_like(values)
                pending.append(children.take(in_sel))
                bnd = children.take(bd_sel)
        inner = _Cells.concat(pending)
    if len(inner):
        total += inner.values.sum(axis=0)
        err += inner.last_err.sum(axis=0)
        accepted += len(inner)
    if len(bnd):
        total += bnd.values.sum(axis=0)
        err += bnd_err
        accepted += len(bnd)
    converged = bool(err.max() <= tol)
    if not converged:
        logger.debug(f"Patch '{patch.name}' stopped with error {err.max():.3g} > {tol:.3g}")
    return PatchIntegral(patch.name, total, err, accepted, converged)


def integrate_patches(patches, tol: float, max_depth: int = 12, workers: int = 1,
                      extra_mask=None) -> list:
    """Integrate each patch with an equal share of `tol`; results keep patch order."""
    tol_patch = tol / max(1, len(patches))
    task = lambda p: integrate_patch(p, tol_patch, max_depth=max_depth, extra_mask=extra_mask)
    if workers <= 1 or len(patches) <= 1:
        return [task(p) for p in patches]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, patches))
