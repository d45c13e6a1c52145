"""
Triangulation of assemblies, welding, and discrete topology checks.

Rings along patch edges are sampled at the same azimuths on both sides of
every seam, so welding only has to merge boundary vertices that coincide up
to rounding.
"""

import io
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, cKDTree

from helfrich_forge.errors import NotWatertight
from helfrich_forge.masks import DiscMask

logger = logging.getLogger(__name__)

WELD_FACTOR = 1e-7
DEGENERATE_AREA = 1e-14


@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    weld_tolerance: float = 0.0

    def edges(self):
        """Unique undirected edges and how many triangles use each."""
        t = self.triangles
        all_edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        return np.unique(all_edges, axis=0, return_counts=True)

    @property
    def euler_characteristic(self) -> int:
        edges, _ = self.edges()
        return len(self.vertices) - len(edges) + len(self.triangles)

    def open_edges(self) -> int:
        _, counts = self.edges()
        return int(np.sum(counts != 2))

    def components(self) -> int:
        edges, _ = self.edges()
        n = len(self.vertices)
        graph = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
        count, _ = connected_components(graph, directed=False)
        return int(count)


def _is_periodic(patch) -> bool:
    v0, v1 = patch.domain.v_range
    return abs((v1 - v0) - 2.0 * np.pi) < 1e-12


def _u_values(patch, intervals: int):
    u0, u1 = patch.domain.u_range
    edges = np.unique([u0, u1] + [b for b in patch.breaks_u if u0 < b < u1])
    lengths = np.diff(edges)
    counts = np.maximum(2, np.round(intervals * lengths / (u1 - u0)).astype(int))
    parts = [np.linspace(a, b, n + 1)[:-1] for a, b, n in zip(edges[:-1], edges[1:], counts)]
    return np.concatenate(parts + [[u1]])


def _oriented(tris, points, patch, u, v):
    """Flip triangles whose normal disagrees with the patch normal at the centroid."""
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    n_tri = np.cross(b - a, c - a)
    n_patch = patch.normal(u[tris].mean(axis=1), v[tris].mean(axis=1))
    flip = np.einsum('ij,ij->i', n_tri, n_patch) < 0.0
    tris = tris.copy()
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _grid_patch(patch, u_vals, n_v):
    """Structured (u, v) grid; the azimuth wraps for full-turn domains."""
    periodic = _is_periodic(patch)
    v0, v1 = patch.domain.v_range
    v_vals = v0 + (v1 - v0) * np.arange(n_v) / n_v if periodic else np.linspace(v0, v1, n_v + 1)
    nu, nv = len(u_vals), len(v_vals)
    U, V = np.meshgrid(u_vals, v_vals, indexing='ij')
    u, v = U.ravel(), V.ravel()
    points = patch.points(u, v)
    idx = np.arange(nu * nv).reshape(nu, nv)
    right = np.roll(idx, -1, axis=1) if periodic else idx[:, 1:]
    left = idx if periodic else idx[:, :-1]
    a, b = left[:-1], left[1:]
    c, d = right[1:], right[:-1]
    tris = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    boundary = np.concatenate([idx[0], idx[-1]] + ([] if periodic else [idx[:, 0], idx[:, -1]]))
    good = np.linalg.norm(np.cross(points[tris[:, 1]] - points[tris[:, 0]],
                                   points[tris[:, 2]] - points[tris[:, 0]]), axis=1) > 0.0
    tris = tris[good]
    return points, _oriented(tris, points, patch, u, v), np.unique(boundary)


def _plateau_patch(patch, n_outer, n_hole):
    """Delaunay triangulation of a disc minus holes, with prescribed boundary rings."""
    mask = patch.mask
    (cx, cy, radius), = mask.keep
    phi_o = 2.0 * np.pi * np.arange(n_outer) / n_outer
    rings = [np.stack([cx + radius * np.cos(phi_o), cy + radius * np.sin(phi_o)], -1)]
    phi_h = 2.0 * np.pi * np.arange(n_hole) / n_hole
    for hx, hy, hr in mask.holes:
        rings.append(np.stack([hx + hr * np.cos(phi_h), hy + hr * np.sin(phi_h)], -1))
    spacing = 2.0 * np.pi * radius / n_outer
    g = np.arange(-radius, radius + spacing, spacing)
    GX, GY = np.meshgrid(g, g, indexing='ij')
    grid = np.stack([GX.ravel(), GY.ravel()], -1)
    keep = np.hypot(grid[:, 0] - cx, grid[:, 1] - cy) < radius - 0.5 * spacing
    for hx, hy, hr in mask.holes:
        keep &= np.hypot(grid[:, 0] - hx, grid[:, 1] - hy) > hr + 0.5 * spacing
    uv = np.concatenate(rings + [grid[keep]])
    ring_id = np.concatenate([np.full(len(r), i) for i, r in enumerate(rings)] + [np.full(keep.sum(), -1)])
    tris = Delaunay(uv).simplices
    ids = ring_id[tris]
    inside_hole = (ids[:, 0] >= 1) & (ids[:, 0] == ids[:, 1]) & (ids[:, 1] == ids[:, 2])
    tris = tris[~inside_hole]
    points = patch.points(uv[:, 0], uv[:, 1])
    boundary = np.flatnonzero(ring_id >= 0)
    return points, _oriented(tris, points, patch, uv[:, 0], uv[:, 1]), boundary


def _patch_mesh(patch, resolution):
    n_phi = resolution
    n_neck = max(8, resolution // 4)
    if patch.kind == 'plane-annulus' and isinstance(patch.mask, DiscMask):
        return _plateau_patch(patch, n_phi, n_neck)
    if patch.mask is not None:
        raise ValueError(f"cannot mesh masked patch '{patch.name}' of kind {patch.kind}")
    if patch.kind == 'revolution':
        return _grid_patch(patch, _u_values(patch, max(16, resolution // 2)), n_neck)
    return _grid_patch(patch, _u_values(patch, max(4, resolution // 4)), n_phi)


def _weld(points, boundary, tol):
    """Merge boundary vertices closer than tol; returns the vertex relabelling."""
    n = len(points)
    pairs = cKDTree(points[boundary]).query_pairs(tol, output_type='ndarray')
    if len(pairs) == 0:
        return np.arange(n)
    rows, cols = boundary[pairs[:, 0]], boundary[pairs[:, 1]]
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    # representative = smallest original index in each group
    first = np.full(labels.max() + 1, n)
    np.minimum.at(first, labels, np.arange(n))
    return first[labels]


def triangulate(assembly, resolution: int = 64, check: bool = True) -> TriMesh:
    """
    Mesh every patch, weld the seams and drop degenerate triangles.

    Args:
        assembly: Surface to mesh
        resolution: Azimuthal vertex count on sheet patches
        check: Raise NotWatertight if a closed assembly leaves open edges

    Returns:
        TriMesh with unreferenced vertices removed
    """
    all_points, all_tris, all_boundary = [], [], []
    base = 0
    for patch in assembly.patches:
        points, tris, boundary = _patch_mesh(patch, resolution)
        all_points.append(points)
        all_tris.append(tris + base)
        all_boundary.append(boundary + base)
        base += len(points)
    points = np.concatenate(all_points)
    tris = np.concatenate(all_tris)
    boundary = np.concatenate(all_boundary)

    diameter = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    tol = WELD_FACTOR * diameter
    labels = _weld(points, boundary, tol)
    tris = labels[tris]
    distinct = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[distinct]
    area = 0.5 * np.linalg.norm(np.cross(points[tris[:, 1]] - points[tris[:, 0]],
                                         points[tris[:, 2]] - points[tris[:, 0]]), axis=1)
    tris = tris[area > DEGENERATE_AREA * diameter ** 2]

    used = np.unique(tris)
    remap = np.full(len(points), -1)
    remap[used] = np.arange(len(used))
    mesh = TriMesh(vertices=points[used], triangles=remap[tris], weld_tolerance=tol)
    logger.info(f"Triangulated {len(assembly.patches)} patches: V={len(mesh.vertices)}, F={len(mesh.triangles)}")
    if check and assembly.meta.closed:
        bad = mesh.open_edges()
        if bad:
            logger.error(f"Mesh has {bad} open or non-manifold edges")
            raise NotWatertight(f"{bad} edges are not shared by exactly two triangles", open_edges=bad)
    return mesh


def euler_genus(mesh: TriMesh) -> int:
    """Genus (2 - V + E - F) / 2 of a closed connected mesh."""
    chi = mesh.euler_characteristic
    if chi % 2:
        raise NotWatertight(f"odd Euler characteristic {chi}", open_edges=mesh.open_edges())
    return (2 - chi) // 2


def is_connected(mesh: TriMesh) -> bool:
    return mesh.components() == 1


def obj_text(mesh: TriMesh) -> str:
    """Wavefront OBJ: 'v x y z' lines, then 1-based 'f i j k' lines, LF endings."""
    buffer = io.StringIO()
    np.savetxt(buffer, mesh.vertices, fmt='v %.12g %.12g %.12g', newline='\n')
    np.savetxt(buffer, mesh.triangles + 1, fmt='f %d %d %d', newline='\n')
    return buffer.getvalue()


def write_obj(mesh: TriMesh, path) -> None:
    with open(path, 'w', newline='\n') as f:
        f.write(obj_text(mesh))
    logger.info(f"Wrote OBJ mesh to {path}")
