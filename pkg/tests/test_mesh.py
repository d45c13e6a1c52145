"""
Tests for triangulation, welding and OBJ export.
"""

import pytest
import sys
import os
import numpy as np

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from helfrich_forge.constructions import default_spec, flattened_catenoid, flattened_sphere, genus_surface, round_sphere
from helfrich_forge.mesh import euler_genus, is_connected, obj_text, triangulate, write_obj


class TestClosedMeshes:
    """Genus-zero fixtures mesh to closed spheres."""

    @pytest.mark.parametrize('assembly', [round_sphere(), flattened_sphere(0.05)], ids=['sphere', 'flattened'])
    def test_sphere_topology(self, assembly):
        mesh = triangulate(assembly, resolution=32)
        assert mesh.open_edges() == 0
        assert mesh.euler_characteristic == 2
        assert euler_genus(mesh) == 0
        assert is_connected(mesh)

    def test_vertices_on_surface(self):
        mesh = triangulate(round_sphere(radius=2.0), resolution=16)
        assert np.linalg.norm(mesh.vertices, axis=1) == pytest.approx(2.0)


class TestGenusMeshes:
    """Glued sheets recover the prescribed genus."""

    @pytest.mark.parametrize('m,g', [(2, 0), (2, 1), (3, 1), (2, 3)])
    def test_genus(self, m, g):
        mesh = triangulate(genus_surface(default_spec(m, g)), resolution=48)
        assert euler_genus(mesh) == g
        assert is_connected(mesh)


class TestOpenMeshes:
    """Open assemblies skip the watertight check."""

    def test_catenoid_is_annulus(self):
        mesh = triangulate(flattened_catenoid(2.0), resolution=32)
        assert mesh.euler_characteristic == 0
        assert mesh.open_edges() > 0


class TestObj:
    """Test suite for OBJ export."""

    def setup_method(self):
        self.mesh = triangulate(round_sphere(), resolution=16)

    def test_text_layout(self):
        lines = obj_text(self.mesh).splitlines()
        vertices = [l for l in lines if l.startswith('v ')]
        faces = [l for l in lines if l.startswith('f ')]
        assert len(vertices) == len(self.mesh.vertices)
        assert len(faces) == len(self.mesh.triangles)
        indices = np.array([[int(x) for x in f.split()[1:]] for f in faces])
        assert indices.min() == 1
        assert indices.max() == len(self.mesh.vertices)

    def test_write(self, tmp_path):
        path = tmp_path / 'mesh.obj'
        write_obj(self.mesh, path)
        data = path.read_bytes()
        assert b'\r\n' not in data
        assert data.decode() == obj_text(self.mesh)
