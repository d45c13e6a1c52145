"""
Tests for the adaptive quadrature engine.
"""

import pytest
import sys
import os
import numpy as np

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from helfrich_forge.constructions import flat_disc, flattened_catenoid, flattened_sphere, round_sphere
from helfrich_forge.masks import BallMask, DiscMask
from helfrich_forge.quadrature import QUANTITIES, integrate_patch, integrate_patches
from helfrich_forge.surface_core import Domain, ParamPatch, PlaneChart


class TestSpherePatch:
    """Test suite for a full sphere patch."""

    def setup_method(self):
        self.patch = round_sphere().patches[0]
        self.result = integrate_patch(self.patch, 1e-8)

    def test_totals(self):
        totals = self.result.as_dict()
        assert totals['area'] == pytest.approx(4 * np.pi, abs=1e-7)
        assert totals['willmore'] == pytest.approx(4 * np.pi, abs=1e-7)
        assert totals['gauss'] == pytest.approx(4 * np.pi, abs=1e-7)
        assert totals['mean'] == pytest.approx(-8 * np.pi, abs=1e-7)
        assert totals['sff'] == pytest.approx(0.0, abs=1e-7)

    def test_converged(self):
        assert self.result.converged
        assert self.result.error.max() <= 1e-8
        assert self.result.cells > 0

    def test_scaled_patch(self):
        totals = integrate_patch(self.patch.scaled(3.0), 1e-7).as_dict()
        assert totals['area'] == pytest.approx(36 * np.pi, abs=1e-6)
        assert totals['willmore'] == pytest.approx(4 * np.pi, abs=1e-7)


class TestMaskedIntegration:
    """Masks restrict the integration domain."""

    def test_ball_cap_area(self):
        # the part of the unit sphere within distance r of a point on it has area pi r^2
        mask = BallMask((0.0, 0.0, 1.0), 0.5)
        totals = integrate_patch(round_sphere().patches[0], 1e-6, extra_mask=mask).as_dict()
        assert totals['area'] == pytest.approx(np.pi * 0.25, abs=1e-5)
        assert totals['willmore'] == pytest.approx(np.pi * 0.25, abs=1e-5)

    def test_exact_plateau_area(self):
        delta = 0.05
        plateau = flattened_sphere(delta).patch('sheet0-plateau')
        result = integrate_patch(plateau, 1e-10)
        assert result.values[0] == pytest.approx(np.pi * (2 * delta) ** 2, rel=1e-14)
        assert result.values[1:].tolist() == [0.0] * (len(QUANTITIES) - 1)

    def test_exact_area_clipped_by_ball(self):
        plateau = ParamPatch('plate', PlaneChart(0.0), Domain((-1.0, 1.0), (-1.0, 1.0)),
                             mask=DiscMask(keep=((0.0, 0.0, 1.0),)))
        result = integrate_patch(plateau, 1e-10, extra_mask=BallMask((0.0, 0.0, 0.3), 0.5))
        assert result.values[0] == pytest.approx(np.pi * 0.16)

    def test_polar_disc_matches_formula(self):
        result = integrate_patch(flat_disc(2.0).patches[0], 1e-9)
        assert result.values[0] == pytest.approx(4 * np.pi, abs=1e-8)

    def test_masked_annulus_by_refinement(self):
        patch = ParamPatch('annulus', PlaneChart(0.0), Domain((-1.0, 1.0), (-1.0, 1.0)),
                           mask=DiscMask(keep=((0.0, 0.0, 1.0),), holes=((0.3, 0.0, 0.2),)))
        # generic route: no closed form when a non-ball mask is intersected
        ring = DiscMask(keep=((0.0, 0.0, 0.9),))
        result = integrate_patch(patch, 1e-3, extra_mask=ring)
        assert result.values[0] == pytest.approx(np.pi * (0.81 - 0.04), abs=1e-3)


class TestRevolution:
    """Test suite for the 1D revolution rule."""

    def test_catenoid_gauss_total(self):
        result = integrate_patch(flattened_catenoid(2.0).patches[0], 1e-9)
        assert result.as_dict()['gauss'] == pytest.approx(-4 * np.pi, abs=1e-6)
        assert result.converged


class TestParallel:
    """Thread workers keep patch order and values."""

    def test_workers_agree(self):
        patches = flattened_sphere(0.1).patches
        serial = integrate_patches(patches, 1e-7)
        threaded = integrate_patches(patches, 1e-7, workers=4)
        assert [r.name for r in threaded] == [p.name for p in patches]
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.values, b.values)
