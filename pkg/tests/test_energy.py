"""
Tests for the curvature functionals and EnergyReport.
"""

import pytest
import sys
import os
import json
import numpy as np

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from helfrich_forge.constructions import (
    default_spec, flattened_catenoid, flattened_sphere, genus_surface, round_sphere,
)
from helfrich_forge.energy import (
    CSV_COLUMNS, HelfrichParams, evaluate, genus_from_gauss, helfrich, integrate, reports_frame,
)
from helfrich_forge.errors import InvalidSpec, NoConvergence, NonIntegerGenus


class TestSphereEnergy:
    """Test suite for round spheres of various multiplicities."""

    def test_unit_sphere(self):
        report = integrate(round_sphere(), tol=1e-8)
        assert report.area == pytest.approx(4 * np.pi, abs=1e-7)
        assert report.willmore == pytest.approx(4 * np.pi, abs=1e-7)
        assert report.total_gauss == pytest.approx(4 * np.pi, abs=1e-7)
        assert report.excess(1) == pytest.approx(0.0, abs=1e-7)

    @pytest.mark.parametrize('m', [2, 3])
    def test_multiplicity_scales_totals(self, m):
        report = integrate(round_sphere(multiplicity=m), tol=1e-8)
        assert report.multiplicity_applied == m
        assert report.area == pytest.approx(4 * np.pi * m, abs=1e-6)
        assert report.willmore == pytest.approx(4 * np.pi * m, abs=1e-6)

    def test_scale_invariance_of_willmore(self):
        report = integrate(round_sphere(radius=0.3), tol=1e-8)
        assert report.willmore == pytest.approx(4 * np.pi, abs=1e-7)
        assert report.area == pytest.approx(4 * np.pi * 0.09, abs=1e-7)


class TestHelfrich:
    """Test suite for the Helfrich energy."""

    @pytest.mark.parametrize('m', [1, 2, 3])
    def test_negative_saddle_modulus(self, m):
        params = HelfrichParams(0.25, -1.0, 0.0)
        energy = helfrich(round_sphere(multiplicity=m), params, tol=1e-8)
        assert energy == pytest.approx(4 * np.pi * m * (4 * 0.25 - 1.0), abs=1e-6)

    def test_spontaneous_curvature_matching_sphere(self):
        # H = -2 on the outward unit sphere, so (H - H0)^2 vanishes for H0 = -2
        params = HelfrichParams(1.0, 0.0, -2.0)
        assert helfrich(round_sphere(), params, tol=1e-8) == pytest.approx(0.0, abs=1e-6)

    def test_chi_H_positive(self):
        with pytest.raises(InvalidSpec):
            HelfrichParams(0.0, 1.0, 0.0)

    def test_report_carries_params(self):
        params = HelfrichParams(0.5, 0.1, 0.0)
        report = evaluate(round_sphere(), params=params, tol=1e-8)
        assert report.params == params
        assert report.helfrich == pytest.approx(0.5 * 16 * np.pi + 0.1 * 4 * np.pi, abs=1e-6)
        assert 'helfrich' in report.err_estimate


class TestFlattenedFixtures:
    """Energies of the flattened sphere and catenoid."""

    def test_flattened_sphere_gauss_bonnet(self):
        report = integrate(flattened_sphere(0.05), tol=1e-6)
        assert report.total_gauss == pytest.approx(4 * np.pi, abs=1e-4)
        assert report.area < 4 * np.pi
        assert report.willmore > 4 * np.pi

    def test_flattened_catenoid(self):
        report = integrate(flattened_catenoid(3.0), tol=1e-6)
        assert report.total_gauss == pytest.approx(-4 * np.pi, abs=1e-3)

    def test_flattening_excess_shrinks_with_delta(self):
        excess = [integrate(flattened_sphere(delta), tol=1e-8).excess(1) for delta in (0.14, 0.1, 0.05)]
        assert all(e > 0.0 for e in excess)
        assert excess[0] > excess[1] > excess[2]
        assert excess[1] == pytest.approx(0.298, abs=0.01)
        assert excess[2] == pytest.approx(0.074, abs=0.01)

    def test_sff_identity(self):
        report = integrate(flattened_sphere(0.1), tol=1e-8)
        assert report.total_sff == pytest.approx(4 * report.willmore - 2 * report.total_gauss, abs=1e-9)

    def test_refinement_within_error_estimate(self):
        coarse = integrate(flattened_sphere(0.1), tol=1e-6)
        fine = integrate(flattened_sphere(0.1), tol=5e-7)
        for name in ('area', 'willmore'):
            gap = abs(getattr(coarse, name) - getattr(fine, name))
            assert gap <= coarse.err_estimate[name] + 1e-12


@pytest.mark.slow
class TestGlued:
    """Energies of the glued genus surfaces against their pieces."""

    def setup_method(self):
        """Set up the test environment."""
        self.spec = default_spec(2, 1)
        self.report = integrate(genus_surface(self.spec), tol=1e-8)

    def test_willmore_is_additive_over_pieces(self):
        sheet = integrate(flattened_sphere(self.spec.delta), tol=1e-8).willmore
        neck = integrate(flattened_catenoid(self.spec.R), tol=1e-8).willmore
        expected = self.spec.m * sheet + self.spec.neck_count * neck
        assert self.report.willmore == pytest.approx(expected, abs=1e-5)

    def test_sff_identity(self):
        report = self.report
        assert report.total_sff == pytest.approx(4 * report.willmore - 2 * report.total_gauss, abs=1e-8)


class TestGenus:
    """Test suite for genus_from_gauss."""

    def test_sphere_genus(self):
        assert genus_from_gauss(round_sphere(multiplicity=2), tol=1e-8) == 0

    def test_open_surface_rejected(self):
        with pytest.raises(NonIntegerGenus):
            genus_from_gauss(flattened_catenoid(2.0))


class TestErrors:
    """Tolerance handling."""

    def test_nonpositive_tol(self):
        with pytest.raises(InvalidSpec):
            integrate(round_sphere(), tol=0.0)

    def test_no_convergence_carries_estimate(self):
        with pytest.raises(NoConvergence) as info:
            integrate(round_sphere(), tol=1e-15, max_depth=1)
        assert info.value.estimate.area == pytest.approx(4 * np.pi, rel=1e-3)

    def test_non_strict_returns_report(self):
        report = integrate(round_sphere(), tol=1e-15, max_depth=1, strict=False)
        assert report.combined_err > 0.0


class TestSerialisation:
    """JSON and CSV output of EnergyReport."""

    def setup_method(self):
        self.report = integrate(round_sphere(multiplicity=2), tol=1e-7, params=HelfrichParams())

    def test_json_round_trip_of_fields(self):
        data = json.loads(self.report.to_json())
        assert data['multiplicity_applied'] == 2
        assert data['params'] == {'chi_H': 0.25, 'chi_K': 0.0, 'H0': 0.0}
        assert 'per_patch' not in data
        assert len(json.loads(self.report.to_json(per_patch=True))['per_patch']) == 1

    def test_csv_columns(self):
        header, row = self.report.to_csv().splitlines()
        assert header.split(',') == CSV_COLUMNS
        assert len(row.split(',')) == len(CSV_COLUMNS)

    def test_frame(self):
        frame = reports_frame([self.report, self.report])
        assert list(frame.columns) == CSV_COLUMNS
        assert len(frame) == 2
