"""
Tests for construction specs and the assembled surfaces.
"""

import pytest
import sys
import os
import json
from dataclasses import replace
import numpy as np

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from helfrich_forge.constructions import (
    BumpSpec, GenusSurfaceSpec, centers_required, default_spec, flattened_catenoid, flattened_sphere,
    genus_surface, innermost_cap_name, plateau_height, rescale_to_area, round_sphere, south_pole_bump, with_bump,
)
from helfrich_forge.energy import integrate
from helfrich_forge.errors import GluingConflict, InfeasibleProfile, InvalidSpec, SupportTooLarge
from helfrich_forge.profiles import FlatteningHeight, check_concave, make_transition_profile


class TestGenusSurfaceSpec:
    """Test suite for spec validation and serialisation."""

    @pytest.mark.parametrize('m,g', [(2, 0), (2, 1), (2, 5), (3, 0), (3, 2), (4, 1)])
    def test_default_specs_are_valid(self, m, g):
        spec = default_spec(m, g)
        assert spec.violations() == []
        assert len(spec.centers) == centers_required(m, g)
        assert 0.0 < spec.r < 1.0
        assert spec.neck_count == m + g - 1
        assert len(spec.neck_layout()) == spec.neck_count

    def test_alternating_deep_necks(self):
        layout = default_spec(4, 1).neck_layout()
        assert layout == [(0, 0), (0, 1), (1, 2), (2, 0)]

    def test_large_delta_rejected(self):
        spec = default_spec(2, 1, delta=0.3)
        with pytest.raises(InvalidSpec) as info:
            spec.validate()
        assert any('delta=0.3' in v for v in info.value.violations)

    def test_all_violations_reported(self):
        spec = replace(default_spec(2, 1), R=0.5, t=-1.0, alpha=0.0)
        problems = spec.violations()
        assert any(p.startswith('R=0.5') for p in problems)
        assert any('t=-1.0' in p for p in problems)
        assert any('alpha=0.0' in p for p in problems)

    def test_plateau(self):
        spec = default_spec(2, 1, delta=0.1)
        assert spec.plateau == pytest.approx(np.sqrt(1 - 0.09))
        assert plateau_height(0.1) == spec.plateau

    def test_json_round_trip(self):
        spec = default_spec(3, 2, t=0.01)
        text = spec.to_json()
        assert GenusSurfaceSpec.from_json(text) == spec
        assert GenusSurfaceSpec.from_json(text).to_json() == text
        assert json.loads(text)['spec_version'] == 1

    def test_unknown_key(self):
        data = default_spec(2, 1).to_dict()
        data['colour'] = 'red'
        with pytest.raises(InvalidSpec) as info:
            GenusSurfaceSpec.from_dict(data)
        assert "unknown key 'colour'" in info.value.violations

    def test_missing_key_and_version(self):
        data = default_spec(2, 1).to_dict()
        del data['eta']
        with pytest.raises(InvalidSpec):
            GenusSurfaceSpec.from_dict(data)
        with pytest.raises(InvalidSpec):
            GenusSurfaceSpec.from_dict({**default_spec(2, 1).to_dict(), 'spec_version': 2})

    def test_bad_json(self):
        with pytest.raises(InvalidSpec):
            GenusSurfaceSpec.from_json('{not json')


class TestGenusSurface:
    """Test suite for genus_surface."""

    def setup_method(self):
        self.spec = default_spec(2, 1)
        self.assembly = genus_surface(self.spec)

    def test_patch_inventory(self):
        names = [p.name for p in self.assembly.patches]
        assert len(names) == 4 * self.spec.m + self.spec.neck_count
        assert len([n for n in names if n.startswith('neck')]) == self.spec.neck_count

    def test_sheet_orientation_alternates(self):
        assert self.assembly.patch('sheet0-band').orientation == 1
        assert self.assembly.patch('sheet1-band').orientation == -1

    def test_inside_unit_ball(self):
        assert self.assembly.contained_in_ball(1.0)
        assert self.assembly.meta.genus == 1

    def test_overlapping_necks(self):
        spec = replace(self.spec, centers=((0.0, 0.0), (0.0, 0.0)))
        with pytest.raises(GluingConflict) as info:
            genus_surface(spec)
        assert info.value.violations

    def test_neck_wider_than_cylinder(self):
        spec = replace(self.spec, eta=self.spec.rho)
        with pytest.raises(GluingConflict):
            genus_surface(spec)

    def test_invalid_spec_not_built(self):
        with pytest.raises(InvalidSpec):
            genus_surface(replace(self.spec, m=1))

    @pytest.mark.slow
    def test_gauss_bonnet(self):
        report = integrate(self.assembly, tol=1e-5)
        assert report.total_gauss == pytest.approx(0.0, abs=1e-2)


class TestSouthPoleBump:
    """Test suite for the area-restoring bump."""

    def setup_method(self):
        self.assembly = genus_surface(default_spec(2, 1))

    def test_zero_amplitude_is_identity(self):
        assert south_pole_bump(self.assembly, BumpSpec(0.0)) is self.assembly

    def test_bump_lifts_innermost_pole(self):
        t = 0.02
        bumped = south_pole_bump(self.assembly, BumpSpec(t, 0.5))
        name = innermost_cap_name(bumped)
        assert name == 'sheet1-cap'
        cap = bumped.patch(name)
        z = cap.points(np.array([1e-6]), np.array([0.0]))[0, 2]
        assert z == pytest.approx(-cap.scale + t * np.exp(-1.0), abs=1e-9)
        assert bumped.patch('sheet0-cap') == self.assembly.patch('sheet0-cap')

    def test_support_too_large(self):
        with pytest.raises(SupportTooLarge):
            south_pole_bump(self.assembly, BumpSpec(0.04, alpha=10.0))

    def test_spec_bump_applied(self):
        spec = with_bump(default_spec(2, 1), 0.02)
        cap = genus_surface(spec).patch('sheet1-cap')
        assert cap.chart.profile.amplitude > 0.0


class TestFixtures:
    """Round spheres, catenoids and rescaling."""

    def test_round_sphere_meta(self):
        sphere = round_sphere(radius=0.5, multiplicity=3, center=(0.1, 0.0, 0.0))
        assert sphere.multiplicity == 3
        assert sphere.meta.ball_radius == pytest.approx(0.6)

    def test_catenoid_annuli(self):
        bare = flattened_catenoid(2.0)
        wide = flattened_catenoid(2.0, outer_radius=50.0)
        assert len(bare.patches) == 1
        assert [p.name for p in wide.patches] == ['neck', 'annulus-top', 'annulus-bottom']
        assert not wide.meta.closed

    def test_rescale_to_area(self):
        sphere = rescale_to_area(round_sphere(), 16 * np.pi)
        assert sphere.patches[0].scale == pytest.approx(2.0, rel=1e-8)
        assert sphere.meta.ball_radius == pytest.approx(2.0, rel=1e-8)

    @pytest.mark.slow
    def test_rescale_keeps_scale_invariant_totals(self):
        assembly = genus_surface(default_spec(2, 3))
        before = integrate(assembly, tol=1e-7)
        after = integrate(rescale_to_area(assembly, 8 * np.pi, area=before.area), tol=1e-7)
        assert after.area == pytest.approx(8 * np.pi, rel=1e-6)
        assert after.willmore == pytest.approx(before.willmore, abs=1e-6)
        assert after.total_gauss == pytest.approx(before.total_gauss, abs=1e-6)


class ConvexHeight:
    """Radial height z = s^2, convex everywhere."""

    def evaluate(self, s):
        s = np.asarray(s, dtype=float)
        return s ** 2, 2.0 * s, np.full_like(s, 2.0)


class TestFlatteningConcavity:
    """The flattened cap is the graph of a concave function."""

    @pytest.mark.parametrize('delta', [0.02, 0.05, 0.1, 0.14])
    def test_flattening_height_is_concave(self, delta):
        height = FlatteningHeight(make_transition_profile(delta))
        assert check_concave(height, 4.0 * delta) <= 1e-10

    def test_convex_height_rejected(self):
        with pytest.raises(InfeasibleProfile):
            check_concave(ConvexHeight(), 0.4)

    def test_flattened_sphere_checks_concavity(self, monkeypatch):
        import helfrich_forge.constructions as constructions
        monkeypatch.setattr(constructions, 'FlatteningHeight', lambda transition: ConvexHeight())
        with pytest.raises(InfeasibleProfile):
            flattened_sphere(0.1)
