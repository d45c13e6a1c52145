"""
Verification suites: each runs a family of quantitative checks and returns a
SuiteReport of named pass/fail results.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, List

import numpy as np

from helfrich_forge.constructions import (
    flattened_catenoid, flattened_sphere, genus_surface, plateau_height, rescale_to_area, round_sphere,
)
from helfrich_forge.diagnostics import (
    atom_check, convergence_distance, li_yau_density_check, mueller_roeger_check,
)
from helfrich_forge.energy import DEFAULT_TOL, HelfrichParams, integrate
from helfrich_forge.mesh import euler_genus, is_connected, triangulate
from helfrich_forge.optimizer import (
    bump_scaling, catenoid_decay, helfrich_divergence_demo, tuned_spec,
)
from helfrich_forge.presets import PresetLibrary
from helfrich_forge.profiles import Mollifier, make_catenoid_profile, make_transition_profile
from helfrich_forge.surface_core import curvature_at, verify_derivatives

logger = logging.getLogger(__name__)

# Relative slack on dW/t against the two-point constant C
BUMP_RATE_TOL = 0.25


@dataclass
class Check:
    name: str
    passed: bool
    value: Any = None
    expected: Any = None


@dataclass
class SuiteReport:
    suite: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed, value=None, expected=None) -> None:
        self.checks.append(Check(name, bool(passed), _plain(value), _plain(expected)))
        if not passed:
            logger.warning(f"[{self.suite}] {name} failed: value={value}, expected={expected}")

    def to_dict(self) -> dict:
        return {'suite': self.suite, 'passed': self.passed, 'checks': [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _plain(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def suite_profiles(**_) -> SuiteReport:
    report = SuiteReport('profiles')
    for delta in (0.02, 0.05, 0.1):
        report.add(f"transition delta={delta}", not make_transition_profile(delta).violations())
    profile = make_transition_profile(0.1)
    report.add('r(0.1) at delta=0.1', abs(profile.r_fn(0.1) - 0.3) < 1e-14, float(profile.r_fn(0.1)), 0.3)
    report.add('r(0.5) at delta=0.1', abs(profile.r_fn(0.5) - 0.5) < 1e-14, float(profile.r_fn(0.5)), 0.5)
    ddr = profile.ddr_fn(np.linspace(0.2, 0.4, 1000)).max()
    report.add("max r'' at delta=0.1", ddr <= 40.0, float(ddr), '<= 40')
    for R in (2.0, 3.0, 5.0):
        report.add(f"catenoid profile R={R}", not make_catenoid_profile(R).violations())
    report.add('mollifier', not Mollifier().violations())
    return report


def _fixture_assemblies(presets: PresetLibrary):
    return {
        'unit sphere': round_sphere(),
        'flattened sphere 0.1': flattened_sphere(0.1),
        'flattened catenoid 3': flattened_catenoid(3.0, outer_radius=30.0),
        'genus 1 two sheets': genus_surface(presets.spec(2, 1)),
    }


def suite_curvature(presets: PresetLibrary = None, **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('curvature')
    for label, assembly in _fixture_assemblies(presets).items():
        worst = max(verify_derivatives(p, samples=100).max_deviation for p in assembly.patches)
        report.add(f"derivatives {label}", worst < 1e-6, worst, '< 1e-6')
        am_gm = True
        for patch in assembly.patches:
            u, v = patch.sample_grid(16)
            point = curvature_at(patch, u, v)
            flipped = curvature_at(patch.flipped(), u, v)
            am_gm &= bool(np.all(point.H ** 2 - 4.0 * point.K >= -1e-9 * (1.0 + point.H ** 2)))
            report.add(f"orientation flip {label}/{patch.name}",
                       np.allclose(flipped.H, -point.H) and np.allclose(flipped.K, point.K))
        report.add(f"H^2 >= 4K {label}", am_gm)
    return report


def suite_gauss_bonnet(presets: PresetLibrary = None, tol: float = DEFAULT_TOL, workers: int = 1,
                       resolution: int = 64, **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('gauss-bonnet')
    sphere = integrate(flattened_sphere(0.05), tol=tol, workers=workers)
    report.add('flattened sphere int K', abs(sphere.total_gauss - 4 * np.pi) < 1e-4, sphere.total_gauss, 4 * np.pi)
    for R in (2.0, 5.0):
        cat = integrate(flattened_catenoid(R), tol=tol)
        report.add(f"catenoid int K R={R}", abs(cat.total_gauss + 4 * np.pi) < 1e-3, cat.total_gauss, -4 * np.pi)
    for m in (2, 3):
        for g in range(4):
            assembly = genus_surface(presets.spec(m, g))
            total = integrate(assembly, tol=tol, workers=workers).total_gauss
            expected = 4 * np.pi * (1 - g)
            report.add(f"int K m={m} g={g}", abs(total - expected) < 1e-2, total, expected)
            mesh = triangulate(assembly, resolution=resolution)
            genus = euler_genus(mesh)
            report.add(f"mesh genus m={m} g={g}", genus == g, genus, g)
            report.add(f"mesh connected m={m} g={g}", is_connected(mesh))
    return report


def tuned_family_assemblies(presets: PresetLibrary, tol: float = DEFAULT_TOL, workers: int = 1,
                            deltas=None) -> dict:
    """Tuned genus-1 surfaces of the preset delta family, rescaled to area 4 pi m."""
    family = presets.tuned_family
    m = family['m']
    assemblies = {}
    for delta in deltas or family['deltas']:
        spec = tuned_spec(m, 1, delta, family['R'], family['theta_eta'], family['alpha'], tol)
        assemblies[delta] = rescale_to_area(genus_surface(spec), 4 * np.pi * m, workers=workers)
    return assemblies


def suite_mueller_roeger(presets: PresetLibrary = None, tol: float = DEFAULT_TOL, workers: int = 1,
                         **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('mueller-roeger')
    fixtures = {
        'unit sphere': round_sphere(),
        'sphere x2': round_sphere(multiplicity=2),
        'half sphere radius': round_sphere(0.5),
        'flattened sphere 0.1': flattened_sphere(0.1),
        'flattened sphere 0.05': flattened_sphere(0.05),
        'flattened sphere 0.1 halved': flattened_sphere(0.1).scaled(0.5),
    }
    for m, g in ((2, 0), (2, 1), (3, 1)):
        fixtures[f"genus {g} m={m}"] = genus_surface(presets.spec(m, g))
    deltas = presets.tuned_family['deltas']
    finest = min(deltas)
    for delta, assembly in tuned_family_assemblies(presets, tol, workers, deltas=deltas[1:]).items():
        fixtures[f"tuned {delta}"] = assembly
    for label, assembly in fixtures.items():
        check = mueller_roeger_check(assembly, tol=tol, workers=workers)
        report.add(f"W >= area {label}", check.passed, check.margin, f">= -{check.err:.3g}")
        if label == 'unit sphere':
            report.add('equality on the unit sphere', abs(check.margin) < 1e-5, check.margin, 0.0)
    finest_check = mueller_roeger_check(fixtures[f"tuned {finest}"], tol=tol, workers=workers)
    report.add(f"small margin tuned {finest}", finest_check.margin < 0.5, finest_check.margin, '< 0.5')
    return report


def suite_li_yau(presets: PresetLibrary = None, seed: int = 0, points: int = 20, workers: int = 1,
                 **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('li-yau')
    rng = np.random.default_rng(seed)
    fixtures = {
        'unit sphere': round_sphere(),
        'sphere x2': round_sphere(multiplicity=2),
        'flattened sphere 0.1': flattened_sphere(0.1),
        'flattened catenoid 2': flattened_catenoid(2.0, outer_radius=10.0).scaled(0.1),
        'genus 1 two sheets': genus_surface(presets.spec(2, 1)),
    }
    radii = (0.1, 0.25, 0.5)
    for label, assembly in fixtures.items():
        cloud = assembly.sample_points(24)
        picks = cloud[rng.choice(len(cloud), size=points, replace=False)]
        failures = 0
        for x in picks:
            failures += not li_yau_density_check(assembly, x, radii, workers=workers).passed
        report.add(f"density inequality {label}", failures == 0, failures, 0)
    for delta in presets.tuned_family['deltas']:
        pole_check, atoms = north_pole_densities(genus_surface(presets.spec(2, 1, delta=delta)), delta,
                                                 workers=workers)
        floor = min(row.rhs + row.err for row in pole_check.rows)
        report.add(f"north pole delta={delta}", pole_check.passed and floor >= 2.0 * (1.0 - 1e-3), floor, '>= 2')
        report.add(f"no atom at north pole delta={delta}", atoms.passed and min(atoms.densities) > 0.0,
                   atoms.densities, f"<= {atoms.bound}")
    return report


def north_pole_densities(assembly, delta: float, workers: int = 1):
    """
    Density inequality on balls of radius delta/2 and delta, and the atom
    ladder delta/2, delta/4, delta/8, at the outer plateau centre where two
    sheets nearly touch.
    """
    pole = np.array([0.0, 0.0, plateau_height(delta)])
    check = li_yau_density_check(assembly, pole, (0.5 * delta, delta), workers=workers)
    atoms = atom_check(assembly, pole, (0.5 * delta, 0.25 * delta, 0.125 * delta), workers=workers)
    return check, atoms


def suite_convergence(presets: PresetLibrary = None, tol: float = DEFAULT_TOL, workers: int = 1,
                      **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('convergence')
    family = presets.tuned_family
    m = family['m']
    sphere = round_sphere(multiplicity=m)
    base = convergence_distance(sphere, m, workers=workers)
    report.add(f"{m}-fold sphere distance", base < 1e-4, base, 0.0)
    distances = [convergence_distance(assembly, m, workers=workers)
                 for assembly in tuned_family_assemblies(presets, tol, workers).values()]
    report.add('distance strictly decreasing', all(a > b for a, b in zip(distances, distances[1:])), distances)
    report.add('final distance below 0.5', distances[-1] < 0.5, distances[-1], '< 0.5')
    return report


def suite_decay(presets: PresetLibrary = None, **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('decay')
    radii = presets.list_value('decay_radii')
    energies, fit = catenoid_decay(radii)
    report.add('catenoid slope', -2.4 <= fit.slope <= -1.8, fit.slope, '[-2.4, -1.8]')
    report.add('catenoid fit residual', fit.residual < 0.1, fit.residual, '< 0.1')
    return report


def suite_divergence(presets: PresetLibrary = None, tol: float = DEFAULT_TOL, workers: int = 1,
                     **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('divergence')
    table = helfrich_divergence_demo(0.25, 1.0, 0.0, presets.list_value('divergence_genera'),
                                     tol=tol, workers=workers)
    energies = [row['energy'] for row in table.rows]
    report.add('energy strictly decreasing in g', all(a > b for a, b in zip(energies, energies[1:])), energies)
    target = -4.0 * np.pi
    report.add('slope near -4 pi chi_K', abs(table.fit.slope - target) <= 0.2 * abs(target), table.fit.slope, target)
    return report


def suite_bump(presets: PresetLibrary = None, tol: float = DEFAULT_TOL, **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('bump')
    assembly = genus_surface(presets.spec(2, 1))
    scaling = bump_scaling(assembly, presets.list_value('bump_amplitudes'))
    report.add('area exponent', 1.7 <= scaling.area_fit.slope <= 2.3, scaling.area_fit.slope, '[1.7, 2.3]')
    report.add('area increases', all(r['delta_area'] > 0 for r in scaling.rows))
    rates = [r['willmore_per_t'] for r in scaling.rows]
    C = scaling.willmore_constant
    report.add('Willmore change per t bounded', scaling.willmore_bounded(BUMP_RATE_TOL), rates,
               f"<= {C * (1.0 + BUMP_RATE_TOL):.6g}")
    return report


def sphere_helfrich(m: int, params: HelfrichParams) -> float:
    """Helfrich energy of the m-fold unit sphere when H0 = 0."""
    return 4 * np.pi * m * (4 * params.chi_H - abs(params.chi_K))


def suite_helfrich(presets: PresetLibrary = None, tol: float = DEFAULT_TOL, workers: int = 1,
                   **_) -> SuiteReport:
    presets = presets or PresetLibrary()
    report = SuiteReport('helfrich')
    params = HelfrichParams(0.25, -1.0, 0.0)
    for m in (2, 3):
        energy = integrate(round_sphere(multiplicity=m), tol=min(tol, 1e-8), params=params).helfrich
        expected = sphere_helfrich(m, params)
        report.add(f"{m}-fold sphere", abs(energy - expected) < 1e-6 * m, energy, expected)
    m = presets.tuned_family['m']
    floor = sphere_helfrich(m, params) + 1.0
    for delta, assembly in tuned_family_assemblies(presets, tol, workers).items():
        energy = integrate(assembly, tol=tol, workers=workers, params=params).helfrich
        report.add(f"tuned {delta} above {m}-fold sphere", energy > floor, energy, f"> {floor:.6g}")
    return report


SUITES = {
    'profiles': suite_profiles,
    'curvature': suite_curvature,
    'gauss-bonnet': suite_gauss_bonnet,
    'mueller-roeger': suite_mueller_roeger,
    'li-yau': suite_li_yau,
    'convergence': suite_convergence,
    'decay': suite_decay,
    'divergence': suite_divergence,
    'bump': suite_bump,
    'helfrich': suite_helfrich,
}


def run_suite(name: str, **options) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite '{name}'; choose from {', '.join(SUITES)}")
    logger.info(f"Running verification suite '{name}'")
    return SUITES[name](**options)
