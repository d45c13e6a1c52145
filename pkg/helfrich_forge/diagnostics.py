"""
Checks of the geometric inequalities and convergence statements on
constructed surfaces.

Ball-restricted quantities (mass, Willmore energy inside a ball) come from
the same adaptive quadrature as the global functionals, with a BallMask
intersected into every patch.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from helfrich_forge.energy import DEFAULT_TOL, HelfrichParams, genus_from_gauss, integrate
from helfrich_forge.errors import ContradictionDetected, InvalidSpec, NotInBall
from helfrich_forge.masks import BallMask

logger = logging.getLogger(__name__)

# Radii probing mu(B_r(0)) against the multiply covered unit sphere; r = 1 is excluded.
CONVERGENCE_RADII = (0.25, 0.5, 0.75, 0.9, 0.95, 0.97, 0.98, 0.99, 0.995, 0.999,
                     1.001, 1.005, 1.01, 1.02, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0)

DENSITY_CELLS = 200


@dataclass
class BallIntegral:
    radius: float
    mass: float
    willmore: float
    err: float
    cells: int


def ball_integral(assembly, center, radius: float, tol: float = 1e-5, max_depth: int = 12,
                  workers: int = 1) -> BallIntegral:
    """Mass and Willmore energy of the part of the assembly inside B_radius(center)."""
    mask = BallMask(tuple(float(c) for c in center), float(radius))
    report = integrate(assembly, tol=tol, max_depth=max_depth, workers=workers,
                       extra_mask=mask, strict=False)
    cells = sum(p['cells'] for p in report.per_patch)
    err = report.err_estimate['area'] + report.err_estimate['willmore']
    return BallIntegral(float(radius), report.area, report.willmore, float(err), int(cells))


@dataclass
class MuellerRoegerReport:
    lhs: float
    rhs: float
    margin: float
    err: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def mueller_roeger_check(assembly, tol: float = DEFAULT_TOL, report=None, workers: int = 1) -> MuellerRoegerReport:
    """
    W >= area for surfaces in the closed unit ball.

    Raises:
        NotInBall: if sampled points leave the closed unit ball
    """
    if not assembly.contained_in_ball(1.0):
        raise NotInBall(f"assembly reaches radius {assembly.max_radius():.6g} > 1")
    if report is None:
        report = integrate(assembly, tol=tol, workers=workers)
    margin = report.willmore - report.area
    err = report.err_estimate['willmore'] + report.err_estimate['area'] + 2.0 * tol
    passed = bool(margin >= -err)
    logger.info(f"Willmore-area margin {margin:.6g} (err {err:.3g})")
    return MuellerRoegerReport(report.willmore, report.area, float(margin), float(err), passed)


@dataclass
class LiYauRow:
    r: float
    mass: float
    willmore_in_ball: float
    rhs: float
    theta2: float
    err: float
    passed: bool


@dataclass
class LiYauReport:
    center: List[float]
    theta2: float
    theta_radius: float
    rows: List[LiYauRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_dict(self) -> dict:
        return {'center': self.center, 'theta2': self.theta2, 'theta_radius': self.theta_radius,
                'passed': self.passed, 'rows': [asdict(r) for r in self.rows]}


def nearest_surface_point(assembly, point, n: int = 48):
    samples = assembly.sample_points(n)
    return samples[np.argmin(np.linalg.norm(samples - np.asarray(point), axis=1))]


def estimate_density(assembly, center, start: float, levels: int = 6, tol: float = 1e-6,
                     workers: int = 1):
    """
    Area density mu(B_s)/(pi s^2) at the smallest s = start * 2^-j reaching
    DENSITY_CELLS quadrature cells; falls back to the smallest s whose mass is
    resolved to 1e-3 relative.
    """
    balls = [ball_integral(assembly, center, start * 0.5 ** j, tol=tol * 0.25 ** j, workers=workers)
             for j in range(levels)]
    dense = [b for b in balls if b.cells >= DENSITY_CELLS and b.mass > 0.0]
    if not dense:
        dense = [b for b in balls if b.mass > 0.0 and b.err <= 1e-3 * b.mass] or balls[:1]
    pick = dense[-1]
    return pick.mass / (np.pi * pick.radius ** 2), pick


def li_yau_density_check(assembly, center, r_list, tol: float = 1e-5, workers: int = 1) -> LiYauReport:
    """
    Theta^2(x) <= mu(B_r)/(pi r^2) + (1/4pi) int_{B_r} H^2 for each r.

    The centre is snapped to the nearest sampled surface point. Theta^2 is
    estimated from a ladder of small balls below min(r_list).
    """
    x = nearest_surface_point(assembly, center)
    theta2, pick = estimate_density(assembly, x, 0.25 * min(r_list), tol=tol, workers=workers)
    theta_err = pick.err / (np.pi * pick.radius ** 2)
    report = LiYauReport(center=[float(c) for c in x], theta2=float(theta2), theta_radius=pick.radius)
    for r in r_list:
        ball = ball_integral(assembly, x, r, tol=tol, workers=workers)
        rhs = ball.mass / (np.pi * r ** 2) + ball.willmore / np.pi
        err = ball.err / (np.pi * r ** 2) + ball.err / np.pi + theta_err
        report.rows.append(LiYauRow(float(r), ball.mass, ball.willmore, float(rhs), float(theta2),
                                    float(err), bool(theta2 <= rhs + err)))
    if not report.passed:
        logger.warning(f"Density inequality fails at {report.center}")
    return report


@dataclass
class SphereCriterionReport:
    E: float
    threshold: float
    is_sphere_certified: bool
    genus: Optional[int]

    def to_dict(self) -> dict:
        return asdict(self)


def sphere_criterion_check(assembly, params: HelfrichParams, tol: float = DEFAULT_TOL,
                           workers: int = 1) -> SphereCriterionReport:
    """
    E <= 4 chi_H area certifies a topological sphere when chi_K < 0 and H0 = 0.

    Raises:
        InvalidSpec: for chi_K >= 0 or H0 != 0
        NotInBall: if the assembly leaves the unit ball
        ContradictionDetected: if a certified surface has positive genus
    """
    if params.chi_K >= 0.0 or params.H0 != 0.0:
        raise InvalidSpec('sphere criterion needs chi_K < 0 and H0 = 0', ['chi_K < 0', 'H0 == 0'])
    if not assembly.contained_in_ball(1.0):
        raise NotInBall(f"assembly reaches radius {assembly.max_radius():.6g} > 1")
    report = integrate(assembly, tol=tol, workers=workers, params=params)
    threshold = 4.0 * params.chi_H * report.area
    certified = bool(report.helfrich <= threshold)
    genus = genus_from_gauss(assembly, report=report) if assembly.meta.closed else None
    if certified and genus:
        raise ContradictionDetected(f"E={report.helfrich:.6g} <= {threshold:.6g} but genus is {genus}")
    return SphereCriterionReport(float(report.helfrich), float(threshold), certified, genus)


@dataclass
class VarifoldBoundReport:
    energy_bound: float
    genus: int
    genus_bound: float
    total_sff: float
    sff_bound: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def curvature_varifold_bound(report, genus: int, energy_bound: Optional[float] = None) -> VarifoldBoundReport:
    """
    Genus and int |A|^2 bounds implied by E <= C when chi_K < 0.

    g <= C / (4 pi |chi_K|) + 1 and
    int |A|^2 <= (E + 4 pi |chi_K|) / chi_H + 8 pi (C / (4 pi |chi_K|) + 1),
    evaluated per sheet of multiplicity.
    """
    params = report.params
    if params is None or params.chi_K >= 0.0:
        raise InvalidSpec('curvature bound needs a Helfrich report with chi_K < 0', ['chi_K < 0'])
    theta = report.multiplicity_applied
    E = report.helfrich / theta
    C = E if energy_bound is None else energy_bound
    chi = abs(params.chi_K)
    genus_bound = C / (4.0 * np.pi * chi) + 1.0
    sff_bound = (E + 4.0 * np.pi * chi) / params.chi_H + 8.0 * np.pi * genus_bound
    sff = report.total_sff / theta
    slack = report.err_estimate['sff'] / theta
    passed = bool(genus <= genus_bound + 1e-9 and sff <= sff_bound + slack and E <= C + 1e-12)
    return VarifoldBoundReport(float(C), int(genus), float(genus_bound), float(sff), float(sff_bound), passed)


@dataclass
class MassProfile:
    center: List[float]
    radii: List[float]
    masses: List[float]
    errors: List[float]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'radius': self.radii, 'mass': self.masses, 'err': self.errors})


def mass_profile(assembly, center, radii, tol: float = 1e-5, workers: int = 1) -> MassProfile:
    """
    mu(B_r(center)) for each radius, forced nondecreasing.

    A monotonicity correction larger than the quadrature error is logged.
    """
    radii = sorted(float(r) for r in radii)
    balls = [ball_integral(assembly, center, r, tol=tol, workers=workers) for r in radii]
    raw = np.array([b.mass for b in balls])
    errors = np.array([b.err for b in balls])
    masses = np.maximum.accumulate(raw)
    noise = masses - raw
    if np.any(noise > errors + 1e-12):
        logger.warning(f"Mass profile corrected by {noise.max():.3g}, above its error estimate")
    return MassProfile([float(c) for c in center], radii, masses.tolist(), errors.tolist())


def sphere_ball_mass(radius: float) -> float:
    """Mass of B_radius(0) for the unit sphere (radius 1 itself excluded)."""
    return 0.0 if radius < 1.0 else 4.0 * np.pi


def convergence_distance(assembly, m: int, radii=CONVERGENCE_RADII, tol: float = 1e-5,
                         workers: int = 1) -> float:
    """sup_r |mu(B_r(0)) - m sigma(B_r(0))| over a fixed family of radii."""
    profile = mass_profile(assembly, (0.0, 0.0, 0.0), radii, tol=tol, workers=workers)
    gaps = [abs(mass - m * sphere_ball_mass(r)) for r, mass in zip(profile.radii, profile.masses)]
    distance = float(max(gaps))
    logger.info(f"Distance to the {m}-fold unit sphere: {distance:.6g}")
    return distance


@dataclass
class AtomReport:
    center: List[float]
    radii: List[float]
    densities: List[float]
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def atom_check(assembly, center, radii, sheets: Optional[int] = None, tol: float = 1e-6,
               workers: int = 1) -> AtomReport:
    """
    No atom at `center`: mu(B_s)/(pi s^2) stays below 1.25 * sheets * multiplicity
    as s shrinks, so mu(B_s) -> 0.
    """
    sheets = sheets or max(1, assembly.meta.sheets)
    bound = 1.25 * sheets * assembly.multiplicity
    densities = []
    for s in sorted(radii, reverse=True):
        ball = ball_integral(assembly, center, s, tol=tol, workers=workers)
        densities.append(float(ball.mass / (np.pi * s ** 2)))
    passed = bool(max(densities) <= bound)
    return AtomReport([float(c) for c in center], sorted(float(r) for r in radii)[::-1], densities, bound, passed)
