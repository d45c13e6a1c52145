"""
Builders for every surface of the gluing construction.

Sheet k of the genus surface is a flattened unit sphere scaled by r^k. Its
north plateau is a flat disc of radius 2 delta at height h_delta, and
rescaled flattened catenoids join coincident holes of adjacent plateaus.
All patches of a sheet are expressed in native (unit-sphere) coordinates and
placed by the patch scale.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Tuple

import numpy as np

from helfrich_forge.errors import GluingConflict, InvalidSpec, SupportTooLarge
from helfrich_forge.masks import DiscMask
from helfrich_forge.profiles import (
    CAP_ANGLE, DELTA_MAX, CoshProfile, FlatteningHeight, Mollifier, SouthCapHeight,
    check_concave, make_catenoid_profile, make_transition_profile,
)
from helfrich_forge.quadrature import integrate_patches
from helfrich_forge.surface_core import (
    AssemblyMeta, Domain, ParamPatch, PlaneChart, RadialGraphChart, RevolutionChart,
    SphereChart, SurfaceAssembly,
)

logger = logging.getLogger(__name__)

SPEC_VERSION = 1
POLE_GAP = 1e-8
FULL_TURN = (0.0, 2.0 * np.pi)


def plateau_height(delta: float) -> float:
    """Height of the flat north plateau of the flattened unit sphere."""
    return float(np.sqrt(1.0 - 9.0 * delta ** 2))


def centers_required(m: int, g: int) -> int:
    """Distinct neck centres: g+1 for two sheets, one more to alternate deeper necks."""
    return g + 1 if m == 2 else g + 2


@dataclass(frozen=True)
class GenusSurfaceSpec:
    """Parameters of the genus-g, m-sheet construction (world units of the outer sheet)."""
    m: int
    g: int
    delta: float
    R: float
    eta: float
    rho: float
    centers: Tuple[Tuple[float, float], ...]
    t: float = 0.0
    alpha: float = 0.5

    @property
    def plateau(self) -> float:
        return plateau_height(self.delta)

    @property
    def r(self) -> float:
        """Scale ratio between adjacent sheets."""
        h = self.plateau
        return (h - (2.0 * self.R + 1.0) * self.eta) / h

    @property
    def neck_count(self) -> int:
        return self.m + self.g - 1

    @property
    def hole_radius(self) -> float:
        return self.eta * float(np.cosh(self.R + 1.0))

    def neck_layout(self):
        """(upper sheet index, centre index) for every neck, in construction order."""
        layout = [(0, i) for i in range(self.g + 1)]
        for k in range(1, self.m - 1):
            layout.append((k, self.g + 1 if k % 2 == 1 else 0))
        return layout

    def violations(self) -> list:
        """Every violated construction constraint, as readable strings."""
        found = []
        if int(self.m) != self.m or self.m < 2:
            found.append(f"m={self.m}: sheet count must be an integer >= 2")
        if int(self.g) != self.g or self.g < 0:
            found.append(f"g={self.g}: genus must be an integer >= 0")
        if not 0.0 < self.delta < DELTA_MAX:
            found.append(f"delta={self.delta} outside (0, {DELTA_MAX})")
        if self.R < 1.0:
            found.append(f"R={self.R} must be >= 1")
        if not 0.0 < self.rho < self.delta / 2.0:
            found.append(f"rho={self.rho} outside (0, delta/2)")
        if self.m >= 2 and self.g >= 0 and len(self.centers) != centers_required(self.m, self.g):
            found.append(f"{len(self.centers)} centres given, {centers_required(self.m, self.g)} required")
        for i, c in enumerate(self.centers):
            if np.hypot(*c) + self.rho > self.delta / 2.0:
                found.append(f"disc {i} at {tuple(c)} leaves D_(delta/2)")
        for i, j in combinations(range(len(self.centers)), 2):
            gap = np.hypot(self.centers[i][0] - self.centers[j][0], self.centers[i][1] - self.centers[j][1])
            if gap <= 2.0 * self.rho:
                found.append(f"discs {i} and {j} overlap (distance {gap:.4g} <= {2 * self.rho:.4g})")
        if self.eta <= 0.0:
            found.append(f"eta={self.eta} must be positive")
        if self.hole_radius >= self.rho:
            found.append(f"eta*cosh(R+1)={self.hole_radius:.4g} >= rho={self.rho:.4g}")
        if self.eta * self.R >= self.delta ** 3:
            found.append(f"eta*R={self.eta * self.R:.4g} >= delta^3={self.delta ** 3:.4g}")
        if 0.0 < self.delta < 1.0 / 3.0 and not 0.0 < self.r < 1.0:
            found.append(f"sheet ratio r={self.r:.6g} outside (0, 1)")
        if self.t < 0.0:
            found.append(f"bump amplitude t={self.t} must be >= 0")
        if self.alpha <= 0.0:
            found.append(f"bump width factor alpha={self.alpha} must be positive")
        return found

    def validate(self) -> 'GenusSurfaceSpec':
        problems = self.violations()
        if problems:
            raise InvalidSpec(f"invalid construction parameters ({len(problems)} violations)", problems)
        return self

    def to_dict(self) -> dict:
        data = asdict(self)
        data['centers'] = [list(map(float, c)) for c in self.centers]
        data['spec_version'] = SPEC_VERSION
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> 'GenusSurfaceSpec':
        data = dict(data)
        version = data.pop('spec_version', SPEC_VERSION)
        if version != SPEC_VERSION:
            raise InvalidSpec(f"unsupported spec_version {version}", [f"spec_version={version}"])
        allowed = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - allowed)
        missing = sorted(k for k in ('m', 'g', 'delta', 'R', 'eta', 'rho', 'centers') if k not in data)
        if unknown or missing:
            problems = [f"unknown key '{k}'" for k in unknown] + [f"missing key '{k}'" for k in missing]
            raise InvalidSpec('malformed spec document', problems)
        data['centers'] = tuple(tuple(float(x) for x in c) for c in data['centers'])
        data['m'], data['g'] = int(data['m']), int(data['g'])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> 'GenusSurfaceSpec':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidSpec(f"spec is not valid JSON: {e}", [str(e)])
        return cls.from_dict(data)


def polygon_centers(n: int, radius: float):
    if n == 1:
        return ((0.0, 0.0),)
    angles = 2.0 * np.pi * np.arange(n) / n
    return tuple((float(radius * np.cos(a)), float(radius * np.sin(a))) for a in angles)


def neck_eta(delta: float, R: float, rho: float, theta_eta: float) -> float:
    """eta as a fraction theta_eta in (0, 1) of its largest admissible value."""
    return float(theta_eta * min(rho / np.cosh(R + 1.0), delta ** 3 / R))


def default_spec(m: int, g: int, delta: float = 0.05, R: float = 4.0,
                 theta_eta: float = 0.5, t: float = 0.0, alpha: float = 0.5) -> GenusSurfaceSpec:
    """
    Feasible spec with centres on a regular polygon of radius delta/4.

    Args:
        m: Number of sheets
        g: Genus
        delta: Flattening scale
        R: Neck parameter
        theta_eta: Neck scale as a fraction of its admissible maximum
        t: Bump amplitude
        alpha: Bump width factor

    Returns:
        GenusSurfaceSpec (not yet validated)
    """
    n = centers_required(m, g)
    rho = delta / (4.0 * (n + 1))
    return GenusSurfaceSpec(
        m=int(m), g=int(g), delta=float(delta), R=float(R),
        eta=neck_eta(delta, R, rho, theta_eta), rho=float(rho),
        centers=polygon_centers(n, delta / 4.0), t=float(t), alpha=float(alpha),
    )


@dataclass(frozen=True)
class BumpSpec:
    """Inward bump t * h(x / (alpha sqrt t)) added at the south pole of the innermost sheet."""
    t: float
    alpha: float = 0.5
    bump: Mollifier = field(default_factory=Mollifier)

    @property
    def width(self) -> float:
        return float(self.alpha * np.sqrt(self.t))

    def violations(self) -> list:
        found = list(self.bump.violations())
        if self.t < 0.0:
            found.append(f"t={self.t} must be >= 0")
        if self.alpha <= 0.0:
            found.append(f"alpha={self.alpha} must be positive")
        return found


def _cap_patch(name, lam, sign, cap_height=None, breaks=()):
    return ParamPatch(
        name=name,
        chart=RadialGraphChart(cap_height or SouthCapHeight()),
        domain=Domain((POLE_GAP, float(np.sin(CAP_ANGLE))), FULL_TURN, polar=True),
        orientation=-sign, scale=lam, breaks_u=tuple(breaks),
    )


def sheet_patches(delta: float, index: int = 0, lam: float = 1.0, holes=()):
    """
    Four patches of one flattened sphere scaled by lam.

    Args:
        delta: Flattening scale
        index: Sheet index; odd sheets have inward normals
        lam: Uniform scale of the sheet
        holes: (u, v, radius) discs removed from the plateau, in native units

    Returns:
        List of ParamPatch
    """
    transition = make_transition_profile(delta)
    sign = 1 if index % 2 == 0 else -1
    prefix = f"sheet{index}"
    theta0 = float(np.arcsin(4.0 * delta))
    height = FlatteningHeight(transition)
    check_concave(height, 4.0 * delta)
    return [
        ParamPatch(name=f"{prefix}-band", chart=SphereChart(),
                   domain=Domain((theta0, np.pi - CAP_ANGLE), FULL_TURN),
                   orientation=sign, scale=lam),
        _cap_patch(f"{prefix}-cap", lam, sign),
        ParamPatch(name=f"{prefix}-transition", chart=RadialGraphChart(height),
                   domain=Domain((2.0 * delta, 4.0 * delta), FULL_TURN, polar=True),
                   orientation=sign, scale=lam),
        ParamPatch(name=f"{prefix}-plateau", chart=PlaneChart(height.plateau),
                   domain=Domain((-2.0 * delta, 2.0 * delta), (-2.0 * delta, 2.0 * delta)),
                   mask=DiscMask(keep=((0.0, 0.0, 2.0 * delta),), holes=tuple(holes)),
                   orientation=sign, scale=lam),
    ]


def flattened_sphere(delta: float) -> SurfaceAssembly:
    """Unit sphere whose north cap is flattened to a plateau of radius 2 delta."""
    patches = sheet_patches(delta)
    logger.info(f"Built flattened sphere with delta={delta}")
    return SurfaceAssembly(tuple(patches), 1, AssemblyMeta(genus=0, sheets=1, ball_radius=1.0))


def neck_patch(name: str, R: float, scale: float = 1.0, offset=(0.0, 0.0, 0.0),
               orientation: int = 1) -> ParamPatch:
    profile = make_catenoid_profile(R)
    return ParamPatch(
        name=name, chart=RevolutionChart(CoshProfile(), profile),
        domain=Domain((-(R + 1.0), R + 1.0), FULL_TURN),
        orientation=orientation, scale=scale, offset=tuple(float(o) for o in offset),
        breaks_u=(-R, R),
    )


def flattened_catenoid(R: float, outer_radius: float = None) -> SurfaceAssembly:
    """
    Catenoid whose ends become the planes z = +-(R + 1/2) beyond |t| = R + 1.

    Args:
        R: Neck parameter (>= 1)
        outer_radius: If larger than cosh(R + 1), add the planar annuli out to it

    Returns:
        Open SurfaceAssembly
    """
    patches = [neck_patch('neck', R)]
    rim = float(np.cosh(R + 1.0))
    if outer_radius is not None and outer_radius > rim:
        for label, z, sign in (('top', R + 0.5, 1), ('bottom', -(R + 0.5), -1)):
            patches.append(ParamPatch(
                name=f"annulus-{label}", chart=PlaneChart(z, polar=True),
                domain=Domain((rim, float(outer_radius)), FULL_TURN, polar=True), orientation=sign,
            ))
    return SurfaceAssembly(tuple(patches), 1, AssemblyMeta(genus=0, sheets=0, closed=False, neck_count=1))


def gluing_conflicts(spec: GenusSurfaceSpec) -> list:
    """Overlaps between neck cylinders, and necks wider than their cylinders."""
    found = []
    if spec.hole_radius >= spec.rho:
        found.append(f"neck radius {spec.hole_radius:.4g} exceeds its cylinder radius {spec.rho:.4g}")
    for i, j in combinations(range(len(spec.centers)), 2):
        gap = np.hypot(spec.centers[i][0] - spec.centers[j][0], spec.centers[i][1] - spec.centers[j][1])
        if gap <= 2.0 * spec.rho:
            found.append(f"neck cylinders {i} and {j} overlap")
    return found


def _sheet_holes(spec: GenusSurfaceSpec):
    """Native-unit plateau holes per sheet."""
    r = spec.r
    a = spec.hole_radius
    holes = [[] for _ in range(spec.m)]
    for k, ci in spec.neck_layout():
        cx, cy = spec.centers[ci]
        holes[k].append((cx, cy, a))
        holes[k + 1].append((cx / r, cy / r, a / r))
    return holes


def genus_surface(spec: GenusSurfaceSpec) -> SurfaceAssembly:
    """
    Glue m nested flattened spheres with m+g-1 necks.

    Sheet k is scaled by r^k. The neck between sheets k and k+1 sits over a
    spec centre at the mid-height of the two plateaus; its orientation
    matches sheet k so the glued surface stays orientable.

    Raises:
        GluingConflict: if neck cylinders overlap or a neck exceeds its cylinder
        InvalidSpec: for any other violated constraint
    """
    conflicts = gluing_conflicts(spec)
    if conflicts:
        raise GluingConflict(f"necks do not fit ({len(conflicts)} conflicts)", conflicts)
    spec.validate()
    r, h = spec.r, spec.plateau
    holes = _sheet_holes(spec)
    for k, sheet in enumerate(holes):
        for cx, cy, a in sheet:
            if np.hypot(cx, cy) + a >= 2.0 * spec.delta:
                raise GluingConflict(f"neck hole on sheet {k} leaves the plateau",
                                     [f"sheet {k}: hole at ({cx:.4g}, {cy:.4g}) radius {a:.4g}"])
        for (x1, y1, a1), (x2, y2, a2) in combinations(sheet, 2):
            if np.hypot(x1 - x2, y1 - y2) <= a1 + a2:
                raise GluingConflict(f"neck holes overlap on sheet {k}", [f"sheet {k}"])

    patches = []
    for k in range(spec.m):
        patches.extend(sheet_patches(spec.delta, index=k, lam=r ** k, holes=holes[k]))
    for n, (k, ci) in enumerate(spec.neck_layout()):
        cx, cy = spec.centers[ci]
        lam = r ** k
        patches.append(neck_patch(
            f"neck{n}-{k}{k + 1}", spec.R, scale=spec.eta * lam,
            offset=(lam * cx, lam * cy, lam * h * (1.0 + r) / 2.0),
            orientation=1 if k % 2 == 0 else -1,
        ))
    meta = AssemblyMeta(genus=spec.g, sheets=spec.m, ball_radius=1.0, neck_count=spec.neck_count)
    assembly = SurfaceAssembly(tuple(patches), 1, meta)
    logger.info(f"Built genus {spec.g} surface with {spec.m} sheets, {spec.neck_count} necks, r={r:.10f}")
    if spec.t > 0.0:
        assembly = south_pole_bump(assembly, BumpSpec(spec.t, spec.alpha))
    return assembly


def innermost_cap_name(assembly: SurfaceAssembly) -> str:
    return f"sheet{max(1, assembly.meta.sheets) - 1}-cap"


def south_pole_bump(assembly: SurfaceAssembly, bump: BumpSpec) -> SurfaceAssembly:
    """
    Replace the innermost sheet's south cap by the graph lifted by the bump.

    Raises:
        SupportTooLarge: if the bump support leaves the spherical cap
    """
    if bump.t == 0.0:
        return assembly
    problems = bump.violations()
    if problems:
        raise InvalidSpec('invalid bump', problems)
    name = innermost_cap_name(assembly)
    cap = assembly.patch(name)
    lam = cap.scale
    width = bump.width / lam
    limit = cap.domain.u_range[1]
    if width >= limit:
        raise SupportTooLarge(
            f"bump support radius {bump.width:.4g} reaches the edge of the spherical cap ({limit * lam:.4g})"
        )
    height = SouthCapHeight(amplitude=bump.t / lam, width=width, bump=bump.bump)
    new_cap = _cap_patch(name, lam, -cap.orientation, cap_height=height, breaks=(width,))
    logger.debug(f"Bump t={bump.t} alpha={bump.alpha} placed on '{name}'")
    return assembly.replace_patch(name, new_cap)


def assembly_area(assembly: SurfaceAssembly, tol: float = 1e-8, max_depth: int = 12, workers: int = 1) -> float:
    results = integrate_patches(assembly.patches, tol, max_depth=max_depth, workers=workers)
    return float(assembly.multiplicity * sum(r.values[0] for r in results))


def rescale_to_area(assembly: SurfaceAssembly, target: float, area: float = None,
                    tol: float = 1e-8, workers: int = 1) -> SurfaceAssembly:
    """
    Scale uniformly so that the (multiplicity-weighted) area equals target.

    Args:
        assembly: Surface to rescale
        target: Desired area
        area: Current area if already known
        tol: Quadrature tolerance used when the area must be measured

    Returns:
        Rescaled SurfaceAssembly; its ball radius is scaled alongside
    """
    if area is None:
        area = assembly_area(assembly, tol=tol, workers=workers)
    factor = float(np.sqrt(target / area))
    if factor > 1.0:
        logger.warning(f"Rescaling up by {factor:.6g}: ball containment must be re-checked")
    return assembly.scaled(factor)


def round_sphere(radius: float = 1.0, multiplicity: int = 1, center=(0.0, 0.0, 0.0),
                 name: str = 'sphere') -> SurfaceAssembly:
    """Round sphere, poles excluded by POLE_GAP."""
    patch = ParamPatch(name=name, chart=SphereChart(),
                       domain=Domain((POLE_GAP, np.pi - POLE_GAP), FULL_TURN),
                       scale=float(radius), offset=tuple(float(c) for c in center))
    ball = float(radius + np.linalg.norm(center))
    return SurfaceAssembly((patch,), int(multiplicity), AssemblyMeta(genus=0, sheets=1, ball_radius=ball))


def flat_disc(radius: float, height: float = 0.0) -> SurfaceAssembly:
    patch = ParamPatch(name='disc', chart=PlaneChart(height, polar=True),
                       domain=Domain((0.0, float(radius)), FULL_TURN, polar=True))
    return SurfaceAssembly((patch,), 1, AssemblyMeta(genus=0, sheets=1, closed=False,
                                                     ball_radius=float(np.hypot(radius, height))))


def with_bump(spec: GenusSurfaceSpec, t: float) -> GenusSurfaceSpec:
    return replace(spec, t=float(t))
