"""
Parametric-surface differential geometry.

Charts map native parameters (u, v) to R^3 together with analytic first and
second derivatives. A ParamPatch places a chart in space (uniform scale,
translation, normal orientation) and restricts it to an active subdomain.
Curvatures follow the convention H = k1 + k2 with the normal
orientation * (p_u x p_v) / |p_u x p_v|; an outward-oriented unit sphere has
H = -2.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

from helfrich_forge.errors import CurvatureMismatch, DegeneratePoint

logger = logging.getLogger(__name__)

# Relative agreement required between closed-form and fundamental-form curvatures.
CLOSED_FORM_RTOL = 1e-8

# Finite-difference step as a fraction of the parameter-domain diameter.
FD_STEP = 1e-5
FD_RTOL = 1e-6


@dataclass(frozen=True)
class ChartJet:
    """Point and derivatives of a chart; each array has shape (..., 3)."""
    p: np.ndarray
    pu: np.ndarray
    pv: np.ndarray
    puu: np.ndarray
    puv: np.ndarray
    pvv: np.ndarray


def _stack(x, y, z):
    x, y, z = np.broadcast_arrays(x, y, z)
    return np.stack([x, y, z], axis=-1)


class SphereChart:
    """Unit sphere in (polar angle from the north pole, azimuth)."""
    kind = 'sphere-cap'

    def jet(self, u, v) -> ChartJet:
        st, ct = np.sin(u), np.cos(u)
        sp, cp = np.sin(v), np.cos(v)
        zero = np.zeros_like(st * sp)
        return ChartJet(
            p=_stack(st * cp, st * sp, ct),
            pu=_stack(ct * cp, ct * sp, -st),
            pv=_stack(-st * sp, st * cp, zero),
            puu=_stack(-st * cp, -st * sp, -ct),
            puv=_stack(-ct * sp, ct * cp, zero),
            pvv=_stack(-st * cp, -st * sp, zero),
        )


class RadialGraphChart:
    """
    Graph z = F(|x|) of a radial height profile in polar coordinates (s, phi).

    `profile.evaluate(s)` must return (F, F', F'').
    """
    kind = 'graph'

    def __init__(self, profile):
        self.profile = profile

    def jet(self, u, v) -> ChartJet:
        F, dF, ddF = self.profile.evaluate(u)
        sp, cp = np.sin(v), np.cos(v)
        zero = np.zeros_like(u * sp)
        return ChartJet(
            p=_stack(u * cp, u * sp, F + zero),
            pu=_stack(cp + zero, sp + zero, dF + zero),
            pv=_stack(-u * sp, u * cp, zero),
            puu=_stack(zero, zero, ddF + zero),
            puv=_stack(-sp + zero, cp + zero, zero),
            pvv=_stack(-u * cp, -u * sp, zero),
        )

    def closed_form(self, u, v):
        """Mean and Gauss curvature of the graph for the upward normal."""
        F, dF, ddF = self.profile.evaluate(u)
        sp, cp = np.sin(v), np.cos(v)
        hx, hy = dF * cp, dF * sp
        hxx = ddF * cp ** 2 + dF * sp ** 2 / u
        hyy = ddF * sp ** 2 + dF * cp ** 2 / u
        hxy = (ddF - dF / u) * cp * sp
        w2 = 1.0 + hx ** 2 + hy ** 2
        H = ((1.0 + hy ** 2) * hxx - 2.0 * hx * hy * hxy + (1.0 + hx ** 2) * hyy) / w2 ** 1.5
        K = (hxx * hyy - hxy ** 2) / w2 ** 2
        return H, K


class PlaneChart:
    """Horizontal plane z = height, in Cartesian (x, y) or polar (s, phi) coordinates."""
    kind = 'plane-annulus'

    def __init__(self, height: float = 0.0, polar: bool = False):
        self.height = height
        self.polar = polar

    def jet(self, u, v) -> ChartJet:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        zero = np.zeros(np.broadcast(u, v).shape)
        one = zero + 1.0
        if not self.polar:
            return ChartJet(
                p=_stack(u + zero, v + zero, zero + self.height),
                pu=_stack(one, zero, zero),
                pv=_stack(zero, one, zero),
                puu=_stack(zero, zero, zero),
                puv=_stack(zero, zero, zero),
                pvv=_stack(zero, zero, zero),
            )
        sp, cp = np.sin(v), np.cos(v)
        return ChartJet(
            p=_stack(u * cp, u * sp, zero + self.height),
            pu=_stack(cp + zero, sp + zero, zero),
            pv=_stack(-u * sp, u * cp, zero),
            puu=_stack(zero, zero, zero),
            puv=_stack(-sp + zero, cp + zero, zero),
            pvv=_stack(-u * cp, -u * sp, zero),
        )


class RevolutionChart:
    """
    Surface of revolution (f(t) cos phi, f(t) sin phi, g(t)).

    `radius.evaluate(t)` and `height.evaluate(t)` return (value, first, second).
    """
    kind = 'revolution'

    def __init__(self, radius, height):
        self.radius = radius
        self.height = height

    def jet(self, u, v) -> ChartJet:
        f, df, ddf = self.radius.evaluate(u)
        g, dg, ddg = self.height.evaluate(u)
        sp, cp = np.sin(v), np.cos(v)
        zero = np.zeros_like(f * sp)
        return ChartJet(
            p=_stack(f * cp, f * sp, g + zero),
            pu=_stack(df * cp, df * sp, dg + zero),
            pv=_stack(-f * sp, f * cp, zero),
            puu=_stack(ddf * cp, ddf * sp, ddg + zero),
            puv=_stack(-df * sp, df * cp, zero),
            pvv=_stack(-f * cp, -f * sp, zero),
        )

    def closed_form(self, u, v):
        """
        Profile-curve formulas for H and K.

        The textbook mean-curvature expression uses the opposite normal to
        p_t x p_phi, hence the sign flip.
        """
        f, df, ddf = self.radius.evaluate(u)
        g, dg, ddg = self.height.evaluate(u)
        q = df ** 2 + dg ** 2
        h_profile = (f * ddf * dg - f * df * ddg - dg * df ** 2 - dg ** 3) / (f * q ** 1.5)
        K = (-dg ** 2 * ddf + df * dg * ddg) / (f * q ** 2)
        return -h_profile + 0.0 * v, K + 0.0 * v


class GenericChart:
    """Wraps a callable (u, v) -> (p, pu, pv, puu, puv, pvv)."""
    kind = 'generic'

    def __init__(self, fn: Callable):
        self.fn = fn

    def jet(self, u, v) -> ChartJet:
        return ChartJet(*self.fn(u, v))


@dataclass(frozen=True)
class Domain:
    """Parameter rectangle; `polar` marks (radius, angle) coordinates."""
    u_range: Tuple[float, float]
    v_range: Tuple[float, float]
    polar: bool = False

    @property
    def area(self) -> float:
        return (self.u_range[1] - self.u_range[0]) * (self.v_range[1] - self.v_range[0])

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.u_range[1] - self.u_range[0], self.v_range[1] - self.v_range[0]))


@dataclass(frozen=True)
class ParamPatch:
    """
    A chart restricted to an active subdomain and placed in space.

    World point = offset + scale * chart point. `breaks_u` lists parameter
    values where the profile changes regime; quadrature cells never straddle
    them.
    """
    name: str
    chart: object
    domain: Domain
    mask: Optional[object] = None
    orientation: int = 1
    scale: float = 1.0
    offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    breaks_u: Tuple[float, ...] = ()

    @property
    def kind(self) -> str:
        return self.chart.kind

    def jet(self, u, v) -> ChartJet:
        native = self.chart.jet(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        s = self.scale
        return ChartJet(
            p=np.asarray(self.offset) + s * native.p,
            pu=s * native.pu,
            pv=s * native.pv,
            puu=s * native.puu,
            puv=s * native.puv,
            pvv=s * native.pvv,
        )

    def points(self, u, v):
        native = self.chart.jet(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return np.asarray(self.offset) + self.scale * native.p

    def active(self, u, v):
        if self.mask is None:
            return np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape, dtype=bool)
        return self.mask.contains(self, u, v)

    def normal(self, u, v):
        jet = self.jet(u, v)
        n = np.cross(jet.pu, jet.pv)
        return self.orientation * n / np.linalg.norm(n, axis=-1, keepdims=True)

    def scaled(self, factor: float) -> 'ParamPatch':
        return replace(self, scale=self.scale * factor,
                       offset=tuple(float(factor * o) for o in self.offset))

    def flipped(self) -> 'ParamPatch':
        return replace(self, orientation=-self.orientation)

    def sample_grid(self, n: int = 24):
        """Active parameter points of an n x n grid strictly inside the domain."""
        (u0, u1), (v0, v1) = self.domain.u_range, self.domain.v_range
        uu = u0 + (u1 - u0) * (np.arange(n) + 0.5) / n
        vv = v0 + (v1 - v0) * (np.arange(n) + 0.5) / n
        U, V = np.meshgrid(uu, vv, indexing='ij')
        keep = self.active(U, V)
        return U[keep], V[keep]


@dataclass(frozen=True)
class AssemblyMeta:
    genus: int = 0
    sheets: int = 1
    ball_radius: Optional[float] = None
    closed: bool = True
    neck_count: int = 0


@dataclass(frozen=True)
class SurfaceAssembly:
    """Ordered patches of one surface, carrying an integer multiplicity."""
    patches: Tuple[ParamPatch, ...]
    multiplicity: int = 1
    meta: AssemblyMeta = field(default_factory=AssemblyMeta)

    def patch(self, name: str) -> ParamPatch:
        for patch in self.patches:
            if patch.name == name:
                return patch
        raise KeyError(name)

    def replace_patch(self, name: str, new_patch: ParamPatch) -> 'SurfaceAssembly':
        self.patch(name)
        patches = tuple(new_patch if p.name == name else p for p in self.patches)
        return replace(self, patches=patches)

    def scaled(self, factor: float) -> 'SurfaceAssembly':
        radius = self.meta.ball_radius
        meta = replace(self.meta, ball_radius=None if radius is None else radius * factor)
        return replace(self, patches=tuple(p.scaled(factor) for p in self.patches), meta=meta)

    def with_multiplicity(self, multiplicity: int) -> 'SurfaceAssembly':
        return replace(self, multiplicity=int(multiplicity))

    def sample_points(self, n: int = 24):
        return np.concatenate([p.points(*p.sample_grid(n)) for p in self.patches], axis=0)

    def max_radius(self, n: int = 24) -> float:
        return float(np.linalg.norm(self.sample_points(n), axis=-1).max())

    def contained_in_ball(self, radius: float = 1.0, n: int = 24) -> bool:
        return self.max_radius(n) <= radius + 1e-9

    def check_immersion(self, n: int = 24) -> None:
        for patch in self.patches:
            u, v = patch.sample_grid(n)
            fundamental_forms(patch, u, v)


@dataclass(frozen=True)
class FundamentalForms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    Mm: np.ndarray
    N: np.ndarray

    @property
    def det(self):
        return self.E * self.G - self.F ** 2


@dataclass(frozen=True)
class CurvaturePoint:
    H: np.ndarray
    K: np.ndarray
    dA: np.ndarray

    @property
    def sff(self):
        """|A|^2 = H^2 - 2K, clipped at zero against roundoff."""
        return np.maximum(self.H ** 2 - 2.0 * self.K, 0.0)


def _forms_from_jet(patch: ParamPatch, jet: ChartJet) -> FundamentalForms:
    E = np.einsum('...i,...i', jet.pu, jet.pu)
    F = np.einsum('...i,...i', jet.pu, jet.pv)
    G = np.einsum('...i,...i', jet.pv, jet.pv)
    det = E * G - F ** 2
    if np.any(det <= 0.0) or not np.all(np.isfinite(det)):
        raise DegeneratePoint(f"patch '{patch.name}' is not immersed: min EG - F^2 = {np.min(det):.3g}")
    cross = np.cross(jet.pu, jet.pv)
    n = patch.orientation * cross / np.sqrt(det)[..., None]
    return FundamentalForms(
        E=E, F=F, G=G,
        L=np.einsum('...i,...i', jet.puu, n),
        Mm=np.einsum('...i,...i', jet.puv, n),
        N=np.einsum('...i,...i', jet.pvv, n),
    )


def fundamental_forms(patch: ParamPatch, u, v) -> FundamentalForms:
    """
    First and second fundamental forms of a patch at (u, v).

    Args:
        patch: The patch to evaluate
        u, v: Parameter values (scalars or broadcastable arrays)

    Returns:
        FundamentalForms with the orientation applied to L, Mm, N
    """
    return _forms_from_jet(patch, patch.jet(u, v))


def curvature_from_forms(forms: FundamentalForms) -> CurvaturePoint:
    det = forms.det
    H = (forms.G * forms.L - 2.0 * forms.F * forms.Mm + forms.E * forms.N) / det
    K = (forms.L * forms.N - forms.Mm ** 2) / det
    return CurvaturePoint(H=H, K=K, dA=np.sqrt(det))


def check_closed_form(patch: ParamPatch, u, v, point: CurvaturePoint) -> None:
    """Compare against the chart's closed-form curvature, if it has one."""
    closed_form = getattr(patch.chart, 'closed_form', None)
    if closed_form is None:
        return
    H_cf, K_cf = closed_form(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    H_cf = patch.orientation * H_cf / patch.scale
    K_cf = K_cf / patch.scale ** 2
    floor = np.sqrt(point.sff) + 1e-12 / patch.scale
    dH = np.abs(point.H - H_cf) / np.maximum(np.abs(H_cf), floor)
    dK = np.abs(point.K - K_cf) / np.maximum(np.abs(K_cf), floor ** 2)
    worst = max(float(np.max(dH, initial=0.0)), float(np.max(dK, initial=0.0)))
    if worst > CLOSED_FORM_RTOL:
        raise CurvatureMismatch(
            f"patch '{patch.name}' ({patch.kind}): closed-form curvature differs by {worst:.3g} relative"
        )


def curvature_at(patch: ParamPatch, u, v, check: bool = True) -> CurvaturePoint:
    """
    Mean curvature, Gauss curvature and area element at (u, v).

    For graph and revolution charts the closed-form profile formulas are
    evaluated too and must agree to CLOSED_FORM_RTOL.

    Raises:
        DegeneratePoint: if the chart is not immersed at a sample
        CurvatureMismatch: if the two evaluations disagree
    """
    point = curvature_from_forms(fundamental_forms(patch, u, v))
    if check:
        check_closed_form(patch, u, v, point)
    return point


@dataclass(frozen=True)
class DerivativeReport:
    patch: str
    samples: int
    max_deviation: float
    worst_term: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            'patch': self.patch,
            'samples': self.samples,
            'max_deviation': self.max_deviation,
            'worst_term': self.worst_term,
            'passed': self.passed,
        }


def _relative(analytic, numeric, ref):
    err = np.linalg.norm(analytic - numeric, axis=-1)
    return err / np.maximum(np.linalg.norm(analytic, axis=-1), 1e-8 * ref)


def verify_derivatives(patch: ParamPatch, samples: int = 100, seed: int = 0) -> DerivativeReport:
    """
    Compare analytic chart derivatives against centred finite differences.

    First derivatives are differenced from chart points, second derivatives
    from the analytic first derivatives.
    """
    (u0, u1), (v0, v1) = patch.domain.u_range, patch.domain.v_range
    h = FD_STEP * patch.domain.diameter
    rng = np.random.default_rng(seed)
    u_parts, v_parts = [], []
    for _ in range(50):
        u = rng.uniform(u0 + 2 * h, u1 - 2 * h, samples)
        v = rng.uniform(v0 + 2 * h, v1 - 2 * h, samples)
        keep = patch.active(u, v)
        u_parts.append(u[keep])
        v_parts.append(v[keep])
        if sum(len(x) for x in u_parts) >= samples:
            break
    u = np.concatenate(u_parts)[:samples]
    v = np.concatenate(v_parts)[:samples]
    if len(u) == 0:
        logger.warning(f"No active interior samples found on patch '{patch.name}'")
        return DerivativeReport(patch.name, 0, 0.0, '', True)

    jet = patch.jet(u, v)
    ju_p, ju_m = patch.jet(u + h, v), patch.jet(u - h, v)
    jv_p, jv_m = patch.jet(u, v + h), patch.jet(u, v - h)
    ref = np.maximum(np.linalg.norm(jet.pu, axis=-1), np.linalg.norm(jet.pv, axis=-1))
    terms = {
        'pu': _relative(jet.pu, (ju_p.p - ju_m.p) / (2 * h), ref),
        'pv': _relative(jet.pv, (jv_p.p - jv_m.p) / (2 * h), ref),
        'puu': _relative(jet.puu, (ju_p.pu - ju_m.pu) / (2 * h), ref),
        'puv': _relative(jet.puv, (jv_p.pu - jv_m.pu) / (2 * h), ref),
        'pvv': _relative(jet.pvv, (jv_p.pv - jv_m.pv) / (2 * h), ref),
    }
    worst_term = max(terms, key=lambda k: terms[k].max())
    deviation = float(terms[worst_term].max())
    passed = deviation < FD_RTOL
    if not passed:
        logger.warning(f"Derivative check failed on '{patch.name}': {worst_term} off by {deviation:.3g}")
    return DerivativeReport(patch.name, int(len(u)), deviation, worst_term, passed)
