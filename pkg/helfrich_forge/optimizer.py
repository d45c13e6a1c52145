"""
Parameter sweeps, decay fits, Willmore-excess search and the Helfrich
divergence experiment.

The search works in the coordinates (log delta, R, logit theta_eta, log t),
where eta = theta_eta * min(rho / cosh(R+1), delta^3 / R). The bump amplitude
is never allowed below the smallest value that lifts the area to 4 pi m, so
every candidate is rescaled down into the unit ball.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import product
from typing import List, Optional

import numpy as np
import pandas as pd

from helfrich_forge.constructions import (
    BumpSpec, GenusSurfaceSpec, default_spec, flattened_catenoid, genus_surface,
    innermost_cap_name, rescale_to_area, south_pole_bump,
)
from helfrich_forge.energy import DEFAULT_TOL, HelfrichParams, integrate, report_from_patches
from helfrich_forge.errors import (
    BudgetExhausted, HelfrichForgeError, InvalidSpec, NonPositiveEnergy, SupportTooLarge,
)
from helfrich_forge.profiles import DELTA_MAX, Mollifier
from helfrich_forge.quadrature import integrate_patch, integrate_patches

logger = logging.getLogger(__name__)

SEARCH_DELTA = (0.01, DELTA_MAX)
SEARCH_R = (1.0, 8.0)

SWEEP_COLUMNS = ['m', 'g', 'delta', 'R', 'eta', 'rho', 't', 'alpha', 'feasible', 'violations',
                 'area', 'willmore', 'total_gauss', 'total_sff', 'err_willmore', 'excess']


@dataclass
class FitResult:
    slope: float
    intercept: float
    residual: float

    def to_dict(self) -> dict:
        return {'slope': self.slope, 'intercept': self.intercept, 'residual': self.residual}


def _linear_fit(x, y) -> FitResult:
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((np.polyval([slope, intercept], x) - y) ** 2)))
    return FitResult(float(slope), float(intercept), residual)


def fit_decay(R_list, W_list) -> FitResult:
    """
    Least-squares fit of log W against R; the slope is the decay rate.

    Raises:
        NonPositiveEnergy: if any W <= 0
    """
    R = np.asarray(R_list, dtype=float)
    W = np.asarray(W_list, dtype=float)
    if len(R) < 3 or len(R) != len(W):
        raise InvalidSpec('decay fit needs at least 3 matching points', [f"{len(R)} R, {len(W)} W"])
    if np.any(W <= 0.0):
        raise NonPositiveEnergy(f"cannot take log of non-positive energies {W[W <= 0.0].tolist()}")
    return _linear_fit(R, np.log(W))


def fit_power(x_list, y_list) -> FitResult:
    """Log-log fit y ~ exp(intercept) * x^slope."""
    x = np.asarray(x_list, dtype=float)
    y = np.asarray(y_list, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise NonPositiveEnergy('power fit needs positive data')
    return _linear_fit(np.log(x), np.log(y))


def catenoid_decay(R_list, tol: float = 1e-10):
    """Willmore energy of the flattened catenoid for each R, with the exponential fit."""
    energies = [integrate(flattened_catenoid(R), tol=tol).willmore for R in R_list]
    return energies, fit_decay(R_list, energies)


@lru_cache(maxsize=None)
def bump_constants():
    """(int b, int |grad b|^2) of the mollifier over the plane."""
    bump = Mollifier()
    return bump.mass(), bump.dirichlet()


def bump_area_rate(alpha: float, lam: float) -> float:
    """Leading coefficient c of the area gain c * t^2 of a bump on a sphere of radius lam."""
    mass, dirichlet = bump_constants()
    return 0.5 * dirichlet - 2.0 * alpha ** 2 * mass / lam


def area_threshold_bump(assembly, m: int, alpha: float, results=None, tol: float = DEFAULT_TOL,
                        margin: float = 1.05):
    """
    Smallest convenient bump amplitude lifting the total area to 4 pi m.

    Starts from t = sqrt(1.06 D / c) for area deficit D and iterates on the
    innermost cap only until the gain lies in [1.03 D, 1.1 D].

    Returns:
        (t, base per-patch results)
    """
    if results is None:
        results = integrate_patches(assembly.patches, tol)
    deficit = 4.0 * np.pi * m - sum(r.values[0] for r in results)
    if deficit <= 0.0:
        return 0.0, results
    name = innermost_cap_name(assembly)
    cap = assembly.patch(name)
    cap_area = next(r for r in results if r.name == name).values[0]
    rate = bump_area_rate(alpha, cap.scale)
    if rate <= 0.0:
        raise InvalidSpec(f"bump with alpha={alpha} shrinks the area", ['alpha too large'])
    t = float(np.sqrt(1.06 * deficit / rate))
    for _ in range(8):
        bumped = south_pole_bump(assembly, BumpSpec(t, alpha)).patch(name)
        gain = integrate_patch(bumped, 0.01 * tol).values[0] - cap_area
        if 1.03 * deficit <= gain <= 1.1 * deficit:
            break
        t *= float(np.sqrt(margin * deficit / max(gain, 1e-3 * deficit)))
    return t, results


def tuned_spec(m: int, g: int, delta: float, R: float = 4.0, theta_eta: float = 0.5,
               alpha: float = 0.5, tol: float = DEFAULT_TOL) -> GenusSurfaceSpec:
    """Default spec whose bump is the area threshold amplitude."""
    spec = default_spec(m, g, delta=delta, R=R, theta_eta=theta_eta, alpha=alpha).validate()
    t, _ = area_threshold_bump(genus_surface(spec), m, alpha, tol=tol)
    return replace(spec, t=t)


@dataclass
class SpecEvaluation:
    spec: GenusSurfaceSpec
    assembly: object
    report: object

    @property
    def excess(self) -> float:
        return self.report.excess(self.spec.m)


def evaluate_spec(spec: GenusSurfaceSpec, tol: float = DEFAULT_TOL, workers: int = 1,
                  params: Optional[HelfrichParams] = None, rescale: bool = True) -> SpecEvaluation:
    """Build, optionally rescale to area 4 pi m, and integrate one spec."""
    assembly = genus_surface(spec)
    if rescale:
        assembly = rescale_to_area(assembly, 4.0 * np.pi * spec.m, tol=0.1 * tol, workers=workers)
    report = integrate(assembly, tol=tol, workers=workers, params=params)
    return SpecEvaluation(spec, assembly, report)


@dataclass
class SweepTable:
    rows: List[dict] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=SWEEP_COLUMNS)

    def to_csv(self, path=None):
        return self.to_frame().to_csv(path, index=False, lineterminator='\n')

    @property
    def feasible(self) -> List[dict]:
        return [row for row in self.rows if row['feasible']]

    def min_excess(self) -> float:
        return min(row['excess'] for row in self.feasible)


def _sweep_row(spec: GenusSurfaceSpec, tol: float) -> dict:
    problems = spec.violations()
    row = {k: spec.to_dict()[k] for k in ('m', 'g', 'delta', 'R', 'eta', 'rho', 't', 'alpha')}
    row.update(feasible=not problems, violations='; '.join(problems), area=None, willmore=None,
               total_gauss=None, total_sff=None, err_willmore=None, excess=None)
    if problems:
        return row
    try:
        report = integrate(genus_surface(spec), tol=tol)
    except HelfrichForgeError as e:
        logger.warning(f"Sweep point delta={spec.delta}, R={spec.R} failed: {e}")
        row.update(feasible=False, violations=str(e))
        return row
    row.update(area=report.area, willmore=report.willmore, total_gauss=report.total_gauss,
               total_sff=report.total_sff, err_willmore=report.err_estimate['willmore'],
               excess=report.excess(spec.m))
    return row


def sweep(m: int, g: int, deltas, Rs, etas=(None,), ts=(0.0,), theta_eta: float = 0.5,
          alpha: float = 0.5, tol: float = DEFAULT_TOL, workers: int = 1) -> SweepTable:
    """
    Evaluate every grid point; infeasible points are recorded, not evaluated.

    Args:
        etas: Neck scales; None selects theta_eta times the admissible maximum
        ts: Bump amplitudes; 'auto' selects the area threshold amplitude

    Returns:
        SweepTable in grid order
    """
    specs = []
    for delta, R, eta, t in product(deltas, Rs, etas, ts):
        spec = default_spec(m, g, delta=delta, R=R, theta_eta=theta_eta, alpha=alpha)
        if eta is not None:
            spec = replace(spec, eta=float(eta))
        if t == 'auto':
            t = tuned_spec(m, g, delta, R, theta_eta, alpha, tol).t if not spec.violations() else 0.0
        specs.append(replace(spec, t=float(t)))
    logger.info(f"Sweeping {len(specs)} grid points for m={m}, g={g}")
    if workers <= 1:
        rows = [_sweep_row(s, tol) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda s: _sweep_row(s, tol), specs))
    return SweepTable(rows)


@dataclass
class MinimizeResult:
    spec: GenusSurfaceSpec
    report: object
    excess: float
    success: bool
    evaluations: int
    history: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'spec': self.spec.to_dict(),
            'report': self.report.to_dict() if self.report is not None else None,
            'excess': self.excess,
            'success': self.success,
            'evaluations': self.evaluations,
            'history': self.history,
        }


class ExcessObjective:
    """Willmore excess as a function of the search coordinates, with evaluation accounting."""

    def __init__(self, m: int, g: int, alpha: float = 0.5, tol: float = DEFAULT_TOL, workers: int = 1):
        self.m, self.g, self.alpha, self.tol, self.workers = m, g, alpha, tol, workers
        self.evaluations = 0
        self.best_value = np.inf
        self.best_spec = None
        self.history = []
        self.logger = logging.getLogger(__name__)

    def spec_at(self, x) -> Optional[GenusSurfaceSpec]:
        delta, R = float(np.exp(x[0])), float(x[1])
        if not (SEARCH_DELTA[0] <= delta < SEARCH_DELTA[1] and SEARCH_R[0] <= R <= SEARCH_R[1]):
            return None
        theta_eta = float(1.0 / (1.0 + np.exp(-x[2])))
        spec = default_spec(self.m, self.g, delta=delta, R=R, theta_eta=theta_eta, alpha=self.alpha)
        return None if spec.violations() else spec

    def value(self, x):
        """(excess, spec) at x; excess is +inf when infeasible. Touches no counters."""
        spec = self.spec_at(x)
        if spec is None:
            return np.inf, None
        try:
            assembly = genus_surface(spec)
            results = integrate_patches(assembly.patches, self.tol)
            t_min, _ = area_threshold_bump(assembly, self.m, self.alpha, results=results, tol=self.tol)
            t = max(float(np.exp(x[3])), t_min)
            spec = replace(spec, t=t)
            if t > 0.0:
                name = innermost_cap_name(assembly)
                bumped = south_pole_bump(assembly, BumpSpec(t, self.alpha)).patch(name)
                cap_tol = self.tol / max(1, len(assembly.patches))
                results = [integrate_patch(bumped, cap_tol) if r.name == name else r for r in results]
            report = report_from_patches(results)
        except (SupportTooLarge, InvalidSpec) as e:
            self.logger.debug(f"Candidate rejected: {e}")
            return np.inf, None
        return report.excess(self.m), spec

    def evaluate_many(self, points) -> List[float]:
        """Evaluate candidates concurrently; bookkeeping happens in input order."""
        if self.workers > 1 and len(points) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                outcomes = list(pool.map(self.value, points))
        else:
            outcomes = [self.value(p) for p in points]
        values = []
        for value, spec in outcomes:
            self.evaluations += 1
            if value < self.best_value:
                self.best_value, self.best_spec = value, spec
            self.history.append(float(self.best_value))
            values.append(value)
        return values


def nelder_mead(objective: ExcessObjective, x_start, step, budget: int, target: float = -np.inf,
                alpha=1.0, gamma=2.0, beta=0.5, shrink=0.5):
    """
    Nelder-Mead simplex with +inf rejection of infeasible points.

    Reflection and expansion are evaluated together. Stops when the budget
    is spent or the best value drops below target.
    """
    dim = len(x_start)
    simplex = [np.asarray(x_start, dtype=float)]
    for i in range(dim):
        x = simplex[0].copy()
        x[i] += step[i]
        simplex.append(x)
    scores = objective.evaluate_many(simplex)
    used = dim + 1
    while used < budget and min(scores) >= target:
        order = np.argsort(scores, kind='stable')
        simplex = [simplex[i] for i in order]
        scores = [scores[i] for i in order]
        if not np.isfinite(scores[0]):
            break
        centroid = np.mean(simplex[:-1], axis=0)
        xr = centroid + alpha * (centroid - simplex[-1])
        xe = centroid + gamma * (centroid - simplex[-1])
        r_score, e_score = objective.evaluate_many([xr, xe])
        used += 2
        if r_score < scores[0] and e_score < r_score:
            simplex[-1], scores[-1] = xe, e_score
            continue
        if r_score < scores[-2]:
            simplex[-1], scores[-1] = xr, r_score
            continue
        xc = centroid + beta * (simplex[-1] - centroid)
        (c_score,) = objective.evaluate_many([xc])
        used += 1
        if c_score < scores[-1]:
            simplex[-1], scores[-1] = xc, c_score
            continue
        if used + dim > budget:
            break
        simplex = [simplex[0]] + [simplex[0] + shrink * (x - simplex[0]) for x in simplex[1:]]
        scores = [scores[0]] + objective.evaluate_many(simplex[1:])
        used += dim
    best = int(np.argmin(scores))
    return simplex[best], scores[best], used


def minimize_excess(m: int, g: int, eps: float, budget: int = 200, tol: float = DEFAULT_TOL,
                    seed: int = 0, workers: int = 1, alpha: float = 0.5) -> MinimizeResult:
    """
    Search (delta, R, eta, t) for a surface with W < 4 pi m + eps at area 4 pi m.

    Three restarts share the evaluation budget. The winner is rebuilt,
    rescaled to area 4 pi m and re-integrated at tol/10 before the excess is
    reported.

    Raises:
        InvalidSpec: if eps <= 0
        BudgetExhausted: with the best result attached when eps is not reached
    """
    if eps <= 0.0:
        raise InvalidSpec(f"eps={eps} must be positive", ['eps > 0'])
    rng = np.random.default_rng(seed)
    objective = ExcessObjective(m, g, alpha=alpha, tol=tol, workers=workers)
    corners = [np.log(0.05), np.log(0.03), np.log(0.02)]
    remaining = budget
    for k, log_delta in enumerate(corners):
        share = remaining // (len(corners) - k)
        if share < 5:
            break
        start = np.array([log_delta + 0.1 * rng.standard_normal(), 4.0 + 0.5 * rng.standard_normal(),
                          0.0, np.log(1e-3)])
        step = np.array([0.3, 0.75, 1.0, 1.0])
        _, score, used = nelder_mead(objective, start, step, share, target=0.5 * eps)
        remaining -= used
        logger.info(f"Restart {k}: best excess {score:.6g} after {used} evaluations")
        if objective.best_value < 0.5 * eps:
            break

    if objective.best_spec is None:
        raise BudgetExhausted('no feasible candidate found', best=None)
    final = evaluate_spec(objective.best_spec, tol=0.1 * tol, workers=workers)
    success = bool(final.excess < eps and final.assembly.contained_in_ball(1.0))
    result = MinimizeResult(final.spec, final.report, float(final.excess), success,
                            objective.evaluations, objective.history)
    if not success:
        logger.error(f"Excess {final.excess:.6g} not below {eps} within {budget} evaluations")
        raise BudgetExhausted(f"best excess {final.excess:.6g} >= eps {eps}", best=result)
    return result


@dataclass
class BumpScaling:
    rows: List[dict]
    area_fit: FitResult

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=['t', 'delta_area', 'delta_willmore', 'willmore_per_t'])

    @property
    def willmore_constant(self) -> float:
        """C in dW <= C t, least squares through the origin on the two smallest amplitudes."""
        pair = sorted(self.rows, key=lambda row: row['t'])[:2]
        t = np.array([row['t'] for row in pair])
        dW = np.array([row['delta_willmore'] for row in pair])
        return float(t @ dW / (t @ t))

    def willmore_bounded(self, tol: float) -> bool:
        return all(row['willmore_per_t'] <= self.willmore_constant * (1.0 + tol) for row in self.rows)


def bump_scaling(assembly, t_list, alpha: float = 0.5, tol: float = 1e-9) -> BumpScaling:
    """Area and Willmore change of the innermost cap for each bump amplitude t."""
    name = innermost_cap_name(assembly)
    base = integrate_patch(assembly.patch(name), tol)
    rows = []
    for t in t_list:
        cap = south_pole_bump(assembly, BumpSpec(float(t), alpha)).patch(name)
        bumped = integrate_patch(cap, tol)
        dA = float(bumped.values[0] - base.values[0])
        dW = float(bumped.values[1] - base.values[1])
        rows.append({'t': float(t), 'delta_area': dA, 'delta_willmore': dW, 'willmore_per_t': dW / t})
    fit = fit_power([r['t'] for r in rows], [r['delta_area'] for r in rows])
    return BumpScaling(rows, fit)


@dataclass
class DivergenceTable:
    rows: List[dict]
    fit: FitResult

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=['g', 'energy', 'willmore', 'total_gauss'])


def helfrich_divergence_demo(chi_H: float, chi_K: float, H0: float, g_list, delta: float = 0.05,
                             R: float = 4.0, tol: float = DEFAULT_TOL, workers: int = 1) -> DivergenceTable:
    """
    Helfrich energy of two-sheet surfaces of growing genus.

    Each added neck contributes about -4 pi chi_K through the Gauss term and
    almost nothing through the bending term.
    """
    if chi_K < 0.0:
        raise InvalidSpec('divergence demo needs chi_K >= 0', ['chi_K >= 0'])
    if chi_K == 0.0:
        logger.warning('chi_K = 0: the Gauss term vanishes and the energy stays bounded')
    params = HelfrichParams(chi_H, chi_K, H0)
    rows = []
    for g in g_list:
        spec = default_spec(2, int(g), delta=delta, R=R)
        report = integrate(genus_surface(spec), tol=tol, workers=workers, params=params)
        rows.append({'g': int(g), 'energy': report.helfrich, 'willmore': report.willmore,
                     'total_gauss': report.total_gauss})
    fit = _linear_fit(np.array([r['g'] for r in rows], dtype=float), np.array([r['energy'] for r in rows]))
    logger.info(f"Energy slope in g: {fit.slope:.6g} (-4 pi chi_K = {-4 * np.pi * chi_K:.6g})")
    return DivergenceTable(rows, fit)
