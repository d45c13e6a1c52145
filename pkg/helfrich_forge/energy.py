"""
Curvature functionals of surface assemblies.

All totals are multiplied by the assembly multiplicity, so a sphere of
multiplicity m reports m times the area, Willmore energy and Gauss mass of a
single sphere.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from helfrich_forge.errors import InvalidSpec, NoConvergence, NonIntegerGenus
from helfrich_forge.quadrature import QUANTITIES, integrate_patches

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6

CSV_COLUMNS = [
    'area', 'willmore', 'helfrich', 'total_gauss', 'total_mean', 'total_sff',
    'err_area', 'err_willmore', 'err_helfrich', 'err_gauss', 'err_mean', 'err_sff',
    'multiplicity_applied',
]


@dataclass(frozen=True)
class HelfrichParams:
    """Constant material parameters chi_H > 0, chi_K and spontaneous curvature H0."""
    chi_H: float = 0.25
    chi_K: float = 0.0
    H0: float = 0.0

    def __post_init__(self):
        if not self.chi_H > 0.0:
            raise InvalidSpec(f"chi_H={self.chi_H} must be positive", ['chi_H > 0'])

    def to_dict(self) -> dict:
        return {'chi_H': self.chi_H, 'chi_K': self.chi_K, 'H0': self.H0}


@dataclass
class EnergyReport:
    """Integrated functionals with level-difference error estimates."""
    area: float
    willmore: float
    total_gauss: float
    total_mean: float
    total_sff: float
    err_estimate: Dict[str, float]
    multiplicity_applied: int = 1
    helfrich: Optional[float] = None
    params: Optional[HelfrichParams] = None
    per_patch: List[dict] = field(default_factory=list)

    @property
    def combined_err(self) -> float:
        return float(self.err_estimate['area'] + self.err_estimate['willmore'])

    def excess(self, m: int) -> float:
        """Willmore excess W - 4 pi m."""
        return self.willmore - 4.0 * np.pi * m

    def to_dict(self, per_patch: bool = False) -> dict:
        data = {
            'area': self.area,
            'willmore': self.willmore,
            'helfrich': self.helfrich,
            'total_gauss': self.total_gauss,
            'total_mean': self.total_mean,
            'total_sff': self.total_sff,
            'err_estimate': dict(self.err_estimate),
            'multiplicity_applied': self.multiplicity_applied,
            'params': None if self.params is None else self.params.to_dict(),
        }
        if per_patch:
            data['per_patch'] = self.per_patch
        return data

    def to_json(self, per_patch: bool = False) -> str:
        return json.dumps(self.to_dict(per_patch), indent=2, sort_keys=True)

    def to_row(self) -> dict:
        err = self.err_estimate
        return {
            'area': self.area, 'willmore': self.willmore, 'helfrich': self.helfrich,
            'total_gauss': self.total_gauss, 'total_mean': self.total_mean,
            'total_sff': self.total_sff,
            'err_area': err['area'], 'err_willmore': err['willmore'],
            'err_helfrich': err.get('helfrich'), 'err_gauss': err['gauss'],
            'err_mean': err['mean'], 'err_sff': err['sff'],
            'multiplicity_applied': self.multiplicity_applied,
        }

    def to_csv(self) -> str:
        return pd.DataFrame([self.to_row()], columns=CSV_COLUMNS).to_csv(index=False, lineterminator='\n')


def _helfrich_terms(totals, errors, params: HelfrichParams):
    chi_H, chi_K, H0 = params.chi_H, params.chi_K, params.H0
    bending = 4.0 * totals['willmore'] - 2.0 * H0 * totals['mean'] + H0 ** 2 * totals['area']
    value = chi_H * bending + chi_K * totals['gauss']
    err = chi_H * (4.0 * errors['willmore'] + 2.0 * abs(H0) * errors['mean'] + H0 ** 2 * errors['area']) \
        + abs(chi_K) * errors['gauss']
    return float(value), float(err)


def report_from_patches(results, multiplicity: int = 1, params: Optional[HelfrichParams] = None) -> EnergyReport:
    """Reduce per-patch integrals in patch order into one report."""
    values = np.zeros(len(QUANTITIES))
    errors = np.zeros(len(QUANTITIES))
    for result in results:
        values += result.values
        errors += result.error
    values *= multiplicity
    errors *= multiplicity
    totals = dict(zip(QUANTITIES, values.tolist()))
    err = dict(zip(QUANTITIES, errors.tolist()))
    report = EnergyReport(
        area=totals['area'], willmore=totals['willmore'], total_gauss=totals['gauss'],
        total_mean=totals['mean'], total_sff=totals['sff'], err_estimate=err,
        multiplicity_applied=int(multiplicity), params=params,
        per_patch=[{'name': r.name, 'cells': r.cells, **r.as_dict()} for r in results],
    )
    if params is not None:
        report.helfrich, err['helfrich'] = _helfrich_terms(totals, err, params)
    return report


def integrate(assembly, tol: float = DEFAULT_TOL, max_depth: int = 12, workers: int = 1,
              params: Optional[HelfrichParams] = None, extra_mask=None, strict: bool = True) -> EnergyReport:
    """
    Adaptive quadrature of area, Willmore, Gauss, mean and |A|^2 totals.

    Args:
        assembly: Surface to integrate
        tol: Absolute error budget shared equally by the patches
        max_depth: Refinement depth cap
        workers: Thread count for per-patch integration
        params: Optional Helfrich parameters to include the Helfrich energy
        extra_mask: Optional mask restricting every patch (e.g. a ball)
        strict: Raise NoConvergence when the error estimate exceeds tol

    Returns:
        EnergyReport
    """
    if tol <= 0.0:
        raise InvalidSpec(f"tol={tol} must be positive", ['tol > 0'])
    results = integrate_patches(assembly.patches, tol, max_depth=max_depth, workers=workers,
                                extra_mask=extra_mask)
    report = report_from_patches(results, assembly.multiplicity, params)
    worst = max(report.err_estimate[q] for q in QUANTITIES) / assembly.multiplicity
    if strict and worst > tol:
        logger.error(f"Quadrature error {worst:.3g} exceeds tol {tol:.3g}")
        raise NoConvergence(f"quadrature error {worst:.3g} exceeds tol {tol:.3g}", estimate=report)
    logger.debug(f"Integrated {len(results)} patches: area={report.area:.10g}, W={report.willmore:.10g}")
    return report


def evaluate(assembly, params: Optional[HelfrichParams] = None, tol: float = DEFAULT_TOL,
             max_depth: int = 12, workers: int = 1) -> EnergyReport:
    return integrate(assembly, tol=tol, max_depth=max_depth, workers=workers, params=params)


def helfrich(assembly, params: HelfrichParams, tol: float = DEFAULT_TOL, workers: int = 1) -> float:
    """
    Helfrich energy chi_H * int (H - H0)^2 + chi_K * int K of the assembly.

    With multiplicity theta both integrals carry the factor theta.
    """
    return integrate(assembly, tol=tol, workers=workers, params=params).helfrich


def genus_from_gauss(assembly, tol: float = DEFAULT_TOL, report: Optional[EnergyReport] = None,
                     workers: int = 1) -> int:
    """
    Genus from Gauss-Bonnet: round(1 - int K / 4 pi) for one sheet of multiplicity.

    Raises:
        NonIntegerGenus: if the residual from the nearest integer exceeds 0.1
            or the assembly is not closed
    """
    if not assembly.meta.closed:
        raise NonIntegerGenus('Gauss-Bonnet genus needs a closed surface')
    if report is None:
        report = integrate(assembly, tol=tol, workers=workers)
    raw = 1.0 - report.total_gauss / (4.0 * np.pi * report.multiplicity_applied)
    genus = int(round(raw))
    if abs(raw - genus) > 0.1:
        raise NonIntegerGenus(f"int K gives genus {raw:.4f}, not an integer")
    return genus


def reports_frame(reports) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in reports], columns=CSV_COLUMNS)
