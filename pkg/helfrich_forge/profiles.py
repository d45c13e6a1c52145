"""
One-dimensional profiles behind the constructions.

The flattening profile r_delta, the catenoid height g and the south-pole bump
are all built from the quintic smoothstep S(tau) = tau^3 (10 - 15 tau + 6 tau^2):
the slope of each profile is blended between its two clamped values by S, so
every profile is C^3 with closed-form derivatives.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate

from helfrich_forge.errors import InfeasibleProfile

logger = logging.getLogger(__name__)

# Largest admissible flattening scale; keeps 4*delta well below 1.
DELTA_MAX = 0.15

# Polar angle (measured from the south pole) of the spherical cap that hosts the bump.
CAP_ANGLE = np.pi / 4

Jet = Tuple[np.ndarray, np.ndarray, np.ndarray]


def smoothstep(tau):
    """Quintic smoothstep S and its derivative on [0, 1] (clamped outside)."""
    tau = np.clip(tau, 0.0, 1.0)
    s = tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)
    ds = 30.0 * tau ** 2 * (1.0 - tau) ** 2
    return s, ds


def smoothstep_integral(tau):
    """Antiderivative of S vanishing at 0; equals 1/2 at tau = 1."""
    tau = np.clip(tau, 0.0, 1.0)
    return tau ** 4 * (tau ** 2 - 3.0 * tau + 2.5)


@dataclass(frozen=True)
class TransitionProfile:
    """
    Radial reparametrisation r_delta of the flattened sphere.

    r = 3 delta on [0, 2 delta], r = t beyond 4 delta, and r' = S on the band.
    """
    delta: float

    def evaluate(self, t) -> Jet:
        t = np.asarray(t, dtype=float)
        d = self.delta
        tau = (t - 2.0 * d) / (2.0 * d)
        s, ds = smoothstep(tau)
        band = 3.0 * d + 2.0 * d * smoothstep_integral(tau)
        r = np.where(t >= 4.0 * d, t, band)
        dr = np.where(t >= 4.0 * d, 1.0, s)
        ddr = np.where((t > 2.0 * d) & (t < 4.0 * d), ds / (2.0 * d), 0.0)
        return r, dr, ddr

    def r_fn(self, t):
        return self.evaluate(t)[0]

    def dr_fn(self, t):
        return self.evaluate(t)[1]

    def ddr_fn(self, t):
        return self.evaluate(t)[2]

    def violations(self, samples: int = 1000) -> list:
        """Check the clamp values and the bounds on r' and r'' by dense sampling."""
        d = self.delta
        found = []
        band = np.linspace(2.0 * d, 4.0 * d, samples)
        r, dr, ddr = self.evaluate(band)
        inner = np.linspace(0.0, 2.0 * d, 50)
        outer = np.linspace(4.0 * d, 1.0, 50)
        if not np.allclose(self.r_fn(inner), 3.0 * d, rtol=0.0, atol=1e-14):
            found.append('r_delta != 3 delta on [0, 2 delta]')
        if not np.allclose(self.r_fn(outer), outer, rtol=0.0, atol=1e-14):
            found.append('r_delta != t on [4 delta, 1]')
        if dr.min() < 0.0 or dr.max() > 1.0:
            found.append(f"r' outside [0, 1]: [{dr.min():.3g}, {dr.max():.3g}]")
        if ddr.min() < 0.0 or ddr.max() > 4.0 / d:
            found.append(f"r'' outside [0, 4/delta]: max {ddr.max():.4g}")
        if np.any(np.diff(r) < -1e-15):
            found.append('r_delta not monotone on the band')
        return found


def make_transition_profile(delta: float) -> TransitionProfile:
    """Build r_delta and verify its four constraints by sampling."""
    if not 0.0 < delta < DELTA_MAX:
        raise InfeasibleProfile(f"delta={delta} outside (0, {DELTA_MAX})")
    profile = TransitionProfile(delta=float(delta))
    problems = profile.violations()
    if problems:
        raise InfeasibleProfile(f"transition profile for delta={delta}: {'; '.join(problems)}")
    logger.debug(f"Transition profile ready for delta={delta}")
    return profile


@dataclass(frozen=True)
class CatenoidProfile:
    """
    Height profile g of the flattened catenoid.

    g(t) = t for |t| <= R, g = +-(R + 1/2) for |t| >= R + 1, odd in t, with
    g' = 1 - S(|t| - R) on the blend.
    """
    R: float

    def evaluate(self, t) -> Jet:
        t = np.asarray(t, dtype=float)
        sign = np.where(t < 0.0, -1.0, 1.0)
        a = np.abs(t)
        tau = a - self.R
        s, ds = smoothstep(tau)
        g_abs = np.where(a <= self.R, a, self.R + np.clip(tau, 0.0, 1.0) - smoothstep_integral(tau))
        dg = 1.0 - s
        ddg = np.where((a > self.R) & (a < self.R + 1.0), -ds, 0.0)
        return sign * g_abs, dg, sign * ddg

    def g_fn(self, t):
        return self.evaluate(t)[0]

    def dg_fn(self, t):
        return self.evaluate(t)[1]

    def ddg_fn(self, t):
        return self.evaluate(t)[2]

    def violations(self, samples: int = 1000) -> list:
        R = self.R
        found = []
        band = np.linspace(R, R + 1.0, samples)
        g, dg, ddg = self.evaluate(band)
        inner = np.linspace(-R, R, 101)
        ends = np.linspace(R + 1.0, R + 3.0, 20)
        if not np.allclose(self.g_fn(inner), inner, rtol=0.0, atol=1e-12):
            found.append('g != t on [-R, R]')
        if not np.allclose(self.g_fn(ends), R + 0.5, rtol=0.0, atol=1e-12):
            found.append('g != R + 1/2 beyond R + 1')
        if not np.allclose(self.g_fn(-band), -g, rtol=0.0, atol=1e-14):
            found.append('g is not odd')
        open_band = band[:-1]
        dg_open = self.dg_fn(open_band)
        if dg_open.min() <= 0.0 or dg.max() > 1.0:
            found.append(f"g' outside (0, 1] on |t| < R + 1: min {dg_open.min():.3g}")
        if ddg.min() < -4.0 or ddg.max() > 0.0:
            found.append(f"g'' outside [-4, 0] for t >= 0: min {ddg.min():.4g}")
        return found


def make_catenoid_profile(R: float) -> CatenoidProfile:
    if R < 1.0:
        raise InfeasibleProfile(f"neck parameter R={R} must be >= 1")
    profile = CatenoidProfile(R=float(R))
    problems = profile.violations()
    if problems:
        raise InfeasibleProfile(f"catenoid profile for R={R}: {'; '.join(problems)}")
    return profile


@dataclass(frozen=True)
class CoshProfile:
    """Radius profile f = cosh of the catenoid."""

    def evaluate(self, t) -> Jet:
        t = np.asarray(t, dtype=float)
        return np.cosh(t), np.sinh(t), np.cosh(t)


@dataclass(frozen=True)
class Mollifier:
    """Standard mollifier b(rho) = exp(-1 / (1 - rho^2)) on rho < 1, zero outside."""

    support: float = 1.0

    def evaluate(self, rho) -> Jet:
        rho = np.asarray(rho, dtype=float)
        inside = np.abs(rho) < 1.0
        q = np.where(inside, 1.0 - rho ** 2, 1.0)
        b = np.where(inside, np.exp(-1.0 / q), 0.0)
        db = b * (-2.0 * rho / q ** 2)
        ddb = b * (4.0 * rho ** 2 / q ** 4 - 2.0 / q ** 2 - 8.0 * rho ** 2 / q ** 3)
        return b, np.where(inside, db, 0.0), np.where(inside, ddb, 0.0)

    def mass(self) -> float:
        """Integral of b over the plane."""
        value, _ = integrate.quad(lambda p: 2.0 * np.pi * p * self.evaluate(p)[0], 0.0, 1.0)
        return value

    def dirichlet(self) -> float:
        """Integral of |grad b|^2 over the plane."""
        value, _ = integrate.quad(lambda p: 2.0 * np.pi * p * self.evaluate(p)[1] ** 2, 0.0, 1.0)
        return value

    def violations(self, samples: int = 1000) -> list:
        rho = np.linspace(0.0, 1.5, samples)
        b, db, ddb = self.evaluate(rho)
        found = []
        if b.min() < 0.0:
            found.append('bump profile takes negative values')
        if not np.any(b > 0.0):
            found.append('bump profile vanishes identically')
        if np.any(b[rho >= 1.0] != 0.0):
            found.append('bump support reaches the unit circle')
        if not (np.all(np.isfinite(db)) and np.all(np.isfinite(ddb))):
            found.append('bump derivatives are not finite')
        return found


@dataclass(frozen=True)
class FlatteningHeight:
    """Radial height F(s) = sqrt(1 - r_delta(s)^2) of the flattened north cap."""
    transition: TransitionProfile

    def evaluate(self, s) -> Jet:
        r, dr, ddr = self.transition.evaluate(s)
        F = np.sqrt(1.0 - r ** 2)
        dF = -r * dr / F
        ddF = -(dr ** 2 + r * ddr) / F - (r * dr) ** 2 / F ** 3
        return F, dF, ddF

    @property
    def plateau(self) -> float:
        return float(np.sqrt(1.0 - 9.0 * self.transition.delta ** 2))


def check_concave(height, radius: float, samples: int = 1000, atol: float = 1e-10) -> float:
    """
    Largest Hessian eigenvalue of the radial graph z = F(|x|) on the disc of
    the given radius. The eigenvalues are F''(s) and F'(s)/s.

    Raises:
        InfeasibleProfile: If an eigenvalue exceeds atol
    """
    s = np.linspace(radius / samples, radius, samples)
    _, dF, ddF = height.evaluate(s)
    worst = float(max(np.max(ddF), np.max(dF / s)))
    if worst > atol:
        raise InfeasibleProfile(f"height is not concave on radius {radius:.4g}: eigenvalue {worst:.3g}")
    return worst


@dataclass(frozen=True)
class SouthCapHeight:
    """
    Lower hemisphere of the unit sphere as a graph, optionally lifted by a bump.

    F(s) = -sqrt(1 - s^2) + amplitude * b(s / width). amplitude and width are in
    the chart's native units (world values divided by the sheet scale).
    """
    amplitude: float = 0.0
    width: float = 1.0
    bump: Mollifier = Mollifier()

    def evaluate(self, s) -> Jet:
        s = np.asarray(s, dtype=float)
        root = np.sqrt(1.0 - s ** 2)
        F, dF, ddF = -root, s / root, 1.0 / root ** 3
        if self.amplitude == 0.0:
            return F, dF, ddF
        b, db, ddb = self.bump.evaluate(s / self.width)
        return (F + self.amplitude * b,
                dF + self.amplitude * db / self.width,
                ddF + self.amplitude * ddb / self.width ** 2)

    @property
    def support(self) -> float:
        return self.width if self.amplitude else 0.0
