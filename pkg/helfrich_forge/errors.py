"""
Exception hierarchy shared by all helfrich_forge modules.
"""

from typing import Any, List, Optional


class HelfrichForgeError(Exception):
    """Base class for every error raised by the toolkit."""


class DegeneratePoint(HelfrichForgeError):
    """The chart is not an immersion at the requested point (EG - F^2 <= 0)."""


class CurvatureMismatch(HelfrichForgeError):
    """Closed-form and fundamental-form curvatures disagree."""


class InfeasibleProfile(HelfrichForgeError):
    """A transition, height or bump profile violates its sampled constraints."""


class InvalidSpec(HelfrichForgeError):
    """A construction spec violates one or more of its constraints."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class GluingConflict(InvalidSpec):
    """Neck cylinders overlap or a neck does not fit inside its cylinder."""


class SupportTooLarge(HelfrichForgeError):
    """The south-pole bump leaves the spherical cap it is meant to perturb."""


class NoConvergence(HelfrichForgeError):
    """Adaptive quadrature exhausted its refinement budget before reaching tol."""

    def __init__(self, message: str, estimate: Any = None):
        super().__init__(message)
        self.estimate = estimate


class NonIntegerGenus(HelfrichForgeError):
    """Total Gauss curvature is not close to 4*pi*(1-g) for an integer g."""


class NotInBall(HelfrichForgeError):
    """A surface required to lie in the closed unit ball leaves it."""


class ContradictionDetected(HelfrichForgeError):
    """The sphere criterion certified a surface whose genus is positive."""


class NotWatertight(HelfrichForgeError):
    """Welding left boundary or non-manifold edges."""

    def __init__(self, message: str, open_edges: int = 0):
        super().__init__(message)
        self.open_edges = open_edges


class NonPositiveEnergy(HelfrichForgeError):
    """A decay fit received a non-positive energy value."""


class BudgetExhausted(HelfrichForgeError):
    """The parameter search ran out of evaluations before reaching its target."""

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


class ConfigError(HelfrichForgeError):
    """A run configuration contains unknown keys or malformed values."""
