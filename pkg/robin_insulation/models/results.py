"""
Result data models for the insulation laboratory.
"""

import typing as t
from dataclasses import dataclass, field

import numpy as np

from robin_insulation.models.fields import BoundaryField


@dataclass
class EigenPair:
    """Eigenvalue and M-normalized eigenvector, sign fixed so that the integral of u is >= 0."""
    eigenvalue: float
    u: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    gap: t.Optional[float] = None


@dataclass
class FixedPointReport:
    """The constant c_v together with its level set {|v| >= c_v}."""
    c: float
    level_set_measure: float
    level_set_integral: float
    residual: float
    bracket: t.Tuple[float, float]


@dataclass
class SolveResult:
    """Outcome of the alternating minimization for one (beta, m)."""
    lambda_m: float
    u: np.ndarray
    h: BoundaryField
    c_u: float
    iterations: int
    functional_trace: t.List[float]
    radiality: float
    beta: float
    m: float
    converged: bool = True
    restart_lambdas: t.List[float] = field(default_factory=list)
    # relative gap of the final eigenpair
    gap: t.Optional[float] = None

    @property
    def mass(self) -> float:
        return self.h.mass()

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "m": self.m,
            "lambda_m": self.lambda_m,
            "c_u": self.c_u,
            "radiality": self.radiality,
            "iterations": self.iterations,
            "converged": self.converged,
            "restart_lambdas": list(self.restart_lambdas),
            "gap": self.gap,
        }


@dataclass
class DispersionRoot:
    """Root k of a radial Bessel dispersion relation on the disk."""
    k: float
    relation: str
    residual: float
    bracket: t.Tuple[float, float]

    @property
    def eigenvalue(self) -> float:
        return self.k * self.k


@dataclass
class GammaRow:
    """One layer thickness scale of the thin-layer limit study."""
    eps: float
    eigenvalue: float
    limit: float

    @property
    def gap(self) -> float:
        return abs(self.eigenvalue - self.limit)
