"""
Radial thin-layer model on the disk: an annulus of thickness eps*h and
conductivity eps around the body, with Robin exchange on its outer rim.
Its first eigenvalue tends to the insulated Robin eigenvalue as eps -> 0.
"""

import logging
import math
import typing as t

from scipy.optimize import brentq

from robin_insulation.core.spectra import bessel_j, disk_dirichlet_oracle, disk_robin_oracle
from robin_insulation.models.domain import LayerSpec
from robin_insulation.models.results import DispersionRoot, GammaRow
from robin_insulation.utils.error_handling import BracketError, ConvergenceError

logger = logging.getLogger(__name__)

OUTER_CONDITIONS = ("weak", "strong")


def layer_effective_beta(spec: LayerSpec, outer_condition: str = "weak") -> float:
    """
    Robin coefficient seen by the disk once the harmonic layer solution
    A + B ln r is eliminated.

    With outer condition eps du/dn + beta u = 0 ("weak", from the layered
    energy) the coefficient is beta / (R/R_eps + beta R ln(R_eps/R) / eps);
    with du/dn + beta u = 0 ("strong") the first term becomes R / (eps R_eps).
    """
    if outer_condition not in OUTER_CONDITIONS:
        raise ValueError(f"Unknown outer condition '{outer_condition}' (expected one of {OUTER_CONDITIONS})")
    R, R_eps = spec.radius, spec.outer_radius
    log_term = spec.beta * R * math.log1p(spec.eps * spec.h_const / R) / spec.eps
    rim = R / R_eps if outer_condition == "weak" else R / (spec.eps * R_eps)
    return spec.beta / (rim + log_term)


def layer_dispersion_root(spec: LayerSpec, outer_condition: str = "weak",
                          tol: float = 1e-12) -> DispersionRoot:
    """Smallest k with k J1(kR) = beta_eps J0(kR) for the layered disk."""
    beta_eps = layer_effective_beta(spec, outer_condition)
    root = disk_robin_oracle(beta_eps, spec.radius)
    if root.residual > tol:
        raise ConvergenceError("Layer dispersion relation not resolved", root.residual)
    return DispersionRoot(k=root.k, relation=f"layer[{outer_condition}]", residual=root.residual,
                          bracket=root.bracket)


def radial_layer_eigenvalue(spec: LayerSpec, tol: float = 1e-12, outer_condition: str = "weak") -> float:
    return layer_dispersion_root(spec, outer_condition, tol).eigenvalue


def limit_dispersion_residual(k: float, beta: float, h: float, radius: float = 1.0) -> float:
    """Residual of k J1(kR)(1 + beta h) = beta J0(kR), the eps -> 0 relation."""
    return k * bessel_j(1, k * radius) * (1.0 + beta * h) - beta * bessel_j(0, k * radius)


def limit_root(beta: float, h: float, radius: float = 1.0) -> float:
    """Root k of the eps -> 0 relation, solved directly."""
    upper = disk_dirichlet_oracle(radius).k
    f = lambda k: limit_dispersion_residual(k, beta, h, radius)
    if f(0.0) * f(upper) > 0.0:
        raise BracketError(f"No root of the limit relation in (0, {upper:g})")
    return brentq(f, 0.0, upper, xtol=1e-15, maxiter=200)


def gamma_limit_report(beta: float, h_const: float, eps_list: t.Sequence[float], radius: float = 1.0,
                       outer_condition: str = "weak") -> t.List[GammaRow]:
    """
    Layered eigenvalue for each eps against the insulated Robin eigenvalue
    with weight beta / (1 + beta h).

    Args:
        beta: Heat-transfer coefficient
        h_const: Uniform profile
        eps_list: Positive, strictly decreasing layer scales
        radius: Disk radius
        outer_condition: 'weak' or 'strong'

    Returns:
        One GammaRow per eps, in input order
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0.0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    limit = disk_robin_oracle(beta / (1.0 + beta * h_const), radius).eigenvalue
    rows = []
    for eps in eps_list:
        spec = LayerSpec(eps=eps, h_const=h_const, beta=beta, radius=radius)
        rows.append(GammaRow(eps=eps, eigenvalue=radial_layer_eigenvalue(spec, outer_condition=outer_condition),
                             limit=limit))
        logger.debug(f"eps={eps:g}: layered eigenvalue {rows[-1].eigenvalue:.15g} (gap {rows[-1].gap:.3e})")
    return rows
