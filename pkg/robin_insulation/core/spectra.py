"""
Reference eigenvalues: Dirichlet, first nontrivial Neumann and Robin, by FEM
on any mesh and from the radial Bessel dispersion relations on the disk.
Also the convection threshold beta* and the critical mass m_bar.
"""

import logging
import math
import typing as t

import numpy as np
import scipy.special as special
from scipy.optimize import brentq

from robin_insulation.core.assembly import FemOperators, assemble_boundary_mass, assemble_operators
from robin_insulation.core.eigensolver import (DEFAULT_TOL, dirichlet_eigenpair,
                                               neumann_nontrivial_eigenpair, smallest_eigenpair)
from robin_insulation.core.insulation import minimize_lambda_m
from robin_insulation.core.mesher import build_mesh
from robin_insulation.models.domain import DomainSpec
from robin_insulation.models.mesh import TriMesh
from robin_insulation.models.results import DispersionRoot
from robin_insulation.utils.error_handling import BracketError, ConvergenceError, NoThreshold

logger = logging.getLogger(__name__)

BESSEL_RANGE = 50.0
M_BAR_SOLVES = 40
# First zero of J0 and first zero of J1' (first maximum of J1)
DIRICHLET_BRACKET = (2.0, 3.0)
NEUMANN_BRACKET = (1.0, 3.0)


def bessel_j(n: int, x: t.Union[float, np.ndarray]) -> t.Union[float, np.ndarray]:
    """
    Bessel function of the first kind J_n for n in {0, 1} and 0 <= x <= 50.
    """
    if n not in (0, 1):
        raise ValueError(f"Only J0 and J1 are supported, got order {n}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > BESSEL_RANGE) or not np.all(np.isfinite(arr)):
        raise ValueError(f"Bessel argument outside [0, {BESSEL_RANGE:g}]: {x}")
    value = special.j0(arr) if n == 0 else special.j1(arr)
    return float(value) if np.ndim(x) == 0 else value


def _root(f: t.Callable[[float], float], lo: float, hi: float, relation: str) -> float:
    if f(lo) * f(hi) > 0.0:
        raise BracketError(f"No sign change of the {relation} relation on [{lo:g}, {hi:g}]")
    return brentq(f, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)


def _check_radius(radius: float) -> None:
    if not radius > 0.0:
        raise ValueError(f"Radius must be positive, got {radius}")


def disk_dirichlet_oracle(radius: float = 1.0) -> DispersionRoot:
    """k = j_{0,1} / R, the first zero of J0 scaled to the disk."""
    _check_radius(radius)
    x = _root(lambda s: bessel_j(0, s), *DIRICHLET_BRACKET, relation="Dirichlet")
    return DispersionRoot(k=x / radius, relation="J0(kR)=0", residual=abs(bessel_j(0, x)),
                          bracket=(DIRICHLET_BRACKET[0] / radius, DIRICHLET_BRACKET[1] / radius))


def disk_neumann_oracle(radius: float = 1.0) -> DispersionRoot:
    """k = p'_{1,1} / R with J1'(x) = J0(x) - J1(x)/x = 0."""
    _check_radius(radius)

    def relation(s):
        return bessel_j(0, s) - bessel_j(1, s) / s

    x = _root(relation, *NEUMANN_BRACKET, relation="Neumann")
    return DispersionRoot(k=x / radius, relation="J1'(kR)=0", residual=abs(relation(x)),
                          bracket=(NEUMANN_BRACKET[0] / radius, NEUMANN_BRACKET[1] / radius))


def disk_robin_oracle(beta: float, radius: float = 1.0) -> DispersionRoot:
    """
    Smallest k > 0 with k J1(kR) = beta J0(kR); the eigenfunction is J0(kr).

    Args:
        beta: Robin coefficient (>= 0; beta = 0 gives k = 0)
        radius: Disk radius

    Returns:
        DispersionRoot with residual scaled by 1 + beta
    """
    _check_radius(radius)
    if not beta >= 0.0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    upper = disk_dirichlet_oracle(radius).k
    if beta == 0.0:
        return DispersionRoot(k=0.0, relation="kJ1(kR)=beta*J0(kR)", residual=0.0, bracket=(0.0, upper))

    def relation(k):
        return k * bessel_j(1, k * radius) - beta * bessel_j(0, k * radius)

    k = _root(relation, 0.0, upper, relation="Robin")
    return DispersionRoot(k=k, relation="kJ1(kR)=beta*J0(kR)", residual=abs(relation(k)) / (1.0 + beta),
                          bracket=(0.0, upper))


def beta_star_oracle(radius: float = 1.0) -> float:
    """Disk threshold in closed form: beta* = k J1(p) / J0(p) with p = p'_{1,1}, k = p / R."""
    p = disk_neumann_oracle(1.0).k
    return p / radius * bessel_j(1, p) / bessel_j(0, p)


def radial_branch_eigenvalue(beta: float, m: float, radius: float = 1.0) -> float:
    """lambda of the uniform profile m / (2 pi R) on the disk."""
    return disk_robin_oracle(beta / (1.0 + beta * m / (2.0 * math.pi * radius)), radius).eigenvalue


def disk_m_bar_oracle(beta: float, radius: float = 1.0) -> float:
    """
    Mass at which the radial branch reaches the Neumann eigenvalue:
    2 pi R (1 / beta* - 1 / beta).
    """
    b_star = beta_star_oracle(radius)
    if beta <= b_star:
        raise NoThreshold(f"No critical mass for beta={beta} <= beta*={b_star:.10g}")
    return 2.0 * math.pi * radius * (1.0 / b_star - 1.0 / beta)


def lambda_dirichlet(mesh: TriMesh, operators: t.Optional[FemOperators] = None,
                     tol: float = DEFAULT_TOL) -> float:
    operators = operators or assemble_operators(mesh)
    return dirichlet_eigenpair(operators.K, operators.M, mesh.boundary_vertices, tol).eigenvalue


def lambda_neumann(mesh: TriMesh, operators: t.Optional[FemOperators] = None,
                   tol: float = DEFAULT_TOL) -> float:
    operators = operators or assemble_operators(mesh)
    return neumann_nontrivial_eigenpair(operators.K, operators.M, tol).eigenvalue


def lambda_robin(mesh: TriMesh, beta: float, operators: t.Optional[FemOperators] = None,
                 tol: float = DEFAULT_TOL) -> float:
    operators = operators or assemble_operators(mesh)
    if beta == 0.0:
        return 0.0
    B = assemble_boundary_mass(mesh, beta)
    return smallest_eigenpair(operators.K + B, operators.M, tol).eigenvalue


def _beta_star_fem(mesh: TriMesh, tol: float, operators: t.Optional[FemOperators]) -> float:
    operators = operators or assemble_operators(mesh)
    target = lambda_neumann(mesh, operators)

    def gap(beta):
        return lambda_robin(mesh, beta, operators) - target

    hi = 1.0
    while gap(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise BracketError("Robin eigenvalue never reaches the Neumann eigenvalue")
    b_star = brentq(gap, 0.0, hi, xtol=1e-13, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    residual = abs(gap(b_star))
    if residual > tol * max(1.0, target):
        raise ConvergenceError("beta* not resolved", residual)
    logger.info(f"FEM beta*={b_star:.12g} (lambda_N={target:.12g})")
    return float(b_star)


def beta_star(domain: t.Union[DomainSpec, TriMesh], tol: float = 1e-10,
              operators: t.Optional[FemOperators] = None) -> float:
    """
    Threshold beta* with lambda_R(beta*) = lambda_N.

    Args:
        domain: A disk DomainSpec (Bessel oracle) or a mesh (FEM bisection)
        tol: Residual tolerance of lambda_R(beta*) - lambda_N
        operators: Precomputed matrices for the mesh

    Returns:
        beta*
    """
    if isinstance(domain, TriMesh):
        return _beta_star_fem(domain, tol, operators)
    if domain.kind == "disk":
        return beta_star_oracle(domain.radius)
    return _beta_star_fem(build_mesh(domain), tol, None)


def m_bar(beta: float, mesh: TriMesh, tol: float = 1e-3,
          operators: t.Optional[FemOperators] = None,
          b_star: t.Optional[float] = None, **solve_options) -> float:
    """
    Critical mass with lambda_{m_bar}(beta) = lambda_N, by bracketed root
    finding on the full alternating solve. Bracket doubling and root finding
    share a budget of M_BAR_SOLVES solves.

    Raises:
        NoThreshold: beta <= beta*
        BracketError: lambda_m stays above lambda_N while doubling the mass
        ConvergenceError: the budget ran out or the root does not reach tol
    """
    operators = operators or assemble_operators(mesh)
    b_star = b_star if b_star is not None else beta_star(mesh, operators=operators)
    if beta <= b_star:
        raise NoThreshold(f"No critical mass for beta={beta} <= beta*={b_star:.10g}")
    target = lambda_neumann(mesh, operators)
    solved = {}

    def gap(m):
        if m in solved:
            return solved[m]
        if len(solved) >= M_BAR_SOLVES:
            raise ConvergenceError(f"m_bar search used its {M_BAR_SOLVES} solves",
                                   min(abs(v) for v in solved.values()), list(solved.values()))
        value = minimize_lambda_m(mesh, beta, m, operators=operators, **solve_options).lambda_m - target
        solved[m] = value
        logger.debug(f"m_bar solve {len(solved)}: m={m:.12g} gap={value:.3e}")
        return value

    hi = 2.0 * mesh.perimeter * (1.0 / b_star - 1.0 / beta)
    while gap(hi) >= 0.0:
        if len(solved) >= M_BAR_SOLVES:
            raise BracketError(f"lambda_m stays above lambda_N up to m={hi:g}")
        hi *= 2.0
    try:
        root = brentq(gap, 0.0, hi, xtol=1e-6 * hi, maxiter=M_BAR_SOLVES)
    except RuntimeError as e:
        raise ConvergenceError(f"m_bar bracketing failed: {e}", min(abs(v) for v in solved.values())) from e
    residual = abs(gap(root))
    if residual > tol:
        raise ConvergenceError("m_bar not resolved", residual, list(solved.values()))
    logger.info(f"m_bar={root:.12g} for beta={beta} ({len(solved)} solves)")
    return float(root)


def fitted_order(sizes: t.Sequence[float], errors: t.Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(mesh size)."""
    slope, _ = np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(np.abs(errors)), 1)
    return float(slope)


def reference_rows(mesh: TriMesh, beta: float,
                   operators: t.Optional[FemOperators] = None) -> t.List[t.Tuple[str, float, float]]:
    """
    (quantity, FEM value, disk oracle value) rows; the oracle is nan off the disk.
    """
    operators = operators or assemble_operators(mesh)
    disk = mesh.domain is not None and mesh.domain.kind == "disk"
    radius = mesh.domain.radius if disk else float("nan")
    nan = float("nan")

    rows = [
        ("lambda_D", lambda_dirichlet(mesh, operators), disk_dirichlet_oracle(radius).eigenvalue if disk else nan),
        ("lambda_N", lambda_neumann(mesh, operators), disk_neumann_oracle(radius).eigenvalue if disk else nan),
        ("lambda_R", lambda_robin(mesh, beta, operators), disk_robin_oracle(beta, radius).eigenvalue if disk else nan),
        ("beta_star", beta_star(mesh, operators=operators), beta_star_oracle(radius) if disk else nan),
    ]
    if disk and beta > beta_star_oracle(radius):
        rows.append(("m_bar_oracle", nan, disk_m_bar_oracle(beta, radius)))
    return rows
