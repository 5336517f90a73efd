"""
Optimal insulation: the c_v fixed point, the optimal profile for a given
function and the alternating minimization that yields lambda_m.
"""

import logging
import math
import typing as t

import numpy as np
from scipy.optimize import brentq

from robin_insulation.core.assembly import (FemOperators, assemble_operators,
                                            assemble_profile_boundary_mass, rayleigh_quotient)
from robin_insulation.core.eigensolver import DEFAULT_TOL, smallest_eigenpair
from robin_insulation.models.fields import BoundaryField, TraceField
from robin_insulation.models.mesh import TriMesh, NodalField
from robin_insulation.models.results import EigenPair, FixedPointReport, SolveResult
from robin_insulation.utils.error_handling import (ConvergenceError, DegenerateTrace,
                                                   DescentError)
from robin_insulation.utils.quadrature import integrate_unit_segments

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 500
# Stopping thresholds of the alternating scheme
F_DECREASE_TOL = 1e-10
C_CHANGE_TOL = 1e-8
# Allowed relative increase of F between two iterations
DESCENT_SLACK = 1e-12
# Relative lambda difference under which two starts count as the same minimum
RESTART_TIE = 1e-8
RESTART_DISAGREEMENT = 1e-6
PERTURBATION = 0.1
MASS_IDENTITY_TOL = 1e-8
RADIALITY_FLOOR = 1e-9
# Extrapolation of slowly contracting alternations
EXTRAPOLATION_PERIOD = 5
EXTRAPOLATION_MIN_RATE = 0.5
EXTRAPOLATION_TRIALS = 3
EXTRAPOLATION_SHRINK = 0.25
MAX_EXTRAPOLATION = 1e3


def _check_parameters(beta: float, m: float) -> None:
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not m >= 0.0:
        raise ValueError(f"Mass must be nonnegative, got {m}")


def solve_c_fixed_point(trace: TraceField, beta: float, m: float, tol: float = 1e-12) -> FixedPointReport:
    """
    Find the unique c > 0 with c * (|{|v| >= c}| + beta m) = integral of |v| over {|v| >= c}.

    Args:
        trace: Boundary trace |v|
        beta: Heat-transfer coefficient
        m: Insulation mass
        tol: Residual tolerance relative to 1 + integral of |v|

    Returns:
        FixedPointReport with the exact level set of the returned c

    Raises:
        DegenerateTrace: |v| vanishes on the whole boundary
    """
    _check_parameters(beta, m)
    if not m > 0.0:
        raise ValueError("The fixed point needs a positive mass")
    top = trace.max
    if top <= 0.0 or trace.total() <= 0.0:
        raise DegenerateTrace("Boundary trace vanishes identically; c_v and h_v are undefined")

    def g(c):
        measure, integral = trace.level_set(c)
        return c * (measure + beta * m) - integral

    # g(0) < 0 < g(max) and g' >= beta m > 0
    c = brentq(g, 0.0, top, xtol=1e-15 * top, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    measure, integral = trace.level_set(c)
    residual = c * (measure + beta * m) - integral
    if abs(residual) > tol * (1.0 + trace.total()):
        raise ConvergenceError("Fixed point for c_v not resolved", abs(residual))
    return FixedPointReport(c=float(c), level_set_measure=measure, level_set_integral=integral,
                            residual=float(residual), bracket=(0.0, top))


def optimal_h(trace: TraceField, beta: float, m: float, tol: float = 1e-12,
              report: t.Optional[FixedPointReport] = None) -> BoundaryField:
    """
    Profile of mass m minimizing the boundary integral of v^2 / (1 + beta h):
    h = (|v| / c_v - 1) / beta where |v| >= c_v and 0 elsewhere.
    A knot is placed at every crossing |v| = c_v inside an edge.

    Args:
        trace: Boundary trace |v|
        beta: Heat-transfer coefficient
        m: Insulation mass (0 gives the zero profile)
        tol: Fixed-point tolerance
        report: Precomputed fixed point for this trace

    Returns:
        BoundaryField with mass m
    """
    _check_parameters(beta, m)
    if m == 0.0:
        return BoundaryField.constant(trace.lengths, 0.0)
    report = report or solve_c_fixed_point(trace, beta, m, tol)
    c = report.c

    a, b = trace.endpoints()
    vertex_h = np.maximum(trace.values / c - 1.0, 0.0) / beta
    rising = (a < c) & (b > c)
    falling = (a > c) & (b < c)
    cut = np.flatnonzero(rising | falling)
    t_cut = (c - a[cut]) / (b[cut] - a[cut])

    h = BoundaryField(edge=np.concatenate([np.arange(len(a)), cut]),
                      t=np.concatenate([np.zeros(len(a)), t_cut]),
                      values=np.concatenate([vertex_h, np.zeros(len(cut))]),
                      lengths=trace.lengths)
    mass = h.mass()
    if abs(mass - m) > MASS_IDENTITY_TOL * m:
        raise ConvergenceError(f"Optimal profile has mass {mass:.17g} instead of {m:.17g}", abs(mass - m))
    return h


def boundary_energy(trace: TraceField, h: BoundaryField, beta: float, rtol: float = 1e-12) -> float:
    """Boundary integral of v^2 / (1 + beta h), integrated piece by piece over the knots of h."""
    if np.any(h.values < 0.0):
        raise ValueError("Profile must be nonnegative")
    a, b = trace.endpoints()
    e, t0, t1, h0, h1 = h.segments()
    span = t1 - t0

    def integrand(tau):
        tt = t0[:, None] + tau * span[:, None]
        v = a[e][:, None] + tt * (b[e] - a[e])[:, None]
        hh = h0[:, None] + tau * (h1 - h0)[:, None]
        return v * v / (1.0 + beta * hh)

    pieces = integrate_unit_segments(integrand, rtol=rtol)
    return float(np.sum(pieces * trace.lengths[e] * span))


def reduced_boundary_energy(trace: TraceField, beta: float, m: float) -> float:
    """
    Boundary energy at the optimal profile, in closed form:
    c_v times the integral of |v| over {|v| >= c_v} plus the integral of v^2 over {|v| < c_v}.
    """
    _check_parameters(beta, m)
    if m == 0.0:
        return trace.sublevel_square_integral(np.inf)
    report = solve_c_fixed_point(trace, beta, m)
    return report.c * report.level_set_integral + trace.sublevel_square_integral(report.c)


def lambda_of_h(mesh: TriMesh, h: BoundaryField, beta: float, tol: float = DEFAULT_TOL,
                operators: t.Optional[FemOperators] = None, x0: t.Optional[NodalField] = None,
                linear_solver: str = "direct", check_gap: bool = False) -> EigenPair:
    """
    First eigenpair of the Laplacian with the insulated Robin condition
    du/dn + beta u / (1 + beta h) = 0. With check_gap the pair also carries
    the relative gap to the second eigenvalue.
    """
    operators = operators or assemble_operators(mesh)
    B = assemble_profile_boundary_mass(mesh, h, beta)
    return smallest_eigenpair(operators.K + B, operators.M, tol=tol, x0=x0, check_gap=check_gap,
                              linear_solver=linear_solver)


def functional(mesh: TriMesh, u: NodalField, h: BoundaryField, beta: float,
               operators: t.Optional[FemOperators] = None) -> float:
    """F(u, h) on the discrete space."""
    operators = operators or assemble_operators(mesh)
    B = assemble_profile_boundary_mass(mesh, h, beta)
    return rayleigh_quotient(operators.K, operators.M, B, u)


def perturbed_start(mesh: TriMesh, m: float) -> BoundaryField:
    """Uniform profile tilted by 1 + 0.1 cos(theta), rescaled to mass m."""
    tilt = 1.0 + PERTURBATION * np.cos(mesh.boundary_angles)
    h = BoundaryField.from_vertex_values(mesh.edge_lengths, m / mesh.perimeter * tilt)
    return h.scaled(m / h.mass())


def _extrapolate(mesh: TriMesh, operators: FemOperators, beta: float, m: float, pair: EigenPair,
                 step: NodalField, omega: float, eig_tol: float, linear_solver: str
                 ) -> t.Optional[t.Tuple[EigenPair, BoundaryField]]:
    """
    Jump along the last u increment and keep the first damped length that lowers lambda.
    Returns None when every length fails.
    """
    for _ in range(EXTRAPOLATION_TRIALS):
        u_jump = pair.u + omega * step
        try:
            h_jump = optimal_h(TraceField.from_nodal(mesh, u_jump), beta, m)
            jump = lambda_of_h(mesh, h_jump, beta, eig_tol, operators, x0=u_jump, linear_solver=linear_solver)
        except (DegenerateTrace, ConvergenceError):
            jump = None
        if jump is not None and jump.eigenvalue < pair.eigenvalue:
            return jump, h_jump
        omega *= EXTRAPOLATION_SHRINK
    return None


def _alternate(mesh: TriMesh, operators: FemOperators, beta: float, m: float, h: BoundaryField,
               tol: float, c_tol: float, max_iter: int, eig_tol: float, linear_solver: str,
               label: str) -> SolveResult:
    pair = lambda_of_h(mesh, h, beta, eig_tol, operators, linear_solver=linear_solver)
    report = solve_c_fixed_point(TraceField.from_nodal(mesh, pair.u), beta, m)
    trace = [pair.eigenvalue]
    converged = False
    iterations = 0
    # plain steps since the last extrapolation attempt
    previous_step: t.Optional[NodalField] = None
    plain_steps = 0

    for iterations in range(1, max_iter + 1):
        trace_u = TraceField.from_nodal(mesh, pair.u)
        h_next = optimal_h(trace_u, beta, m, report=report)
        nxt = lambda_of_h(mesh, h_next, beta, eig_tol, operators, x0=pair.u, linear_solver=linear_solver)
        if nxt.eigenvalue > pair.eigenvalue * (1.0 + DESCENT_SLACK):
            raise DescentError(f"F increased from {pair.eigenvalue:.17g} to {nxt.eigenvalue:.17g} "
                               f"at iteration {iterations}")
        report_next = solve_c_fixed_point(TraceField.from_nodal(mesh, nxt.u), beta, m)
        trace.append(nxt.eigenvalue)

        decrease = (pair.eigenvalue - nxt.eigenvalue) / max(pair.eigenvalue, 1e-300)
        c_change = abs(report_next.c - report.c) / max(report.c, 1e-300)
        logger.debug(f"[{label}] iteration {iterations}: F={nxt.eigenvalue:.15g} "
                     f"c_u={report_next.c:.12g} (dF={decrease:.2e}, dc={c_change:.2e})")
        step = nxt.u - pair.u
        pair, report, h = nxt, report_next, h_next
        if decrease < tol and c_change < c_tol:
            converged = True
            break

        plain_steps += 1
        if previous_step is not None and plain_steps >= EXTRAPOLATION_PERIOD:
            plain_steps = 0
            # contraction rate of the slowest mode, measured in the mass norm
            rate = math.sqrt(float(step @ (operators.M @ step)) /
                             max(float(previous_step @ (operators.M @ previous_step)), 1e-300))
            if EXTRAPOLATION_MIN_RATE < rate < 1.0:
                omega = min(rate / (1.0 - rate), MAX_EXTRAPOLATION)
                jumped = _extrapolate(mesh, operators, beta, m, pair, step, omega, eig_tol, linear_solver)
                if jumped is not None:
                    pair, h = jumped
                    report = solve_c_fixed_point(TraceField.from_nodal(mesh, pair.u), beta, m)
                    trace.append(pair.eigenvalue)
                    logger.debug(f"[{label}] extrapolated with rate {rate:.6f}: F={pair.eigenvalue:.15g}")
                    previous_step = None
                    continue
        previous_step = step

    if not converged:
        logger.warning(f"[{label}] alternating minimization stopped after {max_iter} iterations "
                       f"without reaching tolerance (beta={beta}, m={m})")
    return SolveResult(lambda_m=trace[-1], u=pair.u, h=h, c_u=report.c, iterations=iterations,
                       functional_trace=trace, radiality=radiality_indicator(mesh, pair.u),
                       beta=beta, m=m, converged=converged)


def minimize_lambda_m(mesh: TriMesh, beta: float, m: float, tol: float = F_DECREASE_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, c_tol: float = C_CHANGE_TOL,
                      eig_tol: float = DEFAULT_TOL, restarts: bool = True,
                      operators: t.Optional[FemOperators] = None,
                      linear_solver: str = "direct") -> SolveResult:
    """
    Minimize lambda(h) over profiles of mass m by alternating an eigen solve
    for fixed h with the closed-form optimal h for fixed u.

    Args:
        mesh: Domain triangulation
        beta: Heat-transfer coefficient
        m: Insulation mass
        tol: Relative decrease of F below which the scheme may stop
        max_iter: Iteration cap per start
        c_tol: Relative change of c_u below which the scheme may stop
        eig_tol: Eigen-residual tolerance
        restarts: Also run from the tilted profile and keep the lower lambda
        operators: Precomputed stiffness and mass matrices
        linear_solver: Inner solver of the inverse iteration

    Returns:
        SolveResult; converged is False when max_iter was hit, gap is the
        relative spectral gap of the final eigenpair
    """
    _check_parameters(beta, m)
    operators = operators or assemble_operators(mesh)

    if m == 0.0:
        h = BoundaryField.constant(mesh.edge_lengths, 0.0)
        pair = lambda_of_h(mesh, h, beta, eig_tol, operators, linear_solver=linear_solver, check_gap=True)
        return SolveResult(lambda_m=pair.eigenvalue, u=pair.u, h=h,
                           c_u=float(np.max(np.abs(mesh.boundary_trace(pair.u)))), iterations=0,
                           functional_trace=[pair.eigenvalue],
                           radiality=radiality_indicator(mesh, pair.u), beta=beta, m=m,
                           restart_lambdas=[pair.eigenvalue], gap=pair.gap)

    args = (tol, c_tol, max_iter, eig_tol, linear_solver)
    best = _alternate(mesh, operators, beta, m, BoundaryField.uniform(mesh, m), *args, label="uniform start")
    lambdas = [best.lambda_m]
    if restarts:
        tilted = _alternate(mesh, operators, beta, m, perturbed_start(mesh, m), *args, label="tilted start")
        lambdas.append(tilted.lambda_m)
        spread = (best.lambda_m - tilted.lambda_m) / max(best.lambda_m, 1e-300)
        if abs(spread) > RESTART_DISAGREEMENT:
            logger.warning(f"Starts disagree at beta={beta}, m={m}: uniform {best.lambda_m:.12g}, "
                           f"tilted {tilted.lambda_m:.12g}")
        if spread > RESTART_TIE:
            best = tilted
        elif abs(spread) <= RESTART_TIE:
            best.converged = best.converged or tilted.converged
    best.restart_lambdas = lambdas
    best.gap = lambda_of_h(mesh, best.h, beta, eig_tol, operators, x0=best.u, linear_solver=linear_solver,
                           check_gap=True).gap
    logger.info(f"lambda_m={best.lambda_m:.12g} for beta={beta}, m={m} "
                f"({best.iterations} iterations, radiality {best.radiality:.3e}, gap {best.gap:.3e})")
    return best


def radiality_indicator(mesh: TriMesh, u: NodalField) -> float:
    """
    Weighted standard deviation of the boundary trace over its weighted mean
    absolute value, with half the adjacent edge lengths as vertex weights.
    """
    values = mesh.boundary_trace(u)
    lengths = mesh.edge_lengths
    w = 0.5 * (lengths + np.roll(lengths, 1))
    mean = np.average(values, weights=w)
    std = np.sqrt(np.average((values - mean) ** 2, weights=w))
    return float(std / (np.average(np.abs(values), weights=w) + 1e-14))


def calibrate_radiality_tolerance(mesh: TriMesh, beta: float, safety: float = 1.0,
                                  operators: t.Optional[FemOperators] = None) -> float:
    """
    Radiality tolerance of a mesh: the indicator of its pure-Robin eigenfunction
    (tau_mesh), times safety.
    """
    h = BoundaryField.constant(mesh.edge_lengths, 0.0)
    pair = lambda_of_h(mesh, h, beta, operators=operators)
    tau = max(safety * radiality_indicator(mesh, pair.u), RADIALITY_FLOOR)
    logger.debug(f"Radiality tolerance {tau:.3e} (beta={beta})")
    return tau


def boundary_flux_residual(mesh: TriMesh, result: SolveResult) -> float:
    """
    Largest deviation of the insulated Robin flux beta u / (1 + beta h) from
    beta min(u, c_u) at the boundary vertices, relative to beta max u.
    """
    u = mesh.boundary_trace(result.u)
    h = result.h.vertex_values()
    beta = result.beta
    flux = beta * u / (1.0 + beta * h)
    target = beta * np.minimum(u, result.c_u)
    return float(np.max(np.abs(flux - target)) / (beta * np.max(np.abs(u))))


def optimality_audit(mesh: TriMesh, u: NodalField, beta: float, m: float, samples: int = 200,
                     rng: t.Optional[np.random.Generator] = None,
                     operators: t.Optional[FemOperators] = None, slack: float = 1e-9) -> int:
    """
    Count random profiles of mass m that beat the optimal profile of u,
    i.e. F(u, h') < F(u, h_u) - slack. Zero for a correct optimal_h.
    """
    if m == 0.0:
        return 0
    operators = operators or assemble_operators(mesh)
    rng = rng or np.random.default_rng(0)
    trace = TraceField.from_nodal(mesh, u)
    best = functional(mesh, u, optimal_h(trace, beta, m), beta, operators)
    violations = 0
    for _ in range(samples):
        h = BoundaryField.from_vertex_values(mesh.edge_lengths, rng.random(mesh.n_boundary))
        h = h.scaled(m / h.mass())
        if functional(mesh, u, h, beta, operators) < best - slack:
            violations += 1
    if violations:
        logger.warning(f"{violations} of {samples} random profiles beat the optimal profile")
    return violations
