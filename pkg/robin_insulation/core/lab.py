"""
Laboratory class for the insulation experiments.
Coordinates meshing, solving and result files for one run configuration.
"""

import logging
import os
import typing as t
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np

from robin_insulation.core.assembly import FemOperators, assemble_operators
from robin_insulation.core.insulation import (boundary_flux_residual, calibrate_radiality_tolerance,
                                              minimize_lambda_m, optimality_audit)
from robin_insulation.core.layered import gamma_limit_report
from robin_insulation.core.mesher import build_mesh, mesh_summary, refine, write_mesh
from robin_insulation.core.spectra import reference_rows
from robin_insulation.models.domain import DomainSpec
from robin_insulation.models.mesh import TriMesh
from robin_insulation.models.results import SolveResult
from robin_insulation.models.settings import RunConfig
from robin_insulation.utils.error_handling import ConfigError, log_exceptions, safe_execution
from robin_insulation.utils.output_writer import write_csv, write_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2

SWEEP_HEADER = ("beta", "m", "lambda_m", "radiality", "tau_mesh", "is_radial", "status")
AUDIT_SAMPLES = 200


@lru_cache(maxsize=4)
def _discretization(domain: str, mesh_h: float) -> t.Tuple[TriMesh, FemOperators]:
    """Mesh and matrices, built once per process."""
    mesh = build_mesh(DomainSpec.parse(domain, mesh_h))
    return mesh, assemble_operators(mesh)


@safe_execution(default_value=None)
def _sweep_point(settings: t.Dict[str, t.Any], beta: float, m: float) -> t.Tuple[float, float, float, bool, bool]:
    """lambda_m, radiality, tau_mesh, is_radial and converged for one grid point (None on failure)."""
    mesh, operators = _discretization(settings["domain"], settings["mesh_h"])
    result = minimize_lambda_m(mesh, beta, m, tol=settings["tol"], max_iter=settings["max_iter"],
                               eig_tol=settings["eig_tol"], restarts=settings["restarts"],
                               operators=operators, linear_solver=settings["linear_solver"])
    tau = _radiality_tolerance(settings["domain"], settings["mesh_h"], beta)
    is_radial = result.radiality < settings["radiality_safety"] * tau
    return result.lambda_m, result.radiality, tau, is_radial, result.converged


@lru_cache(maxsize=64)
def _radiality_tolerance(domain: str, mesh_h: float, beta: float) -> float:
    mesh, operators = _discretization(domain, mesh_h)
    return calibrate_radiality_tolerance(mesh, beta, operators=operators)


def _evaluate_point(args: t.Tuple[t.Dict[str, t.Any], float, float]):
    return _sweep_point(*args)


class InsulationLab:
    """Runs the laboratory commands for a validated RunConfig."""

    def __init__(self, config: RunConfig):
        """Initialize the laboratory (meshing is deferred to the first command that needs it)."""
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.domain = DomainSpec.parse(config.domain, config.mesh_h)

    @property
    def mesh(self) -> TriMesh:
        return _discretization(self.config.domain, self.config.mesh_h)[0]

    @property
    def operators(self) -> FemOperators:
        return _discretization(self.config.domain, self.config.mesh_h)[1]

    def _settings(self) -> t.Dict[str, t.Any]:
        return self.config.flat()

    def solve(self, beta: float, m: float) -> SolveResult:
        c = self.config
        return minimize_lambda_m(self.mesh, beta, m, tol=c.tol, max_iter=c.max_iter, eig_tol=c.eig_tol,
                                 restarts=c.restarts, operators=self.operators, linear_solver=c.linear_solver)

    def boundary_profile_rows(self, result: SolveResult) -> t.List[t.Tuple[float, float, float]]:
        """(arclength, h, trace_u) at every knot of the profile."""
        h = result.h
        trace = self.mesh.boundary_trace(result.u)
        start, end = trace[h.edge], np.roll(trace, -1)[h.edge]
        u_at_knots = start + h.t * (end - start)
        return list(zip(h.arclength(), h.values, u_at_knots))

    @staticmethod
    def _companion_path(out: t.Optional[str], suffix: str) -> t.Optional[str]:
        if out in (None, "-"):
            return None
        stem, _ = os.path.splitext(out)
        return f"{stem}{suffix}"

    @log_exceptions
    def cmd_solve(self) -> int:
        """Solve for (beta, mass); write the result JSON and the boundary profile CSV."""
        c = self.config
        result = self.solve(c.beta, c.mass)
        rng = np.random.default_rng(c.seed)
        payload = result.to_dict()
        payload.update({
            "domain": self.domain.to_text(),
            "mesh_h": c.mesh_h,
            "mass_error": abs(result.mass - c.mass),
            "flux_residual": boundary_flux_residual(self.mesh, result),
            "audit_violations": optimality_audit(self.mesh, result.u, c.beta, c.mass, AUDIT_SAMPLES,
                                                 rng, self.operators),
            "functional_trace": result.functional_trace,
        })
        write_json(c.out, payload, self._settings())
        boundary_path = self._companion_path(c.out, "_boundary.csv")
        if boundary_path:
            write_csv(boundary_path, ("arclength", "h", "trace_u"), self.boundary_profile_rows(result),
                      self._settings())
        if not result.converged:
            self.logger.warning("Solve did not converge; partial result written")
            return EXIT_NONCONVERGED
        return EXIT_OK

    @log_exceptions
    def cmd_sweep(self) -> int:
        """Phase diagram over beta_grid x m_grid, rows in grid order."""
        c = self.config
        if not c.beta_grid or not c.m_grid:
            raise ConfigError("sweep needs nonempty beta_grid and m_grid")
        settings = self._settings()
        points = [(settings, float(beta), float(m)) for beta in c.beta_grid for m in c.m_grid]
        self.logger.info(f"Sweeping {len(points)} points with {c.jobs} worker(s)")

        if c.jobs > 1:
            with ProcessPoolExecutor(max_workers=c.jobs) as pool:
                outcomes = list(pool.map(_evaluate_point, points))
        else:
            outcomes = [_evaluate_point(p) for p in points]

        rows = []
        exit_code = EXIT_OK
        for (_, beta, m), outcome in zip(points, outcomes):
            if outcome is None:
                rows.append((beta, m, float("nan"), float("nan"), float("nan"), False, "failed"))
                exit_code = EXIT_NONCONVERGED
                continue
            lam, radiality, tau, is_radial, converged = outcome
            rows.append((beta, m, lam, radiality, tau, bool(is_radial), "ok" if converged else "nonconverged"))
            if not converged:
                exit_code = EXIT_NONCONVERGED
        write_csv(c.out, SWEEP_HEADER, rows, settings)
        return exit_code

    @log_exceptions
    def cmd_reference(self) -> int:
        """FEM reference eigenvalues against the disk oracles, per refinement level."""
        c = self.config
        rows = []
        mesh, operators = self.mesh, self.operators
        for level in range(c.refinements + 1):
            if level > 0:
                mesh = refine(mesh)
                operators = assemble_operators(mesh)
            mesh_h = mesh.domain.target_h
            for quantity, fem, oracle in reference_rows(mesh, c.beta, operators):
                gap = abs(fem - oracle) / abs(oracle) if np.isfinite(fem) and np.isfinite(oracle) else float("nan")
                rows.append((quantity, level, mesh_h, fem, oracle, gap))
            self.logger.info(f"Reference level {level} done (NV={mesh.n_vertices})")
        write_csv(c.out, ("quantity", "level", "mesh_h", "fem", "oracle", "rel_gap"), rows, self._settings())
        return EXIT_OK

    @log_exceptions
    def cmd_gamma(self) -> int:
        """Thin-layer eigenvalues against their eps -> 0 limit."""
        c = self.config
        if self.domain.kind != "disk":
            raise ConfigError("gamma is only defined on the disk")
        report = gamma_limit_report(c.beta, c.h_const, c.eps_list, self.domain.radius, c.outer_condition)
        rows = [(row.eps, row.eigenvalue, row.limit, row.gap) for row in report]
        write_csv(c.out, ("eps", "lambda_eps", "lambda_limit", "gap"), rows, self._settings())
        return EXIT_OK

    @log_exceptions
    def cmd_mesh_info(self) -> int:
        """Print mesh counts and measures; with --out, also write the mesh file."""
        c = self.config
        summary = mesh_summary(self.mesh)
        write_csv(None, ("quantity", "value"), list(summary.items()), self._settings())
        if c.out not in (None, "-"):
            write_mesh(self.mesh, c.out)
        return EXIT_OK
