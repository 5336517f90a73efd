import math
from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robin_insulation.core import spectra
from robin_insulation.core.assembly import assemble_operators
from robin_insulation.core.insulation import calibrate_radiality_tolerance, minimize_lambda_m
from robin_insulation.core.mesher import build_mesh, refine
from robin_insulation.core.spectra import (bessel_j, beta_star, beta_star_oracle, disk_dirichlet_oracle,
                                           disk_m_bar_oracle, disk_neumann_oracle, disk_robin_oracle,
                                           fitted_order, lambda_dirichlet, lambda_neumann, lambda_robin,
                                           m_bar, radial_branch_eigenvalue, reference_rows)
from robin_insulation.models.domain import DomainSpec
from robin_insulation.models.settings import RunConfig
from robin_insulation.utils.config_manager import parse_grid
from robin_insulation.utils.error_handling import BracketError, ConvergenceError, NoThreshold

J01 = 2.404825557695773
DISK_DIRICHLET = 5.783185962946784
NEUMANN_ROOT = 1.8411837813406593
DISK_NEUMANN = NEUMANN_ROOT ** 2


def test_bessel_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert abs(bessel_j(0, J01)) < 1e-14
    x = np.linspace(0.0, 50.0, 11)
    assert bessel_j(1, x).shape == (11,)


def test_bessel_derivative_identity():
    x, d = 3.7, 1e-5
    derivative = (bessel_j(0, x + d) - bessel_j(0, x - d)) / (2.0 * d)
    assert_allclose(derivative, -bessel_j(1, x), atol=1e-9)


def test_bessel_domain_errors():
    with pytest.raises(ValueError):
        bessel_j(2, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0, -0.1)
    with pytest.raises(ValueError):
        bessel_j(1, 50.5)


def test_dirichlet_oracle():
    root = disk_dirichlet_oracle()
    assert_allclose(root.eigenvalue, DISK_DIRICHLET, rtol=1e-14)
    assert_allclose(disk_dirichlet_oracle(2.0).eigenvalue, DISK_DIRICHLET / 4.0, rtol=1e-14)


def test_neumann_oracle():
    assert_allclose(disk_neumann_oracle().k, NEUMANN_ROOT, rtol=1e-14)
    assert_allclose(disk_neumann_oracle(0.5).eigenvalue, 4.0 * DISK_NEUMANN, rtol=1e-13)


def test_robin_oracle():
    root = disk_robin_oracle(1.0)
    assert_allclose(root.k, 1.25578, atol=1e-5)
    assert root.residual < 1e-14
    assert disk_robin_oracle(0.0).eigenvalue == 0.0
    assert_allclose(disk_robin_oracle(1e6).eigenvalue, DISK_DIRICHLET, rtol=1e-5)
    values = [disk_robin_oracle(beta).eigenvalue for beta in (0.1, 1.0, 3.0, 10.0, 100.0)]
    assert all(a < b for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        disk_robin_oracle(-1.0)


def test_beta_star_oracle_is_neumann_eigenvalue():
    # J0(p) = J1(p) / p at the Neumann root, so beta* = p^2 on the unit disk
    assert_allclose(beta_star_oracle(), DISK_NEUMANN, rtol=1e-13)
    assert_allclose(beta_star_oracle(2.0), DISK_NEUMANN / 2.0, rtol=1e-13)
    assert_allclose(disk_robin_oracle(beta_star_oracle()).eigenvalue, DISK_NEUMANN, rtol=1e-12)
    assert beta_star(DomainSpec.disk(1.0, 0.1)) == beta_star_oracle()


def test_m_bar_oracle():
    assert_allclose(disk_m_bar_oracle(8.0), 2.0 * math.pi * (1.0 / DISK_NEUMANN - 1.0 / 8.0), rtol=1e-12)
    assert_allclose(disk_m_bar_oracle(8.0), 1.068, atol=1e-3)
    assert_allclose(radial_branch_eigenvalue(8.0, disk_m_bar_oracle(8.0)), DISK_NEUMANN, rtol=1e-12)
    with pytest.raises(NoThreshold):
        disk_m_bar_oracle(2.0)


def test_radial_branch():
    assert_allclose(radial_branch_eigenvalue(3.0, 0.0), disk_robin_oracle(3.0).eigenvalue, rtol=1e-15)
    values = [radial_branch_eigenvalue(3.0, m) for m in (0.0, 0.5, 1.0, 4.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_fem_reference_values(disk_mesh, disk_operators):
    assert abs(lambda_dirichlet(disk_mesh, disk_operators) - DISK_DIRICHLET) < 0.1 * DISK_DIRICHLET
    assert abs(lambda_neumann(disk_mesh, disk_operators) - DISK_NEUMANN) < 0.05 * DISK_NEUMANN
    robin = lambda_robin(disk_mesh, 1.0, disk_operators)
    assert abs(robin - disk_robin_oracle(1.0).eigenvalue) < 0.05 * robin
    assert lambda_robin(disk_mesh, 0.0, disk_operators) == 0.0


def test_fem_beta_star(disk_mesh, disk_operators):
    fem = beta_star(disk_mesh, operators=disk_operators)
    assert abs(fem - DISK_NEUMANN) < 0.1 * DISK_NEUMANN
    assert_allclose(lambda_robin(disk_mesh, fem, disk_operators),
                    lambda_neumann(disk_mesh, disk_operators), rtol=1e-9)


def test_fitted_order():
    sizes = [0.1, 0.05, 0.025]
    assert_allclose(fitted_order(sizes, [3.0 * h ** 2 for h in sizes]), 2.0, rtol=1e-12)


def test_reference_rows(disk_mesh, disk_operators, square_mesh):
    rows = reference_rows(disk_mesh, 8.0, disk_operators)
    assert [name for name, _, _ in rows] == ["lambda_D", "lambda_N", "lambda_R", "beta_star", "m_bar_oracle"]
    assert math.isnan(rows[-1][1])
    assert [name for name, _, _ in reference_rows(disk_mesh, 1.0, disk_operators)][-1] == "beta_star"
    off_disk = reference_rows(square_mesh, 1.0)
    assert all(math.isnan(oracle) for _, _, oracle in off_disk)
    assert all(math.isfinite(fem) for _, fem, _ in off_disk)


@pytest.fixture(scope="module")
def refinement_levels():
    """Disk meshes at target_h 0.1, 0.05 and 0.025 with their matrices."""
    mesh = build_mesh(DomainSpec.disk(1.0, 0.1))
    levels = []
    for level in range(3):
        if level:
            mesh = refine(mesh)
        levels.append((mesh, assemble_operators(mesh)))
    return levels


@pytest.mark.slow
@pytest.mark.parametrize("quantity, oracle", [
    (lambda mesh, ops: lambda_dirichlet(mesh, ops), DISK_DIRICHLET),
    (lambda mesh, ops: lambda_neumann(mesh, ops), DISK_NEUMANN),
    (lambda mesh, ops: lambda_robin(mesh, 1.0, ops), disk_robin_oracle(1.0).eigenvalue),
], ids=["dirichlet", "neumann", "robin"])
def test_eigenvalue_convergence_order(refinement_levels, quantity, oracle):
    sizes = [mesh.domain.target_h for mesh, _ in refinement_levels]
    errors = [abs(quantity(mesh, ops) - oracle) for mesh, ops in refinement_levels]
    assert errors[1] < 0.01 * oracle
    assert errors[2] < errors[1] < errors[0]
    assert fitted_order(sizes, errors) >= 1.9


@pytest.mark.slow
def test_fem_beta_star_converges(refinement_levels):
    errors = [abs(beta_star(mesh, operators=ops) - beta_star_oracle()) for mesh, ops in refinement_levels]
    assert errors[2] < errors[0]
    assert max(errors[1:]) < 0.01 * beta_star_oracle()


@pytest.mark.slow
def test_fem_m_bar_below_radial_crossing(disk_mesh, disk_operators):
    b_star = beta_star(disk_mesh, operators=disk_operators)
    critical = m_bar(8.0, disk_mesh, operators=disk_operators, b_star=b_star)
    radial_crossing = disk_mesh.perimeter * (1.0 / b_star - 1.0 / 8.0)
    assert 0.0 < critical <= radial_crossing * (1.0 + 1e-3)
    with pytest.raises(NoThreshold):
        m_bar(2.0, disk_mesh, operators=disk_operators, b_star=b_star)


@pytest.fixture(scope="module")
def fine_disk():
    mesh = build_mesh(DomainSpec.disk(1.0, 0.1))
    return mesh, assemble_operators(mesh)


@pytest.fixture(scope="module")
def critical_mass(fine_disk):
    mesh, operators = fine_disk
    return m_bar(8.0, mesh, operators=operators)


@pytest.mark.slow
def test_subcritical_minimizers_stay_radial(fine_disk):
    mesh, operators = fine_disk
    tau = calibrate_radiality_tolerance(mesh, 1.5, operators=operators)
    safety = RunConfig().radiality_safety
    for m in parse_grid("log:0.25:8:6"):
        result = minimize_lambda_m(mesh, 1.5, m, operators=operators)
        assert result.converged
        assert result.radiality <= safety * tau, f"m={m}"


@pytest.mark.slow
def test_symmetry_breaks_below_critical_mass(fine_disk, critical_mass):
    mesh, operators = fine_disk
    tau = calibrate_radiality_tolerance(mesh, 8.0, operators=operators)
    light = minimize_lambda_m(mesh, 8.0, critical_mass / 4.0, operators=operators)
    heavy = minimize_lambda_m(mesh, 8.0, 4.0 * critical_mass, operators=operators)
    assert light.radiality >= 10.0 * tau
    assert heavy.radiality <= RunConfig().radiality_safety * tau
    assert heavy.lambda_m < lambda_neumann(mesh, operators)


@pytest.mark.slow
def test_critical_mass_reaches_neumann_eigenvalue(fine_disk, critical_mass):
    mesh, operators = fine_disk
    lam = minimize_lambda_m(mesh, 8.0, critical_mass, operators=operators).lambda_m
    assert abs(lam - lambda_neumann(mesh, operators)) <= 1e-3
    assert critical_mass <= disk_m_bar_oracle(8.0) * 1.05


def test_m_bar_search_respects_solve_budget(hexagon_mesh, monkeypatch):
    target = lambda_neumann(hexagon_mesh)
    calls = []

    def linear_lambda(mesh, beta, m, **options):
        calls.append(m)
        return SimpleNamespace(lambda_m=target + (3.0 - m))

    monkeypatch.setattr(spectra, "minimize_lambda_m", linear_lambda)
    assert_allclose(m_bar(8.0, hexagon_mesh, b_star=1.0), 3.0, atol=1e-4)
    assert len(calls) <= spectra.M_BAR_SOLVES

    calls.clear()
    monkeypatch.setattr(spectra, "M_BAR_SOLVES", 2)
    with pytest.raises(ConvergenceError):
        m_bar(8.0, hexagon_mesh, b_star=1.0)
    assert len(calls) == 2


def test_m_bar_doubling_shares_the_budget(hexagon_mesh, monkeypatch):
    target = lambda_neumann(hexagon_mesh)
    monkeypatch.setattr(spectra, "minimize_lambda_m",
                        lambda mesh, beta, m, **options: SimpleNamespace(lambda_m=target + 1.0))
    monkeypatch.setattr(spectra, "M_BAR_SOLVES", 5)
    with pytest.raises(BracketError):
        m_bar(8.0, hexagon_mesh, b_star=1.0)
