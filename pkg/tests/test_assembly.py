import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robin_insulation.core.assembly import (assemble_boundary_mass, assemble_mass,
                                            assemble_profile_boundary_mass, assemble_stiffness,
                                            dump_matrix, rayleigh_quotient, upper_triplets)
from robin_insulation.models.fields import BoundaryField
from robin_insulation.models.mesh import TriMesh
from robin_insulation.utils.error_handling import DegenerateMeshError


def test_stiffness_annihilates_constants(disk_operators):
    K = disk_operators.K
    assert_allclose(K @ np.ones(K.shape[0]), 0.0, atol=1e-12)
    assert abs(K - K.T).max() < 1e-14


def test_mass_integrates_area(disk_mesh, disk_operators):
    M = disk_operators.M
    ones = np.ones(M.shape[0])
    assert_allclose(ones @ (M @ ones), disk_mesh.area, rtol=1e-13)
    assert abs(M - M.T).max() < 1e-15


def test_linear_function_energies(square_mesh, square_operators):
    x = square_mesh.vertices[:, 0]
    assert_allclose(x @ (square_operators.K @ x), 1.0, rtol=1e-12)
    assert_allclose(x @ (square_operators.M @ x), 1.0 / 3.0, rtol=1e-12)


def test_boundary_mass_integrates_weight(square_mesh):
    ones = np.ones(square_mesh.n_vertices)
    B = assemble_boundary_mass(square_mesh, 1.0)
    assert_allclose(ones @ (B @ ones), 4.0, rtol=1e-13)
    x = square_mesh.vertices[square_mesh.boundary_vertices, 0]
    Bx = assemble_boundary_mass(square_mesh, x)
    assert_allclose(ones @ (Bx @ ones), 2.0, rtol=1e-13)
    # supported on boundary vertices only
    interior = np.setdiff1d(np.arange(square_mesh.n_vertices), square_mesh.boundary_vertices)
    assert B[interior].nnz == 0


def test_boundary_mass_rejects_bad_weights(square_mesh):
    w = np.ones(square_mesh.n_boundary)
    w[3] = -0.5
    with pytest.raises(ValueError):
        assemble_boundary_mass(square_mesh, w)
    w[3] = np.nan
    with pytest.raises(ValueError):
        assemble_boundary_mass(square_mesh, w)


def test_constant_profile_matches_weighted_mass(disk_mesh):
    beta, h = 2.0, 0.3
    profile = BoundaryField.constant(disk_mesh.edge_lengths, h)
    exact = assemble_profile_boundary_mass(disk_mesh, profile, beta)
    weighted = assemble_boundary_mass(disk_mesh, beta / (1.0 + beta * h))
    assert abs(exact - weighted).max() < 1e-13


def test_linear_profile_closed_form(square_mesh, rng):
    beta = 1.7
    values = rng.uniform(0.0, 1.0, square_mesh.n_boundary)
    profile = BoundaryField.from_vertex_values(square_mesh.edge_lengths, values)
    B = assemble_profile_boundary_mass(square_mesh, profile, beta)
    h0, h1 = values, np.roll(values, -1)
    expected = np.sum(square_mesh.edge_lengths * np.log((1.0 + beta * h1) / (1.0 + beta * h0)) / (h1 - h0))
    ones = np.ones(square_mesh.n_vertices)
    assert_allclose(ones @ (B @ ones), expected, rtol=1e-11)


def test_profile_with_interior_knots(square_mesh):
    # h is a hat on every edge: 0 at the vertices, 1 at the midpoint
    n = square_mesh.n_boundary
    edge = np.concatenate([np.arange(n), np.arange(n)])
    knots = np.concatenate([np.zeros(n), np.full(n, 0.5)])
    values = np.concatenate([np.zeros(n), np.ones(n)])
    profile = BoundaryField(edge, knots, values, square_mesh.edge_lengths)
    B = assemble_profile_boundary_mass(square_mesh, profile, 3.0)
    ones = np.ones(square_mesh.n_vertices)
    assert_allclose(ones @ (B @ ones), 4.0 * math.log(4.0), rtol=1e-12)


def test_rayleigh_quotient(square_mesh, square_operators):
    K, M = square_operators.K, square_operators.M
    x = square_mesh.vertices[:, 0]
    assert_allclose(rayleigh_quotient(K, M, None, x), 3.0, rtol=1e-12)
    ones = np.ones(square_mesh.n_vertices)
    B = assemble_boundary_mass(square_mesh, 2.0)
    assert_allclose(rayleigh_quotient(K, M, B, ones), 8.0, rtol=1e-12)
    with pytest.raises(ValueError, match="zero function"):
        rayleigh_quotient(K, M, B, np.zeros(square_mesh.n_vertices))


@pytest.mark.parametrize("scale", [1e-3, 7.0, -2.5])
def test_rayleigh_quotient_is_scale_invariant(disk_mesh, disk_operators, rng, scale):
    B = assemble_boundary_mass(disk_mesh, 1.5)
    v = rng.standard_normal(disk_mesh.n_vertices)
    K, M = disk_operators.K, disk_operators.M
    assert_allclose(rayleigh_quotient(K, M, B, scale * v), rayleigh_quotient(K, M, B, v), rtol=1e-12)


def test_boundary_form_grows_with_weight(disk_mesh, rng):
    low = rng.random(disk_mesh.n_boundary)
    high = low + rng.random(disk_mesh.n_boundary)
    B_low, B_high = assemble_boundary_mass(disk_mesh, low), assemble_boundary_mass(disk_mesh, high)
    for _ in range(100):
        v = rng.standard_normal(disk_mesh.n_vertices)
        assert v @ (B_low @ v) <= v @ (B_high @ v)


def test_linear_functions_are_integrated_exactly(disk_mesh, disk_operators, rng):
    B = assemble_boundary_mass(disk_mesh, 1.0)
    x, y = disk_mesh.vertices.T
    lengths = disk_mesh.edge_lengths
    for _ in range(10):
        a, b, c = rng.standard_normal(3)
        v = a + b * x + c * y
        assert_allclose(v @ (disk_operators.K @ v), (b * b + c * c) * disk_mesh.area, rtol=1e-11)
        start = disk_mesh.boundary_trace(v)
        end = np.roll(start, -1)
        middle = 0.5 * (start + end)
        simpson = np.sum(lengths / 6.0 * (start ** 2 + 4.0 * middle ** 2 + end ** 2))
        assert_allclose(v @ (B @ v), simpson, rtol=1e-12)


def test_degenerate_triangle_is_reported():
    mesh = TriMesh(vertices=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
                   triangles=np.array([[0, 1, 2]]), boundary_vertices=np.array([0, 1, 2]))
    with pytest.raises(DegenerateMeshError):
        assemble_stiffness(mesh)
    with pytest.raises(DegenerateMeshError):
        assemble_mass(mesh)


def test_upper_triplets_and_dump(tmp_path, hexagon_mesh):
    M = assemble_mass(hexagon_mesh)
    triplets = upper_triplets(M)
    assert all(r <= c for r, c, _ in triplets)
    assert triplets == sorted(triplets, key=lambda e: (e[0], e[1]))
    diagonal_plus_upper = sum(v for r, c, v in triplets) * 2 - sum(v for r, c, v in triplets if r == c)
    assert math.isclose(diagonal_plus_upper, hexagon_mesh.area, rel_tol=1e-12)
    path = tmp_path / "mass.txt"
    dump_matrix(M, str(path))
    assert len(path.read_text().splitlines()) == len(triplets)
