import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robin_insulation.core.mesher import (boundary_measure, build_mesh, check_mesh, mesh_summary,
                                          read_mesh, refine, write_mesh)
from robin_insulation.core.spectra import fitted_order
from robin_insulation.models.domain import DomainSpec
from robin_insulation.models.mesh import TriMesh
from robin_insulation.utils.error_handling import MeshError


def _edge_count(mesh):
    tri = mesh.triangles
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    return len(np.unique(edges, axis=0))


def test_disk_mesh_invariants(disk_mesh):
    check_mesh(disk_mesh)
    assert disk_mesh.max_diameter <= 1.5 * 0.2
    assert np.all(disk_mesh.signed_areas > 0.0)
    # Euler characteristic of a disk
    assert disk_mesh.n_vertices - _edge_count(disk_mesh) + disk_mesh.n_triangles == 1


def test_disk_mesh_ring_counts(disk_mesh):
    layers = disk_mesh.n_boundary // 6
    assert disk_mesh.n_boundary == 6 * layers
    assert disk_mesh.n_vertices == 1 + 3 * layers * (layers + 1)
    assert disk_mesh.n_triangles == 6 * layers ** 2


def test_disk_boundary_on_circle(disk_mesh):
    radii = np.linalg.norm(disk_mesh.vertices[disk_mesh.boundary_vertices], axis=1)
    assert_allclose(radii, 1.0, rtol=1e-14)
    assert 0.99 * 2.0 * math.pi < disk_mesh.perimeter < 2.0 * math.pi
    assert abs(disk_mesh.area - math.pi) < 0.02 * math.pi


def test_normals_are_outward_unit_vectors(disk_mesh):
    assert_allclose(np.linalg.norm(disk_mesh.normals, axis=1), 1.0, rtol=1e-14)
    a, b = disk_mesh.boundary_edges.T
    midpoints = 0.5 * (disk_mesh.vertices[a] + disk_mesh.vertices[b])
    assert np.all(np.sum(midpoints * disk_mesh.normals, axis=1) > 0.0)


def test_rectangle_measures_are_exact(square_mesh):
    assert_allclose(square_mesh.area, 1.0, rtol=1e-13)
    assert_allclose(square_mesh.perimeter, 4.0, rtol=1e-13)
    assert square_mesh.max_diameter <= 0.15


def test_regular_polygon_area_is_exact(hexagon_mesh):
    check_mesh(hexagon_mesh)
    assert_allclose(hexagon_mesh.area, 1.5 * math.sqrt(3.0), rtol=1e-13)
    assert_allclose(hexagon_mesh.perimeter, 6.0, rtol=1e-13)


def test_convex_polygon_mesh():
    mesh = build_mesh(DomainSpec.convex([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], target_h=0.1))
    check_mesh(mesh)
    assert_allclose(mesh.area, 0.5, rtol=1e-13)
    assert_allclose(mesh.perimeter, 2.0 + math.sqrt(2.0), rtol=1e-13)


def test_non_convex_polygon_is_rejected():
    with pytest.raises(MeshError):
        DomainSpec.convex([(0.0, 0.0), (1.0, 0.0), (0.2, 0.2), (0.0, 1.0)])


def test_clockwise_polygon_is_rejected():
    with pytest.raises(MeshError):
        DomainSpec.convex([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])


def test_mesh_size_must_be_below_diameter():
    with pytest.raises(MeshError):
        DomainSpec.disk(1.0, target_h=2.5)
    with pytest.raises(MeshError):
        DomainSpec.disk(1.0, target_h=0.0)


def test_parse_domain_text():
    spec = DomainSpec.parse("polygon:6:2", 0.2)
    assert spec.kind == "regular_polygon"
    assert spec.n_sides == 6
    assert spec.radius == 2.0
    assert DomainSpec.parse(spec.to_text(), 0.2) == spec
    assert DomainSpec.parse("rectangle:2:1", 0.2).width == 2.0
    with pytest.raises(MeshError):
        DomainSpec.parse("ellipse:1:2", 0.2)


def test_refine_splits_every_triangle(disk_mesh):
    fine = refine(disk_mesh)
    check_mesh(fine)
    assert fine.n_triangles == 4 * disk_mesh.n_triangles
    assert fine.n_vertices == disk_mesh.n_vertices + _edge_count(disk_mesh)
    assert fine.n_boundary == 2 * disk_mesh.n_boundary
    assert fine.domain.target_h == pytest.approx(0.1)
    radii = np.linalg.norm(fine.vertices[fine.boundary_vertices], axis=1)
    assert_allclose(radii, 1.0, rtol=1e-14)
    assert abs(fine.area - math.pi) < abs(disk_mesh.area - math.pi)


def test_refine_keeps_rectangle_area(square_mesh):
    fine = refine(square_mesh)
    assert_allclose(fine.area, 1.0, rtol=1e-13)
    assert fine.max_diameter <= 0.075 + 1e-12


def test_mesh_file_round_trip(tmp_path, hexagon_mesh):
    path = tmp_path / "hexagon.mesh"
    write_mesh(hexagon_mesh, str(path))
    first = path.read_text().splitlines()[0]
    assert first == f"{hexagon_mesh.n_vertices} {hexagon_mesh.n_triangles} {hexagon_mesh.n_boundary}"
    loaded = read_mesh(str(path))
    assert np.array_equal(loaded.vertices, hexagon_mesh.vertices)
    assert np.array_equal(loaded.triangles, hexagon_mesh.triangles)
    assert np.array_equal(loaded.boundary_vertices, hexagon_mesh.boundary_vertices)


def test_malformed_mesh_file(tmp_path):
    path = tmp_path / "broken.mesh"
    path.write_text("3 1 3\n0 0\n1 0\n")
    with pytest.raises(MeshError):
        read_mesh(str(path))


def test_check_mesh_rejects_clockwise_boundary(square_mesh):
    reversed_loop = TriMesh(vertices=square_mesh.vertices, triangles=square_mesh.triangles,
                            boundary_vertices=square_mesh.boundary_vertices[::-1].copy())
    with pytest.raises(MeshError):
        check_mesh(reversed_loop)


def test_mesh_summary(hexagon_mesh):
    summary = mesh_summary(hexagon_mesh)
    assert summary["NV"] == hexagon_mesh.n_vertices
    assert summary["NB"] == hexagon_mesh.n_boundary
    assert summary["area"] == pytest.approx(1.5 * math.sqrt(3.0))


def test_boundary_measure_and_arclength(square_mesh, hexagon_mesh):
    assert boundary_measure(square_mesh) == pytest.approx(4.0, rel=1e-13)
    assert boundary_measure(hexagon_mesh) == pytest.approx(6.0, rel=1e-13)
    s = square_mesh.boundary_arclength
    assert s[0] == 0.0
    assert np.all(np.diff(s) > 0.0)
    assert s[-1] + square_mesh.edge_lengths[-1] == pytest.approx(4.0, rel=1e-13)


def test_normals_point_away_from_centroid(hexagon_mesh):
    starts = hexagon_mesh.vertices[hexagon_mesh.boundary_edges[:, 0]]
    assert np.all(np.sum((starts - hexagon_mesh.centroid) * hexagon_mesh.normals, axis=1) > 0.0)


def test_disk_geometry_converges_quadratically(disk_mesh):
    meshes = [disk_mesh, refine(disk_mesh)]
    meshes.append(refine(meshes[-1]))
    sizes = [m.domain.target_h for m in meshes]
    for error in ([abs(m.area - math.pi) for m in meshes],
                  [abs(boundary_measure(m) - 2.0 * math.pi) for m in meshes]):
        assert fitted_order(sizes, error) >= 1.9
