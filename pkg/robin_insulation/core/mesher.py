"""
Mesh generation for the insulation laboratory.
Builds layered triangulations of the disk and of convex polygons,
refines them uniformly and reads/writes the plain-text mesh format.
"""

import logging
import math
import typing as t

import numpy as np

from robin_insulation.models.domain import DomainSpec
from robin_insulation.models.mesh import TriMesh
from robin_insulation.utils.error_handling import MeshError

logger = logging.getLogger(__name__)

# Largest triangle diameter accepted, relative to the requested size
DIAMETER_FACTOR = 1.5
# Number of vertices on the first ring of a disk mesh
DISK_RING_BASE = 6


def build_mesh(spec: DomainSpec) -> TriMesh:
    """
    Build a deterministic triangulation of the domain.

    Args:
        spec: Domain description with the requested mesh size

    Returns:
        TriMesh whose largest triangle diameter is at most 1.5 * target_h
    """
    spec = spec.validated()
    if spec.kind == "rectangle":
        builder = lambda k: _rectangle_mesh(spec, k)
        k = max(1, math.ceil(max(spec.width, spec.height) / spec.target_h))
    elif spec.kind == "disk":
        builder = lambda k: _disk_mesh(spec, k)
        k = max(1, math.ceil(spec.radius / spec.target_h))
    else:
        builder = lambda k: _polygon_mesh(spec, k)
        reach = max(math.dist(c, _polygon_center(spec)) for c in spec.corners())
        k = max(1, math.ceil(reach / spec.target_h))

    mesh = builder(k)
    while mesh.max_diameter > DIAMETER_FACTOR * spec.target_h:
        k += 1
        mesh = builder(k)
    check_mesh(mesh)
    logger.info(f"Built {spec.kind} mesh: NV={mesh.n_vertices} NT={mesh.n_triangles} "
                f"NB={mesh.n_boundary} (layers={k}, max diameter={mesh.max_diameter:.4f})")
    return mesh


def _layered_triangulation(layers: int, base: int,
                           point: t.Callable[[int, int], t.Tuple[float, float]]
                           ) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Concentric layers around a center vertex; layer i carries base*i points.
    Neighbouring layers are stitched by walking both loops in order of their
    relative position j / (base * i).
    """
    coords = [point(0, 0)]
    starts = [0]
    for i in range(1, layers + 1):
        starts.append(len(coords))
        coords.extend(point(i, j) for j in range(base * i))

    tris = []
    first = list(range(starts[1], starts[1] + base))
    for j in range(base):
        tris.append((0, first[j], first[(j + 1) % base]))
    for i in range(2, layers + 1):
        n_in, n_out = base * (i - 1), base * i
        inner = list(range(starts[i - 1], starts[i - 1] + n_in))
        outer = list(range(starts[i], starts[i] + n_out))
        a = b = 0
        while a < n_in or b < n_out:
            if b < n_out and (a == n_in or (b + 1) * n_in <= (a + 1) * n_out):
                tris.append((inner[a % n_in], outer[b], outer[(b + 1) % n_out]))
                b += 1
            else:
                tris.append((inner[a], outer[b % n_out], inner[(a + 1) % n_in]))
                a += 1

    boundary = np.arange(starts[layers], starts[layers] + base * layers)
    return np.asarray(coords, dtype=float), np.asarray(tris, dtype=int), boundary


def _disk_mesh(spec: DomainSpec, layers: int) -> TriMesh:
    r = spec.radius

    def point(i, j):
        if i == 0:
            return 0.0, 0.0
        theta = 2.0 * math.pi * j / (DISK_RING_BASE * i)
        return r * i / layers * math.cos(theta), r * i / layers * math.sin(theta)

    vertices, triangles, boundary = _layered_triangulation(layers, DISK_RING_BASE, point)
    return _oriented(vertices, triangles, boundary, spec)


def _polygon_center(spec: DomainSpec) -> t.Tuple[float, float]:
    corners = np.asarray(spec.corners())
    return tuple(corners.mean(axis=0))


def _polygon_mesh(spec: DomainSpec, layers: int) -> TriMesh:
    corners = np.asarray(spec.corners(), dtype=float)
    n = len(corners)
    center = np.asarray(_polygon_center(spec))

    def point(i, j):
        if i == 0:
            return tuple(center)
        side, p = divmod(j, i)
        edge_point = corners[side] + (p / i) * (corners[(side + 1) % n] - corners[side])
        return tuple(center + (i / layers) * (edge_point - center))

    vertices, triangles, boundary = _layered_triangulation(layers, n, point)
    return _oriented(vertices, triangles, boundary, spec)


def _rectangle_mesh(spec: DomainSpec, k: int) -> TriMesh:
    nx = max(1, math.ceil(k * spec.width / max(spec.width, spec.height)))
    ny = max(1, math.ceil(k * spec.height / max(spec.width, spec.height)))
    xs = np.linspace(0.0, spec.width, nx + 1)
    ys = np.linspace(0.0, spec.height, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)

    v00, v10 = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    v01, v11 = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
    triangles = np.concatenate([np.column_stack([v00, v10, v11]),
                                np.column_stack([v00, v11, v01])])

    boundary = np.concatenate([idx[0, :-1], idx[:-1, -1], idx[-1, :0:-1], idx[:0:-1, 0]])
    return _oriented(vertices, triangles, boundary, spec)


def _oriented(vertices: np.ndarray, triangles: np.ndarray, boundary: np.ndarray,
              spec: t.Optional[DomainSpec]) -> TriMesh:
    """Flip clockwise triangles so every signed area is positive."""
    p = vertices[triangles]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    clockwise = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0.0
    triangles = triangles.copy()
    triangles[clockwise] = triangles[clockwise][:, [0, 2, 1]]
    return TriMesh(vertices=vertices, triangles=triangles,
                   boundary_vertices=np.asarray(boundary, dtype=int), domain=spec)


def refine(mesh: TriMesh) -> TriMesh:
    """
    Split every triangle into four through its edge midpoints.
    Boundary midpoints of disk meshes are projected back onto the circle.

    Args:
        mesh: Valid mesh

    Returns:
        Refined mesh with four times as many triangles
    """
    tri = mesh.triangles
    nv = mesh.n_vertices
    local = np.stack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=1)   # (NT, 3, 2)
    keys = np.sort(local.reshape(-1, 2), axis=1)
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1, 3)
    midpoints = 0.5 * (mesh.vertices[unique[:, 0]] + mesh.vertices[unique[:, 1]])

    edge_id = {(int(a), int(b)): i for i, (a, b) in enumerate(unique)}
    bv = mesh.boundary_vertices
    boundary_mid = np.array([edge_id[(min(a, b), max(a, b))]
                             for a, b in zip(bv, np.roll(bv, -1))], dtype=int)

    if mesh.domain is not None and mesh.domain.kind == "disk":
        p = midpoints[boundary_mid]
        midpoints[boundary_mid] = mesh.domain.radius * p / np.linalg.norm(p, axis=1)[:, None]

    m01, m12, m20 = (nv + inverse[:, i] for i in range(3))
    a, b, c = tri.T
    triangles = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    boundary = np.column_stack([bv, nv + boundary_mid]).ravel()
    domain = mesh.domain.with_target_h(mesh.domain.target_h / 2.0) if mesh.domain is not None else None
    refined = TriMesh(vertices=np.concatenate([mesh.vertices, midpoints]),
                      triangles=triangles, boundary_vertices=boundary, domain=domain)
    check_mesh(refined)
    logger.debug(f"Refined mesh: NV={refined.n_vertices} NT={refined.n_triangles}")
    return refined


def boundary_measure(mesh: TriMesh) -> float:
    """Sum of the boundary edge lengths, the discrete |dOmega|."""
    return mesh.perimeter


def check_mesh(mesh: TriMesh, area_tol: float = 1e-14) -> None:
    """
    Verify the TriMesh invariants, raising MeshError on the first violation.
    """
    if np.any(mesh.signed_areas <= area_tol):
        bad = int(np.argmin(mesh.signed_areas))
        raise MeshError(f"Triangle {bad} has non-positive area {mesh.signed_areas[bad]:.3e}")
    if len(np.unique(mesh.boundary_vertices)) != mesh.n_boundary:
        raise MeshError("Boundary loop visits a vertex twice")

    # Directed triangle edges; a boundary edge must appear exactly once, in loop direction
    tri = mesh.triangles
    directed = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    undirected, counts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
    single = {(int(a), int(b)) for (a, b), n in zip(undirected, counts) if n == 1}
    loop = {(int(min(a, b)), int(max(a, b))) for a, b in mesh.boundary_edges}
    if single != loop:
        raise MeshError("Boundary edges do not match the triangle edges used once")
    forward = {(int(a), int(b)) for a, b in directed}
    if not all((int(a), int(b)) in forward for a, b in mesh.boundary_edges):
        raise MeshError("Boundary loop is not counterclockwise")
    if np.any(np.abs(np.linalg.norm(mesh.normals, axis=1) - 1.0) > 1e-12):
        raise MeshError("Outward normals are not unit vectors")


def write_mesh(mesh: TriMesh, path: str) -> None:
    """
    Write the text mesh format: 'NV NT NB', then NV lines 'x y',
    NT lines 'i j k' and NB lines 'a b nx ny len'.
    """
    with open(path, "w", newline="\n") as f:
        f.write(f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_boundary}\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            f.write(f"{i} {j} {k}\n")
        for (a, b), (nx, ny), length in zip(mesh.boundary_edges, mesh.normals, mesh.edge_lengths):
            f.write(f"{a} {b} {nx:.17g} {ny:.17g} {length:.17g}\n")
    logger.info(f"Mesh written to {path}")


def read_mesh(path: str, domain: t.Optional[DomainSpec] = None) -> TriMesh:
    """Read the text mesh format written by write_mesh."""
    with open(path, "r") as f:
        lines = [line.split() for line in f if line.strip()]
    try:
        nv, nt, nb = (int(v) for v in lines[0])
        vertices = np.array(lines[1:1 + nv], dtype=float)
        triangles = np.array(lines[1 + nv:1 + nv + nt], dtype=int)
        boundary = np.array([int(row[0]) for row in lines[1 + nv + nt:1 + nv + nt + nb]], dtype=int)
    except (ValueError, IndexError) as e:
        raise MeshError(f"Malformed mesh file {path}: {e}") from e
    if vertices.shape != (nv, 2) or triangles.shape != (nt, 3) or boundary.shape != (nb,):
        raise MeshError(f"Malformed mesh file {path}: header announces {nv} {nt} {nb} entries")
    mesh = TriMesh(vertices=vertices, triangles=triangles, boundary_vertices=boundary, domain=domain)
    check_mesh(mesh)
    return mesh


def mesh_summary(mesh: TriMesh) -> t.Dict[str, float]:
    """Counts and measures printed by the mesh-info command."""
    return {
        "NV": mesh.n_vertices,
        "NT": mesh.n_triangles,
        "NB": mesh.n_boundary,
        "perimeter": boundary_measure(mesh),
        "area": mesh.area,
        "max_diameter": mesh.max_diameter,
    }
