"""
P1 finite-element assembly for the insulation laboratory.
Stiffness, mass and weighted boundary-mass matrices, and the Rayleigh
quotient F(v, h) built from them.
"""

import logging
import typing as t
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from robin_insulation.models.fields import BoundaryField
from robin_insulation.models.mesh import TriMesh, NodalField
from robin_insulation.utils.error_handling import DegenerateMeshError
from robin_insulation.utils.quadrature import integrate_unit_segments

logger = logging.getLogger(__name__)

# Triangles with a smaller area abort assembly
MIN_TRIANGLE_AREA = 1e-14

# Two-point Gauss rule on [0, 1]: exact for the cubic weight * phi_i * phi_j
_GAUSS2_NODES = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GAUSS2_WEIGHTS = np.array([0.5, 0.5])

# Symmetric sparse matrices are scipy CSR matrices holding both triangles.
SparseSymMatrix = sp.csr_matrix


@dataclass(frozen=True, eq=False)
class FemOperators:
    """Mesh-dependent matrices shared by every solve on the same mesh."""
    mesh: TriMesh
    K: sp.csr_matrix
    M: sp.csr_matrix


def assemble_operators(mesh: TriMesh) -> FemOperators:
    return FemOperators(mesh=mesh, K=assemble_stiffness(mesh), M=assemble_mass(mesh))


def _checked_areas(mesh: TriMesh) -> np.ndarray:
    areas = mesh.signed_areas
    if np.any(areas < MIN_TRIANGLE_AREA):
        bad = int(np.argmin(areas))
        raise DegenerateMeshError(
            f"Degenerate triangle {bad} (vertices {mesh.triangles[bad].tolist()}, area {areas[bad]:.3e})")
    return areas


def _scatter(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, n: int) -> sp.csr_matrix:
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def _element_pairs(tri: np.ndarray) -> t.Tuple[np.ndarray, np.ndarray]:
    rows = np.repeat(tri, 3, axis=1)
    cols = np.tile(tri, (1, 3))
    return rows, cols


def assemble_stiffness(mesh: TriMesh) -> sp.csr_matrix:
    """
    Assemble K with v^T K w = integral of grad v . grad w.

    Args:
        mesh: Valid mesh

    Returns:
        Symmetric positive semidefinite CSR matrix with K @ 1 = 0
    """
    areas = _checked_areas(mesh)
    p = mesh.vertices[mesh.triangles]
    # Edge opposite to each local vertex
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    local = np.einsum("tid,tjd->tij", e, e) / (4.0 * areas[:, None, None])
    rows, cols = _element_pairs(mesh.triangles)
    return _scatter(rows, cols, local, mesh.n_vertices)


def assemble_mass(mesh: TriMesh) -> sp.csr_matrix:
    """
    Assemble M with v^T M w = integral of v w; 1^T M 1 is the domain area.
    """
    areas = _checked_areas(mesh)
    pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = areas[:, None, None] * pattern[None, :, :]
    rows, cols = _element_pairs(mesh.triangles)
    return _scatter(rows, cols, local, mesh.n_vertices)


def _boundary_scatter(mesh: TriMesh, edges: np.ndarray, local: np.ndarray) -> sp.csr_matrix:
    """local[:, 0..2] are the (a,a), (a,b), (b,b) integrals of boundary edge `edges`."""
    a, b = mesh.boundary_edges[edges].T
    rows = np.concatenate([a, a, b, b])
    cols = np.concatenate([a, b, a, b])
    vals = np.concatenate([local[:, 0], local[:, 1], local[:, 1], local[:, 2]])
    return _scatter(rows, cols, vals, mesh.n_vertices)


def assemble_boundary_mass(mesh: TriMesh, weight: t.Union[float, np.ndarray]) -> sp.csr_matrix:
    """
    Assemble B with v^T B w = integral over the boundary of weight * v * w,
    the weight being linear between its boundary-vertex values.

    Args:
        mesh: Valid mesh
        weight: Scalar or one nonnegative value per boundary vertex (loop order)

    Returns:
        Symmetric positive semidefinite CSR matrix supported on boundary vertices
    """
    w = np.broadcast_to(np.asarray(weight, dtype=float), (mesh.n_boundary,))
    if not np.all(np.isfinite(w)):
        raise ValueError("Boundary weights must be finite")
    if np.any(w < 0.0):
        raise ValueError(f"Boundary weights must be nonnegative (min {w.min():.3e})")
    s = _GAUSS2_NODES
    wa, wb = w, np.roll(w, -1)
    wq = wa[:, None] * (1.0 - s) + wb[:, None] * s            # (NB, 2)
    phi_a, phi_b = 1.0 - s, s
    L = mesh.edge_lengths[:, None]
    local = np.column_stack([
        np.sum(L * _GAUSS2_WEIGHTS * wq * phi_a * phi_a, axis=1),
        np.sum(L * _GAUSS2_WEIGHTS * wq * phi_a * phi_b, axis=1),
        np.sum(L * _GAUSS2_WEIGHTS * wq * phi_b * phi_b, axis=1),
    ])
    return _boundary_scatter(mesh, np.arange(mesh.n_boundary), local)


def assemble_profile_boundary_mass(mesh: TriMesh, h: BoundaryField, beta: float,
                                   rtol: float = 1e-13) -> sp.csr_matrix:
    """
    Assemble the boundary term of F for a profile h: entries
    beta * integral of phi_i phi_j / (1 + beta h), integrated piece by piece
    over the knots of h.

    Args:
        mesh: Mesh the profile lives on
        h: Insulation profile
        beta: Heat-transfer coefficient
        rtol: Relative increment that stops the Gauss-Legendre doubling

    Returns:
        Symmetric positive semidefinite CSR matrix
    """
    if len(h.lengths) != mesh.n_boundary:
        raise ValueError("Profile does not belong to this mesh")
    e, t0, t1, h0, h1 = h.segments()
    span = t1 - t0
    seg_len = mesh.edge_lengths[e] * span

    def integrand(tau):
        tt = t0[:, None] + tau * span[:, None]
        hh = h0[:, None] + tau * (h1 - h0)[:, None]
        w = beta / (1.0 + beta * hh)
        pa, pb = 1.0 - tt, tt
        return np.stack([w * pa * pa, w * pa * pb, w * pb * pb], axis=2)

    local = integrate_unit_segments(integrand, rtol=rtol) * seg_len[:, None]
    return _boundary_scatter(mesh, e, local)


def rayleigh_quotient(K: sp.spmatrix, M: sp.spmatrix, B: t.Optional[sp.spmatrix], v: NodalField) -> float:
    """
    Value of F(v, h) = (v^T K v + v^T B v) / (v^T M v).

    Raises:
        ValueError: v is the zero function
    """
    v = np.asarray(v, dtype=float)
    den = float(v @ (M @ v))
    if den <= 0.0:
        raise ValueError("zero function")
    num = float(v @ (K @ v))
    if B is not None:
        num += float(v @ (B @ v))
    return num / den


def upper_triplets(A: sp.spmatrix) -> t.List[t.Tuple[int, int, float]]:
    """Stored entries with row <= col, sorted by (row, col)."""
    upper = sp.triu(A, format="coo")
    order = np.lexsort((upper.col, upper.row))
    return [(int(upper.row[i]), int(upper.col[i]), float(upper.data[i])) for i in order]


def dump_matrix(A: sp.spmatrix, path: str) -> None:
    """Debug dump as 'row col value' lines."""
    with open(path, "w", newline="\n") as f:
        for r, c, v in upper_triplets(A):
            f.write(f"{r} {c} {v:.17g}\n")
    logger.debug(f"Matrix {A.shape} dumped to {path}")
