"""
Triangulation data model.
"""

import typing as t
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from robin_insulation.models.domain import DomainSpec

# A P1 function over the mesh: one coefficient per vertex.
NodalField = np.ndarray


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    2D triangulation with a single counterclockwise boundary loop.

    Boundary edge i joins boundary_vertices[i] to boundary_vertices[i + 1]
    (cyclically). Arrays are never modified after construction.
    """
    vertices: np.ndarray           # (NV, 2)
    triangles: np.ndarray          # (NT, 3), counterclockwise
    boundary_vertices: np.ndarray  # (NB,), traversal order
    domain: t.Optional[DomainSpec] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_vertices)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        bv = self.boundary_vertices
        return np.column_stack([bv, np.roll(bv, -1)])

    @cached_property
    def edge_vectors(self) -> np.ndarray:
        a, b = self.boundary_edges.T
        return self.vertices[b] - self.vertices[a]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.hypot(self.edge_vectors[:, 0], self.edge_vectors[:, 1])

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normals (boundary is traversed counterclockwise)."""
        d = self.edge_vectors
        return np.column_stack([d[:, 1], -d[:, 0]]) / self.edge_lengths[:, None]

    @cached_property
    def boundary_arclength(self) -> np.ndarray:
        """Arclength position of each boundary vertex, starting at 0."""
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths)[:-1]])

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def area(self) -> float:
        return float(self.signed_areas.sum())

    @cached_property
    def centroid(self) -> np.ndarray:
        p = self.vertices[self.triangles].mean(axis=1)
        return (p * self.signed_areas[:, None]).sum(axis=0) / self.area

    @cached_property
    def boundary_angles(self) -> np.ndarray:
        """Polar angle of each boundary vertex about the area centroid."""
        d = self.vertices[self.boundary_vertices] - self.centroid
        return np.arctan2(d[:, 1], d[:, 0])

    @property
    def max_diameter(self) -> float:
        p = self.vertices[self.triangles]
        sides = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))]
        return float(np.max(sides))

    def boundary_trace(self, u: NodalField) -> np.ndarray:
        """Values of a nodal field at the boundary vertices, in loop order."""
        return np.asarray(u, dtype=float)[self.boundary_vertices]
