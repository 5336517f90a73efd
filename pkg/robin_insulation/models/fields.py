"""
Boundary field models: the trace |v| of a nodal field and the insulation
profile h, both piecewise linear along the boundary loop.
"""

import typing as t
from dataclasses import dataclass

import numpy as np

from robin_insulation.models.mesh import TriMesh, NodalField


@dataclass(frozen=True, eq=False)
class TraceField:
    """
    Absolute boundary trace |v| at the boundary vertices.

    Edge i joins vertex i to vertex i + 1 (cyclically) and has length
    lengths[i]; zero-length edges are allowed and model jumps.
    """
    values: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        values = np.abs(np.asarray(self.values, dtype=float))
        lengths = np.asarray(self.lengths, dtype=float)
        if values.shape != lengths.shape or values.ndim != 1:
            raise ValueError(f"Trace values {values.shape} and edge lengths {lengths.shape} must match")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(lengths))):
            raise ValueError("Trace values and edge lengths must be finite")
        if np.any(lengths < 0.0):
            raise ValueError("Edge lengths must be nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def from_nodal(cls, mesh: TriMesh, u: NodalField) -> "TraceField":
        return cls(mesh.boundary_trace(u), mesh.edge_lengths)

    @property
    def perimeter(self) -> float:
        return float(self.lengths.sum())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def endpoints(self) -> t.Tuple[np.ndarray, np.ndarray]:
        """Values at the start and end vertex of every edge."""
        return self.values, np.roll(self.values, -1)

    def total(self) -> float:
        """Integral of |v| along the boundary."""
        a, b = self.endpoints()
        return float(np.sum(self.lengths * (a + b)) / 2.0)

    def crossing(self, c: float) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Per-edge description of the closed level set {|v| >= c}.

        Returns:
            (full, partial, fraction): edges entirely in the set, edges cut by
            the level c, and the fraction of each edge lying in the set
        """
        a, b = self.endpoints()
        hi, lo = np.maximum(a, b), np.minimum(a, b)
        full = lo >= c
        partial = (hi >= c) & ~full
        fraction = np.where(full, 1.0, 0.0)
        span = np.where(partial, hi - lo, 1.0)
        fraction = np.where(partial, (hi - c) / span, fraction)
        return full, partial, fraction

    def level_set(self, c: float) -> t.Tuple[float, float]:
        """
        Exact arclength and integral of |v| over {|v| >= c}.

        Returns:
            (measure, integral)
        """
        a, b = self.endpoints()
        full, partial, fraction = self.crossing(c)
        hi = np.maximum(a, b)
        measure = np.sum(self.lengths * fraction)
        integral = np.where(full, self.lengths * (a + b) / 2.0, 0.0)
        integral = integral + np.where(partial, self.lengths * fraction * (hi + c) / 2.0, 0.0)
        return float(measure), float(integral.sum())

    def sublevel_square_integral(self, c: float) -> float:
        """Exact integral of v^2 over {|v| < c}."""
        a, b = self.endpoints()
        full, partial, fraction = self.crossing(c)
        lo = np.minimum(a, b)
        below = ~(full | partial)
        value = np.where(below, self.lengths * (a * a + a * b + b * b) / 3.0, 0.0)
        rest = self.lengths * (1.0 - fraction)
        value = value + np.where(partial, rest * (lo * lo + lo * c + c * c) / 3.0, 0.0)
        return float(value.sum())


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """
    Nonnegative insulation profile h, piecewise linear between knots.

    Every boundary vertex is a knot (t == 0 on its outgoing edge); extra
    knots sit inside edges at local parameter t in (0, 1). Knots are sorted
    by (edge, t) and the field closes cyclically.
    """
    edge: np.ndarray
    t: np.ndarray
    values: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        edge = np.asarray(self.edge, dtype=int)
        tt = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=float)
        lengths = np.asarray(self.lengths, dtype=float)
        if not (edge.shape == tt.shape == values.shape):
            raise ValueError("Knot arrays must have equal shapes")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("An insulation profile must be finite and nonnegative")
        order = np.lexsort((tt, edge))
        edge, tt, values = edge[order], tt[order], values[order]
        vertex_knots = edge[tt == 0.0]
        if not np.array_equal(vertex_knots, np.arange(len(lengths))):
            raise ValueError("Every boundary vertex must be a knot of the profile")
        if np.any((tt < 0.0) | (tt >= 1.0)):
            raise ValueError("Knot parameters must lie in [0, 1)")
        object.__setattr__(self, "edge", edge)
        object.__setattr__(self, "t", tt)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def from_vertex_values(cls, lengths: np.ndarray, values: np.ndarray) -> "BoundaryField":
        n = len(lengths)
        return cls(np.arange(n), np.zeros(n), np.asarray(values, dtype=float), lengths)

    @classmethod
    def constant(cls, lengths: np.ndarray, value: float) -> "BoundaryField":
        return cls.from_vertex_values(lengths, np.full(len(lengths), float(value)))

    @classmethod
    def uniform(cls, mesh: TriMesh, m: float) -> "BoundaryField":
        """The symmetric profile h = m / |dOmega|."""
        return cls.constant(mesh.edge_lengths, m / mesh.perimeter)

    def segments(self) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Linear pieces of the profile, each inside a single edge.

        Returns:
            (edge, t0, t1, h0, h1) arrays, one entry per piece
        """
        nxt_edge = np.roll(self.edge, -1)
        same = nxt_edge == self.edge
        t1 = np.where(same, np.roll(self.t, -1), 1.0)
        return self.edge, self.t, t1, self.values, np.roll(self.values, -1)

    def mass(self) -> float:
        """Trapezoid integral, exact for the piecewise-linear profile."""
        e, t0, t1, h0, h1 = self.segments()
        return float(np.sum(self.lengths[e] * (t1 - t0) * (h0 + h1)) / 2.0)

    def vertex_values(self) -> np.ndarray:
        return self.values[self.t == 0.0]

    def arclength(self) -> np.ndarray:
        """Arclength position of every knot."""
        start = np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])
        return start[self.edge] + self.t * self.lengths[self.edge]

    def scaled(self, factor: float) -> "BoundaryField":
        return BoundaryField(self.edge, self.t, self.values * factor, self.lengths)
