"""
Domain descriptions for the insulation laboratory.

A DomainSpec names the body Omega to be meshed; a LayerSpec describes the
thin insulating annulus of the layered model on the disk.
"""

import math
import typing as t
from dataclasses import dataclass

from robin_insulation.utils.error_handling import MeshError

_KINDS = ("disk", "regular_polygon", "rectangle", "convex")


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of the body plus the requested mesh size."""
    kind: str
    target_h: float
    radius: float = 0.0                # disk radius or polygon circumradius
    n_sides: int = 0
    width: float = 0.0
    height: float = 0.0
    vertices: t.Tuple[t.Tuple[float, float], ...] = ()

    @classmethod
    def disk(cls, radius: float = 1.0, target_h: float = 0.1) -> "DomainSpec":
        return cls(kind="disk", target_h=target_h, radius=radius).validated()

    @classmethod
    def regular_polygon(cls, n_sides: int, circumradius: float = 1.0,
                        target_h: float = 0.1) -> "DomainSpec":
        return cls(kind="regular_polygon", target_h=target_h,
                   radius=circumradius, n_sides=int(n_sides)).validated()

    @classmethod
    def rectangle(cls, width: float = 1.0, height: float = 1.0,
                  target_h: float = 0.1) -> "DomainSpec":
        return cls(kind="rectangle", target_h=target_h,
                   width=width, height=height).validated()

    @classmethod
    def convex(cls, vertices: t.Sequence[t.Sequence[float]],
               target_h: float = 0.1) -> "DomainSpec":
        pts = tuple((float(x), float(y)) for x, y in vertices)
        return cls(kind="convex", target_h=target_h, vertices=pts).validated()

    @classmethod
    def parse(cls, text: str, target_h: float) -> "DomainSpec":
        """
        Parse the command-line domain syntax.

        Args:
            text: 'disk:R', 'polygon:n:R', 'rectangle:w:h' or 'convex:x1,y1;x2,y2;...'
            target_h: Requested mesh size

        Returns:
            Validated DomainSpec
        """
        head, _, rest = text.strip().partition(":")
        try:
            if head == "disk":
                return cls.disk(float(rest or 1.0), target_h)
            if head in ("polygon", "regular_polygon"):
                n, _, r = rest.partition(":")
                return cls.regular_polygon(int(n), float(r or 1.0), target_h)
            if head == "rectangle":
                w, _, h = rest.partition(":")
                return cls.rectangle(float(w or 1.0), float(h or 1.0), target_h)
            if head == "convex":
                pts = [tuple(float(c) for c in p.split(",")) for p in rest.split(";") if p.strip()]
                return cls.convex(pts, target_h)
        except ValueError as e:
            raise MeshError(f"Malformed domain '{text}': {e}") from e
        raise MeshError(f"Unknown domain kind '{head}' (expected one of {', '.join(_KINDS)})")

    def to_text(self) -> str:
        """Inverse of parse (without the mesh size)."""
        if self.kind == "disk":
            return f"disk:{self.radius!r}"
        if self.kind == "regular_polygon":
            return f"polygon:{self.n_sides}:{self.radius!r}"
        if self.kind == "rectangle":
            return f"rectangle:{self.width!r}:{self.height!r}"
        return "convex:" + ";".join(f"{x!r},{y!r}" for x, y in self.vertices)

    def with_target_h(self, target_h: float) -> "DomainSpec":
        return DomainSpec(self.kind, target_h, self.radius, self.n_sides,
                          self.width, self.height, self.vertices).validated()

    def corners(self) -> t.List[t.Tuple[float, float]]:
        """Polygon corners in counterclockwise order (not defined for the disk)."""
        if self.kind == "regular_polygon":
            return [(self.radius * math.cos(2.0 * math.pi * j / self.n_sides),
                     self.radius * math.sin(2.0 * math.pi * j / self.n_sides))
                    for j in range(self.n_sides)]
        if self.kind == "rectangle":
            return [(0.0, 0.0), (self.width, 0.0), (self.width, self.height), (0.0, self.height)]
        if self.kind == "convex":
            return list(self.vertices)
        raise MeshError("A disk has no corners")

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.radius
        pts = self.corners()
        return max(math.dist(p, q) for p in pts for q in pts)

    def validated(self) -> "DomainSpec":
        """Check the invariants and return self."""
        if self.kind not in _KINDS:
            raise MeshError(f"Unknown domain kind '{self.kind}'")
        if not (self.target_h > 0.0):
            raise MeshError(f"target_h must be positive, got {self.target_h}")
        if self.kind in ("disk", "regular_polygon") and not self.radius > 0.0:
            raise MeshError(f"Radius must be positive, got {self.radius}")
        if self.kind == "regular_polygon" and self.n_sides < 3:
            raise MeshError(f"A polygon needs at least 3 sides, got {self.n_sides}")
        if self.kind == "rectangle" and not (self.width > 0.0 and self.height > 0.0):
            raise MeshError(f"Rectangle sides must be positive, got {self.width}x{self.height}")
        if self.kind == "convex":
            _check_convex(self.vertices)
        if self.target_h >= self.diameter:
            raise MeshError(f"target_h={self.target_h} is not smaller than the domain diameter {self.diameter}")
        return self


def _check_convex(vertices: t.Sequence[t.Tuple[float, float]]) -> None:
    """Counterclockwise, strictly convex polygon or MeshError."""
    n = len(vertices)
    if n < 3:
        raise MeshError("A convex polygon needs at least 3 vertices")
    for j in range(n):
        (x0, y0), (x1, y1), (x2, y2) = vertices[j], vertices[(j + 1) % n], vertices[(j + 2) % n]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if cross <= 0.0:
            raise MeshError(f"Polygon is not convex and counterclockwise at vertex {(j + 1) % n}")


@dataclass(frozen=True)
class LayerSpec:
    """Annular insulating layer of thickness eps*h_const around a disk."""
    eps: float
    h_const: float
    beta: float
    radius: float = 1.0

    def __post_init__(self):
        for name in ("eps", "h_const", "beta", "radius"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"LayerSpec.{name} must be positive, got {getattr(self, name)}")
        if self.eps * self.h_const >= self.radius:
            raise ValueError(f"Layer thickness {self.eps * self.h_const} is not thin compared to radius {self.radius}")

    @property
    def outer_radius(self) -> float:
        return self.radius + self.eps * self.h_const
