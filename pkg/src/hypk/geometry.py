"""Half-space model primitives.

Points of ``H^n = {x in R^n : x_n > 0}``, the hyperbolic distance, the three
domain families used throughout the package (the half-space ``D_a``, the slab
``S_{a,b}`` and the strip ``S_{0,b}``) and the small helpers ``delta`` and
``shifted_point``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

BOUNDARY_RTOL = 1e-12


class GeometryError(ValueError):
    """Invalid point, dimension or domain parameters."""


@dataclass(frozen=True)
class HyperPoint:
    """A point of the upper half-space with ``n >= 2`` coordinates."""

    coords: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        if len(c) < 2:
            raise GeometryError(f"need n >= 2 coordinates, got {len(c)}")
        if not all(math.isfinite(v) for v in c):
            raise GeometryError(f"non-finite coordinate in {c}")
        if c[-1] <= 0.0:
            raise GeometryError(f"last coordinate must be > 0, got {c[-1]}")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def last(self) -> float:
        return self.coords[-1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or float)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def scaled(self, c: float) -> "HyperPoint":
        return HyperPoint(tuple(c * v for v in self.coords))


PointLike = Union[HyperPoint, Sequence[float], np.ndarray]


def as_point(x: PointLike) -> HyperPoint:
    return x if isinstance(x, HyperPoint) else HyperPoint(tuple(x))


def _pair(x: PointLike, y: PointLike):
    xa = np.asarray(as_point(x), dtype=float)
    ya = np.asarray(as_point(y), dtype=float)
    if xa.shape != ya.shape:
        raise GeometryError(f"dimension mismatch: {xa.size} vs {ya.size}")
    return xa, ya


def cosh_distance(x: PointLike, y: PointLike) -> float:
    """``cosh d(x, y) = 1 + |x - y|^2 / (2 x_n y_n)``."""
    xa, ya = _pair(x, y)
    d2 = float(np.sum((xa - ya) ** 2))
    return 1.0 + d2 / (2.0 * xa[-1] * ya[-1])


def hyperbolic_distance(x: PointLike, y: PointLike) -> float:
    xa, ya = _pair(x, y)
    z = float(np.sum((xa - ya) ** 2)) / (2.0 * xa[-1] * ya[-1])
    if z < 1e-8:
        # arccosh(1 + z) = sqrt(2z) (1 - z/12 + 3 z^2/160 - ...)
        return math.sqrt(2.0 * z) * (1.0 - z / 12.0 + 3.0 * z * z / 160.0)
    return math.log1p(z + math.sqrt(z * z + 2.0 * z))


def shifted_point(x: PointLike, a: float) -> HyperPoint:
    """``x`` with ``a`` subtracted from its last coordinate."""
    p = as_point(x)
    if not a > 0:
        raise GeometryError(f"shift must be positive, got {a}")
    if p.last <= a:
        raise GeometryError(f"x_n = {p.last} must exceed the shift a = {a}")
    return HyperPoint(p.coords[:-1] + (p.last - a,))


def delta(u: float, w: float) -> float:
    """Distance from ``w`` to the complement of ``(0, u)``."""
    if not 0.0 < w < u:
        raise GeometryError(f"w = {w} outside (0, {u})")
    return min(w, u - w)


class DomainKind(enum.Enum):
    HALFSPACE = "halfspace"
    SLAB = "slab"
    STRIP = "strip"


class BoundaryFace(enum.Enum):
    SIDE_LOW = "side-low"    # x_1 = 0
    SIDE_HIGH = "side-high"  # x_1 = b
    BOTTOM = "bottom"        # x_n = a


@dataclass(frozen=True)
class DomainSpec:
    kind: DomainKind
    a: float
    b: float = math.inf

    def __post_init__(self):
        kind = DomainKind(self.kind)
        a, b = float(self.a), float(self.b)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if kind is DomainKind.HALFSPACE:
            if not (a > 0 and math.isinf(b)):
                raise GeometryError(f"half-space needs a > 0 and b = inf, got a={a}, b={b}")
        elif kind is DomainKind.SLAB:
            if not (a > 0 and 0 < b < math.inf):
                raise GeometryError(f"slab needs a > 0 and 0 < b < inf, got a={a}, b={b}")
        else:
            if not (a == 0 and 0 < b < math.inf):
                raise GeometryError(f"strip needs a = 0 and 0 < b < inf, got a={a}, b={b}")

    @classmethod
    def halfspace(cls, a: float) -> "DomainSpec":
        return cls(DomainKind.HALFSPACE, a)

    @classmethod
    def slab(cls, a: float, b: float) -> "DomainSpec":
        return cls(DomainKind.SLAB, a, b)

    @classmethod
    def strip(cls, b: float) -> "DomainSpec":
        return cls(DomainKind.STRIP, 0.0, b)

    @property
    def faces(self) -> tuple:
        if self.kind is DomainKind.HALFSPACE:
            return (BoundaryFace.BOTTOM,)
        return (BoundaryFace.SIDE_LOW, BoundaryFace.SIDE_HIGH, BoundaryFace.BOTTOM)

    @property
    def bounded_sides(self) -> bool:
        return self.kind is not DomainKind.HALFSPACE

    def contains(self, x: PointLike) -> bool:
        return classify(x, self).status is Status.INTERIOR

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "a": self.a, "b": self.b}

    def __str__(self):
        if self.kind is DomainKind.HALFSPACE:
            return f"HalfSpace(a={self.a:g})"
        if self.kind is DomainKind.SLAB:
            return f"Slab(a={self.a:g}, b={self.b:g})"
        return f"Strip(b={self.b:g})"


class Status(enum.Enum):
    INTERIOR = "interior"
    ON_FACE = "on-face"
    OUTSIDE = "outside"


class Location(NamedTuple):
    status: Status
    face: BoundaryFace | None = None


def classify(x, dom: DomainSpec, rtol: float = BOUNDARY_RTOL) -> Location:
    """Locate ``x`` relative to ``dom``.

    Points within ``rtol * b`` of a side face (``rtol * a`` of the bottom)
    snap onto that face.  ``x`` may be any array-like with ``x_n >= 0`` so
    that exits onto the degenerate bottom of a strip can be classified.
    """
    xa = np.asarray(x, dtype=float)
    if xa.ndim != 1 or xa.size < 2:
        raise GeometryError(f"expected a point with n >= 2 coordinates, got shape {xa.shape}")
    x1, xn = float(xa[0]), float(xa[-1])
    a, b = dom.a, dom.b

    bottom_tol = rtol * a if a > 0 else rtol
    if xn < a - bottom_tol or xn < 0:
        return Location(Status.OUTSIDE)
    on_bottom = abs(xn - a) <= bottom_tol

    if dom.bounded_sides:
        side_tol = rtol * b
        if x1 < -side_tol or x1 > b + side_tol:
            return Location(Status.OUTSIDE)
        if abs(x1) <= side_tol:
            return Location(Status.ON_FACE, BoundaryFace.SIDE_LOW)
        if abs(x1 - b) <= side_tol:
            return Location(Status.ON_FACE, BoundaryFace.SIDE_HIGH)
    if on_bottom:
        return Location(Status.ON_FACE, BoundaryFace.BOTTOM)
    return Location(Status.INTERIOR)


def scale_domain(dom: DomainSpec, c: float) -> DomainSpec:
    """Image of ``dom`` under the dilation ``x -> c x``."""
    if not c > 0:
        raise GeometryError(f"scale factor must be positive, got {c}")
    return DomainSpec(dom.kind, c * dom.a, c * dom.b)
