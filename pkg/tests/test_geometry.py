import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypk.geometry import (BoundaryFace, DomainKind, DomainSpec, GeometryError, HyperPoint, Status, classify,
                           cosh_distance, delta, hyperbolic_distance, scale_domain, shifted_point)

coord = st.floats(-5, 5, allow_nan=False)
height = st.floats(1e-3, 10, allow_nan=False)


@st.composite
def points(draw, n=None):
    n = n or draw(st.integers(2, 4))
    return tuple(draw(coord) for _ in range(n - 1)) + (draw(height),)


@st.composite
def point_pairs(draw, k=2):
    n = draw(st.integers(2, 4))
    return tuple(draw(points(n)) for _ in range(k))


def test_point_validation():
    with pytest.raises(GeometryError):
        HyperPoint((1.0,))
    with pytest.raises(GeometryError):
        HyperPoint((0.5, 0.0))
    with pytest.raises(GeometryError):
        HyperPoint((math.nan, 1.0))
    p = HyperPoint((1, 2, 3))
    assert p.n == 3 and p.last == 3.0 and np.asarray(p).dtype == float


def test_distance_examples():
    assert hyperbolic_distance((0.3, 1.0), (0.3, 1.0)) == 0.0
    assert hyperbolic_distance((0, 1), (0, 2)) == pytest.approx(math.log(2), rel=1e-15)
    assert cosh_distance((0, 1), (0, 2)) == pytest.approx(1.25, rel=1e-15)


def test_distance_dimension_mismatch():
    with pytest.raises(GeometryError):
        hyperbolic_distance((0, 1), (0, 0, 1))


def test_distance_near_coincident_points():
    # vertical geodesic: d = log(1 + h) exactly
    h = 1e-9
    assert hyperbolic_distance((0, 1), (0, 1 + h)) == pytest.approx(math.log1p(h), rel=1e-12)


@given(point_pairs())
def test_distance_symmetric_and_matches_cosh(pq):
    x, y = pq
    d = hyperbolic_distance(x, y)
    assert d == pytest.approx(hyperbolic_distance(y, x), rel=1e-14, abs=1e-300)
    xa, ya = np.asarray(x), np.asarray(y)
    z = float(np.sum((xa - ya) ** 2)) / (2 * xa[-1] * ya[-1])
    # compare cosh(d) - 1 with z through the stable form 2 sinh^2(d/2)
    assert 2 * math.sinh(d / 2) ** 2 == pytest.approx(z, rel=1e-12, abs=1e-300)


@given(point_pairs(3))
def test_triangle_inequality(xyz):
    x, y, z = xyz
    assert hyperbolic_distance(x, z) <= hyperbolic_distance(x, y) + hyperbolic_distance(y, z) + 1e-12


def test_shifted_point():
    assert shifted_point((0.5, 3), 1).coords == (0.5, 2.0)
    assert np.allclose(shifted_point((0.5, 3), 1e-12).coords, (0.5, 3.0))
    with pytest.raises(GeometryError):
        shifted_point((0.5, 1.0), 1.0)


def test_delta_examples():
    assert delta(1, 0.3) == 0.3
    assert delta(1, 0.7) == pytest.approx(0.3)
    assert delta(2, 1.5) == 0.5
    for w in (0.0, 1.0, -0.1):
        with pytest.raises(GeometryError):
            delta(1, w)


@given(st.floats(1e-3, 1e3), st.floats(1e-6, 1 - 1e-6))
def test_delta_comparability(u, frac):
    w = frac * u
    if not 0 < w < u:
        return
    q = w * (u - w) / u
    d = delta(u, w)
    assert q <= d * (1 + 1e-12)
    assert d <= 2 * q * (1 + 1e-12)


def test_domain_invariants():
    with pytest.raises(GeometryError):
        DomainSpec.halfspace(0.0)
    with pytest.raises(GeometryError):
        DomainSpec.slab(1.0, math.inf)
    with pytest.raises(GeometryError):
        DomainSpec(DomainKind.STRIP, 0.5, 1.0)
    assert DomainSpec.halfspace(1).faces == (BoundaryFace.BOTTOM,)
    assert len(DomainSpec.strip(1).faces) == 3


def test_classify_examples():
    slab = DomainSpec.slab(1, 1)
    assert classify((0.5, 2), slab).status is Status.INTERIOR
    assert classify((0.5, 0.3, 2), slab).status is Status.INTERIOR
    assert classify((0.0, 2), slab) == (Status.ON_FACE, BoundaryFace.SIDE_LOW)
    assert classify((1.0, 2), slab) == (Status.ON_FACE, BoundaryFace.SIDE_HIGH)
    assert classify((0.5, 1.0), slab) == (Status.ON_FACE, BoundaryFace.BOTTOM)
    assert classify((0.3, 0.5), DomainSpec.halfspace(1)).status is Status.OUTSIDE
    assert classify((0.3, 0.0), DomainSpec.strip(1)) == (Status.ON_FACE, BoundaryFace.BOTTOM)


def test_classify_snaps_within_tolerance():
    slab = DomainSpec.slab(1, 2)
    assert classify((1e-13, 2), slab).face is BoundaryFace.SIDE_LOW
    assert classify((0.5, 1 + 5e-13), slab).face is BoundaryFace.BOTTOM
    assert classify((-1e-9, 2), slab).status is Status.OUTSIDE


def test_scale_domain_examples():
    assert scale_domain(DomainSpec.slab(1, 1), 2) == DomainSpec.slab(2, 2)
    assert scale_domain(DomainSpec.halfspace(1), 0.5) == DomainSpec.halfspace(0.5)
    with pytest.raises(GeometryError):
        scale_domain(DomainSpec.halfspace(1), 0.0)


@given(st.sampled_from(["halfspace", "slab", "strip"]), st.floats(0.1, 10), st.floats(0.1, 10),
       st.sampled_from([0.25, 0.5, 2.0, 4.0]))
def test_scale_domain_group_law(kind, a, b, c):
    dom = {"halfspace": DomainSpec.halfspace(a), "slab": DomainSpec.slab(a, b), "strip": DomainSpec.strip(b)}[kind]
    assert scale_domain(scale_domain(dom, c), 1 / c) == dom
