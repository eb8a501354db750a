import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from hypk.geometry import BoundaryFace, DomainSpec, GeometryError
from hypk.kernels import (BoundaryRegion, KernelEstimate, ball_volume, estimate_green, estimate_green_many,
                          estimate_poisson, estimate_poisson_many, gamma_exit_density, green_quadrature, j_density,
                          slab_green_quadrature, slab_poisson_quadrature)
from hypk.simulate import SimConfig
from hypk.theory import eta, reduction_factor, reduction_weight

import oracles

# Frozen from the sine-series and image-sum oracles.
J_01_HALF_HALF = 1.2445655330056034
J_001_03_04 = 2.4197072451000854
GAMMA_02_03 = 1.0629863116752742
GAMMA_002_03 = 4.459885845886101
# Frozen from the eigenfunction expansion of the slab Green function (n = 2, b = 1).
G_SPEC_1 = 0.10403444579684977       # mu=1, a=1, x=(0.4, 1.7), y=(0.6, 1.4)
G_SPEC_2 = 0.22584792665923623       # mu=0.6, a=0.5, x=(0.3, 1.2), y=(0.5, 0.9)

unit = st.floats(0.01, 0.99)
SLAB = DomainSpec.slab(1.0, 1.0)
X0 = (0.4, 1.7)


# --- interval densities ----------------------------------------------------------------------

def test_j_reference_values():
    assert j_density(0.1, 0.5, 0.5) == pytest.approx(J_01_HALF_HALF, rel=1e-12)
    assert j_density(0.01, 0.3, 0.4) == pytest.approx(J_001_03_04, rel=1e-12)


@pytest.mark.parametrize("t", [0.003, 0.05, 0.0500001, 0.3, 4.0])
def test_j_matches_both_oracles(t):
    for x, y in ((0.2, 0.7), (0.5, 0.5), (0.9, 0.1)):
        v = j_density(t, x, y)
        assert v == pytest.approx(oracles.interval_density_images(t, x, y), rel=1e-10, abs=1e-14)
        if t > 0.02:
            assert v == pytest.approx(oracles.interval_density_spectral(t, x, y), rel=1e-10, abs=1e-14)


@given(st.floats(1e-4, 10), unit, unit)
def test_j_symmetries(t, x, y):
    v = j_density(t, x, y)
    assert v == pytest.approx(j_density(t, y, x), rel=1e-10, abs=1e-13)
    assert v == pytest.approx(j_density(t, 1 - x, 1 - y), rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("t,x", [(0.01, 0.5), (0.2, 0.1), (1.0, 0.7)])
def test_j_sub_probability(t, x):
    m, _ = sint.quad(lambda y: j_density(t, x, y), 0, 1, epsabs=1e-12, limit=200)
    assert 0 < m <= 1 + 1e-10


def test_j_rejects_bad_arguments():
    with pytest.raises(ValueError):
        j_density(1e-7, 0.5, 0.5)
    with pytest.raises(ValueError):
        j_density(0.1, 0.0, 0.5)


def test_gamma_reference_values():
    assert gamma_exit_density(0.2, 0.3, 0) == pytest.approx(GAMMA_02_03, rel=1e-12)
    assert gamma_exit_density(0.02, 0.3, 0) == pytest.approx(GAMMA_002_03, rel=1e-12)
    assert gamma_exit_density(0.02, 0.3, 0) == pytest.approx(oracles.interval_exit_images(0.02, 0.3), rel=1e-12)


@pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.85])
def test_gamma_exit_probabilities(x):
    def mass(e):
        f = lambda u: math.exp(u) * gamma_exit_density(math.exp(u), x, e)
        return sint.quad(f, math.log(2e-6), math.log(40), epsabs=1e-12, epsrel=1e-11, limit=400)[0]
    lo, hi = mass(0), mass(1)
    assert lo == pytest.approx(1 - x, abs=1e-8)
    assert lo + hi == pytest.approx(1.0, abs=1e-8)


@given(st.floats(1e-4, 10), unit)
def test_gamma_reflection(t, x):
    lo, hi = gamma_exit_density(t, x, 0), gamma_exit_density(t, 1 - x, 1)
    # exact whenever 1 - (1 - x) rounds back to x
    assert lo == hi if 1 - (1 - x) == x else lo == pytest.approx(hi, rel=1e-13)


def test_gamma_rejects_bad_endpoint():
    with pytest.raises(ValueError):
        gamma_exit_density(0.1, 0.5, 2)


# --- quadratures -----------------------------------------------------------------------------

def test_slab_green_quadrature_matches_eigenfunction_expansion():
    assert slab_green_quadrature(1.0, 1.0, X0, (0.6, 1.4)) == pytest.approx(G_SPEC_1, rel=1e-8)
    assert slab_green_quadrature(0.6, 0.5, (0.3, 1.2), (0.5, 0.9)) == pytest.approx(G_SPEC_2, rel=1e-8)


def test_slab_green_quadrature_scaling():
    g1 = slab_green_quadrature(1.0, 1.0, X0, (0.6, 1.4))
    g2 = slab_green_quadrature(1.0, 2.0, (0.8, 3.4), (1.2, 2.8), b=2.0)
    assert 4 * g2 == pytest.approx(g1, rel=1e-7)


def test_slab_green_quadrature_vanishes_at_side():
    v = [slab_green_quadrature(1.0, 1.0, (x1, 1.7), (0.6, 1.4)) for x1 in (0.2, 0.05, 0.01)]
    assert v[0] > v[1] > v[2] and v[2] < 0.1 * v[0]


def test_quadrature_rejects_points_outside():
    with pytest.raises(GeometryError):
        slab_green_quadrature(1.0, 1.0, (0.4, 0.9), (0.6, 1.4))
    with pytest.raises(GeometryError):
        slab_poisson_quadrature(1.0, 1.0, X0, (0.5, 1.5))


def test_poisson_quadrature_face_masses_sum_to_one():
    mu = 0.8
    bottom, _ = sint.quad(lambda u: slab_poisson_quadrature(mu, 1.0, X0, (u, 1.0), epsrel=1e-6), 0, 1, epsabs=1e-6)
    g, w = np.polynomial.legendre.leggauss(20)
    L = math.log(10.0)
    s, w = (g + 1) * L / 2, w * L / 2        # y_n = e^s on (1, 10); the kernel is below 1e-20 beyond
    sides = [sum(wi * math.exp(si) * slab_poisson_quadrature(mu, 1.0, X0, (e, math.exp(si)), epsrel=1e-6)
                 for si, wi in zip(s, w)) for e in (0.0, 1.0)]
    assert bottom + sum(sides) == pytest.approx(1.0, abs=1e-3)


# --- Monte Carlo estimators ------------------------------------------------------------------

def test_ball_volume():
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(3, 2.0) == pytest.approx(32 * math.pi / 3)


def test_estimate_invariants():
    est = estimate_green(SLAB, 1.0, 0.0, X0, (0.6, 1.4), SimConfig(n_paths=500, seed=1))
    assert isinstance(est, KernelEstimate) and est.stderr >= 0 and est.value >= 0
    assert est.value_half is not None and est.n_paths == 500


def test_green_rejects_bad_points():
    cfg = SimConfig(n_paths=10)
    with pytest.raises(GeometryError):
        estimate_green(SLAB, 1.0, 0.0, X0, X0, cfg)
    with pytest.raises(GeometryError):
        estimate_green(SLAB, 1.0, 0.0, X0, (0.6, 1.001), cfg.with_(eps_ball=0.01))


def test_green_near_diagonal_flag():
    est = estimate_green(SLAB, 1.0, 0.0, X0, (0.41, 1.7), SimConfig(n_paths=200, eps_ball=0.005))
    assert "near-diagonal" in est.flags


def test_green_mc_matches_quadrature():
    ys = [(0.6, 1.4), (0.2, 2.5), (0.5, 1.2), (0.8, 2.0), (0.45, 3.0)]
    ests, _ = estimate_green_many(SLAB, 1.0, 0.0, X0, ys, SimConfig(n_paths=6000, seed=31))
    for y, e in zip(ys, ests):
        q = slab_green_quadrature(1.0, 1.0, X0, y)
        assert abs(e.value - q) < 3 * e.stderr, (y, e.value, e.stderr, q)


def test_green_continuous_at_zero_discount():
    cfg = SimConfig(n_paths=3000, seed=5)
    g0 = estimate_green(SLAB, 1.0, 0.0, X0, (0.6, 1.4), cfg)
    g1 = estimate_green(SLAB, 1.0, 1e-6, X0, (0.6, 1.4), cfg)
    assert abs(g0.value - g1.value) <= g0.stderr


def test_green_domain_monotone():
    cfg = SimConfig(n_paths=3000, seed=6, t_max=30)
    slab = estimate_green(SLAB, 1.0, 0.0, X0, (0.6, 1.4), cfg)
    strip = estimate_green(DomainSpec.strip(1.0), 1.0, 0.0, X0, (0.6, 1.4), cfg)
    assert slab.value <= strip.value + 3 * math.hypot(slab.stderr, strip.stderr)


def test_green_scaling():
    cfg = SimConfig(n_paths=3000, seed=8, eps_ball=0.01)
    base = estimate_green(SLAB, 1.0, 0.0, X0, (0.6, 1.4), cfg)
    big = estimate_green(DomainSpec.slab(2.0, 2.0), 1.0, 0.0, (0.8, 3.4), (1.2, 2.8), cfg.with_(seed=9, eps_ball=0.02))
    assert abs(4 * big.value - base.value) < 3 * math.hypot(4 * big.stderr, base.stderr)


def test_green_x_and_y_paths_agree():
    cfg = SimConfig(n_paths=4000, eps_ball=0.02)
    gx = estimate_green(SLAB, 0.8, 0.0, X0, (0.6, 1.4), cfg.with_(seed=1))
    gy = estimate_green(SLAB, 0.8, 0.0, X0, (0.6, 1.4), cfg.with_(seed=2), process="y")
    assert abs(gx.z_against(gy)) < 3


def test_green_reduction_identity():
    mu, lam = 1.0, 1.5
    e = eta(mu, lam)
    y = (0.6, 1.4)
    cfg = SimConfig(n_paths=4000, eps_ball=0.02)
    disc = estimate_green(SLAB, mu, lam, X0, y, cfg.with_(seed=3))
    plain = estimate_green(SLAB, e, 0.0, X0, y, cfg.with_(seed=4))
    assert abs(disc.z_against(plain, reduction_factor(mu, lam, X0, y))) < 3


def _bottom_partition():
    return [BoundaryRegion(BoundaryFace.BOTTOM, (0.0,), (0.5,)), BoundaryRegion(BoundaryFace.BOTTOM, (0.5,), (1.0,))]


def _side_regions():
    return [BoundaryRegion(f, (1.0,), (1e6,)) for f in (BoundaryFace.SIDE_LOW, BoundaryFace.SIDE_HIGH)]


def test_poisson_face_partition_sums_to_one():
    regs = _bottom_partition() + _side_regions()
    ests, batch = estimate_poisson_many(SLAB, 0.8, 0.0, X0, regs, SimConfig(n_paths=3000, seed=12))
    assert batch.exited.all()
    total = sum(e.value * r.volume for e, r in zip(ests, regs))
    se = math.sqrt(sum((e.stderr * r.volume) ** 2 for e, r in zip(ests, regs)))
    assert total == pytest.approx(1.0, abs=max(3 * se, 1e-12))


def test_poisson_mirror_regions_agree():
    cfg = SimConfig(n_paths=4000, seed=13)
    lo = BoundaryRegion(BoundaryFace.SIDE_LOW, (1.5,), (2.5,))
    hi = BoundaryRegion(BoundaryFace.SIDE_HIGH, (1.5,), (2.5,))
    ests, _ = estimate_poisson_many(SLAB, 1.0, 0.0, (0.5, 1.8), [lo, hi], cfg)
    assert abs(ests[0].value - ests[1].value) < 3 * math.hypot(ests[0].stderr, ests[1].stderr)


def test_poisson_rejects_foreign_face():
    with pytest.raises(GeometryError):
        estimate_poisson(DomainSpec.halfspace(1.0), 1.0, 0.0, (0.0, 2.0), _side_regions()[0], SimConfig(n_paths=10))


def test_poisson_reduction_identity():
    mu, lam = 1.0, 1.5
    reg = BoundaryRegion(BoundaryFace.BOTTOM, (0.2,), (0.6,))
    cfg = SimConfig(n_paths=4000)
    disc = estimate_poisson(SLAB, mu, lam, X0, reg, cfg.with_(seed=21))
    plain = estimate_poisson(SLAB, eta(mu, lam), 0.0, X0, reg, cfg.with_(seed=22),
                             weight=reduction_weight(mu, lam, X0))
    assert abs(disc.z_against(plain)) < 3


def test_poisson_mc_matches_quadrature():
    reg = BoundaryRegion(BoundaryFace.BOTTOM, (0.3,), (0.7,))
    est = estimate_poisson(SLAB, 0.8, 0.0, X0, reg, SimConfig(n_paths=6000, seed=23))
    q, _ = sint.quad(lambda u: slab_poisson_quadrature(0.8, 1.0, X0, (u, 1.0)), 0.3, 0.7, epsabs=1e-8)
    assert abs(est.value - q / 0.4) < 3 * est.stderr


def test_halfspace_discounted_poisson_flags_horizon():
    reg = BoundaryRegion(BoundaryFace.BOTTOM, (-1.0,), (1.0,))
    est = estimate_poisson(DomainSpec.halfspace(1.0), 0.3, 1.0, (0.0, 3.0), reg,
                           SimConfig(dt=1e-2, t_max=0.5, n_paths=500, seed=2))
    assert "horizon" in est.flags


def test_green_quadrature_dispatch():
    y = (0.6, 1.4)
    assert green_quadrature(SLAB, 1.0, X0, y) == slab_green_quadrature(1.0, 1.0, X0, y)
    h = green_quadrature(DomainSpec.halfspace(1.0), 1.0, X0, y)
    assert h > slab_green_quadrature(1.0, 1.0, X0, y)
