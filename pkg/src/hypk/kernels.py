"""Green functions and Poisson kernels: Monte Carlo estimators and time-integral quadratures.

The Monte Carlo estimators average discounted ball occupations (Green) or
discounted exit indicators of a boundary patch (Poisson) over simulated
paths.  The quadratures evaluate the slab kernels through the product
structure of the Brownian-Bessel diffusion: a Brownian motion on ``(0, 1)``
in the first coordinate, free Brownian motions in the middle coordinates and
a Bessel process of index ``-mu`` killed at ``a`` in the last one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bessel import hitting_density_numeric, killed_density_numeric, transition_density
from .geometry import BoundaryFace, DomainKind, DomainSpec, GeometryError, as_point, classify, Status
from .quadrature import gk_integrate, integrate
from .simulate import FACES, Process, SimConfig, simulate_exits

SMALL_T = 0.05           # below: method-of-images forms of j and gamma
T_REJECT = 1e-6
SERIES_TOL = 1e-14
DEFAULT_BALL_FRACTION = 0.02
NEAR_DIAGONAL = 5.0      # |x - y| < NEAR_DIAGONAL * eps flags the estimate


@dataclass(frozen=True)
class KernelEstimate:
    """Monte Carlo kernel value with its path-level standard error.

    For Green estimates ``value_half``/``stderr_half`` hold the estimate with
    half the ball radius; ``flags`` lists bias warnings.
    """

    value: float
    stderr: float
    n_paths: int
    lam: float
    mu: float
    kind: str = "green"
    flags: tuple = ()
    value_half: float | None = None
    stderr_half: float | None = None
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    def z_against(self, other: "KernelEstimate", scale: float = 1.0) -> float:
        """z-score of ``self.value - scale * other.value`` (independent samples)."""
        se = math.hypot(self.stderr, scale * other.stderr)
        diff = self.value - scale * other.value
        if se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / se


def ball_volume(n: int, eps: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * eps ** n


def _mean_se(v: np.ndarray):
    m = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return m, se


def _check_ball(dom: DomainSpec, y: np.ndarray, eps: float):
    if y[-1] - dom.a < eps:
        raise GeometryError(f"ball of radius {eps:g} around {tuple(y)} leaves {dom} through the bottom")
    if dom.bounded_sides and (y[0] < eps or dom.b - y[0] < eps):
        raise GeometryError(f"ball of radius {eps:g} around {tuple(y)} leaves {dom} through a side")


@dataclass(frozen=True)
class BoundaryRegion:
    """Axis-aligned rectangle on one face.

    ``lo``/``hi`` bound the ``n - 1`` coordinates that vary along the face:
    ``x_1 .. x_{n-1}`` on the bottom, ``x_2 .. x_n`` on a side.
    """

    face: BoundaryFace
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "face", BoundaryFace(self.face))
        lo, hi = tuple(map(float, self.lo)), tuple(map(float, self.hi))
        if len(lo) != len(hi) or not lo:
            raise GeometryError("region bounds must have equal positive length")
        if not all(h > l for l, h in zip(lo, hi)):
            raise GeometryError("region must have positive volume")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def _along(self, pts: np.ndarray) -> np.ndarray:
        return pts[:, :-1] if self.face is BoundaryFace.BOTTOM else pts[:, 1:]

    def contains(self, pts: np.ndarray, faces: np.ndarray) -> np.ndarray:
        c = self._along(np.atleast_2d(pts))
        inside = np.all((c >= np.array(self.lo)) & (c <= np.array(self.hi)), axis=1)
        return inside & (faces == FACES.index(self.face))

    def center(self, dom: DomainSpec) -> np.ndarray:
        mid = 0.5 * (np.array(self.lo) + np.array(self.hi))
        if self.face is BoundaryFace.BOTTOM:
            return np.append(mid, dom.a)
        return np.insert(mid, 0, 0.0 if self.face is BoundaryFace.SIDE_LOW else dom.b)

    def scaled(self, c: float) -> "BoundaryRegion":
        return BoundaryRegion(self.face, tuple(c * v for v in self.lo), tuple(c * v for v in self.hi))


def _green_weight(proc: Process, weight):
    if proc is Process.HBM:
        return weight
    if weight is None:
        return lambda p: 1.0 / p[:, -1] ** 2
    return lambda p: np.asarray(weight(p)) / p[:, -1] ** 2


def green_from_batch(batch, j: int = 0, flags: Sequence[str] = ()) -> KernelEstimate:
    """Green estimate for centre ``j`` of a simulated batch (radii ``eps`` and ``eps/2``)."""
    n = batch.centers.shape[1]
    eps = float(batch.radii[j, 0])
    occ = batch.occupation[:, j, 0] / ball_volume(n, eps)
    val, se = _mean_se(occ)
    flags = list(flags)
    vh = sh = None
    if batch.radii.shape[1] > 1:
        occ_h = batch.occupation[:, j, 1] / ball_volume(n, float(batch.radii[j, 1]))
        vh, sh = _mean_se(occ_h)
        _, sd = _mean_se(occ - occ_h)
        if abs(val - vh) > 2 * sd and sd > 0:
            flags.append("ball-bias")
    if not batch.exited.all():
        flags.append("horizon")
    return KernelEstimate(val, se, batch.n_paths, batch.lam, batch.mu, "green", tuple(flags), vh, sh, occ)


def estimate_green_many(dom: DomainSpec, mu: float, lam: float, x, ys, cfg: SimConfig, *, process="hbm",
                        weight=None, eps=None):
    """Green estimates at several points ``ys`` from one set of paths from ``x``.

    Returns ``(estimates, batch)``.  Ball radii default to ``cfg.eps_ball`` or
    ``0.02 |x - y|``.
    """
    proc = Process(process)
    xp = np.asarray(as_point(x), dtype=float)
    Y = np.array([np.asarray(as_point(y), dtype=float) for y in ys])
    flags = []
    radii = []
    for k, y in enumerate(Y):
        d = float(np.linalg.norm(xp - y))
        if d == 0:
            raise GeometryError("Green function requested on the diagonal x = y")
        e = eps[k] if eps is not None else (cfg.eps_ball or DEFAULT_BALL_FRACTION * d)
        if classify(y, dom).status is not Status.INTERIOR:
            raise GeometryError(f"y = {tuple(y)} is not interior to {dom}")
        _check_ball(dom, y, e)
        radii.append((e, e / 2))
        flags.append(("near-diagonal",) if d < NEAR_DIAGONAL * e else ())
    batch = simulate_exits(proc, mu, xp, dom, cfg, lam=lam, centers=Y, radii=np.array(radii),
                           weight=_green_weight(proc, weight))
    return [green_from_batch(batch, k, flags[k]) for k in range(len(Y))], batch


def estimate_green(dom: DomainSpec, mu: float, lam: float, x, y, cfg: SimConfig, *, process="hbm",
                   weight=None) -> KernelEstimate:
    """Monte Carlo estimate of ``G_U^{(mu), lam}(x, y)``.

    The estimator is the mean discounted occupation of the Euclidean ball
    ``B(y, eps)`` divided by its volume.  ``process="y"`` uses Brownian-Bessel
    paths with the weight ``1 / Y_n^2``.
    """
    est, _ = estimate_green_many(dom, mu, lam, x, [y], cfg, process=process, weight=weight)
    return est[0]


def poisson_from_batch(batch, region: BoundaryRegion, weight=None) -> KernelEstimate:
    """Poisson estimate for one region of a simulated batch.

    ``weight`` is an optional callable of the exit positions.
    """
    hit = region.contains(batch.position, batch.face) & batch.exited
    disc = np.where(batch.exited, np.exp(-batch.lam * np.where(batch.exited, batch.tau, 0.0)), 0.0)
    v = hit * disc
    if weight is not None:
        v = v * np.asarray(weight(batch.position), dtype=float)
    v = v / region.volume
    val, se = _mean_se(v)
    flags = () if batch.exited.all() else ("horizon",)
    return KernelEstimate(val, se, batch.n_paths, batch.lam, batch.mu, "poisson", flags, samples=v)


def estimate_poisson_many(dom: DomainSpec, mu: float, lam: float, x, regions, cfg: SimConfig, *,
                          process="hbm", weight=None):
    """Poisson estimates for several regions from one set of paths.  Returns ``(estimates, batch)``."""
    batch = simulate_exits(process, mu, x, dom, cfg, lam=lam)
    return [poisson_from_batch(batch, r, weight) for r in regions], batch


def estimate_poisson(dom: DomainSpec, mu: float, lam: float, x, region: BoundaryRegion, cfg: SimConfig, *,
                     process="hbm", weight=None) -> KernelEstimate:
    """Monte Carlo estimate of the region average of ``P_U^{(mu), lam}(x, .)``.

    Paths that have not exited by the horizon contribute zero (their
    discount ``e^{-lam tau}`` is taken as 0) and the estimate carries the
    ``horizon`` flag.
    """
    if region.face not in dom.faces:
        raise GeometryError(f"{region.face.value} is not a face of {dom}")
    est, _ = estimate_poisson_many(dom, mu, lam, x, [region], cfg, process=process, weight=weight)
    return est[0]


# --- one-dimensional Brownian motion on (0, 1) ------------------------------------------------

def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= T_REJECT):
        raise ValueError(f"t must exceed {T_REJECT:g}")
    return t


def _unit(name, v):
    if not 0 < v < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {v}")


def _spectral_terms(t_min: float, power: int = 0) -> int:
    k = 1
    c = math.pi ** 2 * t_min / 2
    while True:
        tail = 2 * k ** power * math.exp(-k * k * c) / (1 - math.exp(-(2 * k + 1) * c))
        if tail < SERIES_TOL:
            return k
        k += 1


def _images(t, fn, m_max: int = 4):
    out = np.zeros_like(t)
    for m in range(-m_max, m_max + 1):
        out += fn(m)
    return out


def j_density(t, x1: float, y1: float, terms: int | None = None):
    """Transition density of Brownian motion killed on leaving ``(0, 1)``.

    Spectral series ``2 sum sin(k pi x) sin(k pi y) exp(-k^2 pi^2 t / 2)`` for
    ``t > 0.05``, method of images below.
    """
    _unit("x1", x1)
    _unit("y1", y1)
    ta = np.atleast_1d(_check_t(t))
    out = np.empty_like(ta)
    big = ta > SMALL_T
    if big.any():
        tb = ta[big]
        K = terms or _spectral_terms(float(tb.min()))
        k = np.arange(1, K + 1)
        c = np.sin(k * math.pi * x1) * np.sin(k * math.pi * y1)
        out[big] = 2 * (np.exp(-np.outer(tb, k * k) * math.pi ** 2 / 2) * c).sum(axis=1)
    if (~big).any():
        ts = ta[~big]
        norm = 1 / np.sqrt(2 * math.pi * ts)
        out[~big] = _images(ts, lambda m: norm * (np.exp(-(y1 - x1 + 2 * m) ** 2 / (2 * ts))
                                                  - np.exp(-(y1 + x1 + 2 * m) ** 2 / (2 * ts))))
    return float(out[0]) if np.ndim(t) == 0 else out


def gamma_exit_density(t, x1: float, endpoint: int, terms: int | None = None):
    """Density in ``t`` of exiting ``(0, 1)`` at ``endpoint`` (0 or 1) at time ``t``, started at ``x1``.

    ``pi sum k sin(k pi x) exp(-k^2 pi^2 t / 2)`` for ``t > 0.05``, images
    ``sum (x + 2m) (2 pi t^3)^{-1/2} exp(-(x + 2m)^2 / 2t)`` below.
    """
    _unit("x1", x1)
    if endpoint not in (0, 1):
        raise ValueError("endpoint must be 0 or 1")
    x = x1 if endpoint == 0 else 1.0 - x1
    ta = np.atleast_1d(_check_t(t))
    out = np.empty_like(ta)
    big = ta > SMALL_T
    if big.any():
        tb = ta[big]
        K = terms or _spectral_terms(float(tb.min()), power=1)
        k = np.arange(1, K + 1)
        out[big] = math.pi * (np.exp(-np.outer(tb, k * k) * math.pi ** 2 / 2) * (k * np.sin(k * math.pi * x))).sum(axis=1)
    if (~big).any():
        ts = ta[~big]
        norm = 1 / np.sqrt(2 * math.pi * ts ** 3)
        out[~big] = _images(ts, lambda m: norm * (x + 2 * m) * np.exp(-(x + 2 * m) ** 2 / (2 * ts)))
    return float(out[0]) if np.ndim(t) == 0 else out


# --- quadratures -----------------------------------------------------------------------------

T_UPPER = 10.0           # exp(-pi^2 t / 2) < 1e-21 beyond
T_LOWER = 1e-6
_T_BREAKS = [1e-4, 1e-3, 0.01, 0.05, 0.2, 0.5, 1.0, 2.0, 4.0]


def _gauss_middle(t, x, y):
    """Heat kernel of the coordinates ``x_2 .. x_{n-1}``."""
    d2 = float(np.sum((x[1:-1] - y[1:-1]) ** 2))
    k = x.size - 2
    return np.exp(-d2 / (2 * t)) / (2 * math.pi * t) ** (k / 2) if k else np.ones_like(t)


def _min_separation(x, y):
    d = float(np.linalg.norm(x - y))
    if d * d / (2 * T_LOWER) < 60:
        raise ValueError(f"|x - y| = {d:g} is too small for the time-integral quadrature")


def _time_integral(f, epsrel):
    res = gk_integrate(f, T_LOWER, T_UPPER, epsabs=1e-300, epsrel=epsrel, points=_T_BREAKS, limit=4000)
    return float(res.value)


def _unit_slab(a: float, b: float, x, y):
    xp = np.asarray(as_point(x), dtype=float) / b
    yp = np.asarray(y, dtype=float) / b
    return a / b, xp, yp


def slab_green_quadrature(mu: float, a: float, x, y, b: float = 1.0, *, epsrel: float = 1e-7) -> float:
    """``G`` of the slab ``S_{a,b}`` (``a = 0``: the strip) by time integration.

    ``G_{S_{a,1}}(x, y) = y_n^{-2} int j(t; x_1, y_1) h_{n-2}(t) g_a(t; x_n, y_n) dt``
    with the killed Bessel density from Hunt's formula (free density when
    ``a = 0``); other ``b`` by the scaling relation.
    """
    a1, xp, yp = _unit_slab(a, b, x, y)
    n = xp.size
    for p in (xp, yp):
        if not (0 < p[0] < 1 and p[-1] > a1):
            raise GeometryError("points must lie inside the slab")
    _min_separation(xp, yp)
    nu = -mu

    def f(t):
        g = (killed_density_numeric(nu, a1, t, xp[-1], yp[-1]) if a1 > 0
             else transition_density(nu, t, xp[-1], yp[-1]))
        return j_density(t, xp[0], yp[0]) * _gauss_middle(t, xp, yp) * g

    return float(_time_integral(f, epsrel) / yp[-1] ** 2 / b ** n)


def slab_poisson_quadrature(mu: float, a: float, x, y, b: float = 1.0, *, epsrel: float = 1e-7) -> float:
    """``P`` of the slab ``S_{a,b}`` at a boundary point ``y`` by time integration.

    Side faces: ``int gamma(t; x_1, y_1) h_{n-2}(t) g_a(t; x_n, y_n) dt``.
    Bottom: ``int j(t; x_1, y_1) h_{n-2}(t) q_a(t; x_n) dt`` with ``q_a`` the
    hitting density of ``a``.
    """
    a1, xp, yp = _unit_slab(a, b, x, y)
    n = xp.size
    if not (0 < xp[0] < 1 and xp[-1] > a1):
        raise GeometryError("x must lie inside the slab")
    _min_separation(xp, yp)
    nu = -mu
    if yp[0] in (0.0, 1.0) and yp[-1] > a1:
        end = int(yp[0])

        def f(t):
            g = (killed_density_numeric(nu, a1, t, xp[-1], yp[-1]) if a1 > 0
                 else transition_density(nu, t, xp[-1], yp[-1]))
            return gamma_exit_density(t, xp[0], end) * _gauss_middle(t, xp, yp) * g
    elif abs(yp[-1] - a1) <= 1e-12 * max(a1, 1.0) and 0 < yp[0] < 1:
        if a1 == 0:
            raise ValueError("the bottom of a strip carries no Poisson mass at finite x_n")

        def f(t):
            return j_density(t, xp[0], yp[0]) * _gauss_middle(t, xp, yp) * hitting_density_numeric(nu, a1, xp[-1], t)
    else:
        raise GeometryError("y must lie on a face of the slab")
    return _time_integral(f, epsrel) / b ** (n - 1)


def halfspace_green_quadrature(mu: float, a: float, x, y, *, epsrel: float = 1e-7) -> float:
    """``G`` of ``D_a`` by time integration without the interval factor."""
    xp = np.asarray(as_point(x), dtype=float)
    yp = np.asarray(as_point(y), dtype=float)
    if not (xp[-1] > a and yp[-1] > a):
        raise GeometryError("points must lie above the horocycle")
    _min_separation(xp, yp)
    d2 = float(np.sum((xp[:-1] - yp[:-1]) ** 2))
    k = xp.size - 1

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        ok = t > T_LOWER
        if ok.any():
            tt = t[ok]
            out[ok] = (np.exp(-d2 / (2 * tt)) / (2 * math.pi * tt) ** (k / 2)
                       * killed_density_numeric(-mu, a, tt, xp[-1], yp[-1]))
        return out

    res = integrate(f, 0.0, math.inf, epsabs=1e-300, epsrel=epsrel, points=[0.01, 0.1, 1.0, 10.0], limit=4000)
    return float(res.value) / yp[-1] ** 2


def green_quadrature(dom: DomainSpec, mu: float, x, y, **kw) -> float:
    """Dispatch to the slab, strip or half-space Green quadrature."""
    if dom.kind is DomainKind.HALFSPACE:
        return halfspace_green_quadrature(mu, dom.a, x, y, **kw)
    return slab_green_quadrature(mu, dom.a, x, y, dom.b, **kw)


__all__ = [
    "KernelEstimate", "BoundaryRegion", "ball_volume", "estimate_green", "estimate_green_many",
    "estimate_poisson", "estimate_poisson_many", "green_from_batch", "poisson_from_batch", "j_density",
    "gamma_exit_density", "slab_green_quadrature", "slab_poisson_quadrature", "halfspace_green_quadrature",
    "green_quadrature",
]
