"""Numerical checks of the drift reduction, the modified Dirichlet problem and scaling.

The reduction trades the discount ``lam`` for a larger index
``eta = sqrt(mu^2 + 2 lam)`` at the cost of a power of ``x_n / y_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import DomainSpec, GeometryError, as_point, scale_domain
from .kernels import BoundaryRegion, KernelEstimate, estimate_green, estimate_poisson
from .simulate import SimConfig, simulate_exits


def eta(mu: float, lam: float) -> float:
    """``sqrt(mu^2 + 2 lam)``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not lam >= 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    return math.sqrt(mu * mu + 2.0 * lam)


@dataclass(frozen=True)
class DriftPair:
    mu: float
    lam: float = 0.0

    def __post_init__(self):
        eta(self.mu, self.lam)

    @property
    def eta(self) -> float:
        return eta(self.mu, self.lam)

    @property
    def exponent(self) -> float:
        """``mu - eta`` (non-positive)."""
        return self.mu - self.eta


def _last(p) -> float:
    return float(np.asarray(as_point(p), dtype=float)[-1]) if not np.isscalar(p) else float(p)


def reduction_factor(mu: float, lam: float, x, y) -> float:
    """``(x_n / y_n)^{mu - eta}``; ``x``, ``y`` may be points or last coordinates."""
    xn, yn = _last(x), _last(y)
    if not (xn > 0 and yn > 0):
        raise GeometryError("reduction needs x_n > 0 and y_n > 0")
    return (xn / yn) ** (mu - eta(mu, lam))


def reduce_green(mu: float, lam: float, x, y, G_eta: float) -> float:
    """``G^{(mu), lam}(x, y)`` from the undiscounted Green function of index ``eta``."""
    return reduction_factor(mu, lam, x, y) * G_eta


def reduce_poisson(mu: float, lam: float, x, y, P_eta: float, dom: DomainSpec | None = None) -> float:
    """``P^{(mu), lam}(x, y)`` from the undiscounted Poisson kernel of index ``eta``.

    With ``lam > 0`` the discounted kernel degenerates on ``y_n = 0`` (the
    bottom of a strip, reached only at ``tau = inf``), which is rejected.
    """
    if lam > 0 and not _last(y) > 0:
        raise GeometryError("discounted Poisson kernel is degenerate on x_n = 0")
    return reduction_factor(mu, lam, x, y) * P_eta


def reduction_weight(mu: float, lam: float, x) -> Callable[[np.ndarray], np.ndarray]:
    """Path weight ``(x_n / Z_n)^{mu - eta}`` for running the reduction inside an estimator."""
    xn = _last(x)
    k = mu - eta(mu, lam)
    return lambda pts: (xn / np.asarray(pts)[:, -1]) ** k


# --- generator -------------------------------------------------------------------------------

def apply_generator(mu: float, f: Callable[[np.ndarray], float], x, h: float | None = None,
                    dom: DomainSpec | None = None) -> float:
    """Central-difference value of ``(1/2) Delta_mu f`` at ``x``.

    ``Delta_mu = x_n^2 sum d^2/dx_k^2 - (2 mu - 1) x_n d/dx_n``; the stencil
    has ``2n + 1`` points and step ``h`` (default ``1e-3 x_n``).
    """
    xp = np.asarray(as_point(x), dtype=float)
    n = xp.size
    xn = xp[-1]
    h = 1e-3 * xn if h is None else float(h)
    if not h > 0:
        raise ValueError("step must be positive")
    if xn - h <= 0 or (dom is not None and xn - h <= dom.a):
        raise GeometryError("finite-difference stencil leaves the domain")
    if dom is not None and dom.bounded_sides and (xp[0] - h <= 0 or xp[0] + h >= dom.b):
        raise GeometryError("finite-difference stencil leaves the domain")
    f0 = float(f(xp))
    lap = 0.0
    dn = 0.0
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fp, fm = float(f(xp + e)), float(f(xp - e))
        lap += (fp - 2.0 * f0 + fm) / (h * h)
        if k == n - 1:
            dn = (fp - fm) / (2.0 * h)
    return 0.5 * (xn * xn * lap - (2.0 * mu - 1.0) * xn * dn)


def power_eigenfunction(mu: float, lam: float) -> Callable[[np.ndarray], float]:
    """``x -> x_n^{mu + eta}``, which satisfies ``(1/2) Delta_mu f = lam f``."""
    s = mu + eta(mu, lam)
    return lambda p: float(np.asarray(p)[-1]) ** s


def eigen_residual(mu: float, lam: float, x, h: float) -> float:
    """``|(1/2) Delta_mu f - lam f|`` at ``x`` for the power eigenfunction, by finite differences."""
    f = power_eigenfunction(mu, lam)
    return abs(apply_generator(mu, f, x, h) - lam * f(np.asarray(as_point(x), dtype=float)))


def conjugate_residual(mu: float, lam: float, x, h: float, f: Callable | None = None) -> float:
    """``|(1/2) Delta_eta (x_n^{eta - mu} f)|`` for a ``lam``-eigenfunction ``f`` of ``(1/2) Delta_mu``."""
    e = eta(mu, lam)
    f = f or power_eigenfunction(mu, lam)
    g = lambda p: float(np.asarray(p)[-1]) ** (e - mu) * f(p)
    return abs(apply_generator(e, g, x, h))


# --- modified Dirichlet problem --------------------------------------------------------------

@dataclass(frozen=True)
class DirichletResult:
    value: float            # u(x)
    stderr: float
    harmonic: float         # x_n^{eta - mu} u(x) = E f(X^eta(tau))
    harmonic_stderr: float
    eta: float
    n_paths: int
    flags: tuple = ()


def dirichlet_solve(dom: DomainSpec, mu: float, lam: float, f: Callable, x, cfg: SimConfig, *,
                    process: str = "hbm") -> DirichletResult:
    """``u(x) = x_n^{mu - eta} E^x f(X^{(eta)}(tau))`` by Monte Carlo.

    ``f`` maps an ``(N, n)`` array of exit positions and an ``(N,)`` array of
    face codes to ``N`` boundary values.  Paths still inside at the horizon
    contribute zero and set the ``horizon`` flag.
    """
    e = eta(mu, lam)
    xp = np.asarray(as_point(x), dtype=float)
    batch = simulate_exits(process, e, xp, dom, cfg)
    vals = np.zeros(batch.n_paths)
    ex = batch.exited
    if ex.any():
        vals[ex] = np.asarray(f(batch.position[ex], batch.face[ex]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("boundary function returned non-finite values")
    m = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    k = xp[-1] ** (mu - e)
    flags = () if ex.all() else ("horizon",)
    return DirichletResult(k * m, k * se, m, se, e, batch.n_paths, flags)


# --- scaling ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingRow:
    """One comparison ``c^p K_{cU}(cx, c.) `` vs ``K_U(x, .)`` with ``p = n`` (Green) or ``n - 1`` (Poisson)."""

    kind: str
    c: float
    scaled: float
    scaled_stderr: float
    base: float
    base_stderr: float
    z: float


def scaling_verify(dom: DomainSpec, mu: float, c: float, x, y=None, cfg: SimConfig | None = None, *,
                   lam: float = 0.0, region: BoundaryRegion | None = None, eps: float | None = None,
                   process: str = "hbm") -> list:
    """z-scores for the Green (point ``y``) and/or Poisson (``region``) scaling identities.

    The scaled run uses an independent seed unless ``c == 1``.  With a
    discount the scaled domain must use ``lam`` unchanged, since the
    hyperbolic motion is invariant under dilations without a time change.
    """
    if not c > 0:
        raise ValueError("scale factor must be positive")
    if y is None and region is None:
        raise ValueError("need a point y or a boundary region")
    cfg = cfg or SimConfig()
    xp = np.asarray(as_point(x), dtype=float)
    n = xp.size
    cdom = scale_domain(dom, c)
    ccfg = cfg if c == 1 else cfg.with_(seed=cfg.seed + 7919)
    rows = []
    if y is not None:
        yp = np.asarray(as_point(y), dtype=float)
        e = eps or cfg.eps_ball or 0.02 * float(np.linalg.norm(xp - yp))
        base = estimate_green(dom, mu, lam, xp, yp, cfg.with_(eps_ball=e), process=process)
        sc = estimate_green(cdom, mu, lam, c * xp, c * yp, ccfg.with_(eps_ball=c * e), process=process)
        rows.append(_row("green", c, sc, base, c ** n))
    if region is not None:
        base = estimate_poisson(dom, mu, lam, xp, region, cfg, process=process)
        sc = estimate_poisson(cdom, mu, lam, c * xp, region.scaled(c), ccfg, process=process)
        rows.append(_row("poisson", c, sc, base, c ** (n - 1)))
    return rows


def _row(kind, c, sc: KernelEstimate, base: KernelEstimate, factor: float) -> ScalingRow:
    v, s = factor * sc.value, factor * sc.stderr
    z = 0.0 if v == base.value else (v - base.value) / math.hypot(s, base.stderr)
    return ScalingRow(kind, c, v, s, base.value, base.stderr, z)


__all__ = [
    "eta", "DriftPair", "reduction_factor", "reduce_green", "reduce_poisson", "reduction_weight",
    "apply_generator", "power_eigenfunction", "eigen_residual", "conjugate_residual", "DirichletResult",
    "dirichlet_solve", "ScalingRow", "scaling_verify",
]
