"""Bessel processes with negative index: free, killed and hitting-time densities.

Conventions: ``nu < 0`` is the index, ``m = |nu|`` the order of the Bessel
functions, ``a > 0`` the absorbing level.  Densities are with respect to
Lebesgue measure in the space (``y``) or time (``t``) variable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .inversion import gaver_stehfest, talbot
from .quadrature import ConvergenceError, gk_integrate
from .specfun import ive_safe, kve_safe, theta_hw_scaled

UNTRUSTED_RTOL = 1e-5
HUNT_RTOL = 1e-8        # Talbot values carry ~1e-8 relative noise after the convolution
HUNT_ABS_FLOOR = 1e-13
_EXP_LIMIT = 700.0


def _check_index(nu):
    if not nu < 0:
        raise ValueError(f"Bessel index must be negative, got {nu}")


def _positive(name, v):
    if np.any(np.asarray(v) <= 0):
        raise ValueError(f"{name} must be positive")


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def transition_density(nu: float, t, x, y):
    """``g(t, x, y) = (y/t) (y/x)^nu exp(-(x^2+y^2)/(2t)) I_|nu|(xy/t)``."""
    _check_index(nu)
    _positive("t", t)
    _positive("x", x)
    _positive("y", y)
    t, x, y = (np.asarray(v, dtype=float) for v in (t, x, y))
    z = x * y / t
    g = (y / t) * (y / x) ** nu * np.exp(-(x - y) ** 2 / (2 * t)) * ive_safe(-nu, z)
    return _out(g)


def killed_density_expression(nu: float, a: float, t, x, y):
    """Comparable form of the density killed on leaving ``(a, inf)``.

    ``(x-a)(y-a)/(t+(x-a)(y-a)) * (x^2/(t+xy))^(|nu|-1/2) t^(-1/2) exp(-(x-y)^2/(2t))``.
    """
    _check_index(nu)
    t, x, y = (np.asarray(v, dtype=float) for v in (t, x, y))
    if np.any(x < a) or np.any(y < a):
        raise ValueError("killed density needs x, y >= a")
    _positive("t", t)
    p = (x - a) * (y - a)
    expr = p / (t + p) * (x * x / (t + x * y)) ** (-nu - 0.5) / np.sqrt(t) * np.exp(-(x - y) ** 2 / (2 * t))
    return _out(expr)


def killed_density_bound(nu: float, a: float, t, x, y, c0: float = 1.0):
    """Two-sided bound ``(expr / c0, expr * c0)`` for the killed density."""
    if not c0 >= 1:
        raise ValueError("comparability constant must be >= 1")
    e = killed_density_expression(nu, a, t, x, y)
    return e / c0, e * c0


def hitting_density_bound(nu: float, a: float, t, x):
    """Comparable form of the density of the first hitting time of ``a``.

    Uses ``exp(-(x-a)^2/(2t))`` in the Gaussian factor.
    """
    _check_index(nu)
    t, x = np.asarray(t, dtype=float), np.asarray(x, dtype=float)
    if np.any(x <= a) or not a > 0:
        raise ValueError("hitting density needs x > a > 0")
    _positive("t", t)
    m = -nu
    val = ((x - a) / t ** 1.5) * x ** (2 * m - 1) / (t + a * x) ** (m - 0.5) * np.exp(-(x - a) ** 2 / (2 * t))
    return _out(val)


def hitting_laplace(nu: float, a: float, x: float):
    """``lam -> E_x exp(-lam T_a) = (x/a)^(-nu) K_|nu|(x sqrt(2 lam)) / K_|nu|(a sqrt(2 lam))``.

    Returned callable accepts complex ndarrays.
    """
    m = -nu
    scale = (x / a) ** m

    def F(lam):
        z = np.sqrt(2.0 * np.asarray(lam, dtype=complex))
        return scale * kve_safe(m, x * z) / kve_safe(m, a * z) * np.exp(-(x - a) * z)

    return F


def _hitting_laplace_mp(nu, a, x):
    m = mpmath.mpf(-nu)
    A, X = mpmath.mpf(a), mpmath.mpf(x)

    def F(lam):
        z = mpmath.sqrt(2 * lam)
        return (X / A) ** m * mpmath.besselk(m, X * z) / mpmath.besselk(m, A * z)

    return F


def hitting_density_numeric(nu: float, a: float, x: float, t):
    """Density of ``T_a`` under ``P_x`` by fixed-Talbot inversion.

    The error is absolute, around ``1e-11`` of the density's peak, so values
    deep in the small-``t`` tail are inversion noise.
    """
    _check_index(nu)
    if not x > a > 0:
        raise ValueError("hitting density needs x > a > 0")
    _positive("t", t)
    return talbot(hitting_laplace(nu, a, x), t)


@dataclass(frozen=True)
class InversionDiagnostics:
    t: float
    talbot: float
    stehfest: float
    rel_diff: float
    trusted: bool


def hitting_density_check(nu: float, a: float, x: float, t: float, abs_floor: float = 1e-12) -> InversionDiagnostics:
    """Cross-check the Talbot value against Gaver-Stehfest at one time."""
    q_t = hitting_density_numeric(nu, a, x, t)
    q_s = gaver_stehfest(_hitting_laplace_mp(nu, a, x), t)
    rel = abs(q_t - q_s) / max(abs(q_s), abs_floor)
    return InversionDiagnostics(t, q_t, q_s, rel, rel <= UNTRUSTED_RTOL or abs(q_t - q_s) <= abs_floor)


def killed_density_numeric(nu: float, a: float, t, x: float, y: float, *, epsrel: float = 1e-8):
    """Density of the process killed on leaving ``(a, inf)``, by Hunt's formula.

    ``g_a(t;x,y) = g(t;x,y) - int_0^t q_a(s;x) g(t-s;a,y) ds`` with the
    convolution integrated adaptively in ``s = t sigma^2``.  The result is
    clipped to ``[0, g(t; x, y)]``, which removes cancellation noise where
    both terms are tiny.
    """
    _check_index(nu)
    if not (x > a > 0 and y > a):
        raise ValueError("killed density needs x, y > a > 0")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    _positive("t", t_arr)
    free = np.atleast_1d(transition_density(nu, t_arr, x, y))
    out = np.empty_like(t_arr)
    F = hitting_laplace(nu, a, x)
    s_min = (x - a) ** 2 / (2 * _EXP_LIMIT)   # below, q_a(s) underflows
    for i, ti in enumerate(t_arr):
        if free[i] == 0.0:
            out[i] = 0.0
            continue

        def conv(sig, ti=ti):
            s = ti * sig * sig
            ok = (s > s_min) & (s < ti)
            v = np.zeros_like(sig)
            if np.any(ok):
                q = talbot(F, s[ok])
                v[ok] = q * transition_density(nu, ti - s[ok], a, y) * 2.0 * ti * sig[ok]
            return v
        res = gk_integrate(conv, 0.0, 1.0, epsabs=max(HUNT_RTOL * free[i], HUNT_ABS_FLOOR),
                           epsrel=epsrel, limit=2000, initial=4)
        out[i] = min(max(free[i] - float(res.value), 0.0), free[i])
    return float(out[0]) if np.ndim(t) == 0 else out


def joint_density(nu: float, x: float, t: float, u, v):
    """Joint density of ``(A_x^(nu)(t), x exp(B_t + nu t))`` at ``(u, v)``.

    ``(v/x)^nu exp(-nu^2 t/2) (uv)^-1 exp(-(x^2+v^2)/(2u)) theta_{xv/u}(t)``,
    vectorized over ``u`` for scalar ``v`` (or over ``v`` for scalar ``u``).
    """
    _positive("x", x)
    _positive("u", u)
    _positive("v", v)
    u_arr, v_arr = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    u_arr, v_arr = np.atleast_1d(u_arr).ravel(), np.atleast_1d(v_arr).ravel()
    r = x * v_arr / u_arr
    th = theta_hw_scaled(r, t)  # exp(r) theta_r(t)
    # exp(-(x^2+v^2)/(2u)) theta = exp(-(x-v)^2/(2u)) exp(-2r) * th
    val = ((v_arr / x) ** nu * math.exp(-nu * nu * t / 2) / (u_arr * v_arr)
           * np.exp(-(x - v_arr) ** 2 / (2 * u_arr) - 2 * r) * th)
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return float(val[0])
    return val.reshape(np.broadcast(np.asarray(u), np.asarray(v)).shape)


__all__ = [
    "ConvergenceError", "InversionDiagnostics", "transition_density", "killed_density_expression",
    "killed_density_bound", "hitting_density_bound", "hitting_laplace", "hitting_density_numeric",
    "hitting_density_check", "killed_density_numeric", "joint_density",
]
