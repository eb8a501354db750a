"""Modified Bessel functions and the Hartman-Watson density.

``bessel_i`` and ``bessel_k`` are thin validated wrappers around
:mod:`scipy.special`.  ``theta_hw`` evaluates the density ``theta_r(t)``
characterised by

    int_0^inf exp(-lam t) theta_r(t) dt = I_{sqrt(2 lam)}(r)

through Yor's oscillatory integral

    theta_r(t) = r (2 pi^3 t)^(-1/2) exp(pi^2/(2t))
                 * int_0^inf exp(-xi^2/(2t)) exp(-r cosh xi) sinh(xi) sin(pi xi/t) dxi.

The prefactor ``exp(pi^2/(2t))`` cancels against the oscillatory integral,
so below ``T_DOUBLE`` the integral is evaluated in extended precision with
mpmath.
"""
from __future__ import annotations

import functools
import math

import mpmath
import numpy as np
from scipy import special

from .quadrature import ConvergenceError, gk_integrate, integrate

MAX_ORDER = 50.0
T_MIN, T_MAX = 0.05, 50.0
T_DOUBLE = 0.3          # below this the double-precision route loses > 5 digits
LAPLACE_R_MAX = 4.0
LAPLACE_LAM = (0.25, 20.0)


def _check_order(nu):
    if np.any(np.abs(nu) >= MAX_ORDER):
        raise ValueError(f"order |nu| must be < {MAX_ORDER:g}")


def bessel_i(nu, z):
    """``I_nu(z)`` for ``0 <= nu < 50`` and ``z > 0``."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(nu < 0):
        raise ValueError("bessel_i requires nu >= 0")
    _check_order(nu)
    if np.any(z <= 0):
        raise ValueError("bessel_i requires z > 0")
    out = special.iv(nu, z)
    return float(out) if out.ndim == 0 else out


def bessel_ie(nu, z):
    """Exponentially scaled ``I_nu(z) exp(-z)``; same domain as :func:`bessel_i`."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(nu < 0):
        raise ValueError("bessel_ie requires nu >= 0")
    _check_order(nu)
    if np.any(z <= 0):
        raise ValueError("bessel_ie requires z > 0")
    out = np.asarray(ive_safe(nu, z)) if nu.ndim == 0 else special.ive(nu, z)
    return float(out) if out.ndim == 0 else out


def bessel_k(nu, z):
    """Macdonald function ``K_nu(z)``, even in ``nu``; real ``z > 0``."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    _check_order(nu)
    if np.any(z <= 0):
        raise ValueError("bessel_k requires z > 0")
    out = special.kv(np.abs(nu), z)
    return float(out) if out.ndim == 0 else out


ASYMPTOTIC_SWITCH = 1e5   # scipy's scaled I and K return nan for |z| beyond ~1e9


def _hankel_sum(m: float, w, alternate: bool, terms: int = 12):
    """``sum_k (+-1)^k a_k(m) / w^k``, ``a_k(m) = prod_{j<=k} (4m^2 - (2j-1)^2) / (k! 8^k)``."""
    mu4 = 4.0 * m * m
    sign = -1.0 if alternate else 1.0
    term = np.ones_like(w)
    total = np.ones_like(w)
    for k in range(1, terms + 1):
        term = term * sign * (mu4 - (2 * k - 1) ** 2) / (k * 8.0 * w)
        total = total + term
    return total


def ive_safe(nu: float, z):
    """``I_nu(z) exp(-z)`` for real or complex ``z`` with ``Re z > 0``, stable for huge ``|z|``."""
    z = np.asarray(z)
    out = np.empty(z.shape, dtype=np.result_type(z.dtype, float))
    big = np.abs(z) > ASYMPTOTIC_SWITCH
    out[~big] = special.ive(nu, z[~big])
    if big.any():
        zb = z[big]
        out[big] = _hankel_sum(nu, zb, True) / np.sqrt(2 * np.pi * zb)
    return out if out.ndim else out[()]


def kve_safe(nu: float, z):
    """``K_nu(z) exp(z)`` for real or complex ``z`` with ``Re z > 0``, stable for huge ``|z|``."""
    z = np.asarray(z)
    out = np.empty(z.shape, dtype=np.result_type(z.dtype, float))
    big = np.abs(z) > ASYMPTOTIC_SWITCH
    out[~big] = special.kve(nu, z[~big])
    if big.any():
        zb = z[big]
        out[big] = np.sqrt(np.pi / (2 * zb)) * _hankel_sum(nu, zb, False)
    return out if out.ndim else out[()]


def _check_window(t):
    if not (T_MIN <= t <= T_MAX):
        raise ValueError(f"theta_hw supports t in [{T_MIN}, {T_MAX}], got {t}")


def _xi_max(r: float, t: float, log_floor: float) -> float:
    # integrand envelope exp(-xi^2/2t - r (cosh xi - 1) + xi) below exp(log_floor)
    x = 1.0
    while -x * x / (2 * t) - r * (math.cosh(x) - 1.0) + x > log_floor:
        x *= 1.25
    return x


def _oscillatory_double(r: np.ndarray, t: float) -> np.ndarray:
    """``int exp(-xi^2/2t - r(cosh xi - 1)) sinh xi sin(pi xi/t) dxi`` for an array of r."""
    xmax = _xi_max(float(r.min()), t, -45.0)

    def f(xi):
        xi = xi[:, None]
        return np.exp(-xi * xi / (2 * t) - r[None, :] * (np.cosh(xi) - 1.0)) * np.sinh(xi) * np.sin(np.pi * xi / t)

    pts = list(np.arange(t, xmax, t))[:400]
    res = gk_integrate(f, 0.0, xmax, epsabs=1e-15, epsrel=1e-12, points=pts)
    return np.asarray(res.value)


@functools.lru_cache(maxsize=4096)
def _theta_mp(r: float, t: float) -> float:
    dps = 18 + int(math.ceil(math.pi ** 2 / (2 * t) / math.log(10)))
    with mpmath.workdps(dps):
        R, T = mpmath.mpf(r), mpmath.mpf(t)
        pi = mpmath.pi

        def f(xi):
            return mpmath.exp(-xi * xi / (2 * T) - R * (mpmath.cosh(xi) - 1)) * mpmath.sinh(xi) * mpmath.sin(pi * xi / T)

        xmax = _xi_max(r, t, -(dps * math.log(10) + 10))
        pts = list(mpmath.linspace(0, xmax, max(2, int(xmax / t) + 2)))
        val, err = mpmath.quad(f, pts, error=True, method="gauss-legendre")
        if abs(val) <= 10 * err:
            return 0.0
        pref = R / mpmath.sqrt(2 * pi ** 3 * T) * mpmath.exp(pi ** 2 / (2 * T) - R)
        return max(float(pref * val), 0.0)


def theta_hw_scaled(r, t: float):
    """``exp(r) * theta_r(t)`` for an array of ``r > 0`` at one ``t``.

    The scaling keeps the value bounded when ``r`` is large; callers that
    multiply by ``exp(-(x^2 + v^2)/(2u))`` can absorb it exactly.
    """
    _check_window(t)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("theta_hw requires r > 0")
    if t >= T_DOUBLE:
        j = _oscillatory_double(r, t)
        out = r / math.sqrt(2 * math.pi ** 3 * t) * math.exp(math.pi ** 2 / (2 * t)) * j
        return np.maximum(out, 0.0)
    return np.array([_theta_mp(float(ri), float(t)) * math.exp(ri) for ri in r])


def theta_hw(r, t: float):
    """Hartman-Watson type density ``theta_r(t)`` for ``t`` in ``[0.05, 50]``."""
    scalar = np.ndim(r) == 0
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    _check_window(t)
    if np.any(r_arr <= 0):
        raise ValueError("theta_hw requires r > 0")
    if t < T_DOUBLE:
        out = np.array([_theta_mp(float(ri), float(t)) for ri in r_arr])
    else:
        out = theta_hw_scaled(r_arr, t) * np.exp(-r_arr)
    return float(out[0]) if scalar else out


def laplace_check(r: float, lam: float, *, tol: float = 1e-10) -> float:
    """Ratio of the numerical Laplace transform of ``theta_r`` to ``I_{sqrt(2 lam)}(r)``.

    The transform is integrated over the supported window ``[0.05, 50]``;
    outside it the integrand is below 1e-12 of the total for the supported
    ``r <= 4`` and ``0.25 <= lam <= 20``.
    """
    if not (0 < r <= LAPLACE_R_MAX):
        raise ValueError(f"laplace_check supports 0 < r <= {LAPLACE_R_MAX}")
    if not (LAPLACE_LAM[0] <= lam <= LAPLACE_LAM[1]):
        raise ValueError(f"laplace_check supports lam in {LAPLACE_LAM}")

    def f(ts):
        return np.array([math.exp(-lam * t) * theta_hw(r, float(t)) for t in ts])

    low = gk_integrate(f, T_MIN, T_DOUBLE, epsabs=1e-12, epsrel=tol, limit=200)
    high = gk_integrate(f, T_DOUBLE, T_MAX, epsabs=1e-13, epsrel=tol, points=[1.0, 2.0, 5.0, 10.0, 20.0])
    total = float(low.value) + float(high.value)
    ref = bessel_i(math.sqrt(2 * lam), r)
    return total / ref


def macdonald_integral(beta: float, b: float) -> float:
    """``int_0^inf t^(-beta-1) exp(-b^2/(2t) - pi^2 t/2) dt = 2 (pi/b)^beta K_beta(b pi)``."""
    return 2.0 * (math.pi / b) ** beta * bessel_k(beta, b * math.pi)


__all__ = [
    "ConvergenceError", "bessel_i", "bessel_ie", "bessel_k", "theta_hw", "theta_hw_scaled",
    "laplace_check", "macdonald_integral", "integrate", "ive_safe", "kve_safe",
]
