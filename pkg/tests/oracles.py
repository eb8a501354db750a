"""Independent reference implementations used to freeze expected values.

Nothing here imports the package under test.  Each oracle follows a route
different from the production code: power series instead of library Bessel
calls, the method of images instead of Hunt's formula, eigenfunction series
instead of time integrals, direct mpmath quadrature instead of the
trapezoid certifier.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np


# --- modified Bessel functions ---------------------------------------------------------------

def bessel_i_series(nu: float, z: float, dps: int = 40) -> float:
    """``I_nu(z) = sum_k (z/2)^{2k+nu} / (k! Gamma(k+nu+1))`` summed in extended precision."""
    with mpmath.workdps(dps):
        z2 = mpmath.mpf(z) / 2
        term = z2 ** nu / mpmath.gamma(nu + 1)
        total = term
        k = 0
        while abs(term) > mpmath.mpf(10) ** (-dps + 5) * abs(total):
            k += 1
            term = term * z2 * z2 / (k * (k + nu))
            total += term
        return float(total)


def bessel_i_half(z: float) -> float:
    return math.sqrt(2 / (math.pi * z)) * math.sinh(z)


def bessel_k_half(z: float) -> float:
    return math.sqrt(math.pi / (2 * z)) * math.exp(-z)


def bessel_k_integral(nu: float, z: float) -> float:
    """``K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt``."""
    # the integrand is below exp(-z cosh T + |nu| T) < 1e-60 relative beyond T
    T = math.acosh(1 + 150 / z) + abs(nu)
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: mpmath.exp(-z * (mpmath.cosh(t) - 1)) * mpmath.cosh(nu * t),
                                 mpmath.linspace(0, T, 9)) * math.exp(-z))


# --- Brownian motion closed forms ------------------------------------------------------------

def bm_killed_at(a: float, t: float, x: float, y: float) -> float:
    """Density of Brownian motion killed on leaving ``(a, inf)`` (reflection principle)."""
    c = 1 / math.sqrt(2 * math.pi * t)
    return c * (math.exp(-(x - y) ** 2 / (2 * t)) - math.exp(-(x + y - 2 * a) ** 2 / (2 * t)))


def bm_hitting(a: float, t: float, x: float) -> float:
    """Density of the first hitting time of ``a < x`` for Brownian motion."""
    d = x - a
    return d / math.sqrt(2 * math.pi * t ** 3) * math.exp(-d * d / (2 * t))


def lognormal_density(v: float, x: float, t: float, nu: float) -> float:
    """Density of ``x exp(B_t + nu t)`` at ``v``."""
    m = math.log(x) + nu * t
    return math.exp(-(math.log(v) - m) ** 2 / (2 * t)) / (v * math.sqrt(2 * math.pi * t))


def gbm_clock_mean(mu: float, x: float, t: float) -> float:
    """``E int_0^t (x exp(B_s - mu s))^2 ds``."""
    k = 2 - 2 * mu
    if abs(k) < 1e-14:
        return x * x * t
    return x * x * math.expm1(k * t) / k


# --- Brownian motion on (0, 1) ---------------------------------------------------------------

def interval_density_images(t: float, x: float, y: float, m_max: int = 50) -> float:
    """Killed transition density on ``(0, 1)`` by summing images over ``|m| <= m_max``."""
    c = 1 / math.sqrt(2 * math.pi * t)
    return c * math.fsum(math.exp(-(y - x + 2 * m) ** 2 / (2 * t)) - math.exp(-(y + x + 2 * m) ** 2 / (2 * t))
                         for m in range(-m_max, m_max + 1))


def interval_density_spectral(t: float, x: float, y: float, terms: int = 400) -> float:
    k = np.arange(1, terms + 1)
    return float(2 * math.fsum(np.sin(k * math.pi * x) * np.sin(k * math.pi * y) * np.exp(-k * k * math.pi ** 2 * t / 2)))


def interval_exit_images(t: float, x: float, m_max: int = 50) -> float:
    """Density of exiting ``(0, 1)`` through 0 at time ``t`` by images."""
    return math.fsum((x + 2 * m) / math.sqrt(2 * math.pi * t ** 3) * math.exp(-(x + 2 * m) ** 2 / (2 * t))
                     for m in range(-m_max, m_max + 1))


# --- Green function of the slab by eigenfunction expansion -----------------------------------

def slab_green_spectral(mu: float, a: float, x, y, terms: int = 4000) -> float:
    """Green function of ``S_{a,1}`` for ``n = 2`` from the sine expansion in ``x_1``.

    Each sine mode reduces to the resolvent of the Bessel process of index
    ``-mu`` killed at ``a`` at rate ``k^2 pi^2 / 2``, written with ``I``/``K``
    of order ``mu``:

        G = (2 / y_n^2) sum_k sin(k pi x_1) sin(k pi y_1) r_k(x_n, y_n).
    """
    from scipy import special

    s = np.arange(1, terms + 1) * math.pi
    m = mu

    def free(u, v):
        lo, hi = min(u, v), max(u, v)
        return 2 * v * (v / u) ** (-m) * special.ive(m, s * lo) * special.kve(m, s * hi) * np.exp(s * (lo - hi))

    xn, yn = x[-1], y[-1]
    hit = (xn / a) ** m * special.kve(m, xn * s) / special.kve(m, a * s) * np.exp(-(xn - a) * s)
    r = free(xn, yn) - hit * free(a, yn)
    return float(2 / yn ** 2 * np.sum(np.sin(s * x[0]) * np.sin(s * y[0]) * r))


# --- integral comparison ---------------------------------------------------------------------

def lemma_integral_mp(alpha, beta, gamma, a, b, dps: int = 30) -> float:
    """``int_0^inf (1+t)^alpha t^{-beta-1} exp(-b^2/2t - pi^2 t/2) prod (a_i+t)^{-gamma_i} dt``."""
    with mpmath.workdps(dps):
        def f(t):
            v = (1 + t) ** alpha * t ** (-beta - 1) * mpmath.exp(-b * b / (2 * t) - mpmath.pi ** 2 * t / 2)
            for g, ai in zip(gamma, a):
                v *= (ai + t) ** (-g)
            return v
        c = b / math.pi
        return float(mpmath.quad(f, [0, c / 10, c, 10 * c, mpmath.inf]))


def macdonald_closed(beta: float, b: float) -> float:
    """``2 (pi/b)^beta K_beta(b pi)`` through the integral representation of ``K``."""
    return 2 * (math.pi / b) ** beta * bessel_k_integral(beta, b * math.pi)


def bessel32_hitting(a: float, t: float, x: float, dps: int = 50) -> float:
    """Hitting density of ``a < x`` for the Bessel process of index ``-3/2``.

    Its transform ``e^{-d s} (1 + x s) / (1 + a s)`` with ``s = sqrt(2 lam)``
    and ``d = x - a`` splits into ``(x/a) e^{-d s}`` plus a multiple of
    ``e^{-k sqrt(lam)} / (sqrt(lam) + h)``; both invert in closed form.
    """
    with mpmath.workdps(dps):
        a, t, x = mpmath.mpf(a), mpmath.mpf(t), mpmath.mpf(x)
        d = x - a
        first = d / mpmath.sqrt(2 * mpmath.pi * t ** 3) * mpmath.exp(-d * d / (2 * t))
        k = d * mpmath.sqrt(2)
        h = 1 / (a * mpmath.sqrt(2))
        second = (mpmath.exp(-k * k / (4 * t)) / mpmath.sqrt(mpmath.pi * t)
                  - h * mpmath.exp(h * k + h * h * t) * mpmath.erfc(k / (2 * mpmath.sqrt(t)) + h * mpmath.sqrt(t)))
        return float(x / a * first + (1 - x / a) * h * second)
