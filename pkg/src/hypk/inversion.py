"""Numerical inverse Laplace transforms.

``talbot`` is the fixed-Talbot contour method (Abate & Valko) vectorized over
``t``; ``gaver_stehfest`` runs in mpmath arithmetic and serves as an
independent cross-check.
"""
from __future__ import annotations

import functools
import math

import mpmath
import numpy as np

TALBOT_NODES = 32
STEHFEST_TERMS = 36


def talbot(F, t, M: int = TALBOT_NODES):
    """Invert ``F`` at times ``t > 0``.

    ``F`` must accept a complex ndarray of abscissae and return values of
    the same shape.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise ValueError("talbot inversion requires t > 0")
    tt = t_arr[:, None]
    theta = np.arange(1, M) * (math.pi / M)
    cot = 1.0 / np.tan(theta)
    r = 2.0 * M / (5.0 * tt)
    s = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    s0 = (2.0 * M / (5.0 * t_arr)).astype(complex)
    head = 0.5 * np.exp(s0.real * t_arr) * np.real(F(s0))
    body = np.real(np.exp(tt * s) * F(s) * (1.0 + 1j * sigma)).sum(axis=1)
    out = (r[:, 0] / M) * (head + body)
    return float(out[0]) if np.ndim(t) == 0 else out


@functools.lru_cache(maxsize=16)
def _stehfest_weights(N: int, dps: int):
    half = N // 2
    V = []
    for k in range(1, N + 1):
        acc = mpmath.mpf(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += (mpmath.mpf(j) ** half * mpmath.factorial(2 * j)
                    / (mpmath.factorial(half - j) * mpmath.factorial(j) * mpmath.factorial(j - 1)
                       * mpmath.factorial(k - j) * mpmath.factorial(2 * j - k)))
        V.append((-1) ** (k + half) * acc)
    return V


def gaver_stehfest(F_mp, t: float, N: int = STEHFEST_TERMS, dps: int | None = None) -> float:
    """Gaver-Stehfest inversion with ``F_mp`` evaluated in mpmath at ``2.2 N`` digits."""
    if N % 2:
        raise ValueError("Stehfest order must be even")
    if t <= 0:
        raise ValueError("t must be positive")
    with mpmath.workdps(dps or int(2.2 * N) + 10):
        V = _stehfest_weights(N, mpmath.mp.dps)
        ln2t = mpmath.log(2) / mpmath.mpf(t)
        total = mpmath.fsum(V[k - 1] * F_mp(k * ln2t) for k in range(1, N + 1))
        return float(ln2t * total)
