"""Closed-form two-sided kernel estimates and the integral-comparison certifier.

Every evaluator returns the comparable expression itself; the unknown
comparability constant is what the ratio reports measure.  ``|x - y|`` is the
Euclidean norm and ``cosh rho`` is computed as ``1 + |x - y|^2 / (2 x_n y_n)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import BoundaryFace, GeometryError
from .output import dumps, fmt
from .quadrature import ConvergenceError, gk_integrate
from .specfun import macdonald_integral

ON_FACE_RTOL = 1e-12


# --- helpers ---------------------------------------------------------------------------------

def _arr(x, n=None):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise GeometryError("points need n >= 2 coordinates")
    if n is not None and v.size != n:
        raise GeometryError(f"expected {n} coordinates, got {v.size}")
    return v


def _cosh(x, y) -> float:
    p = x[-1] * y[-1]
    d2 = float(np.sum((x - y) ** 2))
    if p <= 0:
        return math.inf
    return 1.0 + d2 / (2.0 * p)


def _down(x, a):
    v = x.copy()
    v[-1] -= a
    return v


def _delta(u, w):
    return min(w, u - w)


def _check_params(mu, n):
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")


def _in_slab(x, a, b, name="x"):
    if not (0 < x[0] < b and x[-1] > a):
        raise GeometryError(f"{name} = {tuple(x)} is not inside S_(a={a:g}, b={b:g})")


def _on_face(y, a, b, face=None) -> BoundaryFace:
    tol = ON_FACE_RTOL * max(1.0, b if math.isfinite(b) else 1.0)
    found = None
    if math.isfinite(b) and abs(y[0]) <= tol and y[-1] > a:
        found = BoundaryFace.SIDE_LOW
    elif math.isfinite(b) and abs(y[0] - b) <= tol and y[-1] > a:
        found = BoundaryFace.SIDE_HIGH
    elif abs(y[-1] - a) <= ON_FACE_RTOL * max(1.0, a) and (not math.isfinite(b) or 0 < y[0] < b):
        found = BoundaryFace.BOTTOM
    if found is None:
        raise GeometryError(f"y = {tuple(y)} is not on the boundary")
    if face is not None and BoundaryFace(face) is not found:
        raise GeometryError(f"y = {tuple(y)} is on the {found.value} face, not {BoundaryFace(face).value}")
    return found


# --- slab ------------------------------------------------------------------------------------

def green_bound_slab(mu: float, n: int, a: float, b: float, x, y) -> float:
    """Two-sided estimate of the slab Green function; ``+inf`` on the diagonal."""
    _check_params(mu, n)
    x, y = _arr(x, n), _arr(y, n)
    _in_slab(x, a, b)
    _in_slab(y, a, b, "y")
    r = float(np.linalg.norm(x - y))
    if r == 0:
        return math.inf
    s = r / b
    ch = _cosh(x, y)
    ch_a = _cosh(_down(x, a), _down(y, a))
    dd = _delta(b, x[0]) * _delta(b, y[0])
    return (x[-1] ** (mu - 0.5) / y[-1] ** (mu + 1.5) * math.exp(-math.pi * s) / r ** n
            * min(dd, r * r) / (s + ch_a) * (1 + s) ** (n / 2 + mu + 1.5) / (s + ch) ** (mu - 0.5))


def _poisson_common(mu, n, b, x, y, r):
    s = r / b
    ch = _cosh(x, y)
    return (x[-1] / y[-1]) ** (mu - 0.5) * math.exp(-math.pi * s) * (1 + s) ** (mu + (n + 3) / 2) / (
        r ** n * (s + ch) ** (mu - 0.5))


def poisson_bound_slab(mu: float, n: int, a: float, b: float, x, y, face=None) -> float:
    """Two-sided estimate of the slab Poisson kernel (side faces and bottom)."""
    _check_params(mu, n)
    x, y = _arr(x, n), _arr(y, n)
    _in_slab(x, a, b)
    f = _on_face(y, a, b, face)
    r = float(np.linalg.norm(x - y))
    common = _poisson_common(mu, n, b, x, y, r)
    if f is BoundaryFace.BOTTOM:
        dd = _delta(b, x[0]) * _delta(b, y[0])
        return common * (x[-1] - y[-1]) * min(dd, r * r) / (r * r)
    ch_a = _cosh(_down(x, a), _down(y, a))
    return common * _delta(b, x[0]) / (r / b + ch_a)


# --- strip -----------------------------------------------------------------------------------

def green_bound_strip(mu: float, n: int, b: float, x, y) -> float:
    """Strip (``a = 0``) Green estimate; the ``cosh rho`` factor carries exponent ``mu + 1/2``."""
    _check_params(mu, n)
    x, y = _arr(x, n), _arr(y, n)
    _in_slab(x, 0.0, b)
    _in_slab(y, 0.0, b, "y")
    r = float(np.linalg.norm(x - y))
    if r == 0:
        return math.inf
    s = r / b
    dd = _delta(b, x[0]) * _delta(b, y[0])
    return (x[-1] ** (mu - 0.5) / y[-1] ** (mu + 1.5) * math.exp(-math.pi * s) / r ** n * min(dd, r * r)
            * (1 + s) ** (n / 2 + mu + 1.5) / (s + _cosh(x, y)) ** (mu + 0.5))


def poisson_bound_strip(mu: float, n: int, b: float, x, y, face=None, *, verbatim: bool = False) -> float:
    """Strip Poisson estimate.

    On the bottom (``y_n = 0``) the displayed form is
    ``x_n^{2mu} e^{-pi|x-y|/b} (delta delta ^ |x-y|^2) (1+|x-y|/b)^{mu+(n+3)/2} / |x-y|^{2mu+n+1}``.
    By default it is multiplied by ``2^{mu-1/2}``, which makes it the exact
    ``a -> 0`` limit of the slab estimate; ``verbatim=True`` drops the factor.
    """
    _check_params(mu, n)
    x, y = _arr(x, n), _arr(y, n)
    _in_slab(x, 0.0, b)
    tol = ON_FACE_RTOL * b
    if abs(y[-1]) <= ON_FACE_RTOL and 0 < y[0] < b:
        found = BoundaryFace.BOTTOM
    elif (abs(y[0]) <= tol or abs(y[0] - b) <= tol) and y[-1] > 0:
        found = BoundaryFace.SIDE_LOW if abs(y[0]) <= tol else BoundaryFace.SIDE_HIGH
    else:
        raise GeometryError(f"y = {tuple(y)} is not on the strip boundary")
    if face is not None and BoundaryFace(face) is not found:
        raise GeometryError(f"y is on the {found.value} face, not {BoundaryFace(face).value}")
    r = float(np.linalg.norm(x - y))
    s = r / b
    if found is BoundaryFace.BOTTOM:
        dd = _delta(b, x[0]) * _delta(b, y[0])
        val = (x[-1] ** (2 * mu) * math.exp(-math.pi * s) * min(dd, r * r) * (1 + s) ** (mu + (n + 3) / 2)
               / r ** (2 * mu + n + 1))
        return val if verbatim else val * 2.0 ** (mu - 0.5)
    return ((x[-1] / y[-1]) ** (mu - 0.5) * _delta(b, x[0]) * math.exp(-math.pi * s)
            * (1 + s) ** (mu + (n + 3) / 2) / (r ** n * (s + _cosh(x, y)) ** (mu + 0.5)))


# --- half-space ------------------------------------------------------------------------------

def green_bound_halfspace(mu: float, n: int, a: float, x, y) -> float:
    """``x_n^{mu-1/2} y_n^{-mu-3/2} |x-y|^{2-n} / (cosh rho_a (cosh rho)^{mu-1/2})``."""
    _check_params(mu, n)
    x, y = _arr(x, n), _arr(y, n)
    if not (x[-1] > a and y[-1] > a):
        raise GeometryError("points must lie above the horocycle")
    r = float(np.linalg.norm(x - y))
    if r == 0 and n >= 3:
        return math.inf
    return (x[-1] ** (mu - 0.5) / y[-1] ** (mu + 1.5) * r ** (2 - n)
            / (_cosh(_down(x, a), _down(y, a)) * _cosh(x, y) ** (mu - 0.5)))


def poisson_bound_halfspace(mu: float, n: int, a: float, x, y) -> float:
    """``(x_n/y_n)^{mu-1/2} (x_n - y_n) / (|x-y|^n (cosh rho)^{mu-1/2})`` for ``y_n = a``."""
    _check_params(mu, n)
    x, y = _arr(x, n), _arr(y, n)
    if not x[-1] > a:
        raise GeometryError("x must lie above the horocycle")
    if abs(y[-1] - a) > ON_FACE_RTOL * max(1.0, a):
        raise GeometryError("y must lie on the horocycle")
    r = float(np.linalg.norm(x - y))
    return (x[-1] / y[-1]) ** (mu - 0.5) * (x[-1] - y[-1]) / (r ** n * _cosh(x, y) ** (mu - 0.5))


# --- interval factor -------------------------------------------------------------------------

def _unit_pair(x, y, b):
    x, y = _arr(x) / b, _arr(y) / b
    if not (0 < x[0] < 1 and 0 < y[0] < 1):
        raise GeometryError("first coordinates must lie in (0, b)")
    return x, y


def w_factor(x, y, b: float = 1.0) -> float:
    """The product of the two reciprocal quadratic factors built from ``x_1 y_1`` and ``(1-x_1)(1-y_1)``."""
    x, y = _unit_pair(x, y, b)
    r = float(np.linalg.norm(x - y))
    p = x[0] * y[0]
    q = (1 - x[0]) * (1 - y[0])
    return 1.0 / ((p + p * r + r * r) * (q + q * r + r * r))


def w_estimate(x, y, b: float = 1.0) -> float:
    """``(dd ^ |x-y|^2) / (dd |x-y|^2 (1 + |x-y|^2))`` with ``dd = delta(x_1) delta(y_1)``."""
    x, y = _unit_pair(x, y, b)
    r2 = float(np.sum((x - y) ** 2))
    dd = _delta(1.0, x[0]) * _delta(1.0, y[0])
    return min(dd, r2) / (dd * r2 * (1 + r2))


# --- reports ---------------------------------------------------------------------------------

@dataclass
class BoundRow:
    inputs: tuple
    measured: float
    bound: float
    ratio: float
    note: str = ""
    extra: tuple = ()


@dataclass
class BoundReport:
    """Ratios ``measured / bound`` over a sweep.

    Rows whose ``note`` is non-empty (e.g. ``skipped=diagonal``) are excluded
    from ``sup_ratio``/``inf_ratio``.  Sweeps that keep no rows store the
    extremes in ``meta["sup"]``/``meta["inf"]``.
    """

    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    refinement_delta: float = 0.0
    meta: dict = field(default_factory=dict)
    extra_columns: tuple = ()

    def add(self, inputs, measured: float, bound: float, note: str = ""):
        ratio = measured / bound if (not note and bound not in (0.0, math.inf)) else math.nan
        self.rows.append(BoundRow(tuple(inputs), float(measured), float(bound), float(ratio), note))

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows if not r.note], dtype=float)

    @property
    def sup_ratio(self) -> float:
        r = self.ratios
        return float(r.max()) if r.size else float(self.meta.get("sup", math.nan))

    @property
    def inf_ratio(self) -> float:
        r = self.ratios
        return float(r.min()) if r.size else float(self.meta.get("inf", math.nan))

    @property
    def finite(self) -> bool:
        lo, hi = self.inf_ratio, self.sup_ratio
        return bool(math.isfinite(lo) and math.isfinite(hi) and lo > 0)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "points": len(self.rows),
            "skipped": sum(1 for r in self.rows if r.note),
            "sup_ratio": self.sup_ratio,
            "inf_ratio": self.inf_ratio,
            "refinement_delta": self.refinement_delta,
            "finite": self.finite,
            "meta": self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.columns) + ["measured", "bound", "ratio"] + list(self.extra_columns) + ["note"])
        for r in self.rows:
            w.writerow([fmt(v) for v in r.inputs] + [fmt(r.measured), fmt(r.bound), fmt(r.ratio)]
                       + [fmt(v) for v in r.extra] + [r.note])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "", refinement_delta: float = 0.0) -> "BoundReport":
        rd = csv.reader(io.StringIO(text))
        header = next(rd)
        k = header.index("measured")
        extra = tuple(header[k + 3:-1])
        rep = cls(name, tuple(header[:k]), refinement_delta=refinement_delta, extra_columns=extra)
        for row in rd:
            rep.rows.append(BoundRow(tuple(_parse(v) for v in row[:k]), float(row[k]), float(row[k + 1]),
                                     float(row[k + 2]), row[-1], tuple(float(v) for v in row[k + 3:-1])))
        return rep

    def to_json(self) -> str:
        return dumps(self.summary())


def _parse(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


# --- integral comparison lemma ---------------------------------------------------------------

@dataclass(frozen=True)
class LemmaParams:
    """Parameters of the integral comparison: exponents ``alpha, beta, gamma_i``, shifts ``a_i``, and ``b``."""

    alpha: float
    beta: float
    gamma: tuple = ()
    a: tuple = ()
    b: float = 1.0

    def __post_init__(self):
        g, av = tuple(map(float, self.gamma)), tuple(map(float, self.a))
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "a", av)
        check_exponents(self.alpha, self.beta, g)
        if len(g) != len(av):
            raise ValueError("gamma and a must have the same length")
        if any(not v > 0 for v in av):
            raise ValueError("all a_i must be positive")
        if not self.b > 0:
            raise ValueError("b must be positive")


def check_exponents(alpha: float, beta: float, gamma: Sequence[float]):
    if not alpha >= 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not beta >= 0.5:
        raise ValueError(f"beta must be >= 1/2, got {beta}")
    neg = [g for g in gamma if g < 0]
    if len(neg) > 1:
        raise ValueError("at most one gamma_i may be negative")
    if neg and not neg[0] > -0.5:
        raise ValueError(f"a negative gamma_i must exceed -1/2, got {neg[0]}")


def _log_integrand(u, alpha, beta, gamma, a, b):
    """``log`` of ``e^{b pi} t f(t)`` at ``t = (b/pi) e^u``; the ``e^{-b pi}`` factor is removed."""
    t = (b / math.pi) * np.exp(u)
    out = alpha * np.log1p(t) - beta * np.log(t) - b * math.pi * (np.cosh(u) - 1.0)
    for g, ai in zip(gamma, a):
        out = out - g * np.log(ai + t)
    return out


def lemma_lhs(p: LemmaParams, *, epsrel: float = 1e-10) -> float:
    """``int_0^inf (1+t)^alpha t^{-beta-1} exp(-b^2/2t - pi^2 t/2) prod (a_i+t)^{-gamma_i} dt``.

    Adaptive Gauss-Kronrod in ``u`` with ``t = (b/pi) e^u``.
    """
    U = _u_span(p.alpha, p.beta, p.gamma, p.b)
    f = lambda u: np.exp(_log_integrand(u, p.alpha, p.beta, p.gamma, p.a, p.b))
    res = gk_integrate(f, -U, U, epsabs=0.0, epsrel=epsrel, initial=16, limit=20000)
    return float(res.value) * math.exp(-p.b * math.pi)


def lemma_rhs(p: LemmaParams) -> float:
    """``e^{-b pi} b^{-2 beta} (1 + b^{alpha+beta-1/2+sum gamma}) / prod (a_i + a_i b + b^2)^{gamma_i}``."""
    return math.exp(-p.b * math.pi) * _rhs_scaled(p.alpha, p.beta, np.array(p.gamma), np.array(p.a)[None, :], p.b)[0]


def _rhs_scaled(alpha, beta, gamma, A, b):
    """Right side times ``e^{b pi}`` for the rows of ``A`` (shape ``(m, k)``)."""
    s = float(np.sum(gamma))
    val = b ** (-2 * beta) * (1 + b ** (alpha + beta - 0.5 + s))
    if gamma.size:
        val = val / np.prod((A + A * b + b * b) ** gamma[None, :], axis=1)
    else:
        val = np.full(A.shape[0], val)
    return val


LOG_CUT = 60.0


def _u_span(alpha, beta, gamma, b) -> float:
    """``U`` with the integrand below ``e^{-LOG_CUT}`` of its value at ``u = 0`` for ``|u| > U``."""
    P = alpha + beta + float(np.sum(np.abs(gamma)))
    U = 1.0
    while b * math.pi * (math.cosh(U) - 1.0) - P * U < LOG_CUT:
        U *= 1.1
    return U


def lemma_step(b: float) -> float:
    return min(0.3, math.sqrt(2 * math.pi / (45 * b)))


def lemma_lhs_grid(alpha: float, beta: float, gamma, A, b: float, h: float | None = None) -> np.ndarray:
    """Left side times ``e^{b pi}`` for many ``a``-tuples at once (trapezoid rule in ``u``).

    ``A`` has shape ``(m, k)``.  The rule converges geometrically because
    the integrand is analytic in a strip and decays double-exponentially.
    """
    gamma = np.asarray(gamma, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if gamma.size == 0:
        A = np.zeros((A.shape[0], 0))
    U = _u_span(alpha, beta, gamma, b)
    h = h or lemma_step(b)
    m = int(math.ceil(U / h))
    u = np.arange(-m, m + 1) * h
    t = (b / math.pi) * np.exp(u)
    base = alpha * np.log1p(t) - beta * np.log(t) - b * math.pi * (np.cosh(u) - 1.0)
    logs = np.broadcast_to(base, (A.shape[0], u.size)).copy()
    for i, g in enumerate(gamma):
        logs -= g * np.log(A[:, i:i + 1] + t[None, :])
    return h * np.exp(logs).sum(axis=1)


def default_a_grid(k: int, points: int = 7, lo: float = 1e-3, hi: float = 1e3) -> np.ndarray:
    """All ``k``-tuples from ``logspace(lo, hi, points)`` (shape ``(points**k, k)``)."""
    g = np.geomspace(lo, hi, points)
    if k == 0:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*([g] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def default_b_grid(points: int = 25, lo: float = 1e-3, hi: float = 50.0) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def lemma_certify(alpha: float, beta: float, gamma, a_grid=None, b_grid=None, *, keep_rows: bool = False,
                  name: str | None = None) -> BoundReport:
    """Ratios left/right over an ``(a, b)`` sweep for one exponent cell.

    ``refinement_delta`` is the largest relative change of any ratio when the
    trapezoid step is halved.  For ``k = 0, alpha = 0`` the Macdonald
    closed form is compared as well (``meta["macdonald_max_rel"]``).
    """
    gamma = np.asarray(gamma, dtype=float)
    check_exponents(alpha, beta, gamma)
    k = gamma.size
    A = default_a_grid(k) if a_grid is None else np.atleast_2d(np.asarray(a_grid, dtype=float))
    if k == 0:
        A = np.zeros((1, 0))
    if A.shape[1] != k:
        raise ValueError("a-grid width must equal the number of gamma exponents")
    if np.any(A <= 0) and k:
        raise ValueError("a-grid entries must be positive")
    B = default_b_grid() if b_grid is None else np.asarray(b_grid, dtype=float)
    if B.size == 0 or A.shape[0] == 0:
        raise ValueError("empty sweep grid")
    if np.any(B <= 0):
        raise ValueError("b-grid entries must be positive")
    rep = BoundReport(name or f"lemma alpha={alpha:g} beta={beta:g} gamma={list(gamma)}",
                      tuple([f"a{i + 1}" for i in range(k)] + ["b"]),
                      extra_columns=("macdonald",) if k == 0 else ())
    ratios = []
    delta = 0.0
    mac = 0.0
    for b in B:
        h = lemma_step(float(b))
        lhs = lemma_lhs_grid(alpha, beta, gamma, A, float(b), h)
        lhs2 = lemma_lhs_grid(alpha, beta, gamma, A, float(b), h / 2)
        rhs = _rhs_scaled(alpha, beta, gamma, A, float(b))
        r, r2 = lhs / rhs, lhs2 / rhs
        delta = max(delta, float(np.max(np.abs(r2 / r - 1.0))))
        ratios.append(r2)
        if k == 0 and alpha == 0:
            exact = macdonald_integral(beta, float(b)) * math.exp(b * math.pi)
            mac = max(mac, abs(lhs2[0] / exact - 1.0))
        if keep_rows:
            extra = (macdonald_integral(beta, float(b)),) if k == 0 else ()
            for i in range(A.shape[0]):
                rep.rows.append(BoundRow(tuple(A[i]) + (float(b),), float(lhs2[i] * math.exp(-b * math.pi)),
                                         float(rhs[i] * math.exp(-b * math.pi)), float(r2[i]), extra=extra))
    allr = np.concatenate(ratios)
    rep.refinement_delta = delta
    rep.meta.update(alpha=alpha, beta=beta, gamma=list(map(float, gamma)), n_a=int(A.shape[0]), n_b=int(B.size),
                    sup=float(allr.max()), inf=float(allr.min()))
    if k == 0 and alpha == 0:
        rep.meta["macdonald_max_rel"] = mac
    return rep


__all__ = [
    "green_bound_slab", "poisson_bound_slab", "green_bound_strip", "poisson_bound_strip",
    "green_bound_halfspace", "poisson_bound_halfspace", "w_factor", "w_estimate", "BoundRow", "BoundReport",
    "LemmaParams", "lemma_lhs", "lemma_rhs", "lemma_lhs_grid", "lemma_certify", "lemma_step", "check_exponents",
    "default_a_grid", "default_b_grid", "ConvergenceError",
]
