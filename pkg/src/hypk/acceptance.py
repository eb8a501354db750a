"""The acceptance suite: nine criteria shared by ``hypk validate-all`` and the test-suite.

Every criterion returns a :class:`CriterionResult` with its measured values
and the list of checks that failed.  All randomness derives from one master
seed, so two runs with the same seed produce identical results.
"""
from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import bessel, bounds, kernels, specfun, theory
from .geometry import BoundaryFace, DomainSpec
from .kernels import BoundaryRegion
from .output import atomic_write, dumps, fmt
from .quadrature import integrate
from .simulate import FACES, SimConfig, simulate_exits

Z_MAX = 3.0
KS_P_MIN = 0.01


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({len(self.failures)} failed checks: {'; '.join(self.failures[:3])})" if self.failures else ""
        return f"criterion {self.number} [{self.name}]: {status}{extra}"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured, "failures": list(self.failures)}


class _Checks:
    """Collects named checks; ``failures`` lists the ones that did not hold."""

    def __init__(self):
        self.failures = []

    def require(self, ok, label: str) -> bool:
        ok = bool(ok)
        if not ok:
            self.failures.append(label)
        return ok


@dataclass(frozen=True)
class Scale:
    """Path counts and grid sizes; ``quick`` shrinks every sweep."""

    quick: bool = False

    @property
    def reduction_paths(self) -> int:
        return 10_000 if self.quick else 100_000

    @property
    def exit_law_paths(self) -> int:
        return 4_000 if self.quick else 20_000

    @property
    def certify_paths(self) -> int:          # N; the drift check uses 2N
        return 2_000 if self.quick else 10_000

    @property
    def scaling_paths(self) -> int:
        return 5_000 if self.quick else 20_000

    @property
    def dirichlet_paths(self) -> int:
        return 2_000 if self.quick else 10_000


def _seed(master: int, criterion: int, k: int = 0) -> int:
    return int(np.random.SeedSequence([master, criterion, k]).generate_state(1, np.uint64)[0])


# --- 1. integral comparison lemma ------------------------------------------------------------

LEMMA_ALPHAS = (0.0, 1.0, 2.5)
LEMMA_BETAS = (0.5, 1.0, 2.0)
LEMMA_GAMMA_MUS = (0.6, 1.0, 2.0)
NEGATIVE_GAMMA = (-0.4, 1.0, 1.0, 0.5)


def lemma_cells():
    gammas = [(1.0, 1.0, 1.0, m - 0.5) for m in LEMMA_GAMMA_MUS] + [NEGATIVE_GAMMA]
    return [(al, be, g) for al in LEMMA_ALPHAS for be in LEMMA_BETAS for g in gammas]


def criterion_lemma(master: int, scale: Scale) -> CriterionResult:
    chk = _Checks()
    a_pts = 3 if scale.quick else 7
    b_grid = bounds.default_b_grid(7 if scale.quick else 25)
    cells = []
    worst_refine = 0.0
    worst_gk = 0.0
    for al, be, g in lemma_cells():
        A = bounds.default_a_grid(len(g), a_pts)
        rep = bounds.lemma_certify(al, be, g, A, b_grid)
        sup, inf = rep.meta["sup"], rep.meta["inf"]
        label = f"alpha={al:g} beta={be:g} gamma={list(g)}"
        chk.require(np.isfinite(sup) and np.isfinite(inf) and inf > 0, f"{label}: ratio not finite")
        chk.require(rep.refinement_delta < 1e-6, f"{label}: refinement change {rep.refinement_delta:.2e}")
        worst_refine = max(worst_refine, rep.refinement_delta)
        # adaptive quadrature cross-check at the grid corners and centre
        for ai in (0, A.shape[0] // 2, A.shape[0] - 1):
            for b in (b_grid[0], b_grid[len(b_grid) // 2], b_grid[-1]):
                p = bounds.LemmaParams(al, be, g, tuple(A[ai]), float(b))
                gk = bounds.lemma_lhs(p)
                tr = bounds.lemma_lhs_grid(al, be, g, A[ai:ai + 1], float(b), bounds.lemma_step(b) / 2)[0]
                worst_gk = max(worst_gk, abs(tr * math.exp(-b * math.pi) / gk - 1.0))
        cells.append({"alpha": al, "beta": be, "gamma": list(g), "sup_ratio": sup, "inf_ratio": inf,
                      "refinement_delta": rep.refinement_delta})
    chk.require(worst_gk < 1e-8, f"adaptive vs trapezoid mismatch {worst_gk:.2e}")
    worst_mac = 0.0
    for be in LEMMA_BETAS:
        for b in b_grid:
            exact = specfun.macdonald_integral(be, float(b))
            worst_mac = max(worst_mac, abs(bounds.lemma_lhs(bounds.LemmaParams(0.0, be, (), (), float(b))) / exact - 1))
            grid = bounds.lemma_lhs_grid(0.0, be, [], np.zeros((1, 0)), float(b))[0] * math.exp(-b * math.pi)
            worst_mac = max(worst_mac, abs(grid / exact - 1))
    chk.require(worst_mac < 1e-8, f"Macdonald oracle mismatch {worst_mac:.2e}")
    return CriterionResult(1, "integral comparison lemma", not chk.failures,
                           {"cells": cells, "max_refinement_delta": worst_refine,
                            "max_adaptive_vs_trapezoid": worst_gk, "max_macdonald_rel": worst_mac},
                           chk.failures)


# --- 2. Laplace identity of theta -------------------------------------------------------------

LAPLACE_GRID_R = (0.5, 1.0, 2.0)
LAPLACE_GRID_LAM = (0.5, 1.0, 2.0)


def criterion_laplace(master: int, scale: Scale) -> CriterionResult:
    chk = _Checks()
    rows = []
    grid = [(1.0, 0.5)] if scale.quick else [(r, l) for r in LAPLACE_GRID_R for l in LAPLACE_GRID_LAM]
    for r, lam in grid:
        q = specfun.laplace_check(r, lam)
        rows.append({"r": r, "lambda": lam, "ratio": q})
        chk.require(abs(q - 1) <= 1e-6, f"r={r} lambda={lam}: ratio {q!r}")
    dev = max(abs(x["ratio"] - 1) for x in rows)
    return CriterionResult(2, "theta Laplace identity", not chk.failures, {"grid": rows, "max_deviation": dev},
                           chk.failures)


# --- 3. Bessel oracles -----------------------------------------------------------------------

def _reflection_density(t, x, y):
    c = 1.0 / math.sqrt(2 * math.pi * t)
    return c * (math.exp(-(x - y) ** 2 / (2 * t)) - math.exp(-(x + y) ** 2 / (2 * t)))


def _hitting_mass(nu, a, x):
    f = lambda u: bessel.hitting_density_numeric(nu, a, x, np.exp(u)) * np.exp(u)
    return float(integrate(f, math.log(1e-6), math.log(1e14), epsabs=1e-10, epsrel=1e-8).value)


CK_TRIPLES = ((-0.5, 0.3, 0.7, 1.0, 1.5), (-1.0, 0.5, 0.5, 1.0, 2.0), (-0.25, 1.0, 2.0, 2.0, 0.5),
              (-2.0, 0.2, 0.4, 1.5, 1.2), (-1.5, 0.8, 1.1, 0.6, 0.9))


def criterion_bessel(master: int, scale: Scale) -> CriterionResult:
    chk = _Checks()
    refl = 0.0
    for t in (0.1, 1.0, 4.0):
        for x in (0.2, 1.0, 3.0):
            for y in (0.5, 1.0, 2.5):
                ex = _reflection_density(t, x, y)
                refl = max(refl, abs(bessel.transition_density(-0.5, t, x, y) / ex - 1))
    chk.require(refl <= 1e-10, f"reflection density mismatch {refl:.2e}")
    masses = {}
    cases = ((-0.5, 1.0, 2.0),) if scale.quick else ((-0.5, 1.0, 2.0), (-1.0, 1.0, 2.0), (-2.0, 0.5, 1.5))
    for nu, a, x in cases:
        m = _hitting_mass(nu, a, x)
        masses[f"nu={nu} a={a} x={x}"] = m
        chk.require(abs(m - 1) <= 1e-4, f"hitting mass {m!r} at nu={nu}")
    q = bessel.hitting_density_numeric(-0.5, 1.0, 2.0, 1.0)
    q_bm = math.exp(-0.5) / math.sqrt(2 * math.pi)
    hit_rel = abs(q / q_bm - 1)
    chk.require(hit_rel <= 1e-4, f"hitting density vs closed form {hit_rel:.2e}")
    ck = []
    for nu, s, t, x, y in CK_TRIPLES[: 2 if scale.quick else 5]:
        f = lambda z: bessel.transition_density(nu, s, x, z) * bessel.transition_density(nu, t, z, y)
        lhs = float(integrate(f, 0.0, math.inf, epsabs=1e-14, epsrel=1e-11).value)
        rhs = bessel.transition_density(nu, s + t, x, y)
        ck.append(abs(lhs / rhs - 1))
        chk.require(ck[-1] <= 1e-6, f"Chapman-Kolmogorov {ck[-1]:.2e} at nu={nu}")
    return CriterionResult(3, "Bessel oracles", not chk.failures,
                           {"reflection_max_rel": refl, "hitting_mass": masses, "hitting_closed_form_rel": hit_rel,
                            "chapman_kolmogorov_rel": ck}, chk.failures)


# --- 4. drift reduction ----------------------------------------------------------------------

REDUCTION_PAIRS = (((0.5, 1.5), (0.3, 1.2)), ((0.5, 1.5), (0.7, 2.0)), ((0.3, 1.3), (0.5, 1.6)),
                   ((0.6, 2.2), (0.4, 1.8)), ((0.4, 1.2), (0.6, 1.1)))
REDUCTION_REGIONS = (BoundaryRegion(BoundaryFace.BOTTOM, (0.3,), (0.7,)),
                     BoundaryRegion(BoundaryFace.SIDE_LOW, (1.2,), (1.8,)),
                     BoundaryRegion(BoundaryFace.SIDE_HIGH, (1.0, ), (1.5,)))


def criterion_reduction(master: int, scale: Scale, mu: float = 1.0, lam: float = 1.5) -> CriterionResult:
    chk = _Checks()
    dom = DomainSpec.slab(1.0, 1.0)
    e = theory.eta(mu, lam)
    rows = []
    for k, (x, y) in enumerate(REDUCTION_PAIRS[: 2 if scale.quick else 5]):
        cfg = SimConfig(n_paths=scale.reduction_paths, seed=_seed(master, 4, 2 * k))
        cfg_e = cfg.with_(seed=_seed(master, 4, 2 * k + 1))
        w = theory.reduction_weight(mu, lam, x)
        (gd,), bd = kernels.estimate_green_many(dom, mu, lam, x, [y], cfg)
        (gr,), br = kernels.estimate_green_many(dom, e, 0.0, x, [y], cfg_e, weight=w)
        z = gd.z_against(gr)
        chk.require(abs(z) < Z_MAX, f"Green pair {k}: z={z:.2f}")
        row = {"x": x, "y": y, "green_direct": gd.value, "green_direct_se": gd.stderr,
               "green_reduced": gr.value, "green_reduced_se": gr.stderr, "green_z": z,
               "green_fixed_factor": theory.reduce_green(mu, lam, x, y, 1.0)}
        for reg in REDUCTION_REGIONS:
            pd_ = kernels.poisson_from_batch(bd, reg)
            pr = kernels.poisson_from_batch(br, reg, w)
            zp = pd_.z_against(pr)
            chk.require(abs(zp) < Z_MAX, f"Poisson pair {k} {reg.face.value}: z={zp:.2f}")
            row[f"poisson_{reg.face.value}_z"] = zp
            row[f"poisson_{reg.face.value}_direct"] = pd_.value
            row[f"poisson_{reg.face.value}_reduced"] = pr.value
        rows.append(row)
    return CriterionResult(4, "drift reduction", not chk.failures,
                           {"mu": mu, "lambda": lam, "eta": e, "pairs": rows}, chk.failures)


# --- 5. same exit law for the two representations ---------------------------------------------

def _proportion_z(p1, p2, n1, n2):
    p = (p1 * n1 + p2 * n2) / (n1 + n2)
    se = math.sqrt(max(p * (1 - p), 0.0) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0 if p1 == p2 else math.inf
    return (p1 - p2) / se


def criterion_exit_law(master: int, scale: Scale, mu: float = 0.8) -> CriterionResult:
    chk = _Checks()
    dom = DomainSpec.slab(1.0, 1.0)
    x, y = (0.4, 1.7), (0.6, 1.4)
    N = scale.exit_law_paths
    eps = 0.02 * math.dist(x, y)
    bx = simulate_exits("hbm", mu, x, dom, SimConfig(n_paths=N, seed=_seed(master, 5, 0)),
                        centers=[y], radii=[eps, eps / 2])
    by = simulate_exits("y", mu, x, dom, SimConfig(n_paths=N, seed=_seed(master, 5, 1)),
                        centers=[y], radii=[eps, eps / 2], weight=lambda p: 1.0 / p[:, -1] ** 2)
    meas = {"faces": {}, "ks": {}}
    for k, f in enumerate(FACES):
        mx, my = bx.exited & (bx.face == k), by.exited & (by.face == k)
        z = _proportion_z(mx.mean(), my.mean(), N, N)
        meas["faces"][f.value] = {"hbm": float(mx.mean()), "y": float(my.mean()), "z": z}
        chk.require(abs(z) < Z_MAX, f"{f.value} mass z={z:.2f}")
        col = 0 if f is BoundaryFace.BOTTOM else -1
        if mx.sum() > 20 and my.sum() > 20:
            p = float(stats.ks_2samp(bx.position[mx, col], by.position[my, col]).pvalue)
            meas["ks"][f.value] = p
            chk.require(p > KS_P_MIN, f"{f.value} KS p={p:.3g}")
    gx = kernels.green_from_batch(bx, 0)
    gy = kernels.green_from_batch(by, 0)
    z = gx.z_against(gy)
    meas["green"] = {"hbm": gx.value, "hbm_se": gx.stderr, "y": gy.value, "y_se": gy.stderr, "z": z}
    chk.require(abs(z) < Z_MAX, f"Green z={z:.2f}")
    return CriterionResult(5, "same exit law for both representations", not chk.failures, meas, chk.failures)


# --- 6. slab estimates -----------------------------------------------------------------------

CERTIFY_AB = ((1.0, 1.0), (0.5, 2.0), (2.0, 0.5))


def _certify_cases(quick: bool):
    """``(n, mu, a, b)`` combinations; ``mu = (n-1)/2`` is the driftless case."""
    out = []
    for a, b in CERTIFY_AB:
        for mu in (0.6, 0.5, 2.0):
            out.append((2, mu, a, b))
        out.append((3, 1.0, a, b))
    return out[:2] if quick else out


def _lift(p2, n, lateral):
    """Insert ``lateral`` middle coordinates into a planar point."""
    return (p2[0],) + tuple(lateral[: n - 2]) + (p2[1],)


def _certify_geometry(n, a, b):
    x = _lift((0.5 * b, a + 0.5 * b), n, (0.0,))
    ys = {
        "near-diagonal": _lift((0.55 * b, a + 0.53 * b), n, (0.02 * b,)),
        "near-side": _lift((0.08 * b, a + 0.4 * b), n, (0.1 * b,)),
        "near-bottom": _lift((0.6 * b, a + 0.06 * b), n, (-0.05 * b,)),
        "far": _lift((0.85 * b, a + 1.5 * b), n, (0.3 * b,)),
    }
    w = 0.04 * b
    bottom_lat = ((-w, w),) if n == 3 else ()
    faces = {
        "bottom": (_lift((0.3 * b, a), n, (0.0,)),
                   BoundaryRegion(BoundaryFace.BOTTOM, (0.3 * b - w,) + tuple(l for l, _ in bottom_lat),
                                  (0.3 * b + w,) + tuple(h for _, h in bottom_lat))),
        "bottom-corner": (_lift((0.93 * b, a), n, (0.0,)),
                          BoundaryRegion(BoundaryFace.BOTTOM, (0.93 * b - w,) + tuple(l for l, _ in bottom_lat),
                                         (0.93 * b + w,) + tuple(h for _, h in bottom_lat))),
        "side-low": (_lift((0.0, a + 0.3 * b), n, (0.0,)),
                     BoundaryRegion(BoundaryFace.SIDE_LOW, tuple(-w for _ in range(n - 2)) + (a + 0.3 * b - w,),
                                    tuple(w for _ in range(n - 2)) + (a + 0.3 * b + w,))),
        "side-high-far": (_lift((b, a + 2.0 * b), n, (0.0,)),
                          BoundaryRegion(BoundaryFace.SIDE_HIGH, tuple(-w for _ in range(n - 2)) + (a + 2.0 * b - w,),
                                         tuple(w for _ in range(n - 2)) + (a + 2.0 * b + w,))),
    }
    return x, ys, faces


def _certify_dt(a, b):
    return 1e-3 * min(1.0, (b / (a + b)) ** 2)


def criterion_slab_estimates(master: int, scale: Scale) -> CriterionResult:
    chk = _Checks()
    N = scale.certify_paths
    rows = []
    green_r, poisson_r = [], []
    drift_total = drift_fail = 0
    for k, (n, mu, a, b) in enumerate(_certify_cases(scale.quick)):
        dom = DomainSpec.slab(a, b)
        x, ys, faces = _certify_geometry(n, a, b)
        cfg = SimConfig(dt=_certify_dt(a, b), n_paths=2 * N, seed=_seed(master, 6, k), t_max=50.0)
        names = list(ys)
        ests, batch = kernels.estimate_green_many(dom, mu, 0.0, x, [ys[m] for m in names], cfg)
        half = batch.head(N)
        for j, m in enumerate(names):
            y = ys[m]
            bnd = bounds.green_bound_slab(mu, n, a, b, x, y)
            full = ests[j]
            part = kernels.green_from_batch(half, j)
            quad = kernels.slab_green_quadrature(mu, a, x, y, b)
            r2, r1, se1 = full.value / bnd, part.value / bnd, part.stderr / bnd
            rq = quad / bnd
            green_r += [r2, rq]
            drift_total += 1
            ok_drift = abs(r2 - r1) <= se1
            drift_fail += not ok_drift
            chk.require(ok_drift, f"green n={n} mu={mu} a={a} b={b} {m}: drift {abs(r2 - r1):.3g} > {se1:.3g}")
            rows.append({"theorem": "green", "n": n, "mu": mu, "a": a, "b": b, "config": m, "x": x, "y": y,
                         "bound": bnd, "mc_ratio_N": r1, "mc_stderr_N": se1, "mc_ratio_2N": r2,
                         "mc_stderr_2N": full.stderr / bnd, "quad_ratio": rq, "flags": list(full.flags)})
        for m, (y, reg) in faces.items():
            bnd = bounds.poisson_bound_slab(mu, n, a, b, x, y)
            full = kernels.poisson_from_batch(batch, reg)
            part = kernels.poisson_from_batch(half, reg)
            quad = kernels.slab_poisson_quadrature(mu, a, x, y, b)
            r2, r1, se1 = full.value / bnd, part.value / bnd, part.stderr / bnd
            rq = quad / bnd
            poisson_r += [r2, rq]
            drift_total += 1
            ok_drift = abs(r2 - r1) <= se1
            drift_fail += not ok_drift
            chk.require(ok_drift, f"poisson n={n} mu={mu} a={a} b={b} {m}: drift {abs(r2 - r1):.3g} > {se1:.3g}")
            rows.append({"theorem": "poisson", "n": n, "mu": mu, "a": a, "b": b, "config": m, "x": x, "y": y,
                         "bound": bnd, "mc_ratio_N": r1, "mc_stderr_N": se1, "mc_ratio_2N": r2,
                         "mc_stderr_2N": full.stderr / bnd, "quad_ratio": rq, "flags": list(full.flags)})
    meas = {"configurations": rows, "drift_checks": drift_total, "drift_failures": drift_fail}
    for name, rs in (("green", green_r), ("poisson", poisson_r)):
        rs = np.array(rs)
        ok = bool(rs.size and np.all(np.isfinite(rs)) and np.all(rs > 0))
        chk.require(ok, f"{name}: ratio not finite and positive")
        meas[f"{name}_interval"] = [float(rs.min()), float(rs.max())] if rs.size else []
    chk.require(len(rows) >= 20 or scale.quick, "fewer than 20 configurations")
    return CriterionResult(6, "slab Green and Poisson estimates", not chk.failures, meas, chk.failures)


def certify_rows_csv(result: CriterionResult) -> str:
    cols = ["theorem", "n", "mu", "a", "b", "config", "bound", "mc_ratio_N", "mc_stderr_N", "mc_ratio_2N",
            "mc_stderr_2N", "quad_ratio"]
    lines = [",".join(cols)]
    for r in result.measured.get("configurations", []):
        lines.append(",".join(fmt(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


# --- 7. corollaries --------------------------------------------------------------------------

COROLLARY_MUS = (0.6, 1.0, 2.0)


def criterion_corollaries(master: int, scale: Scale) -> CriterionResult:
    chk = _Checks()
    strip_dev = 0.0
    half_dev = 0.0
    a0, B = 1e-8, 1e8
    for mu in COROLLARY_MUS:
        for n in (2, 3):
            for b in (1.0, 2.0):
                pts = [(0.3 * b, 0.5 * b), (0.5 * b, 0.1 * b), (0.8 * b, 2.0 * b)]
                for i, p in enumerate(pts):
                    x = np.array(_lift(p, n, (0.1 * b,)))
                    for q in pts[i + 1:]:
                        y = np.array(_lift(q, n, (-0.2 * b,)))
                        strip_dev = max(strip_dev, abs(bounds.green_bound_slab(mu, n, a0, b, x, y)
                                                       / bounds.green_bound_strip(mu, n, b, x, y) - 1))
                    for yb in (_lift((0.0, 0.7 * b), n, (0.0,)), _lift((b, 0.2 * b), n, (0.3,))):
                        yb = np.array(yb)
                        strip_dev = max(strip_dev, abs(bounds.poisson_bound_slab(mu, n, a0, b, x, yb)
                                                       / bounds.poisson_bound_strip(mu, n, b, x, yb) - 1))
                    y0 = np.array(_lift((0.4 * b, 0.0), n, (0.0,)))
                    ya = y0.copy()
                    ya[-1] = a0
                    strip_dev = max(strip_dev, abs(bounds.poisson_bound_slab(mu, n, a0, b, x, ya)
                                                   / bounds.poisson_bound_strip(mu, n, b, x, y0) - 1))
            for a in (0.5, 1.0):
                pts = [(0.0, a + 0.5), (0.3, a + 2.0), (-1.0, a + 0.1)]
                for i, p in enumerate(pts):
                    x = np.array(_lift(p, n, (0.2,)))
                    xs = x.copy()
                    xs[0] += B / 2
                    for q in pts[i + 1:]:
                        y = np.array(_lift(q, n, (-0.1,)))
                        ys = y.copy()
                        ys[0] += B / 2
                        half_dev = max(half_dev, abs(bounds.green_bound_slab(mu, n, a, B, xs, ys)
                                                     / bounds.green_bound_halfspace(mu, n, a, x, y) - 1))
                    y = np.array(_lift((0.7, a), n, (0.0,)))
                    ys = y.copy()
                    ys[0] += B / 2
                    half_dev = max(half_dev, abs(bounds.poisson_bound_slab(mu, n, a, B, xs, ys)
                                                 / bounds.poisson_bound_halfspace(mu, n, a, x, y) - 1))
    chk.require(strip_dev <= 1e-4, f"strip limit deviation {strip_dev:.2e}")
    chk.require(half_dev <= 1e-4, f"half-space limit deviation {half_dev:.2e}")
    scal = []
    N = scale.scaling_paths
    slab = DomainSpec.slab(1.0, 1.0)
    region = BoundaryRegion(BoundaryFace.BOTTOM, (0.35,), (0.65,))
    for i, c in enumerate((0.5, 2.0)):
        cfg = SimConfig(n_paths=N, seed=_seed(master, 7, i))
        for row in theory.scaling_verify(slab, 1.0, c, (0.5, 1.5), (0.3, 1.2), cfg, region=region):
            scal.append({"domain": "slab(1,1)", "kind": row.kind, "c": c, "z": row.z})
    cfg = SimConfig(n_paths=N, seed=_seed(master, 7, 2))
    for row in theory.scaling_verify(DomainSpec.halfspace(1.0), 1.0, 0.5, (0.0, 1.5), (0.3, 1.2), cfg):
        scal.append({"domain": "halfspace(1)", "kind": row.kind, "c": 0.5, "z": row.z})
    for s in scal:
        chk.require(abs(s["z"]) < Z_MAX, f"scaling {s['domain']} {s['kind']} c={s['c']}: z={s['z']:.2f}")
    return CriterionResult(7, "corollary consistency", not chk.failures,
                           {"strip_limit_max_rel": strip_dev, "halfspace_limit_max_rel": half_dev, "scaling": scal},
                           chk.failures)


# --- 8. modified Dirichlet problem -----------------------------------------------------------

def criterion_dirichlet(master: int, scale: Scale) -> CriterionResult:
    chk = _Checks()
    dom = DomainSpec.slab(1.0, 1.0)
    N = scale.dirichlet_paths
    one = lambda p, f: np.ones(len(p))
    units = []
    for i, x in enumerate(((0.5, 1.5), (0.1, 1.05), (0.9, 3.0))):
        r = theory.dirichlet_solve(dom, 1.0, 0.0, one, x, SimConfig(n_paths=N, seed=_seed(master, 8, i)))
        units.append({"x": x, "u": r.value, "stderr": r.stderr})
        chk.require(abs(r.value - 1) <= 3 * r.stderr, f"f=1 at {x}: u={r.value!r}")
    mu, lam = 1.0, 1.5
    f = lambda p, fc: np.where(fc == FACES.index(BoundaryFace.BOTTOM), np.sin(math.pi * p[:, 0]), 0.0)
    approach = []
    for i, d in enumerate((1e-1, 1e-2, 1e-3)):
        r = theory.dirichlet_solve(dom, mu, lam, f, (0.5, 1.0 + d), SimConfig(n_paths=N, seed=_seed(master, 8, 10 + i)))
        approach.append({"distance": d, "limit_value": r.harmonic, "stderr": r.harmonic_stderr,
                         "error": abs(r.harmonic - 1.0)})
    for p, q in zip(approach, approach[1:]):
        slack = Z_MAX * math.hypot(p["stderr"], q["stderr"])
        chk.require(q["error"] <= p["error"] + slack, f"boundary limit not monotone at d={q['distance']:g}")
    resid = []
    for mu_, lam_, x in ((1.0, 1.5, (0.3, 1.7)), (0.6, 0.3, (0.2, -0.4, 2.5)), (2.0, 4.0, (0.5, 0.8))):
        hs = (1e-2, 5e-3, 2.5e-3)
        e = [theory.eigen_residual(mu_, lam_, x, h * x[-1]) for h in hs]
        c = [theory.conjugate_residual(mu_, lam_, x, h * x[-1]) for h in hs]
        ratios = [e[0] / e[1], e[1] / e[2], c[0] / c[1], c[1] / c[2]]
        resid.append({"mu": mu_, "lambda": lam_, "x": x, "eigen": e, "conjugate": c, "ratios": ratios})
        for r in ratios:
            chk.require(3.5 <= r <= 4.5, f"residual ratio {r:.3f} at mu={mu_}")
    return CriterionResult(8, "modified Dirichlet problem", not chk.failures,
                           {"unit_data": units, "boundary_approach": approach, "generator_residuals": resid},
                           chk.failures)


# --- 9. determinism --------------------------------------------------------------------------

def criterion_determinism(master: int, scale: Scale) -> CriterionResult:
    """Run the quick suite (criteria 1-8) twice and compare the written files byte for byte."""
    chk = _Checks()
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "run1", Path(tmp) / "run2"]
        for d in dirs:
            res = run_suite(master, quick=True, only=range(1, 9))
            write_outputs(res, d, master, True)
        names = sorted(p.name for p in dirs[0].iterdir())
        same = [filecmp.cmp(dirs[0] / nm, dirs[1] / nm, shallow=False) for nm in names]
        chk.require(names == sorted(p.name for p in dirs[1].iterdir()), "file sets differ")
        chk.require(all(same), "files differ between runs")
    return CriterionResult(9, "determinism", not chk.failures, {"files": names, "identical": same}, chk.failures)


CRITERIA = {
    1: criterion_lemma, 2: criterion_laplace, 3: criterion_bessel, 4: criterion_reduction,
    5: criterion_exit_law, 6: criterion_slab_estimates, 7: criterion_corollaries, 8: criterion_dirichlet,
    9: criterion_determinism,
}


def run_criterion(number: int, master: int = 0, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](master, Scale(quick))
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(master: int = 0, quick: bool = False, only=None, echo=None) -> list:
    out = []
    for k in sorted(only or CRITERIA):
        res = run_criterion(k, master, quick)
        if echo:
            echo(res.line())
        out.append(res)
    return out


def write_outputs(results, outdir, master: int, quick: bool):
    """``summary.json``, ``criteria.csv`` and, when present, ``slab_ratios.csv``.  Timings are not written."""
    outdir = Path(outdir)
    summary = {"master_seed": master, "quick": quick, "all_passed": all(r.passed for r in results),
               "criteria": [r.to_dict() for r in results]}
    atomic_write(outdir / "summary.json", dumps(summary))
    lines = ["number,name,passed,failed_checks"]
    lines += [f'{r.number},"{r.name}",{str(r.passed).lower()},{len(r.failures)}' for r in results]
    atomic_write(outdir / "criteria.csv", "\n".join(lines) + "\n")
    for r in results:
        if r.number == 6:
            atomic_write(outdir / "slab_ratios.csv", certify_rows_csv(r))


__all__ = ["CriterionResult", "Scale", "CRITERIA", "run_criterion", "run_suite", "write_outputs", "lemma_cells"]
