"""Path simulation of drifted hyperbolic Brownian motion and of the Brownian-Bessel diffusion.

Two processes are simulated on a uniform time grid:

``HBM``
    ``X(t) = (B_1(A(t)), ..., B_{n-1}(A(t)), x_n exp(B_n(t) - mu t))`` with the
    clock ``A(t) = int_0^t X_n(s)^2 ds`` advanced by the trapezoid rule.  The
    last coordinate is updated exactly in log space.
``Y``
    ``Y(t) = (B_1(t), ..., B_{n-1}(t), R(t))`` with ``R`` a Bessel process of
    index ``-mu`` integrated by Euler-Maruyama, refined near the origin.

Paths are organised in fixed-size blocks.  Every block owns three generators
derived from ``SeedSequence(seed, spawn_key=(block,))`` (Gaussian noise,
uniforms for the bridge test, Bessel substeps), so results do not depend on
the number of worker threads.  Noise is drawn for the whole block at every
step, which keeps each path's increments aligned across runs that differ
only in ``coarsen``.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .geometry import (BoundaryFace, DomainKind, DomainSpec, GeometryError, HyperPoint, Status, as_point,
                       classify)

FACES = (BoundaryFace.SIDE_LOW, BoundaryFace.SIDE_HIGH, BoundaryFace.BOTTOM)
NO_FACE = -1
SUBSTEPS = 100
FLOOR_FACTOR = 10.0      # R_floor = FLOOR_FACTOR * sqrt(dt)
STRIP_FLOOR = 1e-6       # HBM paths in a strip exit the bottom once X_n < STRIP_FLOOR * b
MAX_DT = 1e-2
MAX_STEPS = 10_000_000


class Process(enum.Enum):
    HBM = "hbm"
    Y = "y"


@dataclass(frozen=True)
class SimConfig:
    """Discretisation and sampling parameters.

    ``eps_ball=None`` lets the Green estimator pick ``0.02 |x - y|``.
    ``coarsen=k`` builds each step's Gaussian increment from ``k`` draws of
    the underlying stream, so a run with ``(k dt', coarsen=k)`` uses the same
    Brownian path as a run with ``(dt', coarsen=1)``.
    """

    dt: float = 1e-3
    t_max: float = 20.0
    n_paths: int = 10_000
    seed: int = 0
    eps_ball: Optional[float] = None
    block: int = 4096
    coarsen: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and self.dt <= MAX_DT):
            raise ValueError(f"dt must lie in (0, {MAX_DT}], got {self.dt}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.t_max / self.dt > MAX_STEPS:
            raise ValueError(f"t_max/dt must not exceed {MAX_STEPS:.0e}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.eps_ball is not None and not self.eps_ball > 0:
            raise ValueError(f"eps_ball must be positive, got {self.eps_ball}")
        if int(self.block) != self.block or self.block < 1:
            raise ValueError("block must be a positive integer")
        if int(self.coarsen) != self.coarsen or self.coarsen < 1:
            raise ValueError("coarsen must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9))

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class ExitRecord:
    """First exit of one path.  ``position`` may have ``x_n = 0`` for strip exits."""

    exited: bool
    tau: float
    position: tuple
    face: Optional[BoundaryFace]


@dataclass
class ExitBatch:
    """Per-path exit data and discounted ball occupations.

    ``occupation[i, j, e]`` is ``int_0^{tau ^ t_max} w(X) e^{-lam t} 1{|X - c_j| < r_{j,e}} dt``
    for path ``i``, centre ``j`` and radius ``e``.
    """

    process: Process
    mu: float
    lam: float
    x0: tuple
    domain: DomainSpec
    exited: np.ndarray
    tau: np.ndarray
    position: np.ndarray
    face: np.ndarray
    occupation: np.ndarray
    centers: np.ndarray
    radii: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.exited.size

    def record(self, i: int) -> ExitRecord:
        f = int(self.face[i])
        return ExitRecord(bool(self.exited[i]), float(self.tau[i]), tuple(map(float, self.position[i])),
                          FACES[f] if f >= 0 else None)

    def face_mask(self, face: BoundaryFace) -> np.ndarray:
        return self.face == FACES.index(BoundaryFace(face))

    def head(self, m: int) -> "ExitBatch":
        """The first ``m`` paths (a nested sub-sample)."""
        return replace(self, exited=self.exited[:m], tau=self.tau[:m], position=self.position[:m],
                       face=self.face[:m], occupation=self.occupation[:m])

    def occupation_map(self, i: int) -> dict:
        return {tuple(map(float, c)): float(self.occupation[i, j, 0]) for j, c in enumerate(self.centers)}


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("HYPK_THREADS", "1")))
    except ValueError:
        return 1


def _block_generators(seed: int, block: int):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return tuple(np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3))


def _bessel_substeps(R, dB, dt, drift, level, g_sub):
    """Integrate ``dR = dB + drift/R dt`` over one step in ``SUBSTEPS`` pieces.

    The sub-increments form a Brownian bridge matching the step increment
    ``dB``.  Returns the end value, an absorption mask and the fraction of the
    step at which absorption happened.
    """
    m = R.size
    h = dt / SUBSTEPS
    w = g_sub.standard_normal((m, SUBSTEPS)) * math.sqrt(h)
    w += ((dB - w.sum(axis=1)) / SUBSTEPS)[:, None]
    r = R.copy()
    hit = np.zeros(m, dtype=bool)
    frac = np.ones(m)
    for k in range(SUBSTEPS):
        live = ~hit
        if not live.any():
            break
        r_old = r[live]
        r_new = r_old + w[live, k] + drift / r_old * h
        crossed = r_new <= level
        idx = np.flatnonzero(live)
        if crossed.any():
            ci = idx[crossed]
            d_old = r_old[crossed] - level
            d_new = r_new[crossed] - level
            frac[ci] = (k + d_old / (d_old - d_new)) / SUBSTEPS
            hit[ci] = True
            r_new = np.where(crossed, level, r_new)
        r[idx] = r_new
    return r, hit, frac


def bessel_step(R, dB, dt, mu, level, g_sub):
    """One Euler-Maruyama step of a Bessel process of index ``-mu``, absorbed at ``level``.

    Steps that start or would end below ``R_floor = 10 sqrt(dt)`` are redone
    with ``SUBSTEPS`` bridge-consistent substeps.  Returns ``(R_new, hit,
    frac)``; ``hit`` marks paths absorbed during the step (``R_new = level``).
    """
    drift = (1.0 - 2.0 * mu) / 2.0
    r_floor = FLOOR_FACTOR * math.sqrt(dt)
    Rn = R + dB + drift / R * dt
    fine = (R < r_floor) | (Rn < r_floor)
    hit = np.zeros(R.size, dtype=bool)
    frac = np.ones(R.size)
    coarse = ~fine
    crossed = coarse & (Rn <= level)
    if crossed.any():
        d_old, d_new = R[crossed] - level, Rn[crossed] - level
        frac[crossed] = d_old / (d_old - d_new)
        hit[crossed] = True
        Rn[crossed] = level
    if fine.any():
        r, h, f = _bessel_substeps(R[fine], dB[fine], dt, drift, level, g_sub)
        Rn[fine], hit[fine], frac[fine] = r, h, f
    return Rn, hit, frac


def _run_block(proc: Process, mu: float, x0: np.ndarray, dom: DomainSpec, cfg: SimConfig, lam: float,
               centers: np.ndarray, radii: np.ndarray, weight, size: int, gens) -> dict:
    g_noise, g_unif, g_sub = gens
    n = x0.size
    N = size
    dt = cfg.dt
    sq_dt = math.sqrt(dt)
    a, b = dom.a, dom.b
    sides = dom.bounded_sides
    strip = dom.kind is DomainKind.STRIP
    log_a = math.log(a) if a > 0 else -math.inf
    strip_floor = STRIP_FLOOR * b if strip else 0.0

    sp = np.tile(x0[:-1], (N, 1))
    if proc is Process.HBM:
        last = np.full(N, math.log(x0[-1]))     # log X_n
    else:
        last = np.full(N, x0[-1])               # R
    alive = np.ones(N, dtype=bool)
    tau = np.full(N, np.inf)
    pos = np.empty((N, n))
    face = np.full(N, NO_FACE, dtype=np.int8)
    J, E = radii.shape if radii.size else (0, 0)
    occ = np.zeros((N, J, E))
    r2 = radii ** 2
    k_coarse = cfg.coarsen
    t = 0.0

    for step in range(cfg.n_steps):
        z = g_noise.standard_normal((k_coarse, N, n))
        z = z[0] if k_coarse == 1 else z.sum(axis=0) / math.sqrt(k_coarse)
        u = g_unif.random(N)
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        zi = z[idx]
        sp_o = sp[idx]
        lo = last[idx]
        dB = zi[:, -1] * sq_dt
        m = idx.size

        if proc is Process.HBM:
            ln = lo + dB - mu * dt
            xn_o, xn_n = np.exp(lo), np.exp(ln)
            var_sp = 0.5 * dt * (xn_o * xn_o + xn_n * xn_n)
            sp_n = sp_o + np.sqrt(var_sp)[:, None] * zi[:, :-1]
        else:
            xn_o = lo
            var_sp = np.full(m, dt)
            sp_n = sp_o + sq_dt * zi[:, :-1]
            ln, b_hit, b_frac = bessel_step(lo, dB, dt, mu, a, g_sub)
            xn_n = ln

        # candidate exits per face: step fraction of a direct crossing (inf if none),
        # bridge crossing probability, and the fraction used if the bridge test fires
        frac = np.full((m, 3), np.inf)
        bridge_p = np.zeros((m, 3))
        bridge_f = np.full((m, 3), np.inf)

        def flat_face(j, d_o, d_n, var):
            direct = d_n <= 0
            frac[direct, j] = d_o[direct] / (d_o[direct] - d_n[direct])
            ok = ~direct
            bridge_p[ok, j] = np.exp(-2.0 * d_o[ok] * d_n[ok] / var[ok])
            bridge_f[ok, j] = d_o[ok] / (d_o[ok] + d_n[ok])

        if sides:
            flat_face(0, sp_o[:, 0], sp_n[:, 0], var_sp)
            flat_face(1, b - sp_o[:, 0], b - sp_n[:, 0], var_sp)
        if proc is Process.HBM:
            if strip:
                frac[xn_n <= strip_floor, 2] = 1.0
            else:
                # log X_n is a Brownian motion with drift: flat face in log space
                flat_face(2, lo - log_a, ln - log_a, np.full(m, dt))
        else:
            frac[b_hit, 2] = b_frac[b_hit]
            if a > 0:
                ok = ~b_hit
                d_o, d_n = lo[ok] - a, xn_n[ok] - a
                bridge_p[ok, 2] = np.exp(-2.0 * d_o * d_n / dt)
                bridge_f[ok, 2] = d_o / (d_o + d_n)

        direct_any = np.isfinite(frac).any(axis=1)
        # bridge: faces tested in fixed order, each conditional on the previous not firing
        q = bridge_p.copy()
        q[:, 1] *= 1.0 - bridge_p[:, 0]
        q[:, 2] *= (1.0 - bridge_p[:, 0]) * (1.0 - bridge_p[:, 1])
        cq = np.cumsum(q, axis=1)
        ui = u[idx]
        bridge_face = np.where(ui < cq[:, 0], 0, np.where(ui < cq[:, 1], 1, np.where(ui < cq[:, 2], 2, -1)))
        use_bridge = (~direct_any) & (bridge_face >= 0)
        exit_face = np.where(direct_any, np.argmin(frac, axis=1), bridge_face)
        exits = direct_any | use_bridge
        ef = np.ones(m)
        if direct_any.any():
            ef[direct_any] = frac[direct_any, exit_face[direct_any]]
        if use_bridge.any():
            ef[use_bridge] = bridge_f[use_bridge, exit_face[use_bridge]]
        ef = np.clip(ef, 0.0, 1.0)

        # discounted occupation, left-point rule
        if J:
            pts = np.concatenate([sp_o, xn_o[:, None]], axis=1)
            d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            inside = d2[:, :, None] < r2[None, :, :]
            if inside.any():
                dte = np.where(exits, ef * dt, dt)
                wgt = dte * math.exp(-lam * t)
                if weight is not None:
                    wgt = wgt * np.asarray(weight(pts), dtype=float)
                occ[idx] += inside * wgt[:, None, None]

        # record exits
        if exits.any():
            ei = idx[exits]
            f = ef[exits]
            xp = sp_o[exits] + f[:, None] * (sp_n[exits] - sp_o[exits])
            if proc is Process.HBM:
                xl = np.exp(lo[exits] + f * (ln[exits] - lo[exits]))
            else:
                xl = lo[exits] + f * (xn_n[exits] - lo[exits])
            fc = exit_face[exits]
            xp[fc == 0, 0] = 0.0
            xp[fc == 1, 0] = b
            xl = np.where(fc == 2, a, xl)
            pos[ei] = np.concatenate([xp, xl[:, None]], axis=1)
            tau[ei] = t + f * dt
            face[ei] = fc
            alive[ei] = False
        stay = ~exits
        si = idx[stay]
        sp[si] = sp_n[stay]
        last[si] = ln[stay]
        t = (step + 1) * dt

    rest = np.flatnonzero(alive)
    if rest.size:
        xl = np.exp(last[rest]) if proc is Process.HBM else last[rest]
        pos[rest] = np.concatenate([sp[rest], xl[:, None]], axis=1)
    return dict(exited=~alive, tau=tau, position=pos, face=face, occupation=occ)


def _prepare(mu, x0, dom, centers, radii):
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    p = np.asarray(as_point(x0), dtype=float)
    if classify(p, dom).status is not Status.INTERIOR:
        raise GeometryError(f"starting point {tuple(p)} is not interior to {dom}")
    if centers is None or len(centers) == 0:
        return p, np.zeros((0, p.size)), np.zeros((0, 0))
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    if c.shape[1] != p.size:
        raise GeometryError("centre dimension does not match the starting point")
    r = np.asarray(radii, dtype=float)
    if r.ndim == 0:
        r = np.full((c.shape[0], 1), float(r))
    elif r.ndim == 1:
        r = np.broadcast_to(r[None, :], (c.shape[0], r.size)).copy() if r.size != c.shape[0] else r[:, None]
    if np.any(r <= 0):
        raise ValueError("ball radii must be positive")
    return p, c, r


def simulate_exits(process, mu: float, x0, dom: DomainSpec, cfg: SimConfig, *, lam: float = 0.0,
                   centers=None, radii=None, weight: Callable | None = None,
                   workers: int | None = None) -> ExitBatch:
    """Simulate ``cfg.n_paths`` paths from ``x0`` until they leave ``dom``.

    Parameters
    ----------
    process : Process or str
        ``"hbm"`` for the drifted hyperbolic Brownian motion, ``"y"`` for the
        Brownian-Bessel diffusion.
    centers, radii
        Ball centres ``(J, n)`` and radii, either one radius, ``E`` radii
        shared by all centres, or a ``(J, E)`` array.
    weight
        Optional callable mapping an ``(m, n)`` array of positions to ``m``
        occupation weights.
    """
    proc = Process(process)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    p, c, r = _prepare(mu, x0, dom, centers, radii)
    nb = -(-cfg.n_paths // cfg.block)
    sizes = [min(cfg.block, cfg.n_paths - i * cfg.block) for i in range(nb)]

    def job(i):
        return _run_block(proc, float(mu), p, dom, cfg, float(lam), c, r, weight, sizes[i],
                          _block_generators(cfg.seed, i))

    nw = min(workers or worker_count(), nb)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            parts = list(ex.map(job, range(nb)))
    else:
        parts = [job(i) for i in range(nb)]
    cat = {k: np.concatenate([q[k] for q in parts]) for k in parts[0]}
    return ExitBatch(proc, float(mu), float(lam), tuple(map(float, p)), dom, centers=c, radii=r, **cat)


def first_exit(process, dom: DomainSpec, mu: float, x0, cfg: SimConfig, rng: np.random.Generator | None = None,
               lam: float = 0.0, centers=None, radii=None):
    """Exit record and discounted ball occupations of a single path.

    Returns ``(ExitRecord, {centre: occupation})``.  With ``rng=None`` the
    path is the first path of ``simulate_exits`` under ``cfg.seed``.
    """
    proc = Process(process)
    p, c, r = _prepare(mu, x0, dom, centers, radii if radii is not None else (cfg.eps_ball or 0.01))
    if rng is None:
        # the noise is drawn block-wide, so replay the whole first block
        gens, size = _block_generators(cfg.seed, 0), min(cfg.block, cfg.n_paths)
    else:
        gens, size = tuple(rng.spawn(3)), 1
    out = _run_block(proc, float(mu), p, dom, cfg, float(lam), c, r, None, size, gens)
    f = int(out["face"][0])
    rec = ExitRecord(bool(out["exited"][0]), float(out["tau"][0]), tuple(map(float, out["position"][0])),
                     FACES[f] if f >= 0 else None)
    return rec, {tuple(map(float, cj)): float(out["occupation"][0, j, 0]) for j, cj in enumerate(c)}


class PathSample(NamedTuple):
    """Sampled paths: ``points[i, k]`` is path ``i`` at ``times[k]``."""

    times: np.ndarray
    points: np.ndarray
    clock: Optional[np.ndarray] = None
    absorbed: Optional[np.ndarray] = None


def _path_rng(cfg: SimConfig, rng):
    return rng if rng is not None else np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))


def sample_hbm_paths(mu: float, x0, cfg: SimConfig, rng: np.random.Generator | None = None,
                     keep_path: bool = True) -> PathSample:
    """Unconstrained HBM paths on ``[0, t_max]``.

    ``clock`` holds the trapezoid clock ``A(t)``.  With ``keep_path=False``
    only the initial and final states are stored.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    p = np.asarray(as_point(x0), dtype=float)
    g = _path_rng(cfg, rng)
    N, n, K, dt = cfg.n_paths, p.size, cfg.n_steps, cfg.dt
    sp = np.tile(p[:-1], (N, 1))
    L = np.full(N, math.log(p[-1]))
    A = np.zeros(N)
    snaps = [(sp.copy(), np.exp(L), A.copy())]
    for _ in range(K):
        z = g.standard_normal((N, n))
        Ln = L + z[:, -1] * math.sqrt(dt) - mu * dt
        dA = 0.5 * dt * (np.exp(2 * L) + np.exp(2 * Ln))
        sp = sp + np.sqrt(dA)[:, None] * z[:, :-1]
        A = A + dA
        L = Ln
        if keep_path:
            snaps.append((sp.copy(), np.exp(L), A.copy()))
    if not keep_path:
        snaps.append((sp, np.exp(L), A))
        times = np.array([0.0, K * dt])
    else:
        times = np.arange(K + 1) * dt
    pts = np.stack([np.concatenate([s, xn[:, None]], axis=1) for s, xn, _ in snaps], axis=1)
    clk = np.stack([c for _, _, c in snaps], axis=1)
    return PathSample(times, pts, clk)


def sample_hbm_path(mu: float, x0, cfg: SimConfig, rng: np.random.Generator | None = None) -> list:
    """A single HBM path as a list of ``(t, HyperPoint)`` pairs."""
    s = sample_hbm_paths(mu, x0, cfg.with_(n_paths=1), rng)
    return [(float(t), HyperPoint(tuple(s.points[0, k]))) for k, t in enumerate(s.times)]


def sample_y_paths(mu: float, x0, cfg: SimConfig, rng: np.random.Generator | None = None,
                   keep_path: bool = True, level: float = 0.0) -> PathSample:
    """Unconstrained Brownian-Bessel paths; ``R`` is absorbed (frozen) at ``level``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    p = np.asarray(as_point(x0), dtype=float)
    if not p[-1] > level >= 0:
        raise ValueError("need x_n > level >= 0")
    g = _path_rng(cfg, rng)
    g_sub = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(2 ** 31,))))
    N, n, K, dt = cfg.n_paths, p.size, cfg.n_steps, cfg.dt
    sp = np.tile(p[:-1], (N, 1))
    R = np.full(N, p[-1])
    dead = np.zeros(N, dtype=bool)
    snaps = [(sp.copy(), R.copy())]
    for _ in range(K):
        z = g.standard_normal((N, n))
        sp = sp + math.sqrt(dt) * z[:, :-1]
        live = np.flatnonzero(~dead)
        if live.size:
            rn, hit, _ = bessel_step(R[live], z[live, -1] * math.sqrt(dt), dt, mu, level, g_sub)
            R[live] = rn
            dead[live[hit]] = True
        if keep_path:
            snaps.append((sp.copy(), R.copy()))
    if not keep_path:
        snaps.append((sp, R))
        times = np.array([0.0, K * dt])
    else:
        times = np.arange(K + 1) * dt
    pts = np.stack([np.concatenate([s, r[:, None]], axis=1) for s, r in snaps], axis=1)
    return PathSample(times, pts, None, dead)


def sample_y_path(mu: float, x0, cfg: SimConfig, rng: np.random.Generator | None = None) -> list:
    """A single Brownian-Bessel path as ``(t, coordinates)`` pairs (``R`` may reach 0)."""
    s = sample_y_paths(mu, x0, cfg.with_(n_paths=1), rng)
    return [(float(t), tuple(map(float, s.points[0, k]))) for k, t in enumerate(s.times)]


__all__ = [
    "SimConfig", "ExitRecord", "ExitBatch", "Process", "PathSample", "simulate_exits", "first_exit",
    "sample_hbm_paths", "sample_hbm_path", "sample_y_paths", "sample_y_path", "bessel_step", "worker_count",
]
