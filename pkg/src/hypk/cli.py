"""Command-line front end.

Subcommands ``green``, ``poisson``, ``bounds``, ``lemma`` and ``validate-all``.
Exit codes: 0 success, 1 failed acceptance criteria, 2 invalid input,
3 numerical non-convergence.  ``--config FILE`` reads ``key = value`` lines
(``#`` starts a comment); flags given on the command line take precedence.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import acceptance, bounds, kernels
from .geometry import BoundaryFace, DomainSpec, GeometryError, Status, classify
from .output import atomic_write, dumps, fmt
from .simulate import SimConfig, simulate_exits
from .theory import eta

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
CSV_HEADER = ("x", "y", "mu", "lambda", "value", "stderr", "n_paths", "seed")


class InputError(ValueError):
    pass


def _coords(p) -> str:
    return " ".join(fmt(float(v)) for v in p)


def _domain(kind: str, a, b) -> DomainSpec:
    if kind == "halfspace":
        if a is None:
            raise InputError("--a is required for a half-space")
        return DomainSpec.halfspace(a)
    if b is None:
        raise InputError(f"--b is required for a {kind}")
    if kind == "strip":
        return DomainSpec.strip(b)
    if a is None:
        raise InputError("--a is required for a slab")
    return DomainSpec.slab(a, b)


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of a ``green``/``poisson`` run."""

    domain: DomainSpec
    mu: float
    lam: float
    x: tuple
    targets: tuple
    sim: SimConfig
    process: str
    out: Path | None

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        dom = _domain(ns.domain, ns.a, ns.b)
        eta(ns.mu, ns.lam)
        x = tuple(ns.x)
        if len(x) < 2:
            raise InputError("--x needs at least two coordinates")
        if classify(x, dom).status is not Status.INTERIOR:
            raise GeometryError(f"x = {x} is not interior to {dom}")
        targets = tuple(tuple(y) for y in (ns.y or []))
        if not targets:
            raise InputError("at least one --y is required")
        if any(len(y) != len(x) for y in targets):
            raise InputError("all points must have the same dimension")
        sim = SimConfig(dt=ns.dt, t_max=ns.t_max, n_paths=ns.paths, seed=ns.seed, eps_ball=ns.eps)
        return cls(dom, float(ns.mu), float(ns.lam), x, targets, sim, ns.process,
                   Path(ns.out) if ns.out else None)


# --- config files ----------------------------------------------------------------------------

def read_config(path) -> list:
    """``[(key, [tokens])]`` from a ``key = value`` file."""
    items = []
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{ln}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise InputError(f"{path}:{ln}: empty key")
        items.append((k.replace("_", "-"), v.split()))
    return items


def _merge_config(argv: list) -> list:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise InputError("--config needs a file name")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    given = {a.split("=", 1)[0] for a in rest if a.startswith("--")}
    extra = []
    for k, toks in read_config(path):
        flag = f"--{k}"
        if flag in given:
            continue
        extra += [flag] + toks
    # file values go right after the subcommand so later flags win
    return rest[:1] + extra + rest[1:]


# --- output ----------------------------------------------------------------------------------

def _emit(out: Path | None, csv_text: str, summary: dict):
    if out is None:
        sys.stdout.write(csv_text)
        return
    atomic_write(out, csv_text)
    atomic_write(out.with_suffix(".json"), dumps(summary))


def estimates_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_coords(r["x"]), _coords(r["y"]), fmt(r["mu"]), fmt(r["lambda"]), fmt(r["value"]),
                    fmt(r["stderr"]), r["n_paths"], r["seed"]])
    return buf.getvalue()


def parse_estimates_csv(text: str) -> list:
    rd = csv.DictReader(io.StringIO(text))
    if tuple(rd.fieldnames or ()) != CSV_HEADER:
        raise InputError("unexpected CSV header")
    out = []
    for r in rd:
        out.append({"x": tuple(map(float, r["x"].split())), "y": tuple(map(float, r["y"].split())),
                    "mu": float(r["mu"]), "lambda": float(r["lambda"]), "value": float(r["value"]),
                    "stderr": float(r["stderr"]), "n_paths": int(r["n_paths"]), "seed": int(r["seed"])})
    return out


def _estimate_row(rc: RunConfig, y, est) -> dict:
    return {"x": rc.x, "y": tuple(y), "mu": rc.mu, "lambda": rc.lam, "value": est.value, "stderr": est.stderr,
            "n_paths": est.n_paths, "seed": rc.sim.seed}


def _summary(rc: RunConfig, kind: str, rows, ests) -> dict:
    return {"command": kind, "domain": rc.domain.to_dict(), "mu": rc.mu, "lambda": rc.lam, "eta": eta(rc.mu, rc.lam),
            "x": rc.x, "process": rc.process, "dt": rc.sim.dt, "t_max": rc.sim.t_max, "n_paths": rc.sim.n_paths,
            "seed": rc.sim.seed,
            "estimates": [dict(r, flags=list(e.flags), value_half=e.value_half) for r, e in zip(rows, ests)]}


# --- commands --------------------------------------------------------------------------------

def cmd_green(ns) -> int:
    rc = RunConfig.from_args(ns)
    ests, _ = kernels.estimate_green_many(rc.domain, rc.mu, rc.lam, rc.x, rc.targets, rc.sim, process=rc.process)
    rows = [_estimate_row(rc, y, e) for y, e in zip(rc.targets, ests)]
    _emit(rc.out, estimates_csv(rows), _summary(rc, "green", rows, ests))
    return EXIT_OK


def _region_around(dom: DomainSpec, y, half: float) -> kernels.BoundaryRegion:
    loc = classify(y, dom)
    if loc.status is not Status.ON_FACE:
        raise GeometryError(f"y = {tuple(y)} is not on the boundary of {dom}")
    face = loc.face
    y = np.asarray(y, dtype=float)
    along = y[:-1] if face is BoundaryFace.BOTTOM else y[1:]
    return kernels.BoundaryRegion(face, tuple(along - half), tuple(along + half))


def _half_width(ns, dom):
    return ns.width * (dom.b if math.isfinite(dom.b) else 1.0)


def cmd_poisson(ns) -> int:
    rc = RunConfig.from_args(ns)
    regions = [_region_around(rc.domain, y, _half_width(ns, rc.domain)) for y in rc.targets]
    ests, _ = kernels.estimate_poisson_many(rc.domain, rc.mu, rc.lam, rc.x, regions, rc.sim, process=rc.process)
    rows = [_estimate_row(rc, y, e) for y, e in zip(rc.targets, ests)]
    summary = _summary(rc, "poisson", rows, ests)
    summary["regions"] = [{"face": r.face.value, "lo": r.lo, "hi": r.hi} for r in regions]
    _emit(rc.out, estimates_csv(rows), summary)
    return EXIT_OK


ESTIMATES = ("slab-green", "slab-poisson", "strip", "halfspace")
ALIASES = {"4.1": "slab-green", "4.2": "slab-poisson"}


def _bound_domain(ns) -> DomainSpec:
    if ns.theorem in ("slab-green", "slab-poisson"):
        return _domain("slab", ns.a, ns.b)
    if ns.theorem == "strip":
        return _domain("strip", None, ns.b)
    return _domain("halfspace", ns.a, None)


def _bound_value(ns, dom: DomainSpec, x, y, on_face: bool) -> float:
    n = len(x)
    if ns.theorem in ("slab-green", "slab-poisson"):
        if on_face:
            return bounds.poisson_bound_slab(ns.mu, n, dom.a, dom.b, x, y)
        return bounds.green_bound_slab(ns.mu, n, dom.a, dom.b, x, y)
    if ns.theorem == "strip":
        if on_face:
            return bounds.poisson_bound_strip(ns.mu, n, dom.b, x, y)
        return bounds.green_bound_strip(ns.mu, n, dom.b, x, y)
    if on_face:
        return bounds.poisson_bound_halfspace(ns.mu, n, dom.a, x, y)
    return bounds.green_bound_halfspace(ns.mu, n, dom.a, x, y)


def _quad_value(ns, dom: DomainSpec, x, y, on_face: bool) -> float:
    if not on_face:
        return kernels.green_quadrature(dom, ns.mu, x, y)
    if ns.theorem == "halfspace":
        raise InputError("no quadrature for the half-space Poisson kernel; use --source mc")
    return kernels.slab_poisson_quadrature(ns.mu, dom.a, x, y, dom.b)


def cmd_bounds(ns) -> int:
    ns.theorem = ALIASES.get(ns.theorem, ns.theorem)
    dom = _bound_domain(ns)
    if (ns.theorem, ns.kind) in (("slab-green", "poisson"), ("slab-poisson", "green")):
        raise InputError(f"{ns.theorem} does not cover the {ns.kind} kernel")
    xs = [tuple(p) for p in (ns.x or [])]
    ys = [tuple(p) for p in (ns.y or [])]
    if not xs or not ys:
        raise InputError("empty sweep grid: give at least one --x and one --y")
    n = len(xs[0])
    if any(len(p) != n for p in xs + ys):
        raise InputError("all points must have the same dimension")
    for x in xs:
        if classify(x, dom).status is not Status.INTERIOR:
            raise GeometryError(f"x = {x} is not interior to {dom}")
    status = {y: classify(y, dom) for y in ys}
    for y, loc in status.items():
        if loc.status is Status.OUTSIDE:
            raise GeometryError(f"y = {y} lies outside {dom}")
        if ns.theorem == "slab-green" and loc.status is not Status.INTERIOR:
            raise GeometryError(f"y = {y} must be interior for the Green estimate")
        if ns.theorem == "slab-poisson" and loc.status is not Status.ON_FACE:
            raise GeometryError(f"y = {y} must lie on a face for the Poisson estimate")
        if ns.kind == "green" and loc.status is not Status.INTERIOR:
            raise GeometryError(f"y = {y} is on the boundary but --kind green was requested")
        if ns.kind == "poisson" and loc.status is not Status.ON_FACE:
            raise GeometryError(f"y = {y} is interior but --kind poisson was requested")
    mc = ns.source == "mc"
    rep = bounds.BoundReport(ns.theorem, ("x", "y"), extra_columns=("stderr",) if mc else ())
    mc_vals = {}
    if mc:
        sim = SimConfig(dt=ns.dt, t_max=ns.t_max, n_paths=ns.paths, seed=ns.seed, eps_ball=ns.eps)
        for x in xs:
            inner = [y for y in ys if status[y].status is Status.INTERIOR and y != x]
            faces = [y for y in ys if status[y].status is Status.ON_FACE]
            if inner:
                ests, batch = kernels.estimate_green_many(dom, ns.mu, 0.0, x, inner, sim)
            else:
                batch = simulate_exits("hbm", ns.mu, x, dom, sim)
                ests = []
            for y, e in zip(inner, ests):
                mc_vals[(x, y)] = e
            for y in faces:
                mc_vals[(x, y)] = kernels.poisson_from_batch(batch, _region_around(dom, y, _half_width(ns, dom)))
    for x, y in itertools.product(xs, ys):
        on_face = status[y].status is Status.ON_FACE
        if x == y:
            rep.rows.append(bounds.BoundRow((_coords(x), _coords(y)), math.nan, math.inf, math.nan,
                                            "skipped=diagonal", (math.nan,) if mc else ()))
            continue
        bnd = _bound_value(ns, dom, x, y, on_face)
        if mc:
            e = mc_vals[(x, y)]
            val, extra = e.value, (e.stderr,)
        else:
            val, extra = _quad_value(ns, dom, x, y, on_face), ()
        rep.rows.append(bounds.BoundRow((_coords(x), _coords(y)), float(val), float(bnd), float(val / bnd), "",
                                        extra))
    rep.meta.update(theorem=ns.theorem, mu=ns.mu, domain=dom.to_dict(), source=ns.source)
    _emit(Path(ns.out) if ns.out else None, rep.to_csv(), rep.summary())
    return EXIT_OK


def _grid(spec: str | None, default):
    """``lo:hi:count`` (geometric) or a comma-separated list."""
    if spec is None:
        return default
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise InputError(f"grid spec {spec!r} must be lo:hi:count")
        lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
        if not (lo > 0 and hi >= lo and cnt >= 1):
            raise InputError(f"grid spec {spec!r} needs 0 < lo <= hi and count >= 1")
        return np.geomspace(lo, hi, cnt)
    vals = [float(v) for v in spec.split(",") if v.strip()]
    return np.array(vals)


def cmd_lemma(ns) -> int:
    gamma = list(ns.gamma or [])
    bounds.check_exponents(ns.alpha, ns.beta, gamma)
    a1 = _grid(ns.a_grid, np.geomspace(1e-3, 1e3, 7))
    bg = _grid(ns.b_grid, bounds.default_b_grid())
    if a1.size == 0 or bg.size == 0:
        raise InputError("empty sweep grid")
    A = np.stack([m.ravel() for m in np.meshgrid(*([a1] * len(gamma)), indexing="ij")], axis=1) if gamma \
        else np.zeros((1, 0))
    rep = bounds.lemma_certify(ns.alpha, ns.beta, gamma, A, bg, keep_rows=True)
    _emit(Path(ns.out) if ns.out else None, rep.to_csv(), rep.summary())
    return EXIT_OK


def cmd_validate_all(ns) -> int:
    only = sorted(set(ns.only)) if ns.only else None
    if only and any(k not in acceptance.CRITERIA for k in only):
        raise InputError(f"criteria are numbered 1..{len(acceptance.CRITERIA)}")
    res = acceptance.run_suite(ns.seed, ns.quick, only, echo=print)
    acceptance.write_outputs(res, Path(ns.out), ns.seed, ns.quick)
    ok = all(r.passed for r in res)
    print(f"{sum(r.passed for r in res)}/{len(res)} criteria passed")
    return EXIT_OK if ok else EXIT_FAILED


# --- parser ----------------------------------------------------------------------------------

def _point(s):
    return float(s)


def _sim_flags(p, paths=10_000):
    p.add_argument("--paths", type=int, default=paths, help="number of simulated paths")
    p.add_argument("--dt", type=float, default=1e-3, help="time step")
    p.add_argument("--t-max", type=float, default=20.0, help="simulation horizon")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--eps", type=float, default=None, help="Green ball radius (default 0.02 |x - y|)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("green", cmd_green, "Monte Carlo Green function estimates"),
                               ("poisson", cmd_poisson, "Monte Carlo Poisson kernel region averages")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key = value file")
        p.add_argument("--domain", choices=("halfspace", "slab", "strip"), required=True)
        p.add_argument("--a", type=float, help="horocycle level")
        p.add_argument("--b", type=float, help="width in the first coordinate")
        p.add_argument("--mu", type=float, required=True, help="index (> 0)")
        p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="discount rate (>= 0)")
        p.add_argument("--x", type=_point, nargs="+", required=True, help="starting point")
        p.add_argument("--y", type=_point, nargs="+", action="append", help="target point (repeatable)")
        p.add_argument("--process", choices=("hbm", "y"), default="hbm", help="path representation")
        if name == "poisson":
            p.add_argument("--width", type=float, default=0.02,
                           help="region half-width around each y, relative to b (absolute for a half-space)")
        _sim_flags(p)
        p.add_argument("--out", help="CSV file; a JSON summary is written next to it")
        p.set_defaults(func=fn)

    p = sub.add_parser("bounds", help="compare kernel values with the closed-form estimates")
    p.add_argument("--config", help="key = value file")
    p.add_argument("--theorem", choices=ESTIMATES + tuple(ALIASES), required=True,
                   help="which estimate: slab-green (alias 4.1), slab-poisson (alias 4.2), strip or halfspace")
    p.add_argument("--kind", choices=("green", "poisson", "auto"), default="auto",
                   help="restrict to one kernel (default: decided by where y lies)")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--x", type=_point, nargs="+", action="append", help="interior point (repeatable)")
    p.add_argument("--y", type=_point, nargs="+", action="append", help="interior or boundary point (repeatable)")
    p.add_argument("--source", choices=("quad", "mc"), default="quad", help="how kernel values are measured")
    p.add_argument("--width", type=float, default=0.02, help="Monte Carlo boundary region half-width")
    _sim_flags(p, 20_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("lemma", help="certify the integral comparison over an (a, b) sweep")
    p.add_argument("--config", help="key = value file")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, nargs="*", default=[])
    p.add_argument("--a-grid", help="lo:hi:count or comma list, shared by every a_i")
    p.add_argument("--b-grid", help="lo:hi:count or comma list")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("validate-all", help="run the acceptance suite")
    p.add_argument("--config", help="key = value file")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--quick", action="store_true", help="reduced path counts and grids")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    p.add_argument("--out", default="validation", help="output directory")
    p.set_defaults(func=cmd_validate_all)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _merge_config(argv)
        ns = build_parser().parse_args(argv)
        return ns.func(ns)
    except SystemExit as e:
        return EXIT_INPUT if e.code not in (0, None) else EXIT_OK
    except (ArithmeticError, FloatingPointError) as e:
        print(f"hypk: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        print(f"hypk: invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
