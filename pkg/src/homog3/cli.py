"""Command line front end: ``homog3 <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (no closure,
no convergence).  Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import cmc
from . import flux as FX
from . import frames as F
from . import group as Gp
from . import subgroups as SG
from . import surface as S

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def emit_table(rows, schema, path=None) -> str:
    """CSV with a header row, ``\\n`` line endings and round-trip exact floats.

    ``path`` of ``None`` or ``-`` writes to stdout.  Returns the text.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema)
    for r in rows:
        if len(r) != len(schema):
            raise InputError(f"row has {len(r)} fields, schema {len(schema)}")
        w.writerow([_cell(x) for x in r])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return text


def _emit_json(obj):
    sys.stdout.write(json.dumps(obj, indent=2, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(type(x))


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(text, n=None, name="value"):
    try:
        vals = [float(t) for t in str(text).split(",")]
    except ValueError as exc:
        raise InputError(f"{name}: expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise InputError(f"{name}: expected {n} numbers, got {len(vals)}")
    if not all(np.isfinite(vals)):
        raise InputError(f"{name}: values must be finite")
    return np.array(vals)


def parse_range(text) -> list[float]:
    """``a:b:step`` (inclusive), or a comma list."""
    if ":" not in text:
        return list(_floats(text, name="--H"))
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError("--H range must look like start:stop:step")
    a, b, h = _floats(",".join(parts), 3, "--H")
    if h <= 0 or b < a:
        raise InputError("--H range must have step > 0 and stop >= start")
    n = int(np.floor((b - a) / h + 1e-9)) + 1
    return [round(a + k * h, 12) for k in range(n)]


def parse_grid(text):
    try:
        nu, nv = (int(t) for t in text.lower().split("x"))
    except ValueError as exc:
        raise InputError(f"--grid must look like 64x128, got {text!r}") from exc
    if nu < 8 or nv < 8:
        raise InputError("--grid needs at least 8x8")
    return nu, nv


def _space(args):
    return Gp.load_space(args.space)


def _killing_seed(text):
    """``F1``/``Fx``.. or ``a,b,c`` -> Lie vector seeding a right-invariant field."""
    names = {"F1": 0, "F2": 1, "F3": 2, "Fx": 0, "Fy": 1, "Fz": 2}
    if text in names:
        return np.eye(3)[names[text]]
    return _floats(text, 3, "--K")


# ---------------------------------------------------------------------------
# subcommands


def cmd_space(args):
    spec = _space(args)
    out = {"space": spec.to_json(), "name": spec.name, "lie_group": spec.is_lie_group}
    if spec.is_lie_group:
        ric, scal = F.ricci(spec)
        out["ricci"] = ric
        out["scalar_curvature"] = scal
        if spec.kind == Gp.SEMIDIRECT:
            out["trace"] = float(np.trace(spec.A))
    try:
        F.rotation(spec)
        out["rotational"] = True
    except Gp.SpaceError:
        out["rotational"] = False
    _emit_json(out)


def cmd_expm(args):
    A = _floats(args.A, 4, "--A").reshape(2, 2)
    M = Gp.expm2(A, float(args.z))
    emit_table(M.tolist(), ["c0", "c1"], args.out)


def cmd_metric(args):
    spec = _space(args)
    p = _floats(args.point, 3, "--point")
    g = F.metric_tensor(spec, p)
    emit_table(g.tolist(), ["x", "y", "z"], args.out)


def cmd_geodesic(args):
    spec = _space(args)
    p = _floats(getattr(args, "from"), 3, "--from")
    v = _floats(args.dir, 3, "--dir")
    t, pts = F.geodesic(spec, Gp.check_point(spec, p), v, args.T, args.steps)
    emit_table([(ti, *pi) for ti, pi in zip(t, pts)], ["t", "x", "y", "z"], args.out)


def cmd_gaussmap_subgroups(args):
    lam = _floats(args.lambdas, 3, "--lambda")
    if np.any(lam <= 0):
        raise InputError("--lambda entries must be positive")
    theta, G = SG.upsilon_curve(lam, args.samples)
    emit_table([(th, *g) for th, g in zip(theta, G)], ["theta", "g1", "g2", "g3"], args.out)


def _sphere_surface(spec, H, grid):
    if spec.kind == Gp.SEMIDIRECT and not np.any(spec.A) and H > 0:
        return S.sphere_immersion(radius=1.0 / H, n_u=grid[0], n_v=grid[1])
    return cmc.solve_rotational_sphere(spec, H).immersion(*grid)


def cmd_spectrum(args):
    spec = _space(args)
    grid = parse_grid(args.grid)
    if args.surface != "sphere":
        raise InputError("only --surface sphere is supported")
    if args.nullity_tol <= 0:
        raise InputError("--nullity-tol must be positive")
    imm = _sphere_surface(spec, args.H, grid)
    sp = S.stability_spectrum(spec, imm, k=args.k, nullity_tol=args.nullity_tol)
    _emit_json({"H": args.H, "grid": list(grid), **sp.as_dict()})


def cmd_sphere(args):
    spec = _space(args)
    sol = cmc.solve_rotational_sphere(spec, args.H)
    prof = sol.profile
    s = np.linspace(prof.extra["s_start"], prof.extra["s_end"], args.samples + 1)
    pts = prof.at(s)
    if args.out:
        emit_table([(si, *pi) for si, pi in zip(s, pts)], ["s", "x", "y", "z"], args.out)
    _emit_json({"H": sol.H, "closed": sol.closed, "area": sol.area,
                "closure_residual": sol.closure_residual,
                "poles": [list(map(float, q)) for q in sol.poles]})


def cmd_sweep(args):
    spec = _space(args)
    Hs = parse_range(args.H)
    if any(h < 0 for h in Hs):
        raise InputError("--H values must be >= 0")
    rows = cmc.area_sweep(spec, Hs)
    emit_table([(r.H, r.closed, r.area, r.closure_residual) for r in rows],
               ["H", "closed", "area", "closure_residual"], args.out)


def read_profile(path) -> cmc.ProfileCurve:
    """Profile CSV with columns s,x,y,z; closed when the last row repeats the first."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(f"cannot read profile {path}: {exc.strerror}") from exc
    try:
        s = np.array([float(r["s"]) for r in rows])
        P = np.array([[float(r[k]) for k in "xyz"] for r in rows])
    except (KeyError, ValueError) as exc:
        raise InputError(f"profile {path} needs numeric columns s,x,y,z") from exc
    if len(s) < 4 or np.any(np.diff(s) <= 0):
        raise InputError("profile needs >= 4 rows with increasing s")
    closed = bool(np.linalg.norm(P[-1] - P[0]) < 1e-9 * max(1.0, np.abs(P).max()))
    if closed:
        P[-1] = P[0]
    spline = CubicSpline(s, P, axis=0, bc_type="periodic" if closed else "not-a-knot")
    return cmc.ProfileCurve.from_function(spline, (s[0], s[-1]), n=len(s) - 1, closed=closed)


def cmd_gauss_curve(args):
    spec = _space(args)
    Gp._require_group(spec)
    K = _killing_seed(args.K)
    if args.profile:
        prof = read_profile(args.profile)
    elif args.H is not None:
        prof = cmc.closed_symmetric_profile(spec, K, args.H)
    else:
        raise InputError("give --profile or --H")
    imm = cmc.killing_cylinder(spec, K, prof, n_s=args.samples)
    gc = cmc.gauss_curve(spec, imm)
    if args.out:
        emit_table([(si, *g) for si, g in zip(gc.s, gc.points)], ["s", "g1", "g2", "g3"], args.out)
    _emit_json({"verdict": gc.verdict, "closure": gc.closure, "min_speed": gc.min_speed,
                "embedded": gc.embedded})


def load_surface(spec, ref):
    """Surface description: JSON file or inline JSON.

    ``{"type": "sphere", "radius": r, "center": [..]}``,
    ``{"type": "cylinder", "radius": r}`` (circle swept by F3),
    ``{"type": "invariant", "K": [a, b, c], "H": h}`` (closed symmetric loop).
    Returns ``(immersion, H)``.
    """
    text = ref if ref.lstrip().startswith("{") else None
    if text is None:
        try:
            text = Path(ref).read_text()
        except OSError as exc:
            raise InputError(f"cannot read surface {ref}: {exc.strerror}") from exc
    try:
        d = json.loads(text)
        kind = d["type"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"bad surface description: {exc}") from exc
    if kind == "sphere":
        r = float(d.get("radius", 1.0))
        return S.sphere_immersion(radius=r, center=d.get("center", (0, 0, 0))), 1.0 / r
    if kind == "cylinder":
        r = float(d.get("radius", 1.0))
        circ = cmc.ProfileCurve.from_function(
            lambda s: np.stack([r * np.cos(s), r * np.sin(s), 0 * s], -1), (0, 2 * np.pi), closed=True)
        return cmc.killing_cylinder(spec, [0, 0, 1], circ, t_range=(-2.0, 2.0)), 0.5 / r
    if kind == "invariant":
        K = np.asarray(d["K"], dtype=float)
        H = float(d["H"])
        prof = cmc.closed_symmetric_profile(spec, K, H)
        return cmc.killing_cylinder(spec, K, prof, t_range=(-1.0, 1.0)), H
    raise InputError(f"unknown surface type {kind!r}")


def _curve_chain(spec, imm, ref):
    """``u=<value>[,n=<segments>]`` or a CSV of surface parameters (columns u,v)."""
    if ref.startswith("u="):
        opts = dict(item.split("=", 1) for item in ref.split(",") if "=" in item)
        try:
            u, n = float(opts["u"]), int(opts.get("n", 256))
        except ValueError as exc:
            raise InputError(f"bad --curve {ref!r}") from exc
        return FX.surface_curve(spec, imm, u, n), u, n
    try:
        with open(ref, newline="") as fh:
            rows = list(csv.DictReader(fh))
        uv = np.array([[float(r["u"]), float(r["v"])] for r in rows])
    except OSError as exc:
        raise InputError(f"cannot read curve {ref}: {exc.strerror}") from exc
    except (KeyError, ValueError) as exc:
        raise InputError(f"curve {ref} needs numeric columns u,v") from exc
    u = float(uv[0, 0]) if len(uv) and np.ptp(uv[:, 0]) == 0 else None
    return FX.param_curve(spec, imm, uv), u, len(uv)


def _cap_options(ref):
    """``cone``, ``cone@x,y,z``, ``surface`` or JSON (inline or file) like
    ``{"type": "cone", "apex": [x, y, z], "n_rad": 16}``."""
    if ref == "surface":
        return {"type": "surface"}
    if ref.startswith("cone"):
        _, _, rest = ref.partition("@")
        return {"type": "cone", "apex": _floats(rest, 3, "--cap apex").tolist() if rest else None}
    text = ref
    if not ref.lstrip().startswith("{"):
        try:
            text = Path(ref).read_text()
        except OSError as exc:
            raise InputError(f"cannot read cap {ref}: {exc.strerror}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad cap description: {exc}") from exc
    if not isinstance(d, dict) or d.get("type") not in ("cone", "surface"):
        raise InputError('cap JSON needs "type": "cone" or "surface"')
    return d


def _killing_selector(text):
    """Named field (F1, Fz, rot, T, ...) or a,b,c for the right-invariant field it generates."""
    if "," in text:
        return _floats(text, 3, "--K")
    return text


def cmd_flux(args):
    spec = _space(args)
    imm, H = load_surface(spec, args.surface)
    if args.H is not None:
        H = args.H
    alpha, u, n = _curve_chain(spec, imm, args.curve)
    cap = _cap_options(args.cap)
    if cap["type"] == "surface":
        if imm.kind != S.SPHERE or u is None:
            raise InputError("a surface cap needs a sphere-type surface and a u=const curve")
        beta = FX.surface_cap(spec, imm, u, n_v=n)
    else:
        apex = cap.get("apex")
        beta = FX.cone_cap(spec, alpha.vertices, None if apex is None else np.asarray(apex, float),
                           int(cap.get("n_rad", args.n_rad)))
    res = FX.cmc_flux(spec, FX.FluxInput(alpha, beta, H, _killing_selector(args.K)))
    _emit_json({"H": H, **res.as_dict()})


def _series_expm(M, terms=40):
    out, term = np.eye(2), np.eye(2)
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def _selftest_cases(seed=0):
    e = Gp.builtin_space("euclidean")
    h3 = Gp.builtin_space("h3")

    def close(a, b, tol=1e-12):
        return bool(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))) < tol)

    yield "expm2 of the zero matrix", close(Gp.expm2(np.zeros((2, 2)), 1.7), np.eye(2))
    yield "expm2 nilpotent", close(Gp.expm2([[0, 1], [0, 0]], 2.5), [[1, 2.5], [0, 1]])
    yield "abelian product", close(Gp.multiply(e, [1, 2, 3], [4, 5, 6]), [5, 7, 9])
    yield "A=I product", close(Gp.multiply(h3, [0, 0, np.log(2)], [1, 0, 0]), [2, 0, np.log(2)])
    yield "inverse of identity", close(Gp.inverse(h3, [0, 0, 0]), [0, 0, 0])
    yield "A=I inverse in z=0", close(Gp.inverse(h3, [1, 0, 0]), [-1, 0, 0])
    yield "z-axis subgroup", close(Gp.one_param_subgroup(h3, [0, 0, 1], 0.8), [0, 0, 0.8])
    yield "flat frames", close(F.frame_fields(e, [0.3, -1, 2])[0], np.eye(3)[0])
    yield "flat metric", close(F.metric_tensor(e, [1, 2, 3]), np.eye(3))
    yield "flat connection", close(F.connection_coeffs(e), np.zeros((3, 3, 3)))
    yield "flat Ricci", close(F.ricci(e)[0], np.zeros((3, 3)))
    _, pts = F.geodesic(e, np.zeros(3), [1, 2, 0], 1.0, 10)
    yield "flat geodesic", close(pts[-1], [1, 2, 0], 1e-12)
    yield "d/dx is Killing", F.killing_residual(e, F.killing_field(e, "F1"), np.array([0.2, 0.1, 0.4])) < 1e-9
    yield "character of E3", SG.classify_character([0, 0, 1]) is SG.Character.ELLIPTIC
    yield "model identity", close(SG.model_r_rtimes_r([0, 0], [0.7, -1.1]), [0.7, -1.1])
    yield "Pi(e) is the origin", close(SG.project_pi(np.zeros(3)), [0, 0])
    sph = S.sphere_immersion(n_u=16, n_v=32)
    fl = S.fundamental_forms(e, sph, np.array([0.7, 2.0]), np.array([0.3, 4.0]))
    yield "unit sphere H=1, |sigma|^2=2", close(fl.H, 1, 1e-5) and close(fl.sigma_sq, 2, 1e-5)
    plane = S.plane_immersion([0, 0, 0], [1, 0, 0], [0, 0, 1], n=8)
    fl = S.fundamental_forms(e, plane, np.array([0.1]), np.array([0.2]))
    yield "vertical plane is totally geodesic", close(fl.second, 0, 1e-8)
    sol = cmc.solve_rotational_sphere(e, 1.0)
    yield "euclidean H=1 sphere area", abs(sol.area - 4 * np.pi) < 1e-4 * 4 * np.pi
    buf = io.StringIO()
    old, sys.stdout = sys.stdout, buf
    try:
        emit_table([], ["a", "b"])
    finally:
        sys.stdout = old
    yield "empty table is header only", buf.getvalue() == "a,b\n"
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        A, z = rng.uniform(-1, 1, (2, 2)), rng.uniform(-1, 1)
        worst = max(worst, float(np.abs(Gp.expm2(A, z) - _series_expm(z * A)).max()))
    yield f"expm2 vs series on 20 random matrices (seed {seed})", worst < 1e-12


def cmd_selftest(args):
    failed = 0
    for name, ok in _selftest_cases(args.seed):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += not ok
    if failed:
        raise cmc.ConvergenceError(f"{failed} self-test case(s) failed")


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="homog3", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)

    def space_arg(sp):
        sp.add_argument("--space", required=True,
                        help="space JSON file or built-in name (euclidean, h3, nil3, sol3, e2tilde(c), "
                             "h2xr(k), s2xr(k), sl2(l1,l2,l3), nonunimodular(b))")

    sp = sub.add_parser("space", help="describe a space", formatter_class=fmt)
    space_arg(sp)
    sp.set_defaults(func=cmd_space)

    sp = sub.add_parser("expm", help="closed-form exp(zA) for a 2x2 matrix", formatter_class=fmt)
    sp.add_argument("--A", required=True, help="a,b,c,d for [[a,b],[c,d]]")
    sp.add_argument("--z", type=float, required=True, help="exponent scale")
    sp.add_argument("--out", default=None, help="output CSV (default stdout)")
    sp.set_defaults(func=cmd_expm)

    sp = sub.add_parser("metric", help="metric coefficients at a point", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--point", required=True, help="x,y,z")
    sp.add_argument("--out", default=None, help="output CSV (default stdout)")
    sp.set_defaults(func=cmd_metric)

    sp = sub.add_parser("geodesic", help="integrate a geodesic", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--from", required=True, help="start point x,y,z")
    sp.add_argument("--dir", required=True, help="initial velocity in the orthonormal frame")
    sp.add_argument("--T", type=float, default=5.0, help="time span")
    sp.add_argument("--steps", type=int, default=1000, help="number of steps")
    sp.add_argument("--out", default=None, help="output CSV (default stdout)")
    sp.set_defaults(func=cmd_geodesic)

    sp = sub.add_parser("gaussmap-subgroups", help="Gauss map values of the subgroups H^2_theta",
                        formatter_class=fmt)
    sp.add_argument("--lambda", dest="lambdas", required=True, help="l1,l2,l3")
    sp.add_argument("--samples", type=int, default=256, help="number of theta samples (>= 8)")
    sp.add_argument("--out", default=None, help="output CSV (default stdout)")
    sp.set_defaults(func=cmd_gaussmap_subgroups)

    sp = sub.add_parser("spectrum", help="stability operator spectrum of an H-sphere", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--surface", default="sphere", help="surface kind (sphere)")
    sp.add_argument("--H", type=float, default=1.0, help="mean curvature")
    sp.add_argument("--grid", default="64x128", help="n_u x n_v")
    sp.add_argument("--k", type=int, default=8, help="number of eigenvalues")
    sp.add_argument("--nullity-tol", type=float, default=0.05, help="|eigenvalue| counted as kernel")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("sphere", help="rotational H-sphere by shooting", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--H", type=float, required=True, help="mean curvature (>= 0)")
    sp.add_argument("--samples", type=int, default=512, help="profile rows in --out")
    sp.add_argument("--out", default=None, help="profile CSV (s,x,y,z)")
    sp.set_defaults(func=cmd_sphere)

    sp = sub.add_parser("sweep", help="area of rotational H-spheres over a range of H", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--H", required=True, help="start:stop:step (inclusive) or a comma list")
    sp.add_argument("--out", default=None, help="output CSV (default stdout)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gauss-curve", help="Gauss map curve of an invariant surface", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--K", default="F3", help="F1|F2|F3 or a,b,c seeding the right-invariant field")
    sp.add_argument("--profile", default=None, help="profile CSV (s,x,y,z)")
    sp.add_argument("--H", type=float, default=None, help="solve a closed symmetric loop instead")
    sp.add_argument("--samples", type=int, default=256, help="samples along the profile")
    sp.add_argument("--out", default=None, help="output CSV (s,g1,g2,g3)")
    sp.set_defaults(func=cmd_gauss_curve)

    sp = sub.add_parser("flux", help="CMC flux across a coordinate curve", formatter_class=fmt)
    space_arg(sp)
    sp.add_argument("--surface", required=True, help="surface JSON file or inline JSON")
    sp.add_argument("--curve", default="u=0.5",
                    help="u=<value>[,n=<segments>] or a CSV of surface parameters (u,v)")
    sp.add_argument("--cap", default="cone", help="cone, cone@x,y,z, surface, or cap JSON (file or inline)")
    sp.add_argument("--n-rad", type=int, default=16, help="radial rings of cone caps")
    sp.add_argument("--K", default="F3", help="Killing field selector or a,b,c")
    sp.add_argument("--H", type=float, default=None, help="override the surface's mean curvature")
    sp.set_defaults(func=cmd_flux)

    sp = sub.add_parser("selftest", help="run the built-in trivial examples", formatter_class=fmt)
    sp.add_argument("--seed", type=int, default=0, help="seed for the randomized cases")
    sp.set_defaults(func=cmd_selftest)
    return p


def _fail(kind, message, code, **extra):
    sys.stderr.write(json.dumps({"kind": kind, "message": message, **extra}, default=_jsonable) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    try:
        args.func(args)
    except cmc.NoClosureError as exc:
        return _fail("no_closure", str(exc), EXIT_NUMERIC, residual=exc.residual, escape=exc.escape)
    except (cmc.ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail("convergence", str(exc), EXIT_NUMERIC)
    except (InputError, Gp.SpaceError, FX.FluxError, ValueError) as exc:
        return _fail("validation", str(exc), EXIT_INPUT)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_INPUT)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
