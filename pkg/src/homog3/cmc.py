"""Constant mean curvature surfaces invariant under a Killing field.

A surface swept by the flow of a Killing field ``K`` is determined by a
profile curve in a transversal slice.  On the orbit space, with the quotient
metric ``Q = g - (g K)(g K)^T / |K|^2`` and ``psi = log |K|``, the swept
surface has

    2 H = k_g - d psi(nu)

where ``k_g`` is the geodesic curvature of the profile with respect to its
unit normal ``nu`` (the quotient rotation of the tangent by +90 degrees) and
``H`` is taken with respect to the horizontal lift of ``nu``.  Profiles are
integrated from this relation; the mean curvature of the resulting immersion
is re-measured independently by :mod:`homog3.surface`.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import frames as F
from . import group as Gp
from . import surface as S
from .group import SpaceSpec
from .subgroups import is_simple_spherical

RTOL = 1e-11
ATOL = 1e-11
CLOSURE_TOL = 1e-6


class NoClosureError(RuntimeError):
    """A shooting run did not return to the axis (or did not close up)."""

    def __init__(self, message, residual=float("nan"), escape=""):
        super().__init__(message)
        self.residual = residual
        self.escape = escape


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# orbit space


class OrbitSpace:
    """Quotient geometry of an affine slice ``origin + x0 a + x1 b`` under ``K``."""

    def __init__(self, spec: SpaceSpec, K, origin, a, b, fd_step=1e-3, axis=False):
        self.spec = spec
        self.axis = axis  # K vanishes on the second slice axis (rotations)
        self.K = K
        self.origin = np.asarray(origin, dtype=float)
        self.basis = np.stack([np.asarray(a, float), np.asarray(b, float)])
        self.h = fd_step

    def point(self, x):
        x = np.asarray(x, dtype=float)
        return self.origin + x[..., 0:1] * self.basis[0] + x[..., 1:2] * self.basis[1]

    def _raw(self, x):
        p = self.point(x)
        g = F.metric_tensor(self.spec, p)
        k = self.K(p)
        gk = np.einsum("...ij,...j->...i", g, k)
        k2 = np.einsum("...i,...i->...", k, gk)
        gb = np.einsum("ai,...ij,bj->...ab", self.basis, g, self.basis)
        proj = np.einsum("ai,...i->...a", self.basis, gk)
        Q = gb - proj[..., :, None] * proj[..., None, :] / k2[..., None, None]
        return Q, k2

    def quotient_metric(self, x):
        return self._raw(x)[0]

    def killing_sq(self, x):
        return self._raw(x)[1]

    def geometry(self, x):
        """(Q, Christoffel symbols of Q, |K|^2, grad |K|^2) at one point."""
        x = np.asarray(x, dtype=float)
        h = self.h
        if self.axis:
            h = min(h, 0.25 * abs(x[0]))
        offs = np.array([-2, -1, 1, 2])
        w = np.array([1, -8, 8, -1]) / (12 * h)
        pts = [x]
        for i in range(2):
            for o in offs:
                y = x.copy()
                y[i] += o * h
                pts.append(y)
        Q, k2 = self._raw(np.array(pts))
        dQ = np.stack([np.tensordot(w, Q[1 + 4 * i:5 + 4 * i], axes=1) for i in range(2)])
        dk2 = np.array([w @ k2[1 + 4 * i:5 + 4 * i] for i in range(2)])
        Qi = np.linalg.inv(Q[0])
        first = 0.5 * (np.einsum("ijl->ijl", dQ) + np.einsum("jil->ijl", dQ) - np.einsum("lij->ijl", dQ))
        gam = np.einsum("kl,ijl->kij", Qi, first)
        return Q[0], gam, k2[0], dk2

    @staticmethod
    def normal(Q, T):
        """Unit normal: the Q-rotation of ``T`` by +90 degrees."""
        n = np.linalg.solve(Q, np.array([-T[1], T[0]]))
        return n / np.sqrt(n @ Q @ n)

    def rhs(self, H):
        def f(s, y):
            x, T = y[:2], y[2:4]
            Q, gam, k2, dk2 = self.geometry(x)
            nu = self.normal(Q, T)
            kg = 2 * H + 0.5 * (dk2 @ nu) / k2
            acc = -np.einsum("kij,i,j->k", gam, T, T) + kg * nu
            return np.concatenate([T, acc, [np.sqrt(k2)]])

        return f


@dataclass
class ProfileCurve:
    """Profile in a slice: arclength samples, slice points, turning angle."""

    s: np.ndarray
    points: np.ndarray  # slice coordinates (n, 2)
    angle: np.ndarray  # turning angle of the tangent in the quotient metric
    at: Callable[[np.ndarray], np.ndarray]  # s -> ambient points
    closed: bool = False
    closure_residual: float = float("nan")
    orbit: OrbitSpace | None = None
    extra: dict = field(default_factory=dict)

    @property
    def length(self):
        return float(self.s[-1] - self.s[0])

    def reparametrized(self, scale, shift) -> "ProfileCurve":
        """Same curve traversed as ``s -> scale * s + shift``."""
        at = self.at
        s_new = (self.s - shift) / scale
        return ProfileCurve(s_new, self.points, self.angle, lambda s: at(scale * np.asarray(s) + shift),
                            self.closed, self.closure_residual, self.orbit, dict(self.extra))

    @classmethod
    def from_function(cls, fn, s_range, n=256, closed=False):
        s = np.linspace(s_range[0], s_range[1], n + 1)
        pts = fn(s)
        d = np.gradient(pts, s, axis=0)
        ang = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
        return cls(s, pts[:, :2], ang, fn, closed, 0.0 if closed else float("nan"))


def _angle_samples(orbit, xs, Ts):
    out = np.empty(len(xs))
    for i, (x, T) in enumerate(zip(xs, Ts)):
        Q = orbit.quotient_metric(x)
        L = np.linalg.cholesky(Q)
        t = L.T @ T
        out[i] = np.arctan2(t[1], t[0])
    return np.unwrap(out)


def _profile_from_solution(orbit, sol, s_end, n=512, closed=False, residual=float("nan")):
    s = np.linspace(0.0, s_end, n + 1)
    Y = sol.sol(s)
    xs, Ts = Y[:2].T, Y[2:4].T
    ang = _angle_samples(orbit, xs, Ts)

    def at(q):
        q = np.asarray(q, dtype=float)
        return orbit.point(np.moveaxis(sol.sol(q.ravel())[:2], 0, -1)).reshape(q.shape + (3,))

    return ProfileCurve(s, xs, ang, at, closed, residual, orbit, {"solution": sol})


# ---------------------------------------------------------------------------
# Killing cylinders


def killing_orbit_space(spec: SpaceSpec, K_seed, start) -> OrbitSpace:
    """Orbit space of the right-invariant field of ``K_seed`` through ``start``."""
    K_seed = np.asarray(K_seed, dtype=float)
    if not np.any(K_seed):
        raise ValueError("K must be nonzero")
    K = F.killing_field(spec, K_seed)
    k0 = K(np.asarray(start, float))
    # coordinate-orthonormal complement of K(start)
    _, _, vt = np.linalg.svd(k0[None, :])
    a, b = vt[1], vt[2]
    if np.linalg.det(np.stack([a, b, k0])) < 0:
        b = -b
    return OrbitSpace(spec, K, start, a, b)


def solve_profile_cmc(spec: SpaceSpec, K_seed, H_target: float, start=(0.0, 0.0, 0.0),
                      angle: float = 0.0, length: float = 10.0, orbit: OrbitSpace | None = None,
                      slice_start=(0.0, 0.0), events=None) -> ProfileCurve:
    """Integrate a profile whose swept surface has mean curvature ``H_target``.

    ``angle`` is measured in the quotient metric from the first slice axis.
    """
    if not np.isfinite(H_target):
        raise ValueError("H_target must be finite")
    orbit = orbit or killing_orbit_space(spec, K_seed, start)
    x0 = np.asarray(slice_start, dtype=float)
    Q = orbit.quotient_metric(x0)
    L = np.linalg.cholesky(Q)
    T0 = np.linalg.solve(L.T, np.array([np.cos(angle), np.sin(angle)]))
    y0 = np.concatenate([x0, T0, [0.0]])
    sol = solve_ivp(orbit.rhs(H_target), (0.0, length), y0, method="DOP853", rtol=RTOL,
                    atol=ATOL, dense_output=True, events=events)
    if sol.status < 0:
        raise ConvergenceError(f"profile integration failed: {sol.message}")
    prof = _profile_from_solution(orbit, sol, sol.t[-1])
    prof.extra.update(H=H_target, K_seed=np.asarray(K_seed, float), spec=spec)
    return prof


def closed_symmetric_profile(spec: SpaceSpec, K_seed, H_target: float, start=(0.0, 0.0, 0.0),
                             bracket=(0.05, 100.0), n_scan=24, tol=1e-12) -> ProfileCurve:
    """Closed profile loop for orbit spaces symmetric in both slice axes.

    Starts perpendicular to the first slice axis at offset ``a``; the loop
    closes when the first crossing of the second axis is perpendicular.  The
    offset is found by bisection on that crossing defect.
    """
    orbit = killing_orbit_space(spec, K_seed, start)
    s_max = 50.0 / (abs(H_target) + 0.1)

    def cross(s, y):
        return y[0]

    cross.terminal = True
    cross.direction = -1

    def defect(a):
        prof = solve_profile_cmc(spec, K_seed, H_target, orbit=orbit, slice_start=(a, 0.0),
                                 angle=np.pi / 2, length=s_max, events=cross)
        sol = prof.extra["solution"]
        if sol.status != 1:
            raise NoClosureError("profile never crossed the symmetry axis")
        y = sol.y_events[0][0]
        Q = orbit.quotient_metric(y[:2])
        T = y[2:4]
        # component of T along the second slice axis, normalized
        e2 = np.array([0.0, 1.0]) / np.sqrt(Q[1, 1])
        return float(T @ Q @ e2)

    grid = np.geomspace(bracket[0], bracket[1], n_scan)
    vals = []
    for a in grid:
        try:
            vals.append(defect(a))
        except NoClosureError:
            vals.append(np.nan)
    vals = np.array(vals)
    root = None
    for i in range(len(grid) - 1):
        if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] <= 0:
            root = brentq(defect, grid[i], grid[i + 1], xtol=tol, rtol=1e-15, maxiter=200)
            break
    if root is None:
        raise NoClosureError("no sign change of the crossing defect in the bracket")
    # by the two reflections the loop is four copies of the quarter arc
    quarter = solve_profile_cmc(spec, K_seed, H_target, orbit=orbit, slice_start=(root, 0.0),
                                angle=np.pi / 2, length=s_max, events=cross)
    x0 = np.array([root, 0.0])
    Q = orbit.quotient_metric(x0)
    T0 = np.array([0.0, 1.0]) / np.sqrt(Q[1, 1])
    y0 = np.concatenate([x0, T0, [0.0]])
    L = 4 * float(quarter.extra["solution"].t_events[0][0])
    sol = solve_ivp(orbit.rhs(H_target), (0.0, L), y0, method="DOP853", rtol=RTOL,
                    atol=ATOL, dense_output=True)
    yL = sol.sol(L)
    residual = float(np.linalg.norm(yL[:2] - x0) + np.linalg.norm(yL[2:4] - T0))
    prof = _profile_from_solution(orbit, sol, L, closed=residual < 1e-4, residual=residual)
    prof.extra.update(H=H_target, K_seed=np.asarray(K_seed, float), spec=spec, offset=root)
    # evaluate through the reflections of the quarter arc, so the loop is
    # exactly periodic; the full integration above only measures closure
    qsol = quarter.extra["solution"]
    L4 = L / 4

    def at(q):
        q = np.asarray(q, dtype=float)
        r = np.mod(q, L)
        k = np.minimum((r // L4).astype(int), 3)
        local = np.choose(k, [r, L / 2 - r, r - L / 2, L - r])
        xy = qsol.sol(local.ravel())[:2].T.reshape(q.shape + (2,))
        sx = np.choose(k, [1.0, -1.0, -1.0, 1.0])[..., None]
        sy = np.choose(k, [1.0, 1.0, -1.0, -1.0])[..., None]
        return orbit.point(xy * np.concatenate([sx, sy], axis=-1))

    prof.at = at
    return prof


def killing_cylinder(spec: SpaceSpec, K_seed, profile: ProfileCurve, t_range=(0.0, 1.0),
                     n_t=16, n_s=128) -> S.Immersion:
    """``f(t, s) = Gamma(t) * beta(s)`` with ``Gamma`` the subgroup of ``K_seed``.

    The chart is ``(u, v) = (t, s)``; ``s`` is periodic when the profile is
    closed.  The orientation makes the normal the lift of the profile normal.
    """
    Gp._require_group(spec)
    K_seed = np.asarray(K_seed, dtype=float)
    if not np.any(K_seed):
        raise ValueError("K must be nonzero")
    at = profile.at
    s0, s1 = float(profile.s[0]), float(profile.s[-1])

    def chart(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        if profile.closed:
            v = s0 + np.mod(v - s0, s1 - s0)
        base = at(v)
        return Gp.multiply(spec, Gp.one_param_subgroup(spec, K_seed, u), base)

    # transversality: K must not be tangent to the profile
    ss = np.linspace(s0, s1, 33)[:-1]
    K = F.killing_field(spec, K_seed)
    pts = at(ss)
    dp = (at(ss + 1e-6) - at(ss - 1e-6)) / 2e-6
    kk = K(pts)
    cosang = np.abs(F.inner(spec, pts, kk, dp)) / (F.norm(spec, pts, kk) * F.norm(spec, pts, dp))
    if np.any(cosang > 1 - 1e-9):
        raise ValueError("profile is tangent to a Killing orbit")
    kind = S.CYLINDER if profile.closed else S.RECT
    imm = S.Immersion(chart, t_range, (s0, s1), n_t, n_s, kind, 1)
    if profile.orbit is not None:
        # compare the computed normal with the lift of the profile normal
        mid = 0.5 * (s0 + s1) if not profile.closed else s0 + 0.25 * (s1 - s0)
        fld = S.fundamental_forms(spec, imm, np.array([t_range[0]]), np.array([mid]))
        sol = profile.extra.get("solution")
        if sol is not None:
            y = sol.sol(mid)
            Q = profile.orbit.quotient_metric(y[:2])
            nu = OrbitSpace.normal(Q, y[2:4])
            nu3 = nu @ profile.orbit.basis
            if F.inner(spec, fld.point[0], fld.normal[0], nu3) < 0:
                imm = imm.flipped()
    return imm


# ---------------------------------------------------------------------------
# rotational spheres


@dataclass
class SphereSolution:
    H: float
    profile: ProfileCurve
    area: float
    poles: tuple
    closed: bool
    closure_residual: float
    spec: SpaceSpec | None = None
    shift: np.ndarray | None = None  # left translation applied to the whole sphere

    def translated(self, a) -> "SphereSolution":
        a = np.asarray(a, dtype=float)
        shift = a if self.shift is None else Gp.multiply(self.spec, a, self.shift)
        poles = tuple(Gp.multiply(self.spec, a, q) for q in self.poles)
        return SphereSolution(self.H, self.profile, self.area, poles, self.closed,
                              self.closure_residual, self.spec, shift)

    def immersion(self, n_u=64, n_v=128) -> S.Immersion:
        """Sphere chart: u from the first pole to the second, v the rotation angle."""
        rot = F.rotation(self.spec)
        ext = self.profile.extra
        s_lo, s_hi = ext["s_start"], ext["s_end"]
        total = s_hi + ext["d_end"]
        at = self.profile.at
        p_top, p_bot = ext["axis_points"]

        def chart(u, v):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            s = u / np.pi * total
            inner = np.clip(s, s_lo, s_hi)
            base = at(inner)
            lo = (s < s_lo)[..., None]
            hi = (s > s_hi)[..., None]
            # caps shorter than the grid spacing: linear to the axis point
            wl = np.clip(s / s_lo, 0, 1)[..., None]
            wh = np.clip((total - s) / ext["d_end"], 0, 1)[..., None]
            base = np.where(lo, p_top + wl * (at(np.full(s.shape, s_lo)) - p_top), base)
            base = np.where(hi, p_bot + wh * (at(np.full(s.shape, s_hi)) - p_bot), base)
            return rot.flow(base, v)

        imm = S.Immersion(chart, (0.0, np.pi), (0.0, 2 * np.pi), n_u, n_v, S.SPHERE, 1)
        fld = S.fundamental_forms(self.spec, imm, np.array([np.pi / 2]), np.array([0.3]))
        if fld.H[0] * self.H < 0:
            imm = imm.flipped()
        if self.shift is not None:
            imm = imm.translated(self.spec, self.shift)
        return imm


def _radial_curvature(orbit: OrbitSpace, x):
    """Geodesic curvature of the line ``t -> x + t e_1`` w.r.t. its left normal."""
    Q, gam, _, _ = orbit.geometry(np.asarray(x, dtype=float))
    e = np.array([1.0, 0.0])
    acc = gam[:, 0, 0]
    return float(acc @ Q @ OrbitSpace.normal(Q, e) / (e @ Q @ e))


def _max_length(H):
    return 50.0 / (H + 0.1)


def solve_rotational_sphere(spec: SpaceSpec, H: float, start_offset=1e-4, stop_radius=3e-3,
                            tol=CLOSURE_TOL) -> SphereSolution:
    """Shoot a meridian from the rotation axis and wait for it to come back.

    Raises :class:`NoClosureError` when the profile escapes or returns to the
    axis at an angle; the error carries the residual and escape behavior.
    """
    if not H >= 0:
        raise ValueError("H must be >= 0")
    rot = F.rotation(spec)
    origin = rot.origin + rot.axis_start * rot.axis
    orbit = OrbitSpace(spec, rot.field, origin, rot.radial, rot.axis, axis=True)
    scale = min(1.0, 1.0 / H) if H > 0 else 1.0
    d = start_offset * scale
    r_stop = stop_radius * scale

    # leave the axis along the slice's radial line; the profile turns away
    # from it at rate H - kappa where kappa is the radial line's own curvature
    xr = np.array([d, 0.0])
    Q = orbit.quotient_metric(xr)
    e_r = np.array([1.0, 0.0]) / np.sqrt(Q[0, 0])
    nu = OrbitSpace.normal(Q, e_r)
    d_start = d * np.sqrt(Q[0, 0])
    tilt = (H - _radial_curvature(orbit, xr)) * d_start
    x0 = xr + 0.5 * tilt * d_start * nu
    T0 = np.cos(tilt) * e_r + np.sin(tilt) * nu
    y0 = np.concatenate([x0, T0, [0.0]])

    def axis_hit(s, y):
        return y[0] - r_stop

    axis_hit.terminal = True
    axis_hit.direction = -1

    s_max = _max_length(H)
    sol = solve_ivp(orbit.rhs(H), (0.0, s_max), y0, method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True, events=axis_hit)
    if sol.status < 0:
        raise ConvergenceError(sol.message)
    if sol.status != 1:
        yend = sol.y[:, -1]
        raise NoClosureError(
            f"profile did not return to the axis within arclength {s_max:.4g}",
            residual=float(yend[0]),
            escape=f"slice position ({yend[0]:.4g}, {yend[1]:.4g}) at s={sol.t[-1]:.4g}")
    s_e = float(sol.t_events[0][0])
    ye = sol.y_events[0][0]
    Qe = orbit.quotient_metric(ye[:2])
    er_e = np.array([1.0, 0.0]) / np.sqrt(Qe[0, 0])
    d_end = r_stop * np.sqrt(Qe[0, 0])
    T = ye[2:4]
    sin_ang = np.sqrt(np.linalg.det(Qe)) * (T[0] * (-er_e[1]) - T[1] * (-er_e[0]))
    kappa = _radial_curvature(orbit, ye[:2])
    residual = float(abs(sin_ang - (H + kappa) * d_end))
    closed = residual < tol
    area = 2 * np.pi * float(ye[4]) + np.pi * (d_start**2 + d_end**2)
    prof = _profile_from_solution(orbit, sol, s_e, closed=closed, residual=residual)
    top = orbit.point(np.array([0.0, 0.0]))
    # near the axis the profile is x1 = x1(axis) + c x0^2 with c = T1 / (2 T0 x0)
    bottom = orbit.point(np.array([0.0, ye[1] - ye[3] * ye[0] / (2 * ye[2])]))
    prof.extra.update(s_start=0.0, s_end=s_e, d_start=d_start, d_end=d_end, H=H)
    # the profile starts at arclength d_start from the axis point
    prof.s = prof.s + d_start
    raw_at = prof.at
    prof.at = lambda q: raw_at(np.asarray(q) - d_start)
    prof.extra.update(s_start=d_start, s_end=s_e + d_start, axis_points=(top, bottom))
    sol_obj = SphereSolution(H, prof, area, (top, bottom), closed, residual, spec)
    if not closed:
        raise NoClosureError(
            f"profile reached the axis with tangency defect {residual:.3g}",
            residual=residual, escape="axis crossing at an angle")
    return sol_obj


@dataclass
class SweepRow:
    H: float
    closed: bool
    area: float
    closure_residual: float


def _threads():
    try:
        n = int(os.environ.get("HOMOG3_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def area_sweep(spec: SpaceSpec, H_list) -> list[SweepRow]:
    """One shooting run per H; rows sorted by H, failures reported as open rows."""
    F.rotation(spec)  # reject non-rotational specs up front
    Hs = sorted(float(h) for h in H_list)

    def one(H):
        try:
            sol = solve_rotational_sphere(spec, H)
            return SweepRow(H, True, sol.area, sol.closure_residual)
        except NoClosureError as exc:
            return SweepRow(H, False, float("nan"), exc.residual)

    with ThreadPoolExecutor(max_workers=min(_threads(), max(1, len(Hs)))) as ex:
        rows = list(ex.map(one, Hs))
    return rows


# ---------------------------------------------------------------------------
# center of symmetry and Gauss curves


def axis_midpoint(spec: SpaceSpec, sphere: SphereSolution, n=2001) -> np.ndarray:
    """Arclength midpoint of the axis segment between the poles."""
    orbit = sphere.profile.orbit
    h1 = float(np.linalg.lstsq(orbit.basis.T, sphere.poles[0] - orbit.origin, rcond=None)[0][1])
    h2 = float(np.linalg.lstsq(orbit.basis.T, sphere.poles[1] - orbit.origin, rcond=None)[0][1])
    hs = np.linspace(h1, h2, n)
    pts = orbit.point(np.stack([np.zeros(n), hs], axis=-1))
    speed = F.norm(spec, pts, np.broadcast_to(orbit.basis[1], pts.shape))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(hs))])
    h_mid = np.interp(0.5 * cum[-1], cum, hs) if cum[-1] > 0 else hs[0]
    return orbit.point(np.array([0.0, h_mid]))


def center_of_symmetry(spec: SpaceSpec, sphere: SphereSolution, axis_vector=None) -> np.ndarray:
    """Midpoint of the arc of the coset ``q Gamma`` joining the two poles.

    The poles are the points whose Gauss map is ``+-Gamma'(0)``; for a
    rotational sphere they are where the profile meets the axis.
    """
    if not sphere.closed:
        raise ValueError("center_of_symmetry needs a closed sphere")
    if axis_vector is None or not spec.is_lie_group:
        return axis_midpoint(spec, sphere)
    v = np.asarray(axis_vector, dtype=float)
    imm = sphere.immersion(n_u=32, n_v=16)
    eps = 1e-3
    G = S.left_gauss_map(spec, imm, np.array([eps, np.pi - eps]), np.array([0.0, 0.0]))
    vhat = v * (np.sqrt(np.array(spec.lambdas)) if spec.kind == Gp.SL2 else 1.0)
    vhat = vhat / np.linalg.norm(vhat)
    if np.min(np.abs(G @ vhat)) < 0.99:
        raise ValueError("poles not found: Gauss map near the axis is not +-Gamma'(0)")
    q, q2 = sphere.poles
    d = Gp.multiply(spec, Gp.inverse(spec, q), q2)
    # solve exp(t v) = d for t (d lies on the subgroup)
    vel = F.left_field(spec, v, Gp.identity(spec))
    t = float(d @ vel / (vel @ vel))
    for _ in range(20):
        r = Gp.one_param_subgroup(spec, v, t) - d
        dt = 1e-6
        jac = (Gp.one_param_subgroup(spec, v, t + dt) - Gp.one_param_subgroup(spec, v, t - dt)) / (2 * dt)
        step = float(r @ jac / (jac @ jac))
        t -= step
        if abs(step) < 1e-14:
            break
    return Gp.multiply(spec, q, Gp.one_param_subgroup(spec, v, t / 2))


@dataclass
class GaussCurve:
    points: np.ndarray
    s: np.ndarray
    verdict: str  # "closed", "open" or "constant"
    closure: float
    min_speed: float
    embedded: bool


def gauss_curve(spec: SpaceSpec, imm: S.Immersion, n=None, t=None) -> GaussCurve:
    """Left Gauss map along one profile period of a Killing-invariant surface."""
    s0, s1 = imm.v_range
    n = n or imm.n_v
    s = np.linspace(s0, s1, n + 1)
    t = imm.u_range[0] if t is None else t
    G = S.left_gauss_map(spec, imm, np.full(s.shape, t), s)
    spread = np.max(np.linalg.norm(G - G[0], axis=-1))
    if spread < 1e-8:
        return GaussCurve(G, s, "constant", 0.0, 0.0, True)
    closure = float(np.linalg.norm(G[-1] - G[0]))
    ds = s[1] - s[0]
    speed = np.linalg.norm(np.diff(G, axis=0), axis=-1) / ds
    closed = closure < 1e-5 and speed.min() > 1e-8
    embedded = is_simple_spherical(G[:-1])
    return GaussCurve(G, s, "closed" if closed else "open", closure, float(speed.min()), embedded)
