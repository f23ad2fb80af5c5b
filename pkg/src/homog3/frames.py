"""Frames, metrics, connection and curvature.

Coordinate conventions for the two product spaces:

* ``h2xr(k)``: ``(x, y, t)`` with ``(x, y)`` geodesic normal coordinates of
  ``H^2(k)`` centered at the origin, so ``g = dr^2 + (sinh(s r)/s)^2 dphi^2 + dt^2``
  with ``s = sqrt(-k)``.
* ``s2xr(k)``: ``R^3 - {0}`` with ``t = log|x|`` and the direction ``x/|x|``
  in ``S^2(k)``, i.e. ``g = ((1/k)(I - x^ x^T) + x^ x^T) / |x|^2``.

Vectors in the orthonormal left-invariant frame are called *frame
components*; ``e_i = E_i / sqrt(lambda_i)`` on SL(2,R)~ and ``e_i = E_i`` on
semidirect products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import group as G
from .group import H2XR, S2XR, SEMIDIRECT, SL2, SpaceSpec, expm2

FD_STEP = 1e-5

VectorField = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# frames


def _sl2_field(sigma, beta, p, right=False):
    w = p[..., 0] + 1j * p[..., 1]
    th = p[..., 2]
    if right:
        rot = np.exp(-1j * th)
        dw = rot * beta * (1.0 - np.abs(w) ** 2)
        dth = 2 * sigma + 2 * np.imag(beta * np.conj(w) * rot)
    else:
        dw = beta - 2j * sigma * w - w**2 * np.conj(beta)
        dth = 2 * sigma + 2 * np.imag(w * np.conj(beta))
    return np.stack([dw.real, dw.imag, dth * np.ones_like(dw.real)], axis=-1)


def left_field(spec: SpaceSpec, v, p) -> np.ndarray:
    """Coordinate vector of the left-invariant field with value ``v`` at e."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec.kind == SL2:
        sigma, beta = G._su11_coeffs(v)
        return _sl2_field(sigma, beta, p)
    E = expm2(spec.A, p[..., 2])
    hor = np.einsum("...ij,j->...i", E, v[:2])
    return np.concatenate([hor, np.full(hor.shape[:-1] + (1,), v[2])], axis=-1)


def right_field(spec: SpaceSpec, v, p) -> np.ndarray:
    """Coordinate vector of the right-invariant (Killing) field generated by ``v``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec.kind == SL2:
        sigma, beta = G._su11_coeffs(v)
        return _sl2_field(sigma, beta, p, right=True)
    hor = v[:2] + v[2] * np.einsum("ij,...j->...i", spec.A, p[..., :2])
    return np.concatenate([hor, np.full(hor.shape[:-1] + (1,), v[2])], axis=-1)


def lie_frame(spec: SpaceSpec, p) -> np.ndarray:
    """Columns are coordinate expressions of E1, E2, E3 at ``p``."""
    cols = [left_field(spec, e, p) for e in np.eye(3)]
    return np.stack(cols, axis=-1)


def orthonormal_frame(spec: SpaceSpec, p) -> np.ndarray:
    J = lie_frame(spec, p)
    if spec.kind == SL2:
        J = J / np.sqrt(np.array(spec.lambdas))
    return J


def frame_fields(spec: SpaceSpec, p):
    """(E1, E2, E3, F1, F2, F3) as coordinate 3-vectors at ``p``."""
    G._require_group(spec)
    p = np.asarray(p, dtype=float)
    E = [left_field(spec, e, p) for e in np.eye(3)]
    F = [right_field(spec, e, p) for e in np.eye(3)]
    return (*E, *F)


def to_frame(spec: SpaceSpec, p, vec) -> np.ndarray:
    """Frame components of coordinate vectors ``vec`` based at ``p``."""
    J = orthonormal_frame(spec, p)
    return np.linalg.solve(J, np.asarray(vec, dtype=float)[..., None])[..., 0]


def from_frame(spec: SpaceSpec, p, comps) -> np.ndarray:
    J = orthonormal_frame(spec, p)
    return np.einsum("...ij,...j->...i", J, comps)


# ---------------------------------------------------------------------------
# metric


def _sinhc_sq(x):
    """(sinh x / x)^2 and (1 - that) / x^2, safe near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    f2 = np.where(small, 1 + x**2 / 3 + 2 * x**4 / 45, (np.sinh(xs) / xs) ** 2)
    q = np.where(small, -1 / 3 - 2 * x**2 / 45, (1 - f2) / xs**2)
    return f2, q


def metric_tensor(spec: SpaceSpec, p) -> np.ndarray:
    """Metric coefficients in coordinates; shape ``(..., 3, 3)``."""
    p = np.asarray(p, dtype=float)
    shape = p.shape[:-1]
    g = np.zeros(shape + (3, 3))
    if spec.kind == SEMIDIRECT:
        a = expm2(spec.A, -p[..., 2])
        g[..., 0, 0] = a[..., 0, 0] ** 2 + a[..., 1, 0] ** 2
        g[..., 1, 1] = a[..., 0, 1] ** 2 + a[..., 1, 1] ** 2
        g[..., 0, 1] = g[..., 1, 0] = a[..., 0, 0] * a[..., 0, 1] + a[..., 1, 0] * a[..., 1, 1]
        g[..., 2, 2] = 1.0
        return g
    if spec.kind == SL2:
        return gram_metric(spec, p)
    if spec.kind == H2XR:
        s = np.sqrt(-spec.kappa)
        xy = p[..., :2]
        r = np.linalg.norm(xy, axis=-1)
        f2, q = _sinhc_sq(s * r)
        outer = xy[..., :, None] * xy[..., None, :]
        # g_h = f^2 I + (1 - f^2) x x^T / r^2; split into radial and angular
        # projectors away from the origin so the radial entry does not cancel
        near = (s * r < 1e-3)[..., None, None]
        rr = np.where(r > 0, r, 1.0)[..., None, None]
        P = outer / rr**2
        g[..., :2, :2] = np.where(
            near,
            f2[..., None, None] * np.eye(2) + (q * s**2)[..., None, None] * outer,
            P + f2[..., None, None] * (np.eye(2) - P),
        )
        g[..., 2, 2] = 1.0
        return g
    if spec.kind == S2XR:
        r2 = np.sum(p**2, axis=-1)
        outer = p[..., :, None] * p[..., None, :] / r2[..., None, None]
        k = spec.kappa
        return (np.eye(3) / k + (1 - 1 / k) * outer) / r2[..., None, None]
    raise G.SpaceError(spec.kind)


def gram_metric(spec: SpaceSpec, p) -> np.ndarray:
    """Metric from the orthonormal frame: ``J^-T J^-1``."""
    Jinv = np.linalg.inv(orthonormal_frame(spec, p))
    return np.swapaxes(Jinv, -1, -2) @ Jinv


def inner(spec: SpaceSpec, p, u, v) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", u, metric_tensor(spec, p), v)


def norm(spec: SpaceSpec, p, u) -> np.ndarray:
    return np.sqrt(inner(spec, p, u, u))


def christoffel(spec: SpaceSpec, p, h=1e-3) -> np.ndarray:
    """Coordinate Christoffel symbols ``Gam[..., k, i, j]`` (4th-order differences)."""
    p = np.asarray(p, dtype=float)
    dg = np.empty(p.shape[:-1] + (3, 3, 3))  # dg[..., l, i, j] = d_l g_ij
    for l in range(3):
        e = np.zeros(3)
        e[l] = h
        dg[..., l, :, :] = (
            -metric_tensor(spec, p + 2 * e)
            + 8 * metric_tensor(spec, p + e)
            - 8 * metric_tensor(spec, p - e)
            + metric_tensor(spec, p - 2 * e)
        ) / (12 * h)
    ginv = np.linalg.inv(metric_tensor(spec, p))
    # first kind: [ij, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (
        np.einsum("...ijl->...ijl", dg)  # d_i g_jl
        + np.einsum("...jil->...ijl", dg)  # d_j g_il
        - np.einsum("...lij->...ijl", dg)  # d_l g_ij
    )
    return np.einsum("...kl,...ijl->...kij", ginv, first)


# ---------------------------------------------------------------------------
# left-invariant connection


def structure_constants(spec: SpaceSpec) -> np.ndarray:
    """``c[k, i, j]`` with ``[E_i, E_j] = sum_k c[k, i, j] E_k``."""
    G._require_group(spec)
    c = np.zeros((3, 3, 3))
    if spec.kind == SL2:
        c[2, 0, 1], c[2, 1, 0] = -2, 2  # [E1,E2] = -2 E3
        c[0, 1, 2], c[0, 2, 1] = 2, -2  # [E2,E3] = 2 E1
        c[1, 2, 0], c[1, 0, 2] = 2, -2  # [E3,E1] = 2 E2
        return c
    (a, b), (cc, d) = spec.matrix_a
    c[0, 2, 0], c[1, 2, 0] = a, cc  # [E3,E1] = a E1 + c E2
    c[0, 2, 1], c[1, 2, 1] = b, d  # [E3,E2] = b E1 + d E2
    c[:, 0, 2] = -c[:, 2, 0]
    c[:, 1, 2] = -c[:, 2, 1]
    return c


def orthonormal_structure_constants(spec: SpaceSpec) -> np.ndarray:
    c = structure_constants(spec)
    if spec.kind == SL2:
        s = np.sqrt(np.array(spec.lambdas))
        # [e_i, e_j] = c^k_ij sqrt(l_k) / sqrt(l_i l_j) e_k
        c = c * s[:, None, None] / (s[None, :, None] * s[None, None, :])
    return c


def bracket(spec: SpaceSpec, x, y) -> np.ndarray:
    """Lie bracket of algebra vectors given in the E basis."""
    return np.einsum("kij,i,j->k", structure_constants(spec), x, y)


def connection_coeffs(spec: SpaceSpec) -> np.ndarray:
    """``Gam[k, i, j] = <nabla_{e_i} e_j, e_k>`` in the orthonormal frame (Koszul)."""
    c = orthonormal_structure_constants(spec)
    return 0.5 * (c - np.einsum("ijk->kij", c) + np.einsum("jki->kij", c))


def ricci(spec: SpaceSpec, p=None):
    """Ricci tensor in the orthonormal frame and the scalar curvature.

    Left-invariant, so ``p`` is accepted only for signature symmetry.
    """
    gam = connection_coeffs(spec)
    c = orthonormal_structure_constants(spec)
    # R(e_i, e_j) e_l = sum_k [gam^m_jl gam^k_im - gam^m_il gam^k_jm - c^m_ij gam^k_ml] e_k
    R = (
        np.einsum("mjl,kim->kijl", gam, gam)
        - np.einsum("mil,kjm->kijl", gam, gam)
        - np.einsum("mij,kml->kijl", c, gam)
    )
    ric = np.einsum("iijl->jl", R)
    ric = 0.5 * (ric + ric.T)
    return ric, float(np.trace(ric))


def ricci_coords(spec: SpaceSpec, p) -> np.ndarray:
    """Ricci tensor as coordinate bilinear form at ``p``."""
    p = np.asarray(p, dtype=float)
    if spec.is_lie_group:
        ric, _ = ricci(spec)
        Jinv = np.linalg.inv(orthonormal_frame(spec, p))
        return np.swapaxes(Jinv, -1, -2) @ ric @ Jinv
    g = metric_tensor(spec, p)
    if spec.kind == H2XR:
        out = spec.kappa * g
        out[..., 2, :] = 0.0
        out[..., :, 2] = 0.0
        return out
    r2 = np.sum(p**2, axis=-1)
    outer = p[..., :, None] * p[..., None, :] / r2[..., None, None]
    return (np.eye(3) - outer) / r2[..., None, None]


# ---------------------------------------------------------------------------
# geodesics


def geodesic(spec: SpaceSpec, p, v, T: float, n_steps: int):
    """Geodesic from ``p`` with initial frame components ``v``.

    The frame velocity obeys ``w' = -Gam(w, w)`` (RK4); the point moves by
    ``p <- p * exp(Omega)`` with the fourth-order Magnus increment.
    Returns ``(t, points)``.
    """
    G._require_group(spec)
    if n_steps < 2:
        raise ValueError("geodesic needs at least 2 steps")
    v = np.asarray(v, dtype=float)
    if not np.linalg.norm(v) > 0:
        raise ValueError("initial velocity must be nonzero")
    gam = connection_coeffs(spec)
    scale = 1.0 / np.sqrt(np.array(spec.lambdas)) if spec.kind == SL2 else np.ones(3)

    def rhs(w):
        return -np.einsum("kij,i,j->k", gam, w, w)

    def rk4(w, h):
        k1 = rhs(w)
        k2 = rhs(w + 0.5 * h * k1)
        k3 = rhs(w + 0.5 * h * k2)
        k4 = rhs(w + h * k3)
        return w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    h = T / n_steps
    c1, c2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
    pts = np.empty((n_steps + 1, 3))
    pts[0] = p
    w = v.copy()
    for n in range(n_steps):
        x1 = rk4(w, c1 * h) * scale
        x2 = rk4(w, c2 * h) * scale
        omega = 0.5 * h * (x1 + x2) + np.sqrt(3) / 12 * h**2 * bracket(spec, x1, x2)
        pts[n + 1] = G.multiply(spec, pts[n], G.exp_map(spec, omega))
        w = rk4(w, h)
    return np.linspace(0.0, T, n_steps + 1), pts


def geodesic_speed(spec: SpaceSpec, pts, T) -> np.ndarray:
    """Speed along a uniformly sampled curve, at the interior samples ``2..n-2``.

    Neighbors are left-translated to the identity, ``q_k = p_n^-1 p_{n+k}``,
    and differentiated there with the 5-point stencil, so coordinate
    distortion far from the identity (the disk boundary on SL~(2,R)) does
    not enter.
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts) - 1
    if n < 4:
        raise ValueError("need at least 5 samples")
    h = T / n
    base_inv = G.inverse(spec, pts[2:-2])
    q = [G.multiply(spec, base_inv, pts[2 + k: n - 1 + k]) for k in (-2, -1, 1, 2)]
    vel = (q[0] - 8 * q[1] + 8 * q[2] - q[3]) / (12 * h)
    e = G.identity(spec)
    return norm(spec, np.broadcast_to(e, vel.shape), vel)


# ---------------------------------------------------------------------------
# Killing fields


@dataclass(frozen=True)
class Rotation:
    """Rotational isometries of a space about a distinguished axis.

    The meridian half-plane is ``origin + r * radial + h * axis`` with ``r >= 0``;
    ``axis_vector`` is the Lie algebra vector whose subgroup runs along the
    axis (``None`` for product spaces).
    """

    field: VectorField
    flow: Callable[[np.ndarray, float], np.ndarray]
    origin: np.ndarray
    radial: np.ndarray
    axis: np.ndarray
    axis_start: float
    axis_vector: np.ndarray | None


def _rot_xy(p, phi):
    p = np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    x = c * p[..., 0] - s * p[..., 1]
    y = s * p[..., 0] + c * p[..., 1]
    return np.stack([x, y, p[..., 2] * np.ones_like(x)], axis=-1)


def _rot_xy_field(p):
    p = np.asarray(p, dtype=float)
    return np.stack([-p[..., 1], p[..., 0], np.zeros_like(p[..., 0])], axis=-1)


def rotation(spec: SpaceSpec) -> Rotation:
    """Rotational symmetry data; raises for non-rotational spaces."""
    ex, ey, ez = np.eye(3)
    if spec.kind in (H2XR, S2XR):
        start = 1.0 if spec.kind == S2XR else 0.0
        return Rotation(_rot_xy_field, _rot_xy, np.zeros(3), ex, ez, start, None)
    if spec.kind == SL2:
        l1, l2, _ = spec.lambdas
        if not np.isclose(l1, l2, rtol=1e-12, atol=0):
            raise G.SpaceError("sl2 is rotational only when lambda1 == lambda2")

        def flow(p, phi):
            return _rot_xy(p, -np.asarray(phi))

        def field(p):
            return -_rot_xy_field(p)

        return Rotation(field, flow, np.zeros(3), ex, ez, 0.0, ez.copy())
    (a, b), (c, d) = spec.matrix_a
    tol = 1e-12 * max(1.0, np.abs(spec.A).max())
    if abs(a - d) <= tol and abs(b + c) <= tol:
        return Rotation(_rot_xy_field, _rot_xy, np.zeros(3), ex, ez, 0.0, ez.copy())
    if abs(a) <= tol and abs(d) <= tol and abs(c) <= tol and b != 0:
        # Nil3 written as A = [[0, b], [0, 0]]: rotations about the x-axis
        def flow(p, phi):
            p = np.asarray(p, dtype=float)
            phi = np.asarray(phi, dtype=float)
            X = p[..., 0] - b * p[..., 1] * p[..., 2] / 2
            cs, sn = np.cos(phi), np.sin(phi)
            y = cs * p[..., 1] - sn * p[..., 2]
            z = sn * p[..., 1] + cs * p[..., 2]
            return np.stack([X + b * y * z / 2, y, z], axis=-1)

        def field(p):
            p = np.asarray(p, dtype=float)
            y, z = p[..., 1], p[..., 2]
            return np.stack([b * (y**2 - z**2) / 2, -z, y], axis=-1)

        return Rotation(field, flow, np.zeros(3), ey, ex, 0.0, ex.copy())
    raise G.SpaceError("space is not rotationally symmetric")


def killing_field(spec: SpaceSpec, selector) -> VectorField:
    """Vector field by name.

    ``F1``/``F2``/``F3`` (also ``Fx``/``Fy``/``Fz``) are the right-invariant
    fields generated by the basis; ``E1``.. the left-invariant ones (Killing
    only in special cases); ``rot`` the rotation field; ``T`` the vertical
    translation of a product space.  A 3-vector selects the right-invariant
    field it generates.
    """
    if not isinstance(selector, str):
        v = np.asarray(selector, dtype=float)
        return lambda p: right_field(spec, v, p)
    key = selector.strip()
    alias = {"Fx": "F1", "Fy": "F2", "Fz": "F3"}
    key = alias.get(key, key)
    if key == "rot":
        return rotation(spec).field
    if key == "T":
        if spec.kind == H2XR:
            return lambda p: np.broadcast_to([0.0, 0.0, 1.0], np.shape(p)).copy()
        if spec.kind == S2XR:
            return lambda p: np.asarray(p, dtype=float).copy()  # r d/dr = d/dt
        raise G.SpaceError("T is defined for product spaces")
    if len(key) == 2 and key[0] in "EF" and key[1] in "123":
        G._require_group(spec)
        v = np.eye(3)[int(key[1]) - 1]
        if key[0] == "F":
            return lambda p: right_field(spec, v, p)
        return lambda p: left_field(spec, v, p)
    if key.startswith("R:"):
        v = np.array([float(t) for t in key[2:].split(",")])
        return lambda p: right_field(spec, v, p)
    raise ValueError(f"unknown vector field selector {selector!r}")


def lie_derivative_metric(spec: SpaceSpec, K: VectorField, p, h=FD_STEP) -> np.ndarray:
    """``(L_K g)_ij = K^l d_l g_ij + g_lj d_i K^l + g_il d_j K^l`` by centered differences."""
    p = np.asarray(p, dtype=float)
    Kp = K(p)
    dK = np.empty(p.shape[:-1] + (3, 3))  # dK[..., l, i] = d_i K^l
    dg = np.empty(p.shape[:-1] + (3, 3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        dK[..., :, i] = (K(p + e) - K(p - e)) / (2 * h)
        dg[..., i, :, :] = (metric_tensor(spec, p + e) - metric_tensor(spec, p - e)) / (2 * h)
    g = metric_tensor(spec, p)
    t1 = np.einsum("...l,...lij->...ij", Kp, dg)
    t2 = np.einsum("...lj,...li->...ij", g, dK)
    return t1 + t2 + np.swapaxes(t2, -1, -2)


def killing_residual(spec: SpaceSpec, K: VectorField, p) -> float:
    """Largest ``|<nabla_u K, v> + <nabla_v K, u>|`` over orthonormal ``u, v``."""
    p = np.asarray(p, dtype=float)
    Lg = lie_derivative_metric(spec, K, p)
    L = np.linalg.cholesky(metric_tensor(spec, p))
    P = np.linalg.inv(L).T  # columns orthonormal
    R = P.T @ Lg @ P
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (R + R.T)))))
