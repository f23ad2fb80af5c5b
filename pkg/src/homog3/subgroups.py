"""One- and two-parameter subgroups of the universal cover of SL(2,R).

Lie vectors ``(a, b, c)`` are written in the basis ``E1 = diag(1, -1)``,
``E2 = [[0, 1], [1, 0]]``, ``E3 = [[0, -1], [1, 0]]`` of sl(2,R), for which
``det(a E1 + b E2 + c E3) = c^2 - a^2 - b^2``.

The projection ``Pi`` sends ``(w, theta)`` to ``e^{i theta} w`` in the unit
disk.  With the disk metric ``|dz|^2 / (1 - |z|^2)^2`` (curvature -4) it is a
Riemannian submersion for the metrics with ``lambda_1 = lambda_2 = 1``; its
fibers are the left cosets of the elliptic subgroup through ``E3``.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import group as Gp

PARABOLIC_RTOL = 1e-12


class Character(str, Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


def character_form(v) -> float:
    """``a^2 + b^2 - c^2``; its sign is the character."""
    a, b, c = np.asarray(v, dtype=float)
    return a * a + b * b - c * c


def classify_character(v, rtol: float = PARABOLIC_RTOL) -> Character:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError("expected a finite Lie vector (a, b, c)")
    scale = float(v @ v)
    if scale == 0:
        raise ValueError("the zero vector has no character")
    q = character_form(v)
    if abs(q) <= rtol * scale:
        return Character.PARABOLIC
    return Character.ELLIPTIC if q < 0 else Character.HYPERBOLIC


def lie_matrix(v) -> np.ndarray:
    return np.einsum("i,ijk->jk", np.asarray(v, dtype=float), Gp.SL2_BASIS)


def lie_coords(M) -> np.ndarray:
    """Inverse of :func:`lie_matrix` on traceless matrices."""
    M = np.asarray(M, dtype=float)
    return np.array([0.5 * (M[0, 0] - M[1, 1]), 0.5 * (M[0, 1] + M[1, 0]), 0.5 * (M[1, 0] - M[0, 1])])


def adjoint(g, v) -> np.ndarray:
    """``Ad_g v``: the differential of ``x -> g x g^-1`` at the identity."""
    P = Gp.sl2_matrix(np.asarray(g, dtype=float))
    return lie_coords(P @ lie_matrix(v) @ np.linalg.inv(P))


def subgroup_gauss_value(lambdas, theta) -> np.ndarray:
    """Constant left Gauss map of the two-dimensional subgroup H^2_theta.

    Components are in the orthonormal frame ``lambda_i^{-1/2} E_i``; the sign
    is fixed so that the third component is negative.
    """
    l1, l2, l3 = (float(x) for x in lambdas)
    if min(l1, l2, l3) <= 0:
        raise ValueError("lambdas must be positive")
    th = np.asarray(theta, dtype=float)
    g = np.stack([-np.sqrt(l2 * l3) * np.sin(th), np.sqrt(l1 * l3) * np.cos(th),
                  np.full(th.shape, -np.sqrt(l1 * l2))], axis=-1)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def subgroup_generators(theta) -> tuple[np.ndarray, np.ndarray]:
    """Parabolic and hyperbolic generators of H^2_theta; ``[hyp, par] = -2 par``."""
    par = np.array([-np.sin(theta), np.cos(theta), 1.0])
    hyp = np.array([np.cos(theta), np.sin(theta), 0.0])
    return par, hyp


def upsilon_curve(lambdas, n_samples: int = 256):
    """``(theta, G_theta)`` sampled on ``[0, 2 pi)``."""
    if n_samples < 8:
        raise ValueError("n_samples must be >= 8")
    theta = 2 * np.pi * np.arange(n_samples) / n_samples
    return theta, subgroup_gauss_value(lambdas, theta)


def axis_rotation(i: int) -> np.ndarray:
    """The pi-rotation about the i-th axis."""
    R = -np.eye(3)
    R[i, i] = 1.0
    return R


def symmetry_defect(points) -> float:
    """Largest distance from a pi-rotated sample of ``+-points`` to ``+-points``."""
    pts = np.asarray(points, dtype=float)
    both = np.concatenate([pts, -pts])
    worst = 0.0
    for i in range(3):
        rot = both @ axis_rotation(i).T
        d = np.linalg.norm(rot[:, None, :] - both[None, :, :], axis=-1).min(axis=1)
        worst = max(worst, float(d.max()))
    return worst


def circle_defect(points) -> float:
    """Deviation from a round circle: spread of the distance to the best plane's axis."""
    pts = np.asarray(points, dtype=float)
    c = pts.mean(axis=0)
    n = np.linalg.svd(pts - c)[2][-1]
    off = (pts - c) @ n
    rad = np.linalg.norm((pts - c) - off[:, None] * n, axis=-1)
    return float(max(np.ptp(off), np.ptp(rad)))


def _orient(p, q, r):
    return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])


def polygon_self_intersects(P) -> bool:
    """True if two non-adjacent edges of the closed polygon ``P`` cross."""
    P = np.asarray(P, dtype=float)
    A, B = P, np.roll(P, -1, axis=0)
    n = len(P)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    o1, o2 = _orient(A[i], B[i], A[j]), _orient(A[i], B[i], B[j])
    o3, o4 = _orient(A[j], B[j], A[i]), _orient(A[j], B[j], B[i])
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


def is_simple_spherical(points) -> bool:
    """Simplicity of a closed polygon on S^2 (stereographic test at sample resolution)."""
    G = np.asarray(points, dtype=float)
    cands = [G.mean(axis=0), *np.linalg.svd(G - G.mean(axis=0))[2]]
    cands = [c / np.linalg.norm(c) for c in cands if np.linalg.norm(c) > 1e-9]
    cands += [-c for c in cands]
    # project from the candidate pole farthest from the curve
    c = max(cands, key=lambda c: np.min(1 + G @ c))
    if np.min(1 + G @ c) < 1e-9:
        raise ValueError("curve passes through every projection pole")
    basis = np.linalg.svd(c[None, :])[2][1:]
    planar = (G @ basis.T) / (1 + G @ c)[:, None]
    return not polygon_self_intersects(planar)


def project_pi(g) -> np.ndarray:
    """Disk point ``e^{i theta} w`` of a lifted point; works on stacks."""
    g = np.asarray(g, dtype=float)
    z = np.exp(1j * g[..., 2]) * (g[..., 0] + 1j * g[..., 1])
    return np.stack([z.real, z.imag], axis=-1)


def disk_metric_factor(z) -> np.ndarray:
    """Length factor of the curvature -4 disk metric ``|dz| / (1 - |z|^2)``."""
    z = np.asarray(z, dtype=float)
    return 1.0 / (1.0 - np.sum(z**2, axis=-1))


def geodesic_curvature_disk(z) -> np.ndarray:
    """Geodesic curvature (metric ``|dz|^2/(1-|z|^2)^2``) of a sampled planar curve."""
    z = np.asarray(z, dtype=float)
    zc = z[:, 0] + 1j * z[:, 1]
    d1 = np.gradient(zc)
    d2 = np.gradient(d1)
    k_e = np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3
    # conformal change e^phi with phi = -log(1 - |z|^2): k = e^-phi (k_e - d phi / d n)
    n = 1j * d1 / np.abs(d1)
    grad_phi = 2 * zc / (1 - np.abs(zc) ** 2)
    dphi_dn = np.real(np.conj(grad_phi) * n)
    return (1 - np.abs(zc) ** 2) * (k_e - dphi_dn)


# ---------------------------------------------------------------------------
# the model R x_(1) R


def model_r_rtimes_r(p, q) -> np.ndarray:
    """Group law ``(x, y) (x', y') = (x + e^y x', y + y')``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.stack([p[..., 0] + np.exp(p[..., 1]) * q[..., 0], p[..., 1] + q[..., 1]], axis=-1)


def model_right_fields(p) -> np.ndarray:
    """Right-invariant frame ``(d_x, x d_x + d_y)`` at ``p``; rows are the fields."""
    x = np.asarray(p, dtype=float)[..., 0]
    one, zero = np.ones_like(x), np.zeros_like(x)
    return np.stack([np.stack([one, zero], -1), np.stack([x, one], -1)], axis=-2)


def model_right_invariance_residual(p, q, h=1e-6) -> float:
    """``|dR_q X(p) - X(p q)|`` for both right-invariant fields, by central differences."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    X = model_right_fields(p)
    Y = model_right_fields(model_r_rtimes_r(p, q))
    worst = 0.0
    for k in range(2):
        push = (model_r_rtimes_r(p + h * X[k], q) - model_r_rtimes_r(p - h * X[k], q)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(push - Y[k]))))
    return worst
