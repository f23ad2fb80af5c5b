"""CMC flux of a Killing field across a closed curve on an H-surface.

    Flux(M, alpha, K) = int_alpha <K, eta> + 2 H int_beta <K, N>

``eta`` is the unit conormal of ``M`` along ``alpha`` and ``beta`` any
2-chain with boundary ``alpha``; its normal is oriented so that
``<N, eta> <= 0`` along ``alpha``.  Because Killing fields are divergence
free the value does not depend on ``beta``, and it only depends on the
homology class of ``alpha`` in ``M``.

Chains are stored as quadrature samples (point, weight, unit vector) plus the
boundary polygon used for the combinatorial ``d beta = alpha`` check.
Triangulated caps use the centroid rule; caps cut out of a parametrized
surface may use Gauss-Legendre nodes across the cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import frames as F
from . import surface as S
from .group import SpaceSpec

UNIT_TOL = 1e-6
BOUNDARY_TOL = 1e-9


class FluxError(ValueError):
    pass


@dataclass
class Chain1:
    """Closed curve: vertices (n, 3) and per-segment midpoints, lengths, conormals."""

    vertices: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    conormals: np.ndarray

    def reversed(self) -> "Chain1":
        # same segments traversed backwards; the conormal flips with the tangent
        return Chain1(self.vertices[::-1].copy(), self.points[::-1].copy(),
                      self.weights[::-1].copy(), -self.conormals[::-1])


@dataclass
class Chain2:
    """2-chain: quadrature points, area weights, unit normals, boundary polygon."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    boundary: np.ndarray
    rim: np.ndarray  # indices of samples adjacent to the boundary

    def flipped(self) -> "Chain2":
        return Chain2(self.points, self.weights, -self.normals, self.boundary, self.rim)


@dataclass
class FluxInput:
    alpha: Chain1
    beta: Chain2
    H: float
    K: object  # selector accepted by frames.killing_field, or a callable
    n: int = 2


@dataclass
class FluxResult:
    line: float
    cap: float

    @property
    def total(self) -> float:
        return self.line + self.cap

    def as_dict(self):
        return {"line": self.line, "cap": self.cap, "flux": self.total}


def _field(spec, K):
    return K if callable(K) else F.killing_field(spec, K)


def _unit(spec, p, v):
    return v / F.norm(spec, p, v)[..., None]


def metric_cross(spec: SpaceSpec, p, a, b) -> np.ndarray:
    """Vector orthogonal to ``a`` and ``b`` (metric), oriented like ``(g a) x (g b)``."""
    g = F.metric_tensor(spec, p)
    w = np.cross(np.einsum("...ij,...j->...i", g, a), np.einsum("...ij,...j->...i", g, b))
    return _unit(spec, p, w)


# ---------------------------------------------------------------------------
# chain builders


def surface_curve(spec: SpaceSpec, imm: S.Immersion, u: float, n: int = 256) -> Chain1:
    """The closed coordinate curve ``v -> f(u, v)`` (v periodic) with conormal ``T x N``.

    Midpoint rule in v; for a periodic integrand this is spectrally accurate.
    """
    v0, v1 = imm.v_range
    vs = np.linspace(v0, v1, n + 1)
    mids = 0.5 * (vs[1:] + vs[:-1])
    uu = np.full(mids.shape, float(u))
    verts = imm.chart(np.full(n, float(u)), vs[:-1])
    fld = S.fundamental_forms(spec, imm, uu, mids)
    _, _, fv, *_ = S._chart_derivs(imm.chart, uu, mids, S.DERIV_STEP, second=False)
    speed = F.norm(spec, fld.point, fv)
    eta = metric_cross(spec, fld.point, fv, fld.normal)
    return Chain1(verts, fld.point, speed * (vs[1] - vs[0]), eta)


def param_curve(spec: SpaceSpec, imm: S.Immersion, uv) -> Chain1:
    """Closed polyline through the parameter points ``uv`` (m, 2) of ``imm``.

    Segments are chords in parameter space; each carries its midpoint, metric
    length and the conormal ``T x N`` at the midpoint.
    """
    uv = np.asarray(uv, dtype=float)
    if uv.ndim != 2 or uv.shape[1] != 2 or len(uv) < 3:
        raise FluxError("curve needs at least 3 (u, v) rows")
    if np.allclose(uv[0], uv[-1]):
        uv = uv[:-1]
    nxt = np.roll(uv, -1, axis=0)
    if imm.kind != S.RECT:
        # unwrap the periodic v coordinate across the seam
        per = imm.v_range[1] - imm.v_range[0]
        nxt[:, 1] = uv[:, 1] + (nxt[:, 1] - uv[:, 1] + per / 2) % per - per / 2
    mid = 0.5 * (uv + nxt)
    verts = imm.chart(uv[:, 0], uv[:, 1])
    fld = S.fundamental_forms(spec, imm, mid[:, 0], mid[:, 1])
    _, fu, fv, *_ = S._chart_derivs(imm.chart, mid[:, 0], mid[:, 1], S.DERIV_STEP, second=False)
    d = nxt - uv
    tangent = fu * d[:, :1] + fv * d[:, 1:]
    length = F.norm(spec, fld.point, tangent)
    eta = metric_cross(spec, fld.point, tangent, fld.normal)
    return Chain1(verts, fld.point, length, eta)


def surface_cap(spec: SpaceSpec, imm: S.Immersion, u_cap: float, n_u: int = 24, n_v: int = 256,
                boundary_n: int | None = None) -> Chain2:
    """The part ``u < u_cap`` of a sphere-type immersion, with Gauss-Legendre nodes in u."""
    x, w = np.polynomial.legendre.leggauss(n_u)
    u0 = imm.u_range[0]
    us = u0 + 0.5 * (x + 1) * (u_cap - u0)
    wu = 0.5 * w * (u_cap - u0)
    v0, v1 = imm.v_range
    vs = np.linspace(v0, v1, n_v + 1)
    mids = 0.5 * (vs[1:] + vs[:-1])
    U, V = np.meshgrid(us, mids, indexing="ij")
    fld = S.fundamental_forms(spec, imm, U.ravel(), V.ravel())
    area = np.sqrt(np.linalg.det(fld.first)) * np.repeat(wu, n_v) * (vs[1] - vs[0])
    nb = boundary_n or n_v
    vb = np.linspace(v0, v1, nb + 1)[:-1]
    boundary = imm.chart(np.full(nb, float(u_cap)), vb)
    rim = np.arange((n_u - 1) * n_v, n_u * n_v)
    return Chain2(fld.point, area, fld.normal, boundary, rim)


def cone_cap(spec: SpaceSpec, vertices, apex=None, n_rad: int = 16) -> Chain2:
    """Triangulated cone from ``apex`` (default: coordinate centroid) to a closed polygon.

    Rings at coordinate fractions ``k / n_rad``; centroid rule per triangle.
    """
    P = np.asarray(vertices, dtype=float)
    n = len(P)
    c = P.mean(axis=0) if apex is None else np.asarray(apex, dtype=float)
    rho = np.arange(n_rad + 1) / n_rad
    grid = c + rho[:, None, None] * (P - c)[None, :, :]  # (n_rad + 1, n, 3)
    tris = []
    for k in range(n_rad):
        a, b = grid[k], grid[k + 1]
        a1, b1 = np.roll(a, -1, axis=0), np.roll(b, -1, axis=0)
        if k > 0:
            tris.append(np.stack([a, b, b1], axis=1))
            tris.append(np.stack([a, b1, a1], axis=1))
        else:
            tris.append(np.stack([a, b, b1], axis=1))  # a is the apex
    T = np.concatenate(tris)  # (m, 3, 3)
    cen = T.mean(axis=1)
    e1, e2 = T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]
    g = F.metric_tensor(spec, cen)
    gram = np.stack([
        np.stack([np.einsum("ti,tij,tj->t", e1, g, e1), np.einsum("ti,tij,tj->t", e1, g, e2)], -1),
        np.stack([np.einsum("ti,tij,tj->t", e2, g, e1), np.einsum("ti,tij,tj->t", e2, g, e2)], -1),
    ], -2)
    area = 0.5 * np.sqrt(np.linalg.det(gram))
    normal = np.linalg.solve(g, np.cross(e1, e2)[..., None])[..., 0]
    normal = _unit(spec, cen, normal)
    m = len(T)
    rim = np.arange(m - 2 * n, m) if n_rad > 1 else np.arange(m)
    return Chain2(cen, area, normal, P.copy(), rim)


# ---------------------------------------------------------------------------
# flux


def _check_boundary(alpha: Chain1, beta: Chain2):
    A, B = alpha.vertices, beta.boundary
    if A.shape != B.shape:
        raise FluxError(f"boundary of the cap has {len(B)} vertices, the curve {len(A)}")
    scale = max(1.0, float(np.max(np.abs(A))))
    # same cyclic polygon, possibly traversed backwards
    for cand in (B, B[::-1]):
        k = int(np.argmin(np.linalg.norm(cand - A[0], axis=-1)))
        if np.max(np.abs(np.roll(cand, -k, axis=0) - A)) < BOUNDARY_TOL * scale:
            return
    raise FluxError("the cap's boundary is not the curve")


def _check_killing(spec, K, pts, tol=1e-4):
    for p in pts:
        r = F.killing_residual(spec, K, p)
        if r > tol:
            raise FluxError(f"K is not a Killing field (residual {r:.3g})")


def orient_cap(spec: SpaceSpec, alpha: Chain1, beta: Chain2) -> Chain2:
    """Flip the cap normal if needed so that ``<N, eta> <= 0`` along the curve."""
    rim_pts = beta.points[beta.rim]
    rim_n = beta.normals[beta.rim]
    # pair each rim sample with the nearest curve midpoint
    idx = np.argmin(np.linalg.norm(rim_pts[:, None, :] - alpha.points[None, :, :], axis=-1), axis=1)
    s = np.sum(F.inner(spec, rim_pts, rim_n, alpha.conormals[idx]))
    return beta.flipped() if s > 0 else beta


def cmc_flux(spec: SpaceSpec, inp: FluxInput, check=True) -> FluxResult:
    alpha, beta = inp.alpha, inp.beta
    K = _field(spec, inp.K)
    if check:
        _check_boundary(alpha, beta)
        if np.max(np.abs(F.norm(spec, alpha.points, alpha.conormals) - 1)) > UNIT_TOL:
            raise FluxError("conormals are not unit vectors")
        if np.max(np.abs(F.norm(spec, beta.points, beta.normals) - 1)) > UNIT_TOL:
            raise FluxError("cap normals are not unit vectors")
        n = len(alpha.points)
        _check_killing(spec, K, alpha.points[[0, n // 3, (2 * n) // 3]])
    beta = orient_cap(spec, alpha, beta)
    # fixed summation order (np.sum over a contiguous array) keeps runs reproducible
    line = float(np.sum(F.inner(spec, alpha.points, K(alpha.points), alpha.conormals) * alpha.weights))
    cap = float(inp.n * inp.H * np.sum(F.inner(spec, beta.points, K(beta.points), beta.normals)
                                       * beta.weights))
    return FluxResult(line, cap)


@dataclass
class HomologyCheck:
    flux1: float
    flux2: float

    @property
    def gap(self) -> float:
        return abs(self.flux1 - self.flux2)


def homology_invariance_check(spec: SpaceSpec, imm: S.Immersion, u1: float, u2: float, K,
                              H: float, n: int = 256, n_rad: int = 32, apex1=None,
                              apex2=None) -> HomologyCheck:
    """Flux across the coordinate curves ``u = u1`` and ``u = u2`` of a cylinder-type surface.

    The two curves cobound the band ``u1 <= u <= u2``; each gets its own cone
    cap so the comparison shares no cap arithmetic.
    """
    if imm.kind == S.RECT:
        raise FluxError("the band between the curves does not close up (rect patch)")
    lo, hi = imm.u_range
    for u in (u1, u2):
        if not lo <= u <= hi:
            raise FluxError(f"u={u} outside the surface's parameter range")
    out = []
    for u, apex in ((u1, apex1), (u2, apex2)):
        a = surface_curve(spec, imm, u, n)
        b = cone_cap(spec, a.vertices, apex, n_rad)
        out.append(cmc_flux(spec, FluxInput(a, b, H, K)).total)
    return HomologyCheck(*out)
