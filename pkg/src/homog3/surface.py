"""Parametric surfaces: fundamental forms, Gauss map, stability operator.

Sign conventions.  ``sigma(a, b) = <nabla_{f_a} f_b, N>`` and
``H = trace(I^-1 sigma) / 2``, so the mean curvature vector is ``H N``; the
unit sphere of R^3 with inward normal has ``H = 1`` and a leaf
``z = const`` of ``R^2 x_A R`` with normal ``E3`` has ``H = trace(A)/2``.

The normal is ``orientation * (f_u x f_v)^sharp / |.|`` where the cross
product is taken in coordinates and raised with the metric.

The discrete Laplacian is the cotangent (P1) operator built only from edge
lengths of the induced metric, each quad split along both diagonals with
weight one half.  Because only the first fundamental form enters, the
spectrum is invariant under ambient isometries up to finite-difference error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from . import frames as F
from .group import SpaceSpec

SPHERE = "sphere"
RECT = "rect"
CYLINDER = "cylinder"

DERIV_STEP = 1e-3
DEGENERATE_DET = 1e-14


class DegenerateChartError(ValueError):
    pass


@dataclass
class Immersion:
    """Chart ``(u, v) -> points`` sampled on an ``n_u x n_v`` grid.

    ``sphere``: u runs pole to pole, v is periodic, pole rows collapse to
    single vertices.  ``rect``: Dirichlet patch.  ``cylinder``: v periodic,
    Dirichlet ends in u.
    """

    chart: Callable[[np.ndarray, np.ndarray], np.ndarray]
    u_range: tuple
    v_range: tuple
    n_u: int = 64
    n_v: int = 128
    kind: str = SPHERE
    orientation: int = 1

    def __post_init__(self):
        if self.n_u < 8 or self.n_v < 8:
            raise ValueError("grid must be at least 8x8")
        if self.kind not in (SPHERE, RECT, CYLINDER):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation is +1 or -1")

    @property
    def du(self):
        return (self.u_range[1] - self.u_range[0]) / self.n_u

    @property
    def dv(self):
        return (self.v_range[1] - self.v_range[0]) / self.n_v

    def u_nodes(self):
        u0 = self.u_range[0]
        if self.kind == SPHERE:
            return u0 + self.du * np.arange(1, self.n_u)
        return u0 + self.du * np.arange(self.n_u + 1)

    def v_nodes(self):
        v0 = self.v_range[0]
        if self.kind == RECT:
            return v0 + self.dv * np.arange(self.n_v + 1)
        return v0 + self.dv * np.arange(self.n_v)

    def grid(self):
        return np.meshgrid(self.u_nodes(), self.v_nodes(), indexing="ij")

    def flipped(self) -> "Immersion":
        return Immersion(self.chart, self.u_range, self.v_range, self.n_u, self.n_v,
                         self.kind, -self.orientation)

    def translated(self, spec: SpaceSpec, a) -> "Immersion":
        """Left translate by the group element ``a``."""
        from .group import multiply

        chart = self.chart

        def moved(u, v):
            return multiply(spec, a, chart(u, v))

        return Immersion(moved, self.u_range, self.v_range, self.n_u, self.n_v,
                         self.kind, self.orientation)


def sphere_immersion(radius=1.0, center=(0.0, 0.0, 0.0), n_u=64, n_v=128, orientation=1):
    """Coordinate round sphere; ``orientation=1`` gives the inward normal."""
    c = np.asarray(center, dtype=float)

    def chart(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return c + radius * np.stack(
            [np.sin(u) * np.cos(v), np.sin(u) * np.sin(v), np.cos(u)], axis=-1)

    # f_u x f_v is outward for this chart
    return Immersion(chart, (0.0, np.pi), (0.0, 2 * np.pi), n_u, n_v, SPHERE, -orientation)


def plane_immersion(point, e1, e2, half=1.0, n=32, kind=RECT, orientation=1):
    """Affine coordinate patch ``point + u e1 + v e2`` on ``[-half, half]^2``."""
    p0, a, b = (np.asarray(x, dtype=float) for x in (point, e1, e2))

    def chart(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return p0 + u[..., None] * a + v[..., None] * b

    return Immersion(chart, (-half, half), (-half, half), n, n, kind, orientation)


# ---------------------------------------------------------------------------
# pointwise geometry


@dataclass
class SurfaceFields:
    point: np.ndarray
    first: np.ndarray  # (..., 2, 2)
    second: np.ndarray  # (..., 2, 2)
    normal: np.ndarray  # coordinate vector
    H: np.ndarray
    sigma_sq: np.ndarray
    ric_normal: np.ndarray
    gauss: np.ndarray | None  # frame components of N (Lie groups)
    degenerate: np.ndarray

    @property
    def potential(self):
        return self.sigma_sq + self.ric_normal


def _chart_derivs(chart, u, v, h, second=True):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.array([1, -8, 0, 8, -1]) / 12.0
    w2 = np.array([-1, 16, -30, 16, -1]) / 12.0
    offs = np.arange(-2, 3)
    U = np.stack([chart(u + k * h, v) for k in offs])
    V = np.stack([chart(u, v + k * h) for k in offs])
    fu = np.tensordot(w, U, axes=1) / h
    fv = np.tensordot(w, V, axes=1) / h
    if not second:
        return U[2], fu, fv, None, None, None
    fuu = np.tensordot(w2, U, axes=1) / h**2
    fvv = np.tensordot(w2, V, axes=1) / h**2
    # mixed derivative: apply the 1st-derivative stencil in both directions
    fuv = 0.0
    for i, a in zip(offs, w):
        if a == 0:
            continue
        row = np.stack([chart(u + i * h, v + k * h) for k in offs])
        fuv = fuv + a * np.tensordot(w, row, axes=1)
    fuv = fuv / h**2
    return U[2], fu, fv, fuu, fuv, fvv


def first_form(spec: SpaceSpec, imm: Immersion, u, v, h=DERIV_STEP):
    p, fu, fv, *_ = _chart_derivs(imm.chart, u, v, h, second=False)
    g = F.metric_tensor(spec, p)
    I = np.empty(p.shape[:-1] + (2, 2))
    I[..., 0, 0] = np.einsum("...i,...ij,...j->...", fu, g, fu)
    I[..., 1, 1] = np.einsum("...i,...ij,...j->...", fv, g, fv)
    I[..., 0, 1] = I[..., 1, 0] = np.einsum("...i,...ij,...j->...", fu, g, fv)
    return I


def fundamental_forms(spec: SpaceSpec, imm: Immersion, u, v, h=DERIV_STEP) -> SurfaceFields:
    """All pointwise fields at parameters ``(u, v)`` (arrays broadcast)."""
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    p, fu, fv, fuu, fuv, fvv = _chart_derivs(imm.chart, u, v, h)
    g = F.metric_tensor(spec, p)
    gam = F.christoffel(spec, p)

    def ip(a, b):
        return np.einsum("...i,...ij,...j->...", a, g, b)

    I = np.empty(u.shape + (2, 2))
    I[..., 0, 0] = ip(fu, fu)
    I[..., 1, 1] = ip(fv, fv)
    I[..., 0, 1] = I[..., 1, 0] = ip(fu, fv)
    det = np.linalg.det(I)
    degenerate = det < DEGENERATE_DET

    covec = np.cross(fu, fv)
    n = np.linalg.solve(g, covec[..., None])[..., 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        n = imm.orientation * n / np.sqrt(ip(n, n))[..., None]

    def cov(a, b, fab):
        return fab + np.einsum("...kij,...i,...j->...k", gam, a, b)

    sig = np.empty(u.shape + (2, 2))
    sig[..., 0, 0] = ip(cov(fu, fu, fuu), n)
    sig[..., 1, 1] = ip(cov(fv, fv, fvv), n)
    sig[..., 0, 1] = sig[..., 1, 0] = ip(cov(fu, fv, fuv), n)

    safe = np.where(degenerate[..., None, None], np.eye(2), I)
    shape_op = np.linalg.solve(safe, sig)
    H = 0.5 * np.trace(shape_op, axis1=-2, axis2=-1)
    sigma_sq = np.einsum("...ij,...ji->...", shape_op, shape_op)
    ric = np.einsum("...i,...ij,...j->...", n, F.ricci_coords(spec, p), n)
    gauss = F.to_frame(spec, p, n) if spec.is_lie_group else None
    if np.any(degenerate):
        H = np.where(degenerate, np.nan, H)
    return SurfaceFields(p, I, sig, n, H, sigma_sq, ric, gauss, degenerate)


def left_gauss_map(spec: SpaceSpec, imm: Immersion, u, v) -> np.ndarray:
    """Unit normal translated to the identity, as frame components."""
    if not spec.is_lie_group:
        raise ValueError("the left-invariant Gauss map needs a Lie group")
    fld = fundamental_forms(spec, imm, u, v)
    if np.any(fld.degenerate):
        raise DegenerateChartError("degenerate chart at requested nodes")
    return fld.gauss


# ---------------------------------------------------------------------------
# mesh and discrete operator


@dataclass
class Mesh:
    params: np.ndarray  # (n_vertices, 2) parameter values (poles: nominal)
    triangles: np.ndarray  # (n_tri, 3)
    weights: np.ndarray  # per-triangle weight (1/2 for doubled quads)
    free: np.ndarray  # boolean mask of unknowns
    rings: tuple  # (n_rows, n_cols) of the regular block
    poles: tuple  # vertex indices of collapsed poles (sphere) else ()


def build_mesh(imm: Immersion) -> Mesh:
    us, vs = imm.u_nodes(), imm.v_nodes()
    nr, nc = len(us), len(vs)
    periodic = imm.kind in (SPHERE, CYLINDER)
    offset = 1 if imm.kind == SPHERE else 0
    idx = offset + np.arange(nr * nc).reshape(nr, nc)
    UU, VV = np.meshgrid(us, vs, indexing="ij")
    params = np.stack([UU.ravel(), VV.ravel()], axis=-1)
    tris, wts = [], []
    jmax = nc if periodic else nc - 1
    for i in range(nr - 1):
        for j in range(jmax):
            j1 = (j + 1) % nc
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j1], idx[i, j1]
            tris += [(a, b, c), (a, c, d), (a, b, d), (b, c, d)]
            wts += [0.5] * 4
    poles = ()
    if imm.kind == SPHERE:
        n_top = 0
        n_bot = offset + nr * nc
        for j in range(nc):
            j1 = (j + 1) % nc
            tris.append((n_top, idx[0, j], idx[0, j1]))
            tris.append((n_bot, idx[nr - 1, j1], idx[nr - 1, j]))
            wts += [1.0, 1.0]
        pole_params = np.array([[imm.u_range[0], 0.0], [imm.u_range[1], 0.0]])
        params = np.vstack([pole_params[:1], params, pole_params[1:]])
        poles = (n_top, n_bot)
    free = np.ones(len(params), dtype=bool)
    if imm.kind in (RECT, CYLINDER):
        grid_free = np.ones((nr, nc), dtype=bool)
        grid_free[0, :] = grid_free[-1, :] = False
        if imm.kind == RECT:
            grid_free[:, 0] = grid_free[:, -1] = False
        free = grid_free.ravel()
    return Mesh(params, np.array(tris), np.array(wts), free, (nr, nc), poles)


def _edge_param_segments(imm: Immersion, mesh: Mesh, a, b):
    """Parameter midpoint and displacement of the edge a -> b."""
    pa, pb = mesh.params[a].copy(), mesh.params[b].copy()
    if imm.kind == SPHERE:
        for pole in mesh.poles:
            # the pole is reached along the v of the other endpoint
            pa = np.where((a == pole)[..., None], np.stack([pa[..., 0], pb[..., 1]], -1), pa)
            pb = np.where((b == pole)[..., None], np.stack([pb[..., 0], pa[..., 1]], -1), pb)
    d = pb - pa
    if imm.kind in (SPHERE, CYLINDER):
        period = imm.v_range[1] - imm.v_range[0]
        d[..., 1] = (d[..., 1] + period / 2) % period - period / 2
    return pa + 0.5 * d, d


def edge_lengths(spec: SpaceSpec, imm: Immersion, mesh: Mesh) -> np.ndarray:
    """Induced-metric lengths of the three edges of each triangle, opposite each vertex."""
    t = mesh.triangles
    lens = np.empty(t.shape)
    for k in range(3):
        a, b = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        mid, d = _edge_param_segments(imm, mesh, a, b)
        I = first_form(spec, imm, mid[:, 0], mid[:, 1])
        lens[:, k] = np.sqrt(np.einsum("ni,nij,nj->n", d, I, d))
    return lens


def cotan_matrices(lens, triangles, weights, n):
    """Stiffness (positive semidefinite) and lumped mass from edge lengths."""
    l2 = lens**2
    s = 0.5 * lens.sum(axis=1)
    area = np.sqrt(np.clip(s * (s - lens[:, 0]) * (s - lens[:, 1]) * (s - lens[:, 2]), 0, None))
    rows, cols, vals = [], [], []
    for k in range(3):
        a, b = triangles[:, (k + 1) % 3], triangles[:, (k + 2) % 3]
        cot = (l2[:, (k + 1) % 3] + l2[:, (k + 2) % 3] - l2[:, k]) / (4 * area)
        w = 0.5 * cot * weights
        rows += [a, b, a, b]
        cols += [b, a, a, b]
        vals += [-w, -w, w, w]
    S = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
    mass = np.bincount(triangles.ravel(), weights=np.repeat(area * weights / 3, 3), minlength=n)
    return S, mass, area


@dataclass
class StabilityOperator:
    mesh: Mesh
    stiffness: sparse.csr_matrix
    mass: np.ndarray
    potential: np.ndarray
    fields: SurfaceFields

    def apply(self, values) -> np.ndarray:
        """Nodal ``L u = Delta u + q u`` (lumped)."""
        return -(self.stiffness @ values) / self.mass + self.potential * values


def _fill_poles(imm, mesh, interior_values):
    """Extend grid values to collapsed pole vertices by ring averages."""
    nr, nc = mesh.rings
    vals = interior_values.reshape(nr, nc, *interior_values.shape[1:])
    if imm.kind != SPHERE:
        return interior_values
    top = vals[0].mean(axis=0, keepdims=True)
    bot = vals[-1].mean(axis=0, keepdims=True)
    return np.concatenate([top, interior_values, bot])


def stability_operator(spec: SpaceSpec, imm: Immersion) -> StabilityOperator:
    mesh = build_mesh(imm)
    UU, VV = imm.grid()
    fld = fundamental_forms(spec, imm, UU.ravel(), VV.ravel())
    if np.any(fld.degenerate):
        raise DegenerateChartError("degenerate chart on grid nodes")
    q = _fill_poles(imm, mesh, fld.potential)
    lens = edge_lengths(spec, imm, mesh)
    S, mass, area = cotan_matrices(lens, mesh.triangles, mesh.weights, len(mesh.params))
    if imm.kind == SPHERE and area.min() < 1e-6 * area.mean():
        warnings.warn("pole cells nearly degenerate; refine the grid", RuntimeWarning)
    asym = abs(S - S.T).max()
    if asym > 1e-10 * abs(S).max():
        raise AssertionError(f"non-symmetric stiffness assembly ({asym:.3g})")
    return StabilityOperator(mesh, S, mass, q, fld)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    index: int
    nullity: int
    nullity_tol: float

    def as_dict(self):
        return {"eigenvalues": [float(x) for x in self.eigenvalues], "index": self.index,
                "nullity": self.nullity, "nullity_tol": self.nullity_tol}


def stability_spectrum(spec: SpaceSpec, imm: Immersion, k: int = 8,
                       nullity_tol: float = 0.05, op: StabilityOperator | None = None) -> Spectrum:
    """Lowest ``k`` eigenvalues of ``-L = -Delta - |sigma|^2 - Ric(N)``."""
    op = op or stability_operator(spec, imm)
    free = op.mesh.free
    S = op.stiffness[free][:, free]
    m = op.mass[free]
    A = S - sparse.diags(m * op.potential[free])
    shift = -float(np.max(op.potential[free])) - 1.0
    vals = eigsh(A.tocsc(), k=k, M=sparse.diags(m).tocsc(), sigma=shift, which="LM",
                 return_eigenvectors=False)
    vals = np.sort(vals)
    index = int(np.sum(vals < -nullity_tol))
    nullity = int(np.sum(np.abs(vals) <= nullity_tol))
    return Spectrum(vals, index, nullity, nullity_tol)


def jacobi_function(spec: SpaceSpec, imm: Immersion, K, check_points=None,
                    op: StabilityOperator | None = None):
    """``u = <N, K>`` at mesh vertices; rejects fields that are not Killing."""
    if isinstance(K, str) or not callable(K):
        K = F.killing_field(spec, K)
    op = op or stability_operator(spec, imm)
    if check_points is None:
        rng = np.random.default_rng(0)
        pts = op.fields.point[rng.choice(len(op.fields.point), 10, replace=False)]
    else:
        pts = np.asarray(check_points, dtype=float)
    worst = max(F.killing_residual(spec, K, p) for p in pts)
    if worst > 1e-4:
        raise ValueError(f"vector field is not Killing (residual {worst:.3g})")
    fld = op.fields
    vals = np.einsum("...i,...ij,...j->...", fld.normal, F.metric_tensor(spec, fld.point),
                     K(fld.point))
    return _fill_poles(imm, op.mesh, vals), op


def gauss_degree(spec: SpaceSpec, imm: Immersion) -> float:
    """Sampled degree of the Gauss map of a sphere-type immersion.

    The domain carries the orientation induced by the normal, so both
    orientations of a round sphere give +1.
    """
    if imm.kind != SPHERE:
        raise ValueError("degree needs a closed (sphere) immersion")
    mesh = build_mesh(imm)
    UU, VV = imm.grid()
    G = left_gauss_map(spec, imm, UU.ravel(), VV.ravel())
    G = _fill_poles(imm, mesh, G)
    G = G / np.linalg.norm(G, axis=-1, keepdims=True)
    t = mesh.triangles[mesh.weights == 1.0]
    # one diagonal split of the quads plus the pole fans
    quad = mesh.triangles[mesh.weights == 0.5].reshape(-1, 4, 3)[:, :2].reshape(-1, 3)
    t = np.vstack([t, quad])
    a, b, c = G[t[:, 0]], G[t[:, 1]], G[t[:, 2]]
    num = np.einsum("ni,ni->n", a, np.cross(b, c))
    den = 1 + np.einsum("ni,ni->n", a, b) + np.einsum("ni,ni->n", b, c) + np.einsum("ni,ni->n", c, a)
    return float(imm.orientation * np.sum(2 * np.arctan2(num, den)) / (4 * np.pi))
