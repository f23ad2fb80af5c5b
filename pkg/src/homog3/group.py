"""Group kernel: space descriptions, 2x2 exponentials, products and subgroups.

Points are numpy arrays whose last axis has length 3.

* semidirect ``R^2 x_A R``: ``(x, y, z)``
* universal cover of SL(2,R): ``(Re w, Im w, theta)`` for the disk automorphism
  ``zeta -> e^{i theta} (zeta + w) / (1 + conj(w) zeta)`` with ``theta`` lifted to R
* product spaces ``S^2(k) x R`` and ``H^2(k) x R``: chart coordinates (see
  :mod:`homog3.frames`); they carry no group structure here.

Lie algebra vectors are 3-vectors of coefficients in the basis
``(d_x, d_y, d_z)`` at the identity (semidirect) or ``(E1, E2, E3)`` given by
the traceless matrices ``diag(1,-1)``, ``[[0,1],[1,0]]``, ``[[0,-1],[1,0]]``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

SEMIDIRECT = "semidirect"
SL2 = "sl2"
S2XR = "s2xr"
H2XR = "h2xr"
KINDS = (SEMIDIRECT, SL2, S2XR, H2XR)

# below this the trace-free discriminant is treated as nilpotent
DISC_TOL = 1e-12


class SpaceError(ValueError):
    """Invalid space description or a point that does not belong to it."""


@dataclass(frozen=True)
class SpaceSpec:
    kind: str
    matrix_a: tuple = ((0.0, 0.0), (0.0, 0.0))
    lambdas: tuple = (1.0, 1.0, 1.0)
    kappa: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpaceError(f"unknown space kind {self.kind!r}")
        a = np.asarray(self.matrix_a, dtype=float)
        if a.shape != (2, 2) or not np.all(np.isfinite(a)):
            raise SpaceError("matrix_a must be a finite 2x2 matrix")
        object.__setattr__(self, "matrix_a", tuple(map(tuple, a.tolist())))
        lam = tuple(float(v) for v in self.lambdas)
        if len(lam) != 3 or not all(np.isfinite(lam)) or min(lam) <= 0:
            raise SpaceError("lambdas must be three positive reals")
        object.__setattr__(self, "lambdas", lam)
        k = float(self.kappa)
        if not np.isfinite(k):
            raise SpaceError("kappa must be finite")
        if self.kind == S2XR and k <= 0:
            raise SpaceError("s2xr needs kappa > 0")
        if self.kind == H2XR and k >= 0:
            raise SpaceError("h2xr needs kappa < 0")
        object.__setattr__(self, "kappa", k)

    @property
    def A(self) -> np.ndarray:
        return np.array(self.matrix_a)

    @property
    def is_lie_group(self) -> bool:
        return self.kind in (SEMIDIRECT, SL2)

    @classmethod
    def semidirect(cls, a, name=""):
        return cls(SEMIDIRECT, matrix_a=a, name=name)

    @classmethod
    def sl2(cls, l1=1.0, l2=1.0, l3=1.0, name=""):
        return cls(SL2, lambdas=(l1, l2, l3), name=name)

    def to_json(self) -> dict:
        if self.kind == SEMIDIRECT:
            return {"kind": SEMIDIRECT, "A": [list(r) for r in self.matrix_a]}
        if self.kind == SL2:
            return {"kind": SL2, "lambda": list(self.lambdas)}
        return {"kind": self.kind, "kappa": self.kappa}

    @classmethod
    def from_json(cls, data: dict) -> "SpaceSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise SpaceError("space JSON must be an object with a 'kind' key")
        kind = data["kind"]
        try:
            if kind == SEMIDIRECT:
                return cls(SEMIDIRECT, matrix_a=data["A"])
            if kind == SL2:
                return cls(SL2, lambdas=data["lambda"])
            if kind in (S2XR, H2XR):
                default = 1.0 if kind == S2XR else -1.0
                return cls(kind, kappa=data.get("kappa", default))
        except (KeyError, TypeError) as exc:
            raise SpaceError(f"malformed space JSON: {exc}") from exc
        raise SpaceError(f"unknown space kind {kind!r}")


def builtin_space(name: str) -> SpaceSpec:
    """Resolve names like ``h3``, ``sol3``, ``h2xr(-1)`` or ``sl2(1,1,1)``."""
    m = re.fullmatch(r"\s*([a-z0-9]+)\s*(?:\((.*)\))?\s*", name)
    if not m:
        raise SpaceError(f"cannot parse space name {name!r}")
    key, argtext = m.group(1), m.group(2)
    try:
        args = [float(t) for t in argtext.split(",")] if argtext else []
    except ValueError as exc:
        raise SpaceError(f"bad arguments in {name!r}") from exc

    def arg(i, default):
        return args[i] if len(args) > i else default

    if key == "euclidean":
        return SpaceSpec.semidirect([[0, 0], [0, 0]], name=name)
    if key == "h3":
        return SpaceSpec.semidirect([[1, 0], [0, 1]], name=name)
    if key == "nil3":
        return SpaceSpec.semidirect([[0, 1], [0, 0]], name=name)
    if key == "sol3":
        c = arg(0, 1.0)
        if c == 1.0 and not args:
            return SpaceSpec.semidirect([[1, 0], [0, -1]], name=name)
        return SpaceSpec.semidirect([[0, c], [1 / c, 0]], name=name)
    if key == "e2tilde":
        c = arg(0, 1.0)
        return SpaceSpec.semidirect([[0, -c], [1 / c, 0]], name=name)
    if key == "nonunimodular":
        return SpaceSpec.semidirect([[1, 0], [0, arg(0, 0.5)]], name=name)
    if key == "h2xr":
        return SpaceSpec(H2XR, kappa=arg(0, -1.0), name=name)
    if key == "s2xr":
        return SpaceSpec(S2XR, kappa=arg(0, 1.0), name=name)
    if key == "sl2":
        return SpaceSpec.sl2(arg(0, 1.0), arg(1, 1.0), arg(2, 1.0), name=name)
    raise SpaceError(f"unknown built-in space {name!r}")


def load_space(ref: str) -> SpaceSpec:
    """A JSON file path or a built-in space name."""
    path = Path(ref)
    if path.suffix == ".json" or path.is_file():
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise SpaceError(f"cannot read space file {ref}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SpaceError(f"space file {ref} is not valid JSON: {exc}") from exc
        return SpaceSpec.from_json(data)
    return builtin_space(ref)


# ---------------------------------------------------------------------------
# 2x2 exponentials


def _cosh_sinhc(delta, z):
    """(C, S) with exp(z B) = C I + S B whenever B is traceless with B^2 = delta I."""
    delta = np.asarray(delta, dtype=float)
    z = np.asarray(z, dtype=float)
    delta, z = np.broadcast_arrays(delta, z)
    c = np.empty(z.shape)
    s = np.empty(z.shape)
    hyp = delta > DISC_TOL
    ell = delta < -DISC_TOL
    nil = ~(hyp | ell)
    r = np.sqrt(delta[hyp])
    c[hyp] = np.cosh(z[hyp] * r)
    s[hyp] = np.sinh(z[hyp] * r) / r
    r = np.sqrt(-delta[ell])
    c[ell] = np.cos(z[ell] * r)
    s[ell] = np.sin(z[ell] * r) / r
    dz2 = delta[nil] * z[nil] ** 2
    c[nil] = 1.0 + dz2 / 2 + dz2**2 / 24
    s[nil] = z[nil] * (1.0 + dz2 / 6 + dz2**2 / 120)
    return c, s


def expm2(A, z):
    """Closed-form ``exp(z A)`` for a real 2x2 matrix; vectorized over ``z``."""
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(z))):
        raise ValueError("expm2 needs finite input")
    half_tr = 0.5 * (A[0, 0] + A[1, 1])
    B = A - half_tr * np.eye(2)
    delta = B[0, 0] ** 2 + B[0, 1] * B[1, 0]  # B @ B = delta * I
    c, s = _cosh_sinhc(delta, z)
    scale = np.exp(z * half_tr)
    out = c[..., None, None] * np.eye(2) + s[..., None, None] * B
    return scale[..., None, None] * out


# ---------------------------------------------------------------------------
# universal cover of SL(2,R)

# Cayley transform of the upper half plane onto the unit disk
_CAYLEY = np.array([[1, -1j], [1, 1j]])
_CAYLEY_INV = np.linalg.inv(_CAYLEY)
SL2_BASIS = np.array([[[1, 0], [0, -1]], [[0, 1], [1, 0]], [[0, -1], [1, 0]]], dtype=float)


def _su11_coeffs(v):
    """(sigma, beta) with C X C^-1 = [[i sigma, beta], [conj beta, -i sigma]]."""
    v = np.asarray(v, dtype=float)
    return -v[..., 2], v[..., 0] - 1j * v[..., 1]


def su11_matrix(p) -> np.ndarray:
    """SU(1,1) matrix of a lifted point; determined by theta modulo 4 pi."""
    p = np.asarray(p, dtype=float)
    w = p[..., 0] + 1j * p[..., 1]
    h = np.exp(0.5j * p[..., 2])
    n = 1.0 / np.sqrt(1.0 - np.abs(w) ** 2)
    U = np.empty(p.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0] = h * n
    U[..., 0, 1] = h * w * n
    U[..., 1, 0] = np.conj(h * w) * n
    U[..., 1, 1] = np.conj(h) * n
    return U


def sl2_matrix(p) -> np.ndarray:
    """Image of a lifted point in SL(2,R) (acting on the upper half plane)."""
    M = _CAYLEY_INV @ su11_matrix(p) @ _CAYLEY
    return M.real


def _sl2_mul(p, q):
    w1 = p[..., 0] + 1j * p[..., 1]
    w2 = q[..., 0] + 1j * q[..., 1]
    rot = np.exp(-1j * q[..., 2])
    den = 1.0 + w1 * np.conj(w2) * rot
    w3 = (w2 + w1 * rot) / den
    th = p[..., 2] + q[..., 2] + 2.0 * np.angle(den)
    return np.stack([w3.real, w3.imag, th], axis=-1)


def _sl2_exp(v, t):
    """exp(t X) lifted continuously from the identity; closed form per character."""
    sigma, beta = _su11_coeffs(v)
    t = np.asarray(t, dtype=float)
    mu2 = sigma**2 - abs(beta) ** 2  # X^2 = -mu2 I
    c, s = _cosh_sinhc(-mu2, t)
    alpha = c + 1j * sigma * s
    b = beta * s
    w = b / alpha
    if mu2 > DISC_TOL:
        # alpha(t) winds around 0 along an ellipse; unwrap the argument
        mu = math.sqrt(mu2)
        phi = mu * t
        n = np.round(phi / (2 * np.pi))
        red = phi - 2 * np.pi * n
        k = sigma / mu
        arg = np.arctan2(k * np.sin(red), np.cos(red)) + 2 * np.pi * n * np.sign(k)
    else:
        arg = np.angle(alpha)  # Re(alpha) > 0 for hyperbolic and parabolic
    return np.stack([w.real, w.imag, 2.0 * arg], axis=-1)


# ---------------------------------------------------------------------------
# generic operations


def identity(spec: SpaceSpec) -> np.ndarray:
    return np.zeros(3)


def check_point(spec: SpaceSpec, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise SpaceError("points have three coordinates")
    if not np.all(np.isfinite(p)):
        raise SpaceError("point coordinates must be finite")
    if spec.kind == SL2 and np.any(p[..., 0] ** 2 + p[..., 1] ** 2 >= 1.0):
        raise SpaceError("sl2 points need |w| < 1")
    return p


def _require_group(spec):
    if not spec.is_lie_group:
        raise SpaceError(f"{spec.kind} is not a metric Lie group in this toolkit")


def multiply(spec: SpaceSpec, g, h) -> np.ndarray:
    """Group product ``g * h``; broadcasts over leading axes."""
    _require_group(spec)
    g = check_point(spec, g)
    h = check_point(spec, h)
    if spec.kind == SL2:
        return _sl2_mul(g, h)
    E = expm2(spec.A, g[..., 2])
    ph = np.einsum("...ij,...j->...i", E, h[..., :2])
    return np.concatenate([g[..., :2] + ph, (g[..., 2] + h[..., 2])[..., None]], axis=-1)


def inverse(spec: SpaceSpec, g) -> np.ndarray:
    _require_group(spec)
    g = check_point(spec, g)
    if spec.kind == SL2:
        w = g[..., 0] + 1j * g[..., 1]
        wi = -w * np.exp(1j * g[..., 2])
        return np.stack([wi.real, wi.imag, -g[..., 2]], axis=-1)
    E = expm2(spec.A, -g[..., 2])
    p = -np.einsum("...ij,...j->...i", E, g[..., :2])
    return np.concatenate([p, -g[..., 2:3]], axis=-1)


def one_param_subgroup(spec: SpaceSpec, v, t) -> np.ndarray:
    """``exp(t v)``; vectorized over ``t``."""
    _require_group(spec)
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError("v must be a finite 3-vector")
    if not np.any(v):
        raise ValueError("one_param_subgroup needs a nonzero vector")
    t = np.asarray(t, dtype=float)
    if spec.kind == SL2:
        return _sl2_exp(v, t)
    # the augmented matrix [[zA, p],[0, 0]] exponentiates to [[e^{zA}, int e^{sA} p]]
    flat = np.atleast_1d(t).ravel()
    out = np.empty((flat.size, 3))
    A = spec.A
    for i, ti in enumerate(flat):
        M = np.zeros((3, 3))
        M[:2, :2] = ti * v[2] * A
        M[:2, 2] = ti * v[:2]
        out[i, :2] = expm(M)[:2, 2]
        out[i, 2] = ti * v[2]
    return out.reshape(t.shape + (3,))


def exp_map(spec: SpaceSpec, v) -> np.ndarray:
    """Group exponential, allowing the zero vector."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return identity(spec)
    return one_param_subgroup(spec, v, 1.0)
