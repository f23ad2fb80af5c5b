import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homog3 import group as G
from homog3.group import SpaceError, SpaceSpec

from oracles import mp_expm, series_expm

finite = st.floats(-3, 3, allow_nan=False)
mat = st.lists(finite, min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))


# ---------------------------------------------------------------------------
# expm2


def test_expm2_zero_matrix_is_identity():
    for z in (-5.0, 0.0, 2.5):
        assert np.array_equal(G.expm2(np.zeros((2, 2)), z), np.eye(2))


def test_expm2_nilpotent():
    z = 1.7
    assert np.allclose(G.expm2([[0, 1], [0, 0]], z), [[1, z], [0, 1]], atol=1e-15)


def test_expm2_rotation_branch_example():
    c = 2.0
    M = G.expm2([[0, -c], [1 / c, 0]], np.pi / 2)
    assert np.allclose(M, [[0, -2], [0.5, 0]], atol=1e-15)
    assert np.allclose(M, series_expm(np.pi / 2 * np.array([[0, -c], [1 / c, 0]])), atol=1e-13)


@pytest.mark.parametrize("A", [[[1, 0], [0, -1]], [[0.3, 2], [-1, 0.1]], [[2, 1], [1, 2]],
                               [[1, 1], [-1, -1]], [[0, 0], [0, 0]]])
def test_expm2_against_extended_precision(A):
    for z in (-3.0, -0.4, 0.9, 3.0):
        ref = mp_expm(z * np.array(A, dtype=float))
        assert np.allclose(G.expm2(A, z), ref, rtol=1e-13, atol=1e-13)


def test_expm2_continuous_across_branches():
    # discriminant crosses zero: elliptic, nilpotent, hyperbolic
    z = 1.3
    vals = [G.expm2([[0, 1], [eps, 0]], z) for eps in (-1e-13, 0.0, 1e-13)]
    for v in vals:
        assert np.allclose(v, [[1, z], [0, 1]], atol=1e-12)
    for eps in (-1e-7, 1e-7, -1e-3, 1e-3):
        A = np.array([[0, 1], [eps, 0]])
        assert np.allclose(G.expm2(A, z), mp_expm(z * A), rtol=1e-14, atol=1e-14)


def test_expm2_vectorized_over_z():
    A = np.array([[0.5, -1], [2, 0.1]])
    zs = np.linspace(-2, 2, 7)
    stack = G.expm2(A, zs)
    assert stack.shape == (7, 2, 2)
    for z, M in zip(zs, stack):
        assert np.allclose(M, G.expm2(A, z), atol=0)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_expm2_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        G.expm2([[0, bad], [0, 0]], 1.0)
    with pytest.raises(ValueError):
        G.expm2(np.eye(2), bad)


@settings(max_examples=200, deadline=None)
@given(mat, finite, finite)
def test_expm2_semigroup(A, s, t):
    P, Q = G.expm2(A, s), G.expm2(A, t)
    # the product itself loses digits when P and Q are large and cancel
    scale = max(1.0, np.linalg.norm(P) * np.linalg.norm(Q))
    assert np.max(np.abs(P @ Q - G.expm2(A, s + t))) < 1e-11 * scale


@settings(max_examples=200, deadline=None)
@given(mat, finite)
def test_expm2_determinant(A, z):
    M = G.expm2(A, z)
    ref = np.exp(z * np.trace(A))
    # a 2x2 determinant of entries ~|M| carries rounding ~eps |M|^2 on its own
    tol = 1e-10 * ref + 8 * np.finfo(float).eps * np.sum(M**2)
    assert abs(np.linalg.det(M) - ref) <= tol


# ---------------------------------------------------------------------------
# group law


def test_multiply_examples():
    e = G.builtin_space("euclidean")
    h3 = G.builtin_space("h3")
    sol = G.builtin_space("sol3")
    assert np.allclose(G.multiply(e, [1, 2, 3], [4, 5, 6]), [5, 7, 9])
    assert np.allclose(G.multiply(h3, [0, 0, np.log(2)], [1, 0, 0]), [2, 0, np.log(2)])
    assert np.allclose(G.multiply(sol, [0, 0, 1], [1, 1, 0]), [np.e, 1 / np.e, 1], atol=1e-15)


def test_inverse_examples():
    h3 = G.builtin_space("h3")
    assert np.allclose(G.inverse(h3, [0, 0, 0]), [0, 0, 0])
    assert np.allclose(G.inverse(h3, [1, 0, 0]), [-1, 0, 0])
    g = np.array([0, 0, 1.0])
    assert np.allclose(G.multiply(h3, g, G.inverse(h3, g)), 0, atol=1e-15)


SPACES = ["euclidean", "h3", "nil3", "sol3", "sol3(2)", "e2tilde(1.5)", "nonunimodular(0.3)",
          "sl2(1,1,1)", "sl2(0.5,2,1)"]


def _random_points(spec, rng, n):
    p = rng.uniform(-1, 1, (n, 3))
    if spec.kind == G.SL2:
        p[:, :2] *= 0.6  # inside the unit disk
        p[:, 2] *= 4
    return p


@pytest.mark.parametrize("name", SPACES)
def test_associativity_and_inverse(name):
    spec = G.builtin_space(name)
    rng = np.random.default_rng(1)
    a, b, c = (_random_points(spec, rng, 50) for _ in range(3))
    lhs = G.multiply(spec, G.multiply(spec, a, b), c)
    rhs = G.multiply(spec, a, G.multiply(spec, b, c))
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    e = G.multiply(spec, a, G.inverse(spec, a))
    assert np.max(np.abs(e)) < 1e-12
    assert np.allclose(G.identity(spec), 0)


@pytest.mark.parametrize("name", SPACES)
def test_one_param_subgroup_homomorphism(name):
    spec = G.builtin_space(name)
    rng = np.random.default_rng(2)
    for _ in range(20):
        v = rng.normal(size=3)
        s, t = rng.uniform(-3, 3, 2)
        lhs = G.multiply(spec, G.one_param_subgroup(spec, v, s), G.one_param_subgroup(spec, v, t))
        rhs = G.one_param_subgroup(spec, v, s + t)
        # coordinates reach e^6 in h3, so the bound is relative to their size
        assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, np.abs(rhs).max())


@pytest.mark.parametrize("name", SPACES)
def test_one_param_subgroup_initial_velocity(name):
    spec = G.builtin_space(name)
    v = np.array([0.3, -0.7, 0.5])
    assert np.allclose(G.one_param_subgroup(spec, v, 0.0), 0, atol=1e-15)
    h = 1e-6
    d = (G.one_param_subgroup(spec, v, h) - G.one_param_subgroup(spec, v, -h)) / (2 * h)
    # at the identity the lie frame is the coordinate frame up to the SL2 chart scaling
    from homog3 import frames as F
    assert np.allclose(d, F.left_field(spec, v, np.zeros(3)), atol=1e-8)


def test_one_param_subgroup_rejects_zero():
    with pytest.raises(ValueError):
        G.one_param_subgroup(G.builtin_space("h3"), [0, 0, 0], 1.0)


def test_z_axis_subgroup():
    for name in ("h3", "sol3", "nil3"):
        assert np.allclose(G.one_param_subgroup(G.builtin_space(name), [0, 0, 1], 0.8), [0, 0, 0.8])


def test_sl2_elliptic_subgroup_projects_to_rotation():
    spec = G.builtin_space("sl2(1,1,1)")
    for t in (0.3, 1.0, 2.5):
        P = G.sl2_matrix(G.one_param_subgroup(spec, [0, 0, 1], t))
        R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        assert np.allclose(P, R, atol=1e-12) or np.allclose(P, -R, atol=1e-12)


def test_sl2_hyperbolic_subgroup_projects_to_diagonal():
    spec = G.builtin_space("sl2(1,1,1)")
    P = G.sl2_matrix(G.one_param_subgroup(spec, [1, 0, 0], 1.0))
    D = np.diag([np.e, 1 / np.e])
    assert np.allclose(P, D, atol=1e-12) or np.allclose(P, -D, atol=1e-12)


@pytest.mark.parametrize("t, turns", [(np.pi, -1), (2 * np.pi, -2)])
def test_sl2_winding_is_central(t, turns):
    # exp(t E3) acts on the disk by the rotation of angle -2t, so t = pi is the
    # generator of the center and shifts the winding by exactly -2 pi
    spec = G.builtin_space("sl2(1,1,1)")
    z = G.one_param_subgroup(spec, [0, 0, 1], t)
    assert np.allclose(z, [0, 0, 2 * np.pi * turns], atol=1e-12)
    rng = np.random.default_rng(3)
    g = _random_points(spec, rng, 20)
    for left in (G.multiply(spec, g, z), G.multiply(spec, z, g)):
        assert np.allclose(left[:, :2], g[:, :2], atol=1e-12)
        assert np.allclose(left[:, 2] - g[:, 2], 2 * np.pi * turns, atol=1e-12)


def test_sl2_rejects_points_outside_disk():
    spec = G.builtin_space("sl2(1,1,1)")
    with pytest.raises(SpaceError):
        G.check_point(spec, [0.9, 0.9, 0.0])


# ---------------------------------------------------------------------------
# specs


def test_spec_json_round_trip(tmp_path):
    for name in SPACES + ["h2xr(-1)", "s2xr(2)"]:
        spec = G.builtin_space(name)
        path = tmp_path / "s.json"
        path.write_text(json.dumps(spec.to_json()))
        assert G.load_space(str(path)) == spec


@pytest.mark.parametrize("data", [
    {"kind": "semidirect", "A": [[1, 0]]},
    {"kind": "semidirect", "A": [[1, 0], [0, float("nan")]]},
    {"kind": "sl2", "lambda": [1, 0, 1]},
    {"kind": "sl2", "lambda": [1, 1]},
    {"kind": "nope"},
    {"A": [[0, 0], [0, 0]]},
    {"kind": "h2xr", "kappa": 1.0},
    {"kind": "s2xr", "kappa": -1.0},
])
def test_spec_validation(data):
    with pytest.raises(SpaceError):
        SpaceSpec.from_json(data)


def test_load_space_errors(tmp_path):
    with pytest.raises(SpaceError):
        G.load_space(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SpaceError):
        G.load_space(str(bad))
    with pytest.raises(SpaceError):
        G.builtin_space("klein")


def test_builtin_families():
    assert np.allclose(G.builtin_space("sol3(2)").A, [[0, 2], [0.5, 0]])
    assert np.allclose(G.builtin_space("e2tilde(2)").A, [[0, -2], [0.5, 0]])
    assert np.allclose(G.builtin_space("nonunimodular(0.25)").A, [[1, 0], [0, 0.25]])
    assert G.builtin_space("sl2(2,2,1)").lambdas == (2.0, 2.0, 1.0)
    assert G.builtin_space("h2xr(-2)").kappa == -2.0
