import numpy as np
import pytest

from homog3 import cmc
from homog3 import frames as F
from homog3 import group as G
from homog3 import surface as S
from homog3.group import SpaceError

from oracles import h2xr_sphere_area

EUC = G.builtin_space("euclidean")
SOL = G.builtin_space("sol3")


def _circle_fit(P):
    """Least squares circle through planar points: (center, radius)."""
    A = np.column_stack([2 * P[:, 0], 2 * P[:, 1], np.ones(len(P))])
    b = (P[:, :2] ** 2).sum(1)
    cx, cy, c = np.linalg.lstsq(A, b, rcond=None)[0]
    return np.array([cx, cy]), np.sqrt(c + cx * cx + cy * cy)


# ---------------------------------------------------------------------------
# profiles


def test_euclidean_profile_is_circle_of_radius_one_over_2h():
    for H in (0.5, 1.0):
        prof = cmc.solve_profile_cmc(EUC, [0, 0, 1], H, length=4.0)
        P = prof.at(prof.s)
        assert np.ptp(P[:, 2]) < 1e-14
        center, r = _circle_fit(P)
        assert r == pytest.approx(1 / (2 * H), rel=1e-9)
        assert np.max(np.abs(np.hypot(*(P[:, :2] - center).T) - r)) < 1e-9


def test_euclidean_minimal_profile_is_line():
    prof = cmc.solve_profile_cmc(EUC, [0, 0, 1], 0.0, angle=0.4, length=3.0)
    P = prof.at(prof.s)
    d = P[-1] - P[0]
    off = P - P[0] - np.outer((P - P[0]) @ d / (d @ d), d)
    assert np.max(np.abs(off)) < 1e-10
    assert np.linalg.norm(d) == pytest.approx(3.0, rel=1e-9)
    assert np.ptp(np.gradient(prof.angle, prof.s)) < 1e-8


@pytest.mark.parametrize("K", [[1, 0, 0], [0, 1, 0]])
def test_sol3_horizontal_field_turning_rate(K):
    # the orbit spaces of the horizontal translations are flat with |K| constant
    # along them, so the profile turns at the constant rate 2H
    H = 0.4
    prof = cmc.solve_profile_cmc(SOL, K, H, length=3.0)
    rate = np.gradient(prof.angle, prof.s)[5:-5]
    assert np.allclose(rate, 2 * H, atol=1e-6)


def test_euclidean_cylinder_mean_curvature():
    prof = cmc.solve_profile_cmc(EUC, [0, 0, 1], 0.5, length=5.0)
    imm = cmc.killing_cylinder(EUC, [0, 0, 1], prof, t_range=(-1, 1))
    rng = np.random.default_rng(0)
    u, v = rng.uniform(-0.8, 0.8, 10), rng.uniform(0.3, 4.7, 10)
    fld = S.fundamental_forms(EUC, imm, u, v)
    assert np.allclose(fld.H, 0.5, atol=1e-6)


@pytest.mark.parametrize("name, K, H", [("sol3", [0, 0, 1], 0.3), ("sol3", [1, 0, 0], -0.2),
                                        ("h3", [0, 1, 0], 0.7), ("nil3", [1, 0, 0], 0.25)])
def test_swept_surface_has_target_mean_curvature(name, K, H):
    spec = G.builtin_space(name)
    prof = cmc.solve_profile_cmc(spec, K, H, length=1.5)
    imm = cmc.killing_cylinder(spec, K, prof, t_range=(-0.5, 0.5))
    s = np.linspace(0.2, 1.3, 6)
    fld = S.fundamental_forms(spec, imm, np.zeros_like(s), s)
    assert np.allclose(fld.H, H, atol=1e-5)
    # mean curvature is constant along each Killing orbit
    for t in (-0.3, 0.4):
        other = S.fundamental_forms(spec, imm, np.full_like(s, t), s)
        assert np.max(np.abs(other.H - fld.H)) < 1e-7
    # the Killing field is tangent
    Kf = F.killing_field(spec, K)
    assert np.max(np.abs(F.inner(spec, fld.point, fld.normal, Kf(fld.point)))) < 1e-8


def test_solve_profile_rejects_bad_input():
    with pytest.raises(ValueError):
        cmc.solve_profile_cmc(SOL, [0, 0, 1], np.nan)
    with pytest.raises(ValueError):
        cmc.solve_profile_cmc(SOL, [0, 0, 0], 0.3)


def test_killing_cylinder_rejects_tangent_profile():
    line = cmc.ProfileCurve.from_function(lambda s: np.stack([0 * s, 0 * s, s], -1), (0, 1))
    with pytest.raises(ValueError):
        cmc.killing_cylinder(EUC, [0, 0, 1], line)
    with pytest.raises(SpaceError):
        cmc.killing_cylinder(G.builtin_space("h2xr(-1)"), [0, 0, 1], line)


def test_reparametrized_profile_sweeps_same_surface():
    prof = cmc.solve_profile_cmc(SOL, [0, 0, 1], 0.3, length=2.0)
    rep = prof.reparametrized(2.0, 0.5)
    assert rep.length == pytest.approx(prof.length / 2)
    s = np.linspace(0.1, 0.6, 5)
    assert np.allclose(rep.at(s), prof.at(2 * s + 0.5), atol=0)
    a = cmc.killing_cylinder(SOL, [0, 0, 1], prof, t_range=(-0.2, 0.2))
    b = cmc.killing_cylinder(SOL, [0, 0, 1], rep, t_range=(-0.2, 0.2))
    assert np.allclose(a.chart(0.1, 2 * s + 0.5), b.chart(0.1, s), atol=1e-14)


# ---------------------------------------------------------------------------
# the closed Sol3 loop


@pytest.fixture(scope="module")
def sol_loop():
    return cmc.closed_symmetric_profile(SOL, [0, 0, 1], 0.3)


def test_sol3_loop_closes(sol_loop):
    assert sol_loop.closed
    assert sol_loop.closure_residual < 1e-4
    L = sol_loop.length
    s = np.linspace(0, L, 9)
    assert np.allclose(sol_loop.at(s[0]), sol_loop.at(s[-1]), atol=1e-12)
    # symmetric under both slice reflections
    P = sol_loop.points
    assert np.max(np.abs(P[:, 0])) == pytest.approx(sol_loop.extra["offset"], rel=1e-6)


def test_sol3_loop_surface_is_cmc(sol_loop):
    imm = cmc.killing_cylinder(SOL, [0, 0, 1], sol_loop, t_range=(-1, 1), n_s=256)
    L = sol_loop.length
    s = np.linspace(0, L, 41)[:-1] + 0.013
    fld = S.fundamental_forms(SOL, imm, np.zeros_like(s), s)
    assert np.max(np.abs(fld.H - 0.3)) < 1e-5
    Kf = F.killing_field(SOL, [0, 0, 1])
    assert np.max(np.abs(F.inner(SOL, fld.point, fld.normal, Kf(fld.point)))) < 1e-8
    shifted = S.fundamental_forms(SOL, imm, np.full_like(s, 0.7), s)
    assert np.max(np.abs(shifted.H - fld.H)) < 1e-8


def test_sol3_loop_gauss_curve_closed_and_embedded(sol_loop):
    imm = cmc.killing_cylinder(SOL, [0, 0, 1], sol_loop, n_s=256)
    gc = cmc.gauss_curve(SOL, imm)
    assert gc.verdict == "closed"
    assert gc.closure < 1e-5
    assert gc.min_speed > 1e-3
    assert gc.embedded
    assert np.allclose(np.linalg.norm(gc.points, axis=1), 1, atol=1e-12)


# ---------------------------------------------------------------------------
# rotational spheres


@pytest.mark.parametrize("H", [0.5, 1.0, 2.0])
def test_euclidean_sphere_area(H):
    sol = cmc.solve_rotational_sphere(EUC, H)
    assert sol.closed
    assert sol.area == pytest.approx(4 * np.pi / H**2, rel=1e-8)
    top, bot = sol.poles
    assert np.linalg.norm(top - bot) == pytest.approx(2 / H, rel=1e-6)


@pytest.mark.parametrize("H", [0.55, 0.6, 0.8, 1.0])
def test_h2xr_sphere_area_matches_quadrature(H):
    sol = cmc.solve_rotational_sphere(G.builtin_space("h2xr(-1)"), H)
    assert sol.area == pytest.approx(h2xr_sphere_area(H), rel=1e-6)


@pytest.mark.parametrize("H", [0.3, 0.5])
def test_h2xr_below_threshold_does_not_close(H):
    with pytest.raises(cmc.NoClosureError) as info:
        cmc.solve_rotational_sphere(G.builtin_space("h2xr(-1)"), H)
    assert info.value.escape


@pytest.mark.parametrize("name, H", [("nil3", 0.5), ("s2xr(1)", 0.0), ("s2xr(1)", 0.7), ("h3", 1.5)])
def test_rotational_spheres_close(name, H):
    sol = cmc.solve_rotational_sphere(G.builtin_space(name), H)
    assert sol.closed and sol.closure_residual < 1e-6
    assert sol.area > 0


def test_rotational_sphere_mean_curvature():
    spec = G.builtin_space("nil3")
    sol = cmc.solve_rotational_sphere(spec, 1.0)
    imm = sol.immersion(32, 64)
    u = np.linspace(0.4, np.pi - 0.4, 7)
    fld = S.fundamental_forms(spec, imm, u, np.full_like(u, 1.1))
    assert np.allclose(fld.H, 1.0, atol=1e-5)


def test_rotational_sphere_validation():
    with pytest.raises(ValueError):
        cmc.solve_rotational_sphere(EUC, -1.0)
    with pytest.raises(SpaceError):
        cmc.solve_rotational_sphere(SOL, 1.0)


@pytest.mark.parametrize("name, H", [("nil3", 0.5), ("h2xr(-1)", 1.0)])
def test_rotational_sphere_index_one_nullity_three(name, H):
    spec = G.builtin_space(name)
    sp = S.stability_spectrum(spec, cmc.solve_rotational_sphere(spec, H).immersion(32, 64), k=6)
    assert sp.index == 1 and sp.nullity == 3


def test_s2xr_slice_is_stable_with_one_jacobi_field():
    spec = G.builtin_space("s2xr(1)")
    sp = S.stability_spectrum(spec, cmc.solve_rotational_sphere(spec, 0.0).immersion(32, 64), k=4)
    assert sp.index == 0 and sp.nullity == 1


# ---------------------------------------------------------------------------
# sweeps


def test_area_sweep_sorted_with_open_rows():
    rows = cmc.area_sweep(G.builtin_space("h2xr(-1)"), [1.0, 0.4, 0.6])
    assert [r.H for r in rows] == [0.4, 0.6, 1.0]
    assert not rows[0].closed and np.isnan(rows[0].area)
    assert rows[1].closed and rows[2].closed
    assert rows[1].area > rows[2].area


def test_area_sweep_independent_of_threads(monkeypatch):
    spec = G.builtin_space("nil3")
    monkeypatch.setenv("HOMOG3_THREADS", "1")
    a = cmc.area_sweep(spec, [0.5, 1.0, 2.0])
    monkeypatch.setenv("HOMOG3_THREADS", "3")
    b = cmc.area_sweep(spec, [2.0, 0.5, 1.0])
    assert a == b


def test_area_sweep_rejects_non_rotational():
    with pytest.raises(SpaceError):
        cmc.area_sweep(SOL, [1.0])


# ---------------------------------------------------------------------------
# center of symmetry


def test_center_of_euclidean_sphere():
    sol = cmc.solve_rotational_sphere(EUC, 1.0)
    top, bot = sol.poles
    c = cmc.center_of_symmetry(EUC, sol, [0, 0, 1])
    assert np.allclose(c, 0.5 * (top + bot), atol=1e-9)
    # every profile point sits at distance 1 from it
    P = sol.profile.at(sol.profile.s)
    assert np.allclose(np.linalg.norm(P - c, axis=1), 1.0, atol=1e-6)


@pytest.mark.parametrize("name", ["nil3", "h3"])
def test_center_of_symmetry_is_equivariant(name):
    spec = G.builtin_space(name)
    sol = cmc.solve_rotational_sphere(spec, 1.5 if name == "h3" else 1.0)
    a = np.array([0.3, -0.4, 0.2])
    v = F.rotation(spec).axis_vector  # the x axis is the center of nil3
    c0 = cmc.center_of_symmetry(spec, sol, v)
    c1 = cmc.center_of_symmetry(spec, sol.translated(a), v)
    assert np.allclose(c1, G.multiply(spec, a, c0), atol=1e-9)


def test_center_of_product_sphere_is_axis_midpoint():
    spec = G.builtin_space("h2xr(-1)")
    sol = cmc.solve_rotational_sphere(spec, 1.0)
    c = cmc.center_of_symmetry(spec, sol)
    top, bot = sol.poles
    assert np.allclose(c, 0.5 * (top + bot), atol=1e-6)


# ---------------------------------------------------------------------------
# Gauss curves


def test_gauss_curve_of_leaf_is_constant():
    spec = G.builtin_space("h3")
    line = cmc.ProfileCurve.from_function(lambda s: np.stack([0 * s, s, 0 * s], -1), (-1, 1))
    imm = cmc.killing_cylinder(spec, [1, 0, 0], line)
    gc = cmc.gauss_curve(spec, imm)
    assert gc.verdict == "constant"
    assert np.allclose(np.abs(gc.points[:, 2]), 1, atol=1e-12)


def test_gauss_curve_of_round_cylinder_is_equator():
    circ = cmc.ProfileCurve.from_function(
        lambda s: np.stack([np.cos(s), np.sin(s), 0 * s], -1), (0, 2 * np.pi), closed=True)
    imm = cmc.killing_cylinder(EUC, [0, 0, 1], circ, n_s=128)
    gc = cmc.gauss_curve(EUC, imm)
    assert gc.verdict == "closed" and gc.embedded
    assert np.max(np.abs(gc.points[:, 2])) < 1e-10
    assert gc.min_speed == pytest.approx(1.0, rel=1e-3)


def test_gauss_curve_of_open_profile_is_open():
    prof = cmc.solve_profile_cmc(SOL, [0, 0, 1], 0.3, length=1.0)
    gc = cmc.gauss_curve(SOL, cmc.killing_cylinder(SOL, [0, 0, 1], prof))
    assert gc.verdict == "open"


def test_center_of_symmetry_checks_the_axis():
    spec = G.builtin_space("nil3")
    sol = cmc.solve_rotational_sphere(spec, 1.0)
    # the rotation axis of nil3 is the x axis, so E3 is not the Gauss map at the poles
    with pytest.raises(ValueError, match="poles"):
        cmc.center_of_symmetry(spec, sol, [0, 0, 1])
