import math

import numpy as np
import pytest

from hkflow import flow, geometry, sobolev
from hkflow.errors import HypothesisViolated, NegativeField
from hkflow.mesh import ellipsoid


@pytest.fixture(scope="module")
def cache4(sphere4):
    return geometry.build_geometry(sphere4)


def test_constants_n2k2():
    sc = sobolev.compute_constants(2, 2, volume=4 * math.pi, T=1.0)
    assert sc.Q_k == pytest.approx(4.0, rel=1e-15)
    assert sc.gamma == pytest.approx(25.0 / 8.0, rel=1e-15)
    assert sc.c_n == pytest.approx(64.0 / math.sqrt(4 * math.pi), rel=1e-12)
    assert sc.c_nk == pytest.approx(3 * sc.c_n, rel=1e-14)
    # headline magnitude: the constants are astronomically loose
    assert 1e14 < sc.A_nk < 1e15


def test_constants_k1_reduction():
    sc = sobolev.compute_constants(3, 1, volume=1.0, T=1.0)
    assert sc.Q_k == pytest.approx(3.0, rel=1e-15)  # n/(n-2) at n=3
    # at k = 1 the gradient-form and space-time constants collapse onto A
    assert sc.A_tilde_nk == pytest.approx(sc.A_nk, rel=1e-14)
    assert sc.B_nkT == pytest.approx(sc.A_nk, rel=1e-14)
    sc2 = sobolev.compute_constants(3, 1, volume=9.0, T=1.0)
    assert sc2.B_nkT == pytest.approx(sc2.A_nk, rel=1e-14)  # volume factor is 1


def test_constants_structure_relations():
    for n, k in ((2, 2), (3, 2), (2, 3), (4, 2), (3, 3)):
        vol, T = 7.3, 0.42
        sc = sobolev.compute_constants(n, k, volume=vol, T=T)
        assert sc.A_hat_nk == pytest.approx(
            sc.A_nk * vol ** ((k - 1) / (2 * (k + 1))), rel=1e-12)
        assert sc.A_tilde_nk == pytest.approx(
            sc.A_nk ** (1 / k) * (2 * k / (k + 1)) ** ((k + 1) / k), rel=1e-12)
        assert sc.B_nkT == pytest.approx(
            sc.A_tilde_nk * vol ** ((k - 1) * (k + 1) / (2 * k**2 * n))
            * max(T ** ((k - 1) / k), T ** ((k - 1) / (2 * k))), rel=1e-12)
        assert sc.c_nk > sc.c_n
        assert sc.Q_k > 1.0


def test_constants_reject_bad_pairs():
    for n, k in ((2, 1), (1, 2), (1, 1)):
        with pytest.raises(HypothesisViolated):
            sobolev.compute_constants(n, k, volume=1.0, T=1.0)
    with pytest.raises(HypothesisViolated):
        sobolev.compute_constants(2, 2, volume=-1.0, T=1.0)


def test_mu_exponent_positive():
    for n, k in ((2, 2), (3, 2), (2, 3), (5, 4)):
        sc = sobolev.compute_constants(n, k, volume=1.0, T=1.0)
        upper = n / (n - 1.0)
        for s in np.linspace(1.0, upper, 40)[1:-1]:
            assert sc.mu_nks(float(s)) > 0.0
        with pytest.raises(HypothesisViolated):
            sc.mu_nks(upper + 0.01)


def test_michael_simon_constant_field(cache4):
    one = np.ones(cache4.mesh.num_vertices)
    rep = sobolev.michael_simon_check(cache4, one, 2)
    assert rep.holds
    assert rep.lhs == pytest.approx(math.sqrt(4 * math.pi), rel=1e-2)
    # H = 2: right side is c_2 * 2 * Area
    c2 = 64.0 / math.sqrt(4 * math.pi)
    assert rep.rhs == pytest.approx(c2 * 2 * 4 * math.pi, rel=1e-2)
    assert rep.factors["grad_integral"] == pytest.approx(0.0, abs=1e-10)


def test_michael_simon_zero_field(cache4):
    zero = np.zeros(cache4.mesh.num_vertices)
    rep = sobolev.michael_simon_check(cache4, zero, 2)
    assert rep.holds
    assert rep.lhs == 0.0
    assert rep.ratio == 0.0


def test_michael_simon_rejects_negative(cache4):
    with pytest.raises(NegativeField):
        sobolev.michael_simon_check(cache4, -np.ones(cache4.mesh.num_vertices), 2)


def test_michael_simon_ellipsoid_refinement():
    # both sides Cauchy within 1% across two refinement levels
    sides = {}
    for level in (3, 4):
        mesh = ellipsoid(1.0, 0.9, 0.8, level)
        cache = geometry.build_geometry(mesh)
        w = 1.0 + mesh.vertices[:, 2]
        rep = sobolev.michael_simon_check(cache, w, 2)
        assert rep.holds
        sides[level] = (rep.lhs, rep.rhs)
    assert sides[3][0] == pytest.approx(sides[4][0], rel=1e-2)
    assert sides[3][1] == pytest.approx(sides[4][1], rel=1e-2)


def _field_corpus(mesh, seed=0):
    z = mesh.vertices[:, 2]
    zhat = z / np.abs(z).max()
    rng = np.random.default_rng(seed)
    return {
        "one": np.ones(mesh.num_vertices),
        "one_plus_z": 1.0 + zhat,
        "exp_z": np.exp(zhat),
        "x_shifted": mesh.vertices[:, 0] - mesh.vertices[:, 0].min(),
        "random_0": geometry.random_smooth_field(mesh, rng),
        "random_1": geometry.random_smooth_field(mesh, rng),
    }


def test_michael_simon_suite_holds(sphere3, sphere4, sphere5, triaxial3, torus_mesh):
    # >= 20 mesh/field pairs, torus included here (but not in pinching suites)
    pairs = 0
    for mesh in (sphere3, sphere4, sphere5, triaxial3, torus_mesh):
        cache = geometry.build_geometry(mesh)
        for name, w in _field_corpus(mesh).items():
            rep = sobolev.michael_simon_check(cache, w, 2)
            assert rep.holds, f"failed on {name}"
            assert rep.ratio < 0.5
            pairs += 1
    assert pairs >= 20


def test_nonlinear_sobolev_constant_field(cache4):
    one = np.ones(cache4.mesh.num_vertices)
    reps = sobolev.nonlinear_sobolev_check(cache4, one, 2, 2)
    # ||1||^(k+1) in L^((k+1)Qk/k) = Area^((k+1) k / ((k+1) Qk)) = Area^(1/2)
    assert reps["base"].lhs == pytest.approx(math.sqrt(4 * math.pi), rel=1e-2)
    assert reps["base"].holds and reps["l2"].holds
    assert reps["base"].factors["grad_term"] == pytest.approx(0.0, abs=1e-10)
    # H-term dominates: ||H||_5^5 = 2^5 Area
    assert reps["base"].factors["h_norm_power"] == pytest.approx(
        32 * 4 * math.pi, rel=2e-2)


def test_nonlinear_sobolev_zero_field(cache4):
    zero = np.zeros(cache4.mesh.num_vertices)
    reps = sobolev.nonlinear_sobolev_check(cache4, zero, 2, 2)
    for rep in reps.values():
        assert rep.holds
        assert rep.lhs == 0.0


def test_nonlinear_sobolev_suite_holds(sphere3, sphere4, sphere5, triaxial3):
    for mesh in (sphere3, sphere4, sphere5, triaxial3):
        cache = geometry.build_geometry(mesh)
        for name, v in _field_corpus(mesh).items():
            reps = sobolev.nonlinear_sobolev_check(cache, v, 2, 2)
            assert reps["base"].holds and reps["l2"].holds, f"failed on {name}"


def test_nonlinear_sobolev_refinement_cauchy(sphere4, sphere5):
    # itemized factors Cauchy within 2% across the two finest levels
    for field_fn in (lambda m: 1.0 + m.vertices[:, 2],
                     lambda m: np.exp(m.vertices[:, 2])):
        vals = {}
        for mesh in (sphere4, sphere5):
            cache = geometry.build_geometry(mesh)
            reps = sobolev.nonlinear_sobolev_check(cache, field_fn(mesh), 2, 2)
            vals[mesh.num_vertices] = reps
        a, b = (vals[key] for key in sorted(vals))
        for form in ("base", "l2"):
            assert a[form].lhs == pytest.approx(b[form].lhs, rel=2e-2)
            for factor in a[form].factors:
                assert a[form].factors[factor] == pytest.approx(
                    b[form].factors[factor], rel=2e-2), (form, factor)


def test_gradient_form_constant_field(cache4):
    one = np.ones(cache4.mesh.num_vertices)
    rep = sobolev.gradient_form_check(cache4, one, 2, 2)
    assert rep.holds
    # ||1||^2 in L^(2Qk) = Area^(2/(2 Qk)) = Area^(1/4)
    assert rep.lhs == pytest.approx((4 * math.pi) ** 0.25, rel=1e-2)
    assert rep.factors["cross_term"] == pytest.approx(0.0, abs=1e-10)


def test_gradient_form_exp_field_refinement(sphere4, sphere5):
    vals = {}
    for mesh in (sphere4, sphere5):
        cache = geometry.build_geometry(mesh)
        rep = sobolev.gradient_form_check(cache, np.exp(mesh.vertices[:, 2]), 2, 2)
        assert rep.holds
        vals[mesh.num_vertices] = rep
    a, b = (vals[key] for key in sorted(vals))
    for factor in a.factors:
        assert a.factors[factor] == pytest.approx(b.factors[factor], rel=2e-2), factor


def test_gradient_form_zero_field(cache4):
    rep = sobolev.gradient_form_check(
        cache4, np.zeros(cache4.mesh.num_vertices), 2, 2)
    assert rep.holds


def test_spacetime_sobolev_constant_field(short_traj):
    rep = sobolev.spacetime_sobolev_check(
        short_traj, lambda s: np.ones(s.mesh.num_vertices), 2, 2)
    assert rep.holds
    # LHS is the integral of Area over time
    times = short_traj.step_log["time"]
    areas = short_traj.step_log["area"]
    assert rep.lhs == pytest.approx(np.trapezoid(areas, times), rel=1e-3)


def test_spacetime_sobolev_curvature_field(moser_traj):
    rep = sobolev.spacetime_sobolev_check(
        moser_traj, lambda s: s.cache.mean_curvature, 2, 2)
    assert rep.holds
    for key in ("max_l2", "grad_spacetime_l2", "h_norm_power"):
        assert key in rep.factors


def test_spacetime_sobolev_zero_field(short_traj):
    rep = sobolev.spacetime_sobolev_check(
        short_traj, lambda s: np.zeros(s.mesh.num_vertices), 2, 2)
    assert rep.holds


def test_spacetime_sobolev_rejects_growing_area(short_traj):
    import copy

    bad = copy.copy(short_traj)
    bad.step_log = dict(short_traj.step_log)
    bad.step_log["area"] = short_traj.step_log["area"][::-1].copy()
    with pytest.raises(HypothesisViolated):
        sobolev.spacetime_sobolev_check(
            bad, lambda s: np.ones(s.mesh.num_vertices), 2, 2)


def test_spacetime_sobolev_sphere_closed_forms(moser_traj):
    # every factor has a closed form on the sphere run; spot-check two
    from hkflow.analytic import SphereSolution

    sol = SphereSolution(2, 2)
    T = moser_traj.final_time
    rep = sobolev.spacetime_sobolev_check(
        moser_traj, lambda s: s.cache.mean_curvature, 2, 2)
    # max-in-time L2 of H is at the final slice: H sqrt(Area)
    h_end = sol.mean_curvature(T)
    assert rep.factors["max_l2"] == pytest.approx(
        h_end * math.sqrt(sol.area(T)), rel=1e-2)
    assert rep.factors["h_norm_power"] == pytest.approx(
        sol.spacetime_norm_power(5.0, T), rel=1e-2)
