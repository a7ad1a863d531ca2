import numpy as np
import pytest

from hkflow import analytic, flow
from hkflow.analytic import RescaleParams, SphereSolution
from hkflow.errors import InsufficientSamples, NotMeanConvex, StepUnderflow
from conftest import TMAX_22, mean_radius


def test_single_step_sphere_rate(sphere4):
    # dr/dt = -n^k/r^k = -4 at r = 1
    state = flow.initial_state(sphere4)
    out = flow.step(state, flow.FlowParams(k=2), dt=1e-4)
    dr = mean_radius(state.mesh) - mean_radius(out.mesh)
    assert dr == pytest.approx(4e-4, rel=0.02)
    assert out.time == pytest.approx(1e-4)


def test_uniform_speed_keeps_sphere_round(sphere4):
    # k = 1 with H = 2: speed 2 everywhere
    state = flow.initial_state(sphere4)
    params = flow.FlowParams(k=1)
    spread0 = np.std(np.linalg.norm(state.mesh.vertices, axis=1))
    for _ in range(20):
        state = flow.step(state, params)
    r = np.linalg.norm(state.mesh.vertices, axis=1)
    assert np.std(r) < spread0 + 1e-5


def test_step_rejects_nonconvex(fat_torus):
    state = flow.initial_state(fat_torus)
    assert state.cache.mean_curvature.min() < 0.0
    with pytest.raises(NotMeanConvex):
        flow.step(state, flow.FlowParams(k=2))


def test_step_underflow(sphere4):
    state = flow.initial_state(sphere4)
    with pytest.raises(StepUnderflow):
        flow.step(state, flow.FlowParams(k=2, dt_min=1e-6), dt=1e-9)


def test_custom_speed_matches_power(sphere3):
    state = flow.initial_state(sphere3)
    params_p = flow.FlowParams(k=2)
    params_c = flow.FlowParams(
        k=2, f_kind="custom", f=lambda x: x**2, f_prime=lambda x: 2 * x,
        f_second=lambda x: 2 * np.ones_like(x))
    a = flow.step(state, params_p)
    b = flow.step(state, params_c)
    np.testing.assert_allclose(a.mesh.vertices, b.mesh.vertices, rtol=1e-14)


def test_run_reaches_stop_time(short_traj):
    assert short_traj.termination == "reached_T"
    assert short_traj.final_time == pytest.approx(0.01, abs=1e-15)
    assert short_traj.states[-1].time == pytest.approx(0.01, abs=1e-15)


def test_run_hits_blowup_threshold(blowup_traj):
    assert blowup_traj.termination == "blowup_threshold"
    assert blowup_traj.step_log["max_H_pow_kp1"][-1] > 1e4
    assert blowup_traj.final_time == pytest.approx(TMAX_22, rel=0.02)


def test_sphere_stays_round_under_power_flow(blowup_traj):
    # vertex-radius coefficient of variation stays tiny while r >= 0.2
    for state in blowup_traj.states:
        r = np.linalg.norm(state.mesh.vertices, axis=1)
        if r.mean() < 0.2:
            break
        assert r.std() / r.mean() < 1e-3


def test_area_strictly_decreasing(ellipsoid_traj):
    area = ellipsoid_traj.step_log["area"]
    assert np.all(np.diff(area) < 0.0)


def test_sphere_area_matches_solution(halfway_traj):
    sol = SphereSolution(2, 2)
    for state in halfway_traj.states:
        assert state.cache.total_area == pytest.approx(sol.area(state.time), rel=5e-3)


def test_accumulator_matches_closed_form(blowup_traj):
    sol = SphereSolution(2, 2)
    r_end = mean_radius(blowup_traj.states[-1].mesh)
    t_match = (1.0 - r_end**3) / 12.0
    for alpha in (4.0, 5.0):
        want = sol.spacetime_norm_power(alpha, t_match)
        assert blowup_traj.accumulators[alpha] == pytest.approx(want, rel=0.05)
        assert blowup_traj.accumulators[alpha] == pytest.approx(want, rel=1e-3)


def test_accumulators_nonnegative_nondecreasing(blowup_traj):
    for vals in blowup_traj.accum_history.values():
        assert vals[0] == 0.0
        assert np.all(np.diff(vals) >= 0.0)


def test_estimate_tmax_sphere(blowup_traj):
    est = flow.estimate_tmax(blowup_traj, 2)
    assert est.tmax == pytest.approx(TMAX_22, rel=0.01)
    # 1/max H^(k+1) = (k+1)(tmax - t)/n: slope -(k+1)/n = -3/2
    assert est.slope == pytest.approx(-1.5, rel=0.02)


def test_estimate_tmax_analytic_n3():
    sol = SphereSolution(3, 2)
    traj = analytic.synthetic_sphere_trajectory(sol, 500)
    est = flow.estimate_tmax(traj, 2)
    assert est.tmax == pytest.approx(1.0 / 27.0, rel=0.01)


def test_estimate_tmax_needs_blowup(short_traj, frozen_traj):
    with pytest.raises(InsufficientSamples):
        flow.estimate_tmax(short_traj, 2)
    with pytest.raises(InsufficientSamples):
        flow.estimate_tmax(frozen_traj, 2)


def test_estimate_tmax_needs_samples():
    sol = SphereSolution(2, 2)
    traj = analytic.synthetic_sphere_trajectory(sol, 3)
    with pytest.raises(InsufficientSamples):
        flow.estimate_tmax(traj, 2)


def test_rescaled_run_commutes_with_flow(sphere3):
    # running from a Q-scaled mesh for Q^(k+1)-scaled duration equals
    # rescaling the original trajectory
    q, k, t_end = 2.0, 2, 0.004
    params = flow.FlowParams(k=k, stop_T=t_end)
    base = flow.run(sphere3, params, alphas=(5.0,), snapshot_stride=4)
    scaled_mesh = sphere3.with_vertices(q * sphere3.vertices)
    params_q = flow.FlowParams(k=k, stop_T=q ** (k + 1) * t_end)
    big = flow.run(scaled_mesh, params_q, alphas=(5.0,), snapshot_stride=4)
    ref = analytic.rescale_trajectory(base, RescaleParams(Q=q), k=k)
    assert big.num_steps == base.num_steps
    np.testing.assert_allclose(big.states[-1].mesh.vertices,
                               ref.states[-1].mesh.vertices, rtol=1e-6)
    assert big.accumulators[5.0] == pytest.approx(ref.accumulators[5.0], rel=1e-6)


def test_evolution_residuals_sphere(halfway_traj):
    res = flow.evolution_residuals(halfway_traj, halfway_traj.params)
    assert res["volume_form_rel_l1"].max() < 1e-2
    assert res["h_evolution_rel_l1"].max() < 1e-2


def test_evolution_residuals_sphere_reduction(halfway_traj):
    # on the sphere the curvature identity reduces to dH/dt = H^(k+2)/n
    states = halfway_traj.states
    times = halfway_traj.snapshot_times()
    i = len(states) // 2
    h0, h1 = times[i] - times[i - 1], times[i + 1] - times[i]
    num = (
        h0**2 * states[i + 1].cache.mean_curvature
        - h1**2 * states[i - 1].cache.mean_curvature
        - (h0**2 - h1**2) * states[i].cache.mean_curvature
    ) / (h0 * h1 * (h0 + h1))
    h = states[i].cache.mean_curvature
    rel = np.abs(num - h**4 / 2.0) / (h**4 / 2.0)
    assert np.median(rel) < 1e-2


def test_evolution_residuals_ellipsoid(ellipsoid_traj):
    res = flow.evolution_residuals(ellipsoid_traj, ellipsoid_traj.params)
    assert res["volume_form_rel_l1"].max() < 5e-2


def test_evolution_residuals_frozen_antitest(frozen_traj):
    # identical snapshots: the measured d/dt is zero, so the residual equals
    # the full right-hand side, i.e. exactly 1 in relative L1
    res = flow.evolution_residuals(frozen_traj, frozen_traj.params)
    np.testing.assert_allclose(res["volume_form_rel_l1"], 1.0, rtol=1e-12)
    np.testing.assert_allclose(res["h_evolution_rel_l1"], 1.0, rtol=1e-12)


def test_evolution_residuals_needs_snapshots(sphere3):
    params = flow.FlowParams(k=2, stop_T=1e-4)
    traj = flow.run(sphere3, params, alphas=(), snapshot_stride=1000)
    with pytest.raises(InsufficientSamples):
        flow.evolution_residuals(traj, params)


def test_spacetime_norm_helpers(short_traj):
    one = lambda s: np.ones(s.mesh.num_vertices)  # noqa: E731
    val = flow.spacetime_power_integral(short_traj, one, 2.0)
    # integral of area over time (snapshot grid is coarser than the step log)
    times = short_traj.step_log["time"]
    areas = short_traj.step_log["area"]
    assert val == pytest.approx(np.trapezoid(areas, times), rel=1e-3)
    assert flow.max_in_time_lp(short_traj, one, 2.0) == pytest.approx(
        np.sqrt(areas[0]), rel=1e-9)


def test_trajectory_properties(blowup_traj):
    times = blowup_traj.step_log["time"]
    assert np.all(np.diff(times) > 0.0)
    assert blowup_traj.num_steps == len(times) - 1
    assert blowup_traj.state_steps[0] == 0
    assert blowup_traj.state_steps[-1] == blowup_traj.num_steps
