"""Explicit time integration of dF/dt = -f(H) nu on triangle meshes.

Forward Euler with a CFL-type adaptive step dt = dt_safety * h_min^2 /
max f'(H); no remeshing (runs stop on quality failure instead so the
space-time norm accumulators stay uncontaminated).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import geometry, kernels
from .errors import (
    EmptyTrajectory,
    HkflowError,
    InsufficientSamples,
    NotMeanConvex,
    ParabolicityLost,
    StepUnderflow,
)
from .geometry import GeometryCache
from .mesh import Hypersurface

TERMINATIONS = ("reached_T", "blowup_threshold", "dt_underflow", "quality_failure")


@dataclass
class FlowParams:
    """Speed law and stepping controls.

    `power_k` uses f(x) = x^k with the mean-convex gate min H > 0; `custom`
    takes scalar hooks f, f_prime, f_second and only requires f'(H) > 0.
    """

    k: int = 2
    f_kind: str = "power_k"
    f: Callable[[np.ndarray], np.ndarray] | None = None
    f_prime: Callable[[np.ndarray], np.ndarray] | None = None
    f_second: Callable[[np.ndarray], np.ndarray] | None = None
    # cotangent-Laplacian spectral radius is ~6/h_min^2 on well-shaped
    # meshes, so the explicit limit sits near dt_safety ~ 1/3
    dt_safety: float = 0.25
    dt_min: float = 1e-12
    stop_T: float | None = None
    blowup_threshold: float | None = None
    quality_floor: float = 0.15

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.dt_safety <= 1.0:
            raise ValueError("dt_safety must lie in (0, 1]")
        if self.dt_min <= 0.0:
            raise ValueError("dt_min must be positive")
        if self.f_kind not in ("power_k", "custom"):
            raise ValueError(f"unknown f_kind {self.f_kind!r}")
        if self.f_kind == "custom" and not (self.f and self.f_prime and self.f_second):
            raise ValueError("custom f_kind needs f, f_prime, f_second hooks")

    def speed(self, h: np.ndarray) -> np.ndarray:
        if self.f_kind == "power_k":
            return h**self.k
        return self.f(h)

    def speed_prime(self, h: np.ndarray) -> np.ndarray:
        if self.f_kind == "power_k":
            return self.k * h ** (self.k - 1)
        return self.f_prime(h)

    def speed_second(self, h: np.ndarray) -> np.ndarray:
        if self.f_kind == "power_k":
            if self.k == 1:
                return np.zeros_like(h)
            return self.k * (self.k - 1) * h ** (self.k - 2)
        return self.f_second(h)


@dataclass
class FlowState:
    """One snapshot: time, surface, and its geometry cache."""

    time: float
    mesh: Hypersurface
    cache: GeometryCache


@dataclass
class FlowTrajectory:
    """Time-ordered snapshots plus per-step logs and norm accumulators.

    `step_log` holds one entry per accepted step (arrays keyed by name:
    time, dt, min_H, max_H, max_H_pow_kp1, area, h_min, quality_min), with
    entry 0 recording the initial state at dt=0.  `accum_history[alpha]` is
    the running trapezoid value of the space-time integral of |H|^alpha at
    each logged time.
    """

    states: list[FlowState]
    state_steps: list[int]
    step_log: dict[str, np.ndarray]
    alphas: tuple[float, ...]
    accum_history: dict[float, np.ndarray]
    termination: str
    params: FlowParams
    n: int = 2

    @property
    def accumulators(self) -> dict[float, float]:
        """Final space-time integrals of |H|^alpha over the whole run."""
        return {a: float(v[-1]) for a, v in self.accum_history.items()}

    @property
    def final_time(self) -> float:
        return float(self.step_log["time"][-1])

    @property
    def num_steps(self) -> int:
        return len(self.step_log["time"]) - 1

    def snapshot_times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])


def _gate(h: np.ndarray, params: FlowParams) -> None:
    if params.f_kind == "power_k" and h.min() <= 0.0:
        raise NotMeanConvex(f"min H = {h.min():.6g} <= 0 under power-law speed")
    fp = params.speed_prime(h)
    if fp.min() <= 0.0:
        raise ParabolicityLost(f"min f'(H) = {fp.min():.6g} <= 0")


def _adaptive_dt(h: np.ndarray, min_edge: float, params: FlowParams) -> float:
    fp_max = float(params.speed_prime(h).max())
    return params.dt_safety * min_edge**2 / fp_max


def _make_state(time: float, mesh: Hypersurface, normals, h, aw, mixed, stats) -> FlowState:
    cache = GeometryCache(mesh, normals, h, aw, mixed, stats)
    return FlowState(time, mesh, cache)


def step(state: FlowState, params: FlowParams, dt: float | None = None) -> FlowState:
    """One forward-Euler step; adaptive dt unless an explicit dt is given."""
    h = state.cache.mean_curvature
    _gate(h, params)
    if dt is None:
        dt = _adaptive_dt(h, state.cache.min_edge_length, params)
    if dt < params.dt_min:
        raise StepUnderflow(f"dt = {dt:.3e} < dt_min = {params.dt_min:.3e}")
    new_vertices = state.mesh.vertices - dt * params.speed(h)[:, None] * state.cache.normals
    mesh = state.mesh.with_vertices(new_vertices)
    normals, h2, aw, mixed, stats = kernels.mesh_pass(mesh.vertices, mesh.faces)
    if not np.all(np.isfinite(h2)):
        raise HkflowError("non-finite curvature after step")
    return _make_state(state.time + dt, mesh, normals, h2, aw, mixed, stats)


def initial_state(mesh: Hypersurface, validate: bool = True) -> FlowState:
    """Wrap a mesh as the t=0 flow state."""
    return FlowState(0.0, mesh, geometry.build_geometry(mesh, validate=validate))


def run(mesh0: Hypersurface, params: FlowParams,
        alphas: Sequence[float] = (), snapshot_stride: int = 10) -> FlowTrajectory:
    """Integrate until stop_T, blow-up threshold, dt underflow, or quality failure.

    Snapshots are stored every `snapshot_stride` accepted steps plus always
    the initial and terminal states; |H|^alpha space-time integrals are
    accumulated by the trapezoid rule on every accepted step.
    """
    mesh0.validate()
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    alphas = tuple(float(a) for a in alphas)

    vertices = mesh0.vertices.copy()
    faces = mesh0.faces
    normals, h, aw, mixed, stats = kernels.mesh_pass(vertices, faces)

    log: dict[str, list[float]] = {key: [] for key in (
        "time", "dt", "min_H", "max_H", "max_H_pow_kp1", "area", "h_min", "quality_min")}
    accum: dict[float, list[float]] = {a: [] for a in alphas}

    def log_step(t: float, dt: float) -> None:
        log["time"].append(t)
        log["dt"].append(dt)
        log["min_H"].append(float(h.min()))
        log["max_H"].append(float(h.max()))
        log["max_H_pow_kp1"].append(float(np.abs(h).max() ** (params.k + 1)))
        log["area"].append(stats[0])
        log["h_min"].append(stats[1])
        log["quality_min"].append(stats[2])

    def integrand() -> dict[float, float]:
        return {a: float(np.sum(np.abs(h) ** a * aw)) for a in alphas}

    states: list[FlowState] = []
    state_steps: list[int] = []

    def snapshot(t: float, index: int) -> None:
        snap_mesh = mesh0.with_vertices(vertices.copy())
        states.append(_make_state(t, snap_mesh, normals.copy(), h.copy(),
                                  aw.copy(), mixed.copy(), stats))
        state_steps.append(index)

    t = 0.0
    log_step(t, 0.0)
    prev_integrand = integrand()
    for a in alphas:
        accum[a].append(0.0)
    snapshot(t, 0)

    termination: str | None = None
    step_index = 0
    while termination is None:
        _gate(h, params)
        dt = _adaptive_dt(h, stats[1], params)
        hits_stop = params.stop_T is not None and t + dt >= params.stop_T
        if hits_stop:
            dt = params.stop_T - t
        elif dt < params.dt_min:
            termination = "dt_underflow"
            break
        if dt > 0.0:
            vertices -= dt * params.speed(h)[:, None] * normals
            normals, h, aw, mixed, stats = kernels.mesh_pass(vertices, faces)
            if not np.all(np.isfinite(h)):
                raise HkflowError("non-finite curvature during run")
            t += dt
            step_index += 1
            log_step(t, dt)
            cur = integrand()
            for a in alphas:
                accum[a].append(accum[a][-1] + 0.5 * (prev_integrand[a] + cur[a]) * dt)
            prev_integrand = cur
            if step_index % snapshot_stride == 0:
                snapshot(t, step_index)

        if hits_stop:
            termination = "reached_T"
        elif (params.blowup_threshold is not None
              and log["max_H_pow_kp1"][-1] > params.blowup_threshold):
            termination = "blowup_threshold"
        elif stats[2] < params.quality_floor:
            termination = "quality_failure"

    if state_steps[-1] != step_index:
        snapshot(t, step_index)

    return FlowTrajectory(
        states=states,
        state_steps=state_steps,
        step_log={key: np.asarray(vals) for key, vals in log.items()},
        alphas=alphas,
        accum_history={a: np.asarray(vals) for a, vals in accum.items()},
        termination=termination,
        params=params,
        n=mesh0.n,
    )


@dataclass
class TmaxEstimate:
    tmax: float
    slope: float


def estimate_tmax(traj: FlowTrajectory, k: int, window_fraction: float = 0.25
                  ) -> TmaxEstimate:
    """Extrapolate the singular time from the decay of 1 / max H^(k+1).

    Least-squares line through the final window of (t, 1/max H^(k+1));
    the t-intercept estimates T_max.  Requires a blow-up-terminated
    trajectory with at least 10 samples and a significantly negative slope.
    """
    times = traj.step_log["time"]
    if traj.termination != "blowup_threshold":
        raise InsufficientSamples(
            f"trajectory terminated by {traj.termination!r}, not blowup_threshold"
        )
    if len(times) < 10:
        raise InsufficientSamples(f"only {len(times)} samples, need >= 10")
    y = 1.0 / traj.step_log["max_H_pow_kp1"][1:]
    t = times[1:]
    m = max(10, int(np.ceil(window_fraction * len(t))))
    t, y = t[-m:], y[-m:]
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    dof = max(len(t) - 2, 1)
    slope_se = np.sqrt(np.sum(resid**2) / dof / np.sum((t - t.mean()) ** 2))
    if slope >= 0.0 or abs(slope) <= 2.0 * slope_se:
        raise InsufficientSamples("no significant blow-up trend in max H^(k+1)")
    return TmaxEstimate(tmax=float(-intercept / slope), slope=float(slope))


def evolution_residuals(traj: FlowTrajectory, params: FlowParams) -> dict:
    """Check the snapshot sequence against the evolution identities.

    For each interior snapshot, nonuniform central differences give
    d(area_weights)/dt and dH/dt; these are compared (relative L1, lumped
    measure) against -f(H) H area_weights and against
    f'(H) lap H + f(H) |A|^2 + f''(H) |grad H|^2 respectively.  On sphere
    runs grad H ~ 0 and the curvature identity reduces to dH/dt = H^(k+2)/n.
    """
    states = traj.states
    if len(states) < 3:
        raise InsufficientSamples("need at least 3 snapshots")
    times = traj.snapshot_times()
    vol_res = []
    h_res = []
    mid_times = []
    for i in range(1, len(states) - 1):
        h0 = times[i] - times[i - 1]
        h1 = times[i + 1] - times[i]
        denom = h0 * h1 * (h0 + h1)

        def ddt(get):
            f_prev, f_mid, f_next = get(states[i - 1]), get(states[i]), get(states[i + 1])
            return (h0**2 * f_next - h1**2 * f_prev - (h0**2 - h1**2) * f_mid) / denom

        st = states[i]
        h = st.cache.mean_curvature
        aw = st.cache.area_weights
        lhs = ddt(lambda s: s.cache.area_weights)
        rhs = -params.speed(h) * h * aw
        vol_res.append(float(np.sum(np.abs(lhs - rhs)) / np.sum(np.abs(rhs))))

        lhs_h = ddt(lambda s: s.cache.mean_curvature)
        rhs_h = (
            params.speed_prime(h) * geometry.laplace_beltrami(st.cache, h)
            + params.speed(h) * st.cache.second_fund_norm_sq
            + params.speed_second(h) * geometry.vertex_gradient_sq(st.cache, h)
        )
        h_res.append(float(np.sum(np.abs(lhs_h - rhs_h) * aw)
                           / np.sum(np.abs(rhs_h) * aw)))
        mid_times.append(times[i])
    return {
        "times": np.asarray(mid_times),
        "volume_form_rel_l1": np.asarray(vol_res),
        "h_evolution_rel_l1": np.asarray(h_res),
    }


def _resolve_fields(traj: FlowTrajectory, fields) -> list[np.ndarray]:
    if callable(fields):
        return [np.asarray(fields(s), dtype=np.float64) for s in traj.states]
    out = [np.asarray(f, dtype=np.float64) for f in fields]
    if len(out) != len(traj.states):
        raise ValueError(f"got {len(out)} fields for {len(traj.states)} snapshots")
    return out


def _window_trapezoid(times: np.ndarray, values: np.ndarray,
                      t0: float, t1: float) -> float:
    """Integral over [t0, t1] of the piecewise-linear interpolant."""
    if t1 <= t0:
        return 0.0
    t0 = max(t0, float(times[0]))
    t1 = min(t1, float(times[-1]))
    inner = times[(times > t0) & (times < t1)]
    grid = np.concatenate([[t0], inner, [t1]])
    vals = np.interp(grid, times, values)
    return float(np.trapezoid(vals, grid))


def spacetime_power_integral(traj: FlowTrajectory, fields, p: float,
                             t_start: float = 0.0, t_end: float | None = None) -> float:
    """Space-time integral of |field|^p d(mu) dt over a time window."""
    fl = _resolve_fields(traj, fields)
    times = traj.snapshot_times()
    samples = np.array(
        [np.sum(np.abs(f) ** p * s.cache.area_weights) for f, s in zip(fl, traj.states)]
    )
    if t_end is None:
        t_end = float(times[-1])
    return _window_trapezoid(times, samples, t_start, t_end)


def spacetime_lp_norm(traj: FlowTrajectory, fields, p: float,
                      t_start: float = 0.0, t_end: float | None = None) -> float:
    """Lp norm over the space-time cylinder, trapezoid rule in time."""
    return spacetime_power_integral(traj, fields, p, t_start, t_end) ** (1.0 / p)


def spacetime_gradient_sq_integral(traj: FlowTrajectory, fields,
                                   t_start: float = 0.0,
                                   t_end: float | None = None) -> float:
    """Space-time integral of |grad field|^2."""
    fl = _resolve_fields(traj, fields)
    times = traj.snapshot_times()
    samples = np.array(
        [geometry.gradient_lp_integral(s.cache, f, 2.0) for f, s in zip(fl, traj.states)]
    )
    if t_end is None:
        t_end = float(times[-1])
    return _window_trapezoid(times, samples, t_start, t_end)


def max_in_time_lp(traj: FlowTrajectory, fields, p: float,
                   t_start: float = 0.0, t_end: float | None = None) -> float:
    """max over snapshots in the window of the spatial Lp norm."""
    fl = _resolve_fields(traj, fields)
    times = traj.snapshot_times()
    if t_end is None:
        t_end = float(times[-1])
    sel = (times >= t_start - 1e-15) & (times <= t_end + 1e-15)
    if not np.any(sel):
        raise EmptyTrajectory("no snapshots inside the requested window")
    vals = [geometry.lp_norm(s.cache, f, p)
            for f, s, keep in zip(fl, traj.states, sel) if keep]
    return float(max(vals))
