"""Extension-criterion monitoring and blow-up rescaling diagnostics.

Watches the two ingredients of the curvature extension criterion along a
trajectory (uniform pinching from below, finiteness of the space-time
L^alpha norm of H) and builds the normalized blow-up sequence whose
rescaled snapshots must have curvature power at most one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import flow as flow_mod
from . import geometry
from .errors import EmptyTrajectory, InsufficientSamples, NoBlowup
from .flow import FlowTrajectory
from .mesh import Hypersurface


def divergence_trend(times: np.ndarray, accum: np.ndarray, tmax_hat: float,
                     min_samples: int = 12) -> tuple[bool, dict]:
    """Detect non-Cauchy growth of an accumulated norm as t -> tmax_hat.

    Regresses the accumulator against u = log(1/(tmax_hat - t)) and compares
    the slope over the first and last thirds of the reachable log-range: a
    borderline (logarithmically divergent) accumulator keeps a significant
    positive slope all the way in, a convergent one has its late slope
    collapse.  Diverging means slope_late > 2 sigma and
    slope_late >= 0.5 slope_early.
    """
    sel = (tmax_hat - times) > 0.0
    t = np.asarray(times)[sel]
    s = np.asarray(accum)[sel]
    if len(t) < 2 * min_samples:
        raise InsufficientSamples(f"need >= {2 * min_samples} samples before tmax_hat")
    ut = -np.log(tmax_hat - t)
    st = s
    span = ut[-1] - ut[0]
    if span < 2.0:
        raise InsufficientSamples(
            f"log-range {span:.2f} too short to classify the tail trend"
        )
    early = ut <= ut[0] + span / 3.0
    late = ut >= ut[-1] - span / 3.0
    if early.sum() < 3 or late.sum() < 3:
        third = max(len(ut) // 3, 3)
        early = np.arange(len(ut)) < third
        late = np.arange(len(ut)) >= len(ut) - third

    def fit(x, y):
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        dof = max(len(x) - 2, 1)
        se = np.sqrt(np.sum(resid**2) / dof / np.sum((x - x.mean()) ** 2))
        return slope, se

    slope_early, _ = fit(ut[early], st[early])
    slope_late, se_late = fit(ut[late], st[late])
    significant = slope_late > 2.0 * se_late
    sustained = slope_early <= 0.0 or slope_late >= 0.5 * slope_early
    details = {
        "slope_early": float(slope_early),
        "slope_late": float(slope_late),
        "slope_late_se": float(se_late),
        "tmax_hat": float(tmax_hat),
    }
    return bool(significant and sustained), details


@dataclass
class ConditionA:
    C_used: float
    min_pinching_over_run: float
    holds: bool


@dataclass
class ConditionB:
    alpha: float
    accumulated_norm: float
    diverging: bool
    uninformative: bool
    details: dict


@dataclass
class ExtensionReport:
    """Verdict is 'consistent-with' language: a mesh run cannot certify the
    maximal time, only fail to contradict it."""

    condition_a: ConditionA
    condition_b: ConditionB
    verdict: str
    tmax_estimate: float | None

    def to_dict(self) -> dict:
        return {
            "condition_a": vars(self.condition_a).copy(),
            "condition_b": {
                "alpha": self.condition_b.alpha,
                "accumulated_norm": self.condition_b.accumulated_norm,
                "diverging": self.condition_b.diverging,
                "uninformative": self.condition_b.uninformative,
            },
            "verdict": self.verdict,
            "tmax_estimate": self.tmax_estimate,
        }


def _alpha_history(traj: FlowTrajectory, alpha: float
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Per-step accumulator history for alpha, or snapshot-based fallback."""
    if float(alpha) in traj.accum_history:
        return traj.step_log["time"], traj.accum_history[float(alpha)]
    if not traj.states:
        raise EmptyTrajectory(f"alpha = {alpha} not tracked and no snapshots stored")
    times = traj.snapshot_times()
    samples = np.array([
        np.sum(np.abs(s.cache.mean_curvature) ** alpha * s.cache.area_weights)
        for s in traj.states
    ])
    hist = np.concatenate(
        [[0.0], np.cumsum(0.5 * (samples[1:] + samples[:-1]) * np.diff(times))]
    )
    return times, hist


def monitor(traj: FlowTrajectory, C: float, alpha: float) -> ExtensionReport:
    """Evaluate both extension-criterion conditions over a trajectory.

    alpha below n + k + 1 is accepted but flagged uninformative (the sphere
    shows such norms stay finite across a genuine singularity).  Verdicts:
    'singularity_consistent' when the run blew up and pinching failed or the
    norm diverges; 'extendable_consistent' for clean runs with pinching and
    a Cauchy norm; 'indeterminate' otherwise.
    """
    if not traj.states:
        raise EmptyTrajectory("monitor needs stored snapshots")
    k = traj.params.k
    n = traj.n
    critical = n + k + 1

    pinch = min(geometry.pinching_minimum(s.cache) for s in traj.states)
    cond_a = ConditionA(C_used=float(C), min_pinching_over_run=float(pinch),
                        holds=bool(pinch >= C))

    times, hist = _alpha_history(traj, alpha)
    accumulated = float(hist[-1]) ** (1.0 / alpha)
    tmax_hat = None
    diverging = False
    details: dict = {}
    if traj.termination == "blowup_threshold":
        tmax_hat = flow_mod.estimate_tmax(traj, k).tmax
        diverging, details = divergence_trend(times, hist, tmax_hat)
    cond_b = ConditionB(
        alpha=float(alpha), accumulated_norm=accumulated, diverging=diverging,
        uninformative=bool(alpha < critical), details=details,
    )

    blew_up = traj.termination == "blowup_threshold"
    if not blew_up and cond_a.holds and not diverging:
        verdict = "extendable_consistent"
    elif blew_up and (not cond_a.holds or diverging):
        verdict = "singularity_consistent"
    else:
        verdict = "indeterminate"
    return ExtensionReport(condition_a=cond_a, condition_b=cond_b,
                           verdict=verdict, tmax_estimate=tmax_hat)


@dataclass
class BlowupEntry:
    index: int
    time: float
    vertex: int
    Q: float
    rescaled_snapshot: Hypersurface
    rescaled_cache: geometry.GeometryCache
    max_rescaled_power: float
    value_at_vertex_power: float
    curvature_cv: float


@dataclass
class BlowupSequence:
    k: int
    entries: list[BlowupEntry]


def blowup_sequence(traj: FlowTrajectory, k: int, count: int) -> BlowupSequence:
    """Normalized rescalings at `count` snapshot times of increasing max H^(k+1).

    Eligible snapshots attain the running curvature maximum at their own
    time slice and satisfy Q^(2/(k+1)) t >= 1 (enough elapsed time to carve
    out one unit of rescaled parabolic time).  Each snapshot is dilated by
    Q^(1/(k+1)) so the rescaled curvature power peaks at one, at the
    recorded vertex.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if traj.termination != "blowup_threshold":
        raise NoBlowup(f"trajectory terminated by {traj.termination!r}")
    if not traj.states:
        raise EmptyTrajectory("no snapshots stored")

    running = np.maximum.accumulate(traj.step_log["max_H_pow_kp1"])
    candidates = []
    for si, (state, step_idx) in enumerate(zip(traj.states, traj.state_steps)):
        h = state.cache.mean_curvature
        q = float(np.max(h) ** (k + 1))
        if q < running[step_idx] * (1.0 - 1e-9):
            continue
        if q ** (2.0 / (k + 1)) * state.time < 1.0:
            continue
        candidates.append((si, q))
    if len(candidates) < count:
        raise InsufficientSamples(
            f"only {len(candidates)} eligible snapshots, need {count}"
        )

    # spread selections over the eligible range, always ending at the final
    # (deepest) snapshot
    picks_idx = np.unique(
        np.linspace(0, len(candidates) - 1, count + 1).round().astype(int)[1:]
    )
    picks = [candidates[i] for i in picks_idx]
    # enforce strictly increasing Q
    filtered = []
    last_q = -np.inf
    for si, q in picks:
        if q > last_q:
            filtered.append((si, q))
            last_q = q
    if len(filtered) < count:
        for si, q in candidates:
            if len(filtered) >= count:
                break
            if all(si != fi for fi, _ in filtered) and q > filtered[-1][1]:
                filtered.append((si, q))
    if len(filtered) < count:
        raise InsufficientSamples("could not select strictly increasing curvature maxima")

    entries = []
    for si, q in filtered[:count]:
        state = traj.states[si]
        h = state.cache.mean_curvature
        vertex = int(np.argmax(h))
        factor = q ** (1.0 / (k + 1))
        mesh = state.mesh.with_vertices(factor * state.mesh.vertices)
        cache = geometry.build_geometry(mesh, validate=False)
        resc_pow = cache.mean_curvature ** (k + 1)
        entries.append(BlowupEntry(
            index=si,
            time=float(state.time),
            vertex=vertex,
            Q=q,
            rescaled_snapshot=mesh,
            rescaled_cache=cache,
            max_rescaled_power=float(np.max(resc_pow)),
            value_at_vertex_power=float(resc_pow[vertex]),
            curvature_cv=float(np.std(h) / np.mean(h)),
        ))
    return BlowupSequence(k=k, entries=entries)


def typeI_rate(traj: FlowTrajectory, k: int, window_fraction: float = 0.25) -> float:
    """Fitted limit of max H^(k+1) (tmax_hat - t) over the final window.

    Equals n/(k+1) on the shrinking sphere.  Raises InsufficientSamples when
    the trajectory has no usable blow-up trend (delegated to the singular
    time fit) or fewer than 10 samples.
    """
    est = flow_mod.estimate_tmax(traj, k, window_fraction)
    t = traj.step_log["time"][1:]
    y = traj.step_log["max_H_pow_kp1"][1:]
    m = max(10, int(np.ceil(window_fraction * len(t))))
    t, y = t[-m:], y[-m:]
    if len(t) < 10:
        raise InsufficientSamples(f"only {len(t)} samples in the final window")
    gap = est.tmax - t
    product = y * gap
    slope, limit = np.polyfit(gap, product, 1)
    return float(limit)
