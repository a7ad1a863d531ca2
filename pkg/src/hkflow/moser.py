"""Parabolic Moser iteration machinery along flow trajectories.

Energy-estimate constants, the geometric cutoff schedule in time, the
iterated space-time norms over shrinking windows, and the resulting
sup bound on the curvature, all evaluated numerically with every constant
assembled from its explicit formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import flow as flow_mod
from . import sobolev
from .errors import (
    BetaTooSmall,
    ExponentOutOfRange,
    HypothesisViolated,
    InsufficientSamples,
)
from .flow import FlowTrajectory
from .sobolev import InequalityReport, _report


def gamma_exponent(n: int, k: int) -> float:
    """Space-time integrability exponent 2 + (k+1)^2 / (k^2 n)."""
    return 2.0 + (k + 1) ** 2 / (k**2 * n)


@dataclass
class MoserConstants:
    """Every constant of the energy estimate and iteration for one setup."""

    n: int
    k: int
    T: float
    volume: float
    gamma: float
    C0q: float
    C0inf: float
    C1: float
    C2: float
    nu_q: float
    B_nkT: float
    B_tilde: float
    C_full: float
    D: float
    C_n: float
    E_of_beta: Callable[[float], float]
    F_final: float
    beta: float
    q: float

    def as_dict(self) -> dict[str, float]:
        return {
            "n": self.n, "k": self.k, "T": self.T, "volume": self.volume,
            "gamma": self.gamma, "C0q": self.C0q, "C0inf": self.C0inf,
            "C1": self.C1, "C2": self.C2, "nu_q": self.nu_q,
            "B_nkT": self.B_nkT, "B_tilde": self.B_tilde,
            "C_full": self.C_full, "D": self.D, "C_n": self.C_n,
            "E_at_beta": self.E_of_beta(self.beta), "F_final": self.F_final,
            "beta": self.beta, "q": self.q,
        }


def compute_moser_constants(n: int, k: int, T: float, volume: float,
                            C0inf: float, H_norm_accum: float, C2: float,
                            q: float = math.inf, beta: float = 2.0,
                            C0q: float | None = None) -> MoserConstants:
    """Evaluate the full constant chain by direct formula.

    `H_norm_accum` is the space-time integral of |H|^(n+k+1) (the norm to
    the power n+k+1), giving C1 = (1 + H_norm_accum)^(1/k).  The cutoff
    slope constant is pinned to C_n = max(1, 1/T) by the cubic-smoothstep
    ramps of `cutoff_schedule`.
    """
    gamma = gamma_exponent(n, k)
    if beta < 2.0:
        raise BetaTooSmall(f"beta = {beta:.6g} < 2")
    if C2 <= 0.0:
        raise HypothesisViolated(f"C2 = {C2:.6g} must be positive")
    if math.isinf(q):
        nu = 0.0
    else:
        if q <= gamma / (gamma - 2.0):
            raise ExponentOutOfRange(
                f"q = {q:.6g} <= gamma/(gamma-2) = {gamma / (gamma - 2.0):.6g}"
            )
        nu = gamma / ((gamma - 2.0) * q - gamma)
    if C0q is None:
        C0q = C0inf

    C1 = (1.0 + H_norm_accum) ** (1.0 / k)
    B = sobolev.compute_constants(n, k, volume=volume, T=T).B_nkT
    B_tilde = B * max((1.0 / C2) ** ((k + 1) / (2.0 * k)), 1.0)
    X = (B_tilde * C1) ** (2.0 / gamma)

    bb = beta / (beta - 1.0)
    if math.isinf(q):
        C_full = 2.0 * bb * max(1.0, C0inf * beta**2 / (beta - 1.0)) * X
    else:
        C_full = bb * max(2.0 * X, (2.0 * C0q * beta**2 / (beta - 1.0) * X) ** (1.0 + nu))

    D = 8.0 * max(1.0, C0inf) * B_tilde ** (2.0 / gamma)
    C_n = max(1.0, 1.0 / T)

    g2 = gamma - 2.0

    def E_of_beta(b: float) -> float:
        if b < 2.0:
            raise BetaTooSmall(f"beta = {b:.6g} < 2")
        return (
            (D * C_n * b) ** ((1.0 / b) * (gamma / g2))
            * (gamma / 2.0) ** ((1.0 / b) * (2.0 * gamma / g2**2))
            * 4.0 ** ((1.0 / b) * (gamma**2 / g2**2))
        )

    beta_star = (n + k + 1) / k
    if beta_star < 2.0:
        raise HypothesisViolated(
            f"(n, k) = ({n}, {k}): final exponent (n+k+1)/k = {beta_star:.6g} < 2 "
            "(needs n + 1 >= k)"
        )
    F_final = (
        E_of_beta(beta_star) ** (1.0 / k)
        * (1.0 + H_norm_accum) ** ((2.0 / g2) / (n + k + 1))
    )

    return MoserConstants(
        n=n, k=k, T=T, volume=volume, gamma=gamma,
        C0q=C0q, C0inf=C0inf, C1=C1, C2=C2, nu_q=nu,
        B_nkT=B, B_tilde=B_tilde, C_full=C_full, D=D, C_n=C_n,
        E_of_beta=E_of_beta, F_final=F_final, beta=beta, q=q,
    )


@dataclass
class CutoffFunction:
    """Cubic smoothstep in time: 0 before ramp_start, 1 after ramp_end."""

    ramp_start: float
    ramp_end: float

    def __call__(self, t):
        s = np.clip((np.asarray(t) - self.ramp_start)
                    / (self.ramp_end - self.ramp_start), 0.0, 1.0)
        return 3.0 * s**2 - 2.0 * s**3

    def derivative(self, t):
        width = self.ramp_end - self.ramp_start
        s = np.clip((np.asarray(t) - self.ramp_start) / width, 0.0, 1.0)
        return 6.0 * s * (1.0 - s) / width

    @property
    def max_slope(self) -> float:
        return 1.5 / (self.ramp_end - self.ramp_start)


@dataclass
class CutoffSchedule:
    """Times t_i = (T/2)(1 - 4^-i) and ramps eta_i vanishing on [0, t_(i-1)].

    Slopes obey max |eta_i'| = 4^i / T <= slope_bound * 4^i with
    slope_bound = max(1, 1/T).
    """

    T: float
    times: np.ndarray
    cutoffs: list[CutoffFunction]
    slope_bound: float


def cutoff_schedule(T: float, i_max: int) -> CutoffSchedule:
    """Geometric time schedule for the iteration windows [t_i, T]."""
    if T <= 0.0 or i_max < 1:
        raise ValueError("need T > 0 and i_max >= 1")
    i = np.arange(i_max + 1)
    times = (T / 2.0) * (1.0 - 4.0 ** (-i.astype(float)))
    cutoffs = [CutoffFunction(float(times[j - 1]), float(times[j]))
               for j in range(1, i_max + 1)]
    return CutoffSchedule(T=T, times=times, cutoffs=cutoffs,
                          slope_bound=max(1.0, 1.0 / T))


def _measured_inputs(traj: FlowTrajectory, k: int, v_fields=None, g_fields=None):
    """Resolve (v, G) snapshot fields and measure C2, C0inf for f = x^k.

    Defaults are the curvature evolution data v = H, G = |A|^2; C2 is
    k (min H)^(k-1) over the run and C0inf = sup k v^(k-1) G.
    """
    if v_fields is None:
        v_list = [s.cache.mean_curvature for s in traj.states]
    else:
        v_list = flow_mod._resolve_fields(traj, v_fields)
    if g_fields is None:
        g_list = [s.cache.second_fund_norm_sq for s in traj.states]
    else:
        g_list = flow_mod._resolve_fields(traj, g_fields)
    min_h = float(traj.step_log["min_H"].min())
    if min_h <= 0.0:
        raise HypothesisViolated(f"min H over the run is {min_h:.6g} <= 0")
    c2 = k * min_h ** (k - 1)
    c0inf = max(
        float(np.max(k * v ** (k - 1) * g)) for v, g in zip(v_list, g_list)
    )
    return v_list, g_list, c2, c0inf


def energy_estimate_check(traj: FlowTrajectory, k: int, beta: float,
                          eta: CutoffFunction, v_fields=None, g_fields=None
                          ) -> InequalityReport:
    """Space-time L^(gamma/2) control of eta^2 f^beta(v) by its L^1 data.

    For a time-only cutoff the bracket reduces to eta^2 + 2 eta eta'; the
    comparison constant is the q = infinity form built from the measured
    C0inf, C1, and C2.
    """
    n = traj.n
    v_list, _, c2, c0inf = _measured_inputs(traj, k, v_fields, g_fields)
    for v, st in zip(v_list, traj.states):
        if np.min(v) < 0.0:
            raise HypothesisViolated("v must be nonnegative")
    areas = traj.step_log["area"]
    if np.any(np.diff(areas) > 1e-9 * areas[0]):
        raise HypothesisViolated("area increased during the run")

    T = traj.final_time
    h_power = sobolev._hk_spacetime_power(traj, n, k)
    consts = compute_moser_constants(
        n, k, T=T, volume=float(areas.max()), C0inf=c0inf,
        H_norm_accum=h_power, C2=c2, beta=beta,
    )
    gamma = consts.gamma

    times = traj.snapshot_times()
    eta_vals = np.asarray(eta(times), dtype=np.float64)
    eta_slope = np.asarray(eta.derivative(times), dtype=np.float64)

    lhs_samples = np.array([
        e**gamma * np.sum(v ** (k * beta * gamma / 2.0) * s.cache.area_weights)
        for e, v, s in zip(eta_vals, v_list, traj.states)
    ])
    lhs = flow_mod._window_trapezoid(times, lhs_samples, 0.0, T) ** (2.0 / gamma)

    bracket = eta_vals**2 + 2.0 * eta_vals * eta_slope
    rhs_samples = np.array([
        b * np.sum(v ** (k * beta) * s.cache.area_weights)
        for b, v, s in zip(bracket, v_list, traj.states)
    ])
    rhs = consts.C_full * flow_mod._window_trapezoid(times, rhs_samples, 0.0, T)

    return _report(
        "energy_estimate", lhs, rhs,
        constants={"C_full": consts.C_full, "C1": consts.C1, "C2": c2,
                   "C0inf": c0inf, "B_tilde": consts.B_tilde, "gamma": gamma},
        factors={"beta": beta, "T": T, "eta_max_slope": eta.max_slope},
    )


def iterate_norms(traj: FlowTrajectory, k: int, beta0: float, m_max: int) -> dict:
    """Measured space-time norms of w = H^k over the shrinking windows.

    Returns the sequence ||w||_(beta0 (gamma/2)^m, [t_m, T]) for
    m = 0..m_max, the iteration bound E(beta0) C1^((1/beta0)(2/(gamma-2)))
    ||w||_(beta0, [0,T]) they must stay below, and the measured sup of w
    over [T/2, T] the sequence climbs toward.
    """
    if beta0 < 2.0:
        raise BetaTooSmall(f"beta0 = {beta0:.6g} < 2")
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    if len(traj.states) < 3:
        raise InsufficientSamples("need at least 3 snapshots")
    n = traj.n
    gamma = gamma_exponent(n, k)
    gamma_hat = gamma / 2.0
    T = traj.final_time
    schedule = cutoff_schedule(T, max(m_max, 1))
    times = traj.snapshot_times()

    w_fields = [s.cache.mean_curvature**k for s in traj.states]
    norms = []
    exponents = []
    windows = []
    for m in range(m_max + 1):
        p = beta0 * gamma_hat**m
        t_m = float(schedule.times[m]) if m <= len(schedule.times) - 1 else (
            (T / 2.0) * (1.0 - 4.0 ** (-m)))
        if not np.any((times >= t_m) & (times <= T)):
            raise InsufficientSamples(f"no snapshots inside window [{t_m:.6g}, {T:.6g}]")
        val = flow_mod.spacetime_lp_norm(traj, w_fields, p, t_start=t_m)
        norms.append(float(val))
        exponents.append(float(p))
        windows.append(t_m)

    _, _, c2, c0inf = _measured_inputs(traj, k)
    h_power = sobolev._hk_spacetime_power(traj, n, k)
    consts = compute_moser_constants(
        n, k, T=T, volume=float(traj.step_log["area"].max()),
        C0inf=c0inf, H_norm_accum=h_power, C2=c2, beta=max(beta0, 2.0),
    )
    bound = (
        consts.E_of_beta(beta0)
        * consts.C1 ** ((1.0 / beta0) * (2.0 / (gamma - 2.0)))
        * norms[0]
    )

    in_late = traj.step_log["time"] >= T / 2.0
    sup_late = float(np.max(traj.step_log["max_H"][in_late]) ** k)
    return {
        "norms": norms,
        "exponents": exponents,
        "window_starts": windows,
        "bound": float(bound),
        "sup_late_window": sup_late,
        "constants": consts.as_dict(),
    }


def sup_bound_check(traj: FlowTrajectory, k: int) -> InequalityReport:
    """sup of H over M x [T/2, T] against F times the L^(n+k+1) norm.

    Rejected when (n+k+1)/k < 2 (the n + 1 >= k hypothesis); C2 is measured
    from the run as k (min H)^(k-1).
    """
    n = traj.n
    beta_star = (n + k + 1) / k
    if beta_star < 2.0:
        raise HypothesisViolated(
            f"(n, k) = ({n}, {k}): beta = (n+k+1)/k = {beta_star:.6g} < 2"
        )
    _, g_list, c2, c0inf = _measured_inputs(traj, k)
    T = traj.final_time
    h_power = sobolev._hk_spacetime_power(traj, n, k)
    consts = compute_moser_constants(
        n, k, T=T, volume=float(traj.step_log["area"].max()),
        C0inf=c0inf, H_norm_accum=h_power, C2=c2, beta=beta_star,
    )
    in_late = traj.step_log["time"] >= T / 2.0
    lhs = float(np.max(traj.step_log["max_H"][in_late]))
    rhs = consts.F_final * h_power ** (1.0 / (n + k + 1))
    return _report(
        "sup_bound", lhs, rhs,
        constants={"F_final": consts.F_final, "C1": consts.C1, "C2": c2,
                   "C0inf": c0inf, "beta_star": beta_star},
        factors={"h_norm": h_power ** (1.0 / (n + k + 1)),
                 "sup_G_term": c0inf, "T": T},
    )
