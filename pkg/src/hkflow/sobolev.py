"""Sobolev-type inequality evaluators on hypersurfaces and flows.

Implements the curvature-weighted Sobolev inequality with its explicit
constant, the nonlinear power-law generalization, its gradient form,
and the space-time version along area-decreasing flows.  Evaluators return
an `InequalityReport` carrying both sides, the tightness ratio, and every
constant used; the constants are enormous by construction, so the ratio is
the scientifically interesting number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import flow as flow_mod
from . import geometry
from .analytic import unit_sphere_area
from .errors import HypothesisViolated
from .geometry import GeometryCache, ScalarField


def require_exponent_hypothesis(n: int, k: int) -> None:
    """Admissible (n, k): both >= 2, or k = 1 with n > 2."""
    if k >= 2 and n >= 2:
        return
    if k == 1 and n > 2:
        return
    raise HypothesisViolated(f"(n, k) = ({n}, {k}) not admissible")


@dataclass
class SobolevConstants:
    """All named constants for one (n, k, volume, T) tuple."""

    n: int
    k: int
    volume: float
    T: float
    omega_n: float
    c_n: float
    Q_k: float
    gamma: float
    c_nk: float
    a_nk: float
    A_nk: float
    A_hat_nk: float
    A_tilde_nk: float
    B_nkT: float

    def mu_nks(self, s: float) -> float:
        """Interpolation exponent, positive for 1 < s < n/(n-1)."""
        n, k = self.n, self.k
        if not 1.0 < s < n / (n - 1.0):
            raise HypothesisViolated(f"s = {s:.6g} outside (1, n/(n-1))")
        return (n / (k * n - (k + 1))) * (k * (n - 1) * (s - 1) + 1) / (n - (n - 1) * s)

    def as_dict(self) -> dict[str, float]:
        return {
            "n": self.n, "k": self.k, "volume": self.volume, "T": self.T,
            "omega_n": self.omega_n, "c_n": self.c_n, "Q_k": self.Q_k,
            "gamma": self.gamma, "c_nk": self.c_nk, "a_nk": self.a_nk,
            "A_nk": self.A_nk, "A_hat_nk": self.A_hat_nk,
            "A_tilde_nk": self.A_tilde_nk, "B_nkT": self.B_nkT,
        }


def compute_constants(n: int, k: int, volume: float, T: float) -> SobolevConstants:
    """Direct formula evaluation of every named constant.

    Q_k = kn/(kn-(k+1)) reduces to n/(n-2) at k=1; gamma is the space-time
    integrability exponent 2 + (k+1)^2/(k^2 n).
    """
    require_exponent_hypothesis(n, k)
    if volume <= 0.0 or T <= 0.0:
        raise HypothesisViolated("volume and T must be positive")
    denom = k * n - (k + 1)
    omega_n = unit_sphere_area(n)
    c_n = 4.0 ** (n + 1) / omega_n ** (1.0 / n)
    c_nk = c_n * (k + 1) * (n - 1) / denom
    a_nk = c_nk ** (denom / (n - 1.0)) * 2.0 ** ((k * n - k - n) / (n - 1.0))
    A_nk = 2.0 ** ((n - 1) * (k + 1) * (n + k + 1) / denom) * (2.0 * c_nk) ** (n + k + 1)
    return SobolevConstants(
        n=n, k=k, volume=volume, T=T,
        omega_n=omega_n,
        c_n=c_n,
        Q_k=k * n / denom,
        gamma=2.0 + (k + 1) ** 2 / (k**2 * n),
        c_nk=c_nk,
        a_nk=a_nk,
        A_nk=A_nk,
        A_hat_nk=A_nk * volume ** ((k - 1) / (2.0 * (k + 1))),
        A_tilde_nk=A_nk ** (1.0 / k) * (2.0 * k / (k + 1)) ** ((k + 1) / k),
        B_nkT=A_nk ** (1.0 / k) * (2.0 * k / (k + 1)) ** ((k + 1) / k)
        * volume ** ((k - 1) * (k + 1) / (2.0 * k**2 * n))
        * max(T ** ((k - 1) / k), T ** ((k - 1) / (2.0 * k))),
    )


@dataclass
class InequalityReport:
    """LHS/RHS of one inequality instance plus the constants that built it."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    ratio: float
    constants: dict[str, float] = field(default_factory=dict)
    factors: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "ratio": self.ratio,
            "constants": dict(self.constants),
            "factors": dict(self.factors),
        }


def _report(name: str, lhs: float, rhs: float, constants: dict, factors: dict
            ) -> InequalityReport:
    if rhs > 0.0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else math.inf
    return InequalityReport(
        name=name, lhs=float(lhs), rhs=float(rhs),
        holds=bool(lhs <= rhs * (1.0 + 1e-12) or lhs == rhs),
        ratio=float(ratio), constants=constants, factors=factors,
    )


def michael_simon_check(cache: GeometryCache, w: ScalarField, n: int = 2
                        ) -> InequalityReport:
    """(int w^(n/(n-1)))^((n-1)/n) <= c_n int (|grad w| + |H| w).

    Gradient integral uses per-face L1 quadrature of the piecewise-linear
    interpolant; the curvature term uses the lumped vertex measure.
    """
    w = geometry.check_field(cache, w, nonnegative=True)
    aw = cache.area_weights
    omega_n = unit_sphere_area(n)
    c_n = 4.0 ** (n + 1) / omega_n ** (1.0 / n)
    lhs = float(np.sum(w ** (n / (n - 1.0)) * aw) ** ((n - 1.0) / n))
    grad_integral = geometry.gradient_lp_integral(cache, w, 1.0)
    curv_integral = float(np.sum(np.abs(cache.mean_curvature) * w * aw))
    rhs = c_n * (grad_integral + curv_integral)
    return _report(
        "michael_simon", lhs, rhs,
        constants={"c_n": c_n},
        factors={"grad_integral": grad_integral, "curvature_integral": curv_integral},
    )


def nonlinear_sobolev_check(cache: GeometryCache, v: ScalarField, n: int, k: int
                            ) -> dict[str, InequalityReport]:
    """Both forms of the power-law Sobolev inequality.

    'base': ||v||^(k+1) in L^((k+1)Qk/k) against A_nk with L^((k+1)/k) norms
    on the right; 'l2': the same left side against A_hat_nk with L^2 norms.
    """
    v = geometry.check_field(cache, v, nonnegative=True)
    consts = compute_constants(n, k, volume=cache.total_area, T=1.0)
    p_lhs = (k + 1) * consts.Q_k / k
    p_weak = (k + 1) / k

    lhs = geometry.lp_norm(cache, v, p_lhs) ** (k + 1)
    h_pow = geometry.lp_norm(cache, cache.mean_curvature, n + k + 1) ** (n + k + 1)

    grad_weak = geometry.gradient_lp_norm(cache, v, p_weak) ** (k + 1)
    v_weak = geometry.lp_norm(cache, v, p_weak) ** (k + 1)
    rhs_base = consts.A_nk * (grad_weak + h_pow * v_weak)

    grad_l2 = geometry.gradient_lp_norm(cache, v, 2.0) ** (k + 1)
    v_l2 = geometry.lp_norm(cache, v, 2.0) ** (k + 1)
    rhs_l2 = consts.A_hat_nk * (grad_l2 + h_pow * v_l2)

    factors = {"h_norm_power": h_pow, "lhs_norm_power": lhs}
    return {
        "base": _report(
            "nonlinear_sobolev_base", lhs, rhs_base,
            constants={"A_nk": consts.A_nk, "Q_k": consts.Q_k},
            factors={**factors, "grad_term": grad_weak, "v_term": v_weak},
        ),
        "l2": _report(
            "nonlinear_sobolev_l2", lhs, rhs_l2,
            constants={"A_hat_nk": consts.A_hat_nk, "Q_k": consts.Q_k},
            factors={**factors, "grad_term": grad_l2, "v_term": v_l2},
        ),
    }


def gradient_form_check(cache: GeometryCache, v: ScalarField, n: int, k: int
                        ) -> InequalityReport:
    """||v||^2_(2Qk) <= A~ (||v||_2^((k-1)/k) ||grad v||_2^((k+1)/k)
    + (||H||^(n+k+1))^(1/k) ||v||_2^2)."""
    v = geometry.check_field(cache, v, nonnegative=True)
    consts = compute_constants(n, k, volume=cache.total_area, T=1.0)
    lhs = geometry.lp_norm(cache, v, 2.0 * consts.Q_k) ** 2
    v_l2 = geometry.lp_norm(cache, v, 2.0)
    grad_l2 = geometry.gradient_lp_norm(cache, v, 2.0)
    h_pow = geometry.lp_norm(cache, cache.mean_curvature, n + k + 1) ** (n + k + 1)
    cross_term = v_l2 ** ((k - 1.0) / k) * grad_l2 ** ((k + 1.0) / k)
    zero_term = h_pow ** (1.0 / k) * v_l2**2
    rhs = consts.A_tilde_nk * (cross_term + zero_term)
    return _report(
        "gradient_form", lhs, rhs,
        constants={"A_tilde_nk": consts.A_tilde_nk, "Q_k": consts.Q_k},
        factors={
            "v_l2": v_l2, "grad_l2": grad_l2, "h_norm_power": h_pow,
            "cross_term": cross_term, "zero_order_term": zero_term,
        },
    )


def _hk_spacetime_power(traj: flow_mod.FlowTrajectory, n: int, k: int) -> float:
    """Space-time integral of |H|^(n+k+1): per-step accumulator when the run
    tracked it, snapshot trapezoid otherwise."""
    alpha = float(n + k + 1)
    if alpha in traj.accum_history:
        return float(traj.accum_history[alpha][-1])
    return flow_mod.spacetime_power_integral(
        traj, lambda s: s.cache.mean_curvature, alpha
    )


def spacetime_sobolev_check(traj: flow_mod.FlowTrajectory, v_fields,
                            n: int, k: int) -> InequalityReport:
    """Space-time L^gamma bound along an area-decreasing flow.

    Requires the measured areas to be nonincreasing (the f(H) H >= 0
    hypothesis); the bound combines max-in-time L2 norms, the space-time
    gradient norm, and the |H|^(n+k+1) accumulator.
    """
    require_exponent_hypothesis(n, k)
    areas = traj.step_log["area"]
    if np.any(np.diff(areas) > 1e-9 * areas[0]):
        raise HypothesisViolated("area increased during the run (f(H) H < 0 somewhere)")

    fields = flow_mod._resolve_fields(traj, v_fields)
    for f, st in zip(fields, traj.states):
        geometry.check_field(st.cache, f, nonnegative=True)

    T = traj.final_time
    volume = float(areas.max())
    consts = compute_constants(n, k, volume=volume, T=T)
    gamma = consts.gamma

    lhs = flow_mod.spacetime_power_integral(traj, fields, gamma)
    max_l2 = flow_mod.max_in_time_lp(traj, fields, 2.0)
    grad_st = math.sqrt(flow_mod.spacetime_gradient_sq_integral(traj, fields))
    h_power = _hk_spacetime_power(traj, n, k)
    exp_front = (k + 1) ** 2 / (k**2 * n) + (k - 1.0) / k
    rhs = (
        consts.B_nkT
        * max_l2**exp_front
        * (grad_st ** ((k + 1.0) / k) + max_l2 ** ((k + 1.0) / k) * h_power ** (1.0 / k))
    )
    return _report(
        "spacetime_sobolev", lhs, rhs,
        constants={"B_nkT": consts.B_nkT, "gamma": gamma},
        factors={
            "max_l2": max_l2, "grad_spacetime_l2": grad_st,
            "h_norm_power": h_power, "T": T, "volume": volume,
        },
    )
