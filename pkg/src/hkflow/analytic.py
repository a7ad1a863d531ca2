"""Closed-form shrinking-sphere solution, scaling laws, and rescalings.

The round n-sphere under dF/dt = -H^k nu stays round with radius
r(t) = (r0^(k+1) - (k+1) n^k t)^(1/(k+1)), the ground-truth oracle for the
mesh integrator.  This module also carries the parabolic rescaling of
trajectories and the power-law functional equation residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrajectory, TimeBeyondTmax
from .flow import FlowState, FlowTrajectory


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit n-sphere in R^(n+1) (4*pi for n=2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass
class SphereSolution:
    """Round-sphere solution of the H^k flow in R^(n+1)."""

    n: int
    k: int
    r0: float = 1.0

    def __post_init__(self):
        if self.n < 2 or self.k < 1 or self.r0 <= 0.0:
            raise ValueError("need n >= 2, k >= 1, r0 > 0")

    @property
    def tmax(self) -> float:
        """Maximal existence time r0^(k+1) / ((k+1) n^k)."""
        return self.r0 ** (self.k + 1) / ((self.k + 1) * self.n**self.k)

    def radius(self, t: float) -> float:
        """r(t); defined for 0 <= t <= tmax, zero exactly at tmax."""
        if t < 0.0:
            raise ValueError("t must be >= 0")
        if t > self.tmax:
            raise TimeBeyondTmax(f"t = {t:.6g} > tmax = {self.tmax:.6g}")
        arg = self.r0 ** (self.k + 1) - (self.k + 1) * self.n**self.k * t
        return max(arg, 0.0) ** (1.0 / (self.k + 1))

    def mean_curvature(self, t: float) -> float:
        """H(t) = n / r(t)."""
        return self.n / self.radius(t)

    def area(self, t: float) -> float:
        return unit_sphere_area(self.n) * self.radius(t) ** self.n

    def spacetime_norm_power(self, alpha: float, T: float) -> float:
        """Space-time integral of H^alpha d(mu) dt over [0, T].

        Returns math.inf (explicit divergence branch, never an overflow)
        when T = tmax and alpha >= n + k + 1.
        """
        if alpha < 1.0:
            raise ValueError("alpha must be >= 1")
        if not 0.0 < T <= self.tmax:
            raise TimeBeyondTmax(f"T must lie in (0, tmax = {self.tmax:.6g}]")
        n, k = self.n, self.k
        c = (k + 1) * n**k
        p = (alpha - n) / (k + 1)
        # H^alpha * area = n^alpha w_n r^(n-alpha), with r^(k+1) = c (tmax - t)
        front = n**alpha * unit_sphere_area(n) * c ** (-p)
        at_tmax = T >= self.tmax
        if at_tmax and p >= 1.0:
            return math.inf
        if p == 1.0:
            integral = math.log(self.tmax / (self.tmax - T))
        else:
            integral = (self.tmax ** (1.0 - p) - (self.tmax - T) ** (1.0 - p)) / (1.0 - p)
        return front * integral

    def spacetime_norm(self, alpha: float, T: float) -> float:
        """(integral of H^alpha)^(1/alpha); math.inf in the divergent case."""
        power = self.spacetime_norm_power(alpha, T)
        return math.inf if math.isinf(power) else power ** (1.0 / alpha)


def sphere_radius(sol: SphereSolution, t: float) -> float:
    """Function-style alias for `SphereSolution.radius`."""
    return sol.radius(t)


def sphere_spacetime_norm(sol: SphereSolution, alpha: float, T: float) -> float:
    """Function-style alias for `SphereSolution.spacetime_norm`."""
    return sol.spacetime_norm(alpha, T)


@dataclass
class RescaleParams:
    """Space/time dilation: positions by Q^beta, times by Q^gamma_exp.

    With gamma_exp = beta * (k+1) the space-time L^(n+k+1) norm of H is
    invariant; `norm_invariant` constructs that case.
    """

    Q: float
    beta: float = 1.0
    gamma_exp: float | None = None

    def __post_init__(self):
        if self.Q <= 0.0 or self.beta <= 0.0:
            raise ValueError("Q and beta must be positive")

    @classmethod
    def norm_invariant(cls, Q: float, k: int, beta: float = 1.0) -> "RescaleParams":
        return cls(Q=Q, beta=beta, gamma_exp=beta * (k + 1))

    def resolved_gamma(self, k: int) -> float:
        return self.gamma_exp if self.gamma_exp is not None else self.beta * (k + 1)


def rescale_state(state: FlowState, space_factor: float, new_time: float) -> FlowState:
    """Dilate one snapshot; cached geometry is rescaled exactly."""
    mesh = state.mesh.with_vertices(space_factor * state.mesh.vertices)
    cache = state.cache.scaled(mesh, space_factor)
    return FlowState(new_time, mesh, cache)


def rescale_trajectory(traj: FlowTrajectory, params: RescaleParams, k: int
                       ) -> FlowTrajectory:
    """Apply the (Q, beta, gamma) dilation to a whole trajectory.

    Positions scale by Q^beta, times by Q^gamma, H by Q^-beta; the |H|^alpha
    accumulators pick up Q^(beta (n - alpha) + gamma), which with
    gamma = beta (k+1) leaves alpha = n + k + 1 invariant.
    """
    if not traj.states:
        raise EmptyTrajectory("cannot rescale an empty trajectory")
    q = params.Q
    beta = params.beta
    gamma = params.resolved_gamma(k)
    s = q**beta
    tau = q**gamma
    n = traj.n

    states = [rescale_state(st, s, st.time * tau) for st in traj.states]
    scale_map = {
        "time": tau, "dt": tau,
        "min_H": 1.0 / s, "max_H": 1.0 / s,
        "max_H_pow_kp1": s ** -(k + 1),
        "area": s**n, "h_min": s, "quality_min": 1.0,
    }
    step_log = {key: vals * scale_map[key] for key, vals in traj.step_log.items()}
    accum_history = {
        a: vals * q ** (beta * (n - a) + gamma) for a, vals in traj.accum_history.items()
    }
    return FlowTrajectory(
        states=states,
        state_steps=list(traj.state_steps),
        step_log=step_log,
        alphas=traj.alphas,
        accum_history=accum_history,
        termination=traj.termination,
        params=traj.params,
        n=n,
    )


def functional_equation_residual(k: int, beta: float, Q: float, x: float,
                                 f=None) -> float:
    """|f(x) - Q^(k beta) f(x / Q^beta)|; zero exactly when f is c * x^k.

    Pass a custom `f` to probe non-power speeds (the residual is then
    nonzero, which is what singles the power law out).
    """
    if Q <= 0.0:
        raise ValueError("Q must be positive")
    if f is None:
        f = lambda y: y**k  # noqa: E731
    return abs(f(x) - Q ** (k * beta) * f(x / Q**beta))


def synthetic_sphere_trajectory(sol: SphereSolution, num_steps: int = 400,
                                t_end_fraction: float = 0.999,
                                alphas: tuple[float, ...] = ()) -> FlowTrajectory:
    """Snapshot-free trajectory whose step log follows the exact solution.

    Lets the fitting and monitoring code run on analytic data for general n
    where no triangle mesh exists (n > 2).
    """
    from .flow import FlowParams

    t_end = t_end_fraction * sol.tmax
    # geometric spacing toward tmax mimics the adaptive stepper
    u = np.linspace(0.0, 1.0, num_steps + 1)
    times = sol.tmax * (1.0 - (1.0 - t_end / sol.tmax) ** u)
    times[0] = 0.0
    h = np.array([sol.mean_curvature(t) for t in times])
    area = np.array([sol.area(t) for t in times])
    log = {
        "time": times,
        "dt": np.diff(times, prepend=0.0),
        "min_H": h,
        "max_H": h,
        "max_H_pow_kp1": h ** (sol.k + 1),
        "area": area,
        "h_min": np.zeros_like(times),
        "quality_min": np.ones_like(times),
    }
    accum_history = {}
    for a in alphas:
        integrand = h**a * area
        vals = np.concatenate(
            [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))]
        )
        accum_history[float(a)] = vals
    return FlowTrajectory(
        states=[],
        state_steps=[],
        step_log=log,
        alphas=tuple(float(a) for a in alphas),
        accum_history=accum_history,
        termination="blowup_threshold",
        params=FlowParams(k=sol.k),
        n=sol.n,
    )
