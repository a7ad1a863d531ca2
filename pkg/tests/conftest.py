"""Shared meshes and flow runs (session-scoped: the long runs feed many tests)."""

from __future__ import annotations

import time

import numpy as np
import pytest

from hkflow import flow
from hkflow.mesh import ellipsoid, icosphere, torus

TMAX_22 = 1.0 / 12.0


@pytest.fixture(scope="session")
def sphere3():
    return icosphere(3, 1.0)


@pytest.fixture(scope="session")
def sphere4():
    return icosphere(4, 1.0)


@pytest.fixture(scope="session")
def sphere5():
    return icosphere(5, 1.0)


@pytest.fixture(scope="session")
def oblate4():
    return ellipsoid(1.0, 1.0, 0.8, 4)


@pytest.fixture(scope="session")
def triaxial3():
    return ellipsoid(1.0, 0.9, 0.8, 3)


@pytest.fixture(scope="session")
def torus_mesh():
    return torus(1.0, 0.4)


@pytest.fixture(scope="session")
def fat_torus():
    # inner ring has H < 0: not mean-convex
    return torus(1.0, 0.6)


@pytest.fixture(scope="session")
def blowup_traj(sphere4):
    """Unit icosphere(4), k=2, run into the curvature blow-up threshold."""
    params = flow.FlowParams(k=2, blowup_threshold=1e4)
    t0 = time.perf_counter()
    traj = flow.run(sphere4, params, alphas=(4.0, 5.0), snapshot_stride=20)
    traj.wall_seconds = time.perf_counter() - t0
    return traj


@pytest.fixture(scope="session")
def halfway_traj(sphere4):
    """Same flow stopped exactly at t = T_max/2 = 1/24."""
    params = flow.FlowParams(k=2, stop_T=TMAX_22 / 2.0)
    return flow.run(sphere4, params, alphas=(4.0, 5.0), snapshot_stride=5)


@pytest.fixture(scope="session")
def moser_traj(sphere4):
    """Sphere run truncated at 0.9 T_max, dense snapshots for window norms."""
    params = flow.FlowParams(k=2, stop_T=0.9 * TMAX_22)
    return flow.run(sphere4, params, alphas=(4.0, 5.0), snapshot_stride=5)


@pytest.fixture(scope="session")
def ellipsoid_traj(triaxial3):
    params = flow.FlowParams(k=2, stop_T=0.01)
    return flow.run(triaxial3, params, alphas=(4.0, 5.0), snapshot_stride=2)


@pytest.fixture(scope="session")
def short_traj(sphere3):
    params = flow.FlowParams(k=2, stop_T=0.01)
    return flow.run(sphere3, params, alphas=(4.0, 5.0), snapshot_stride=2)


@pytest.fixture(scope="session")
def frozen_traj(sphere3):
    """Synthetic trajectory of identical snapshots at distinct times."""
    from hkflow import geometry
    from hkflow.flow import FlowParams, FlowState, FlowTrajectory

    cache = geometry.build_geometry(sphere3)
    times = np.linspace(0.0, 0.02, 21)
    states = [FlowState(float(t), sphere3, cache) for t in times]
    h = cache.mean_curvature
    aw = cache.area_weights
    integrand4 = float(np.sum(h**4 * aw))
    log = {
        "time": times,
        "dt": np.diff(times, prepend=0.0),
        "min_H": np.full_like(times, h.min()),
        "max_H": np.full_like(times, h.max()),
        "max_H_pow_kp1": np.full_like(times, h.max() ** 3),
        "area": np.full_like(times, cache.total_area),
        "h_min": np.full_like(times, cache.min_edge_length),
        "quality_min": np.full_like(times, cache.min_quality),
    }
    return FlowTrajectory(
        states=states,
        state_steps=list(range(len(times))),
        step_log=log,
        alphas=(4.0,),
        accum_history={4.0: integrand4 * times},
        termination="reached_T",
        params=FlowParams(k=2),
        n=2,
    )


def mean_radius(mesh) -> float:
    return float(np.linalg.norm(mesh.vertices, axis=1).mean())
