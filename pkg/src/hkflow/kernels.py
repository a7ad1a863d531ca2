"""Geometry-kernel backend selection.

The compiled extension (`hkflow._core`, built from `_core.pyx`) is preferred
when importable; otherwise the numpy implementation in `_core_np` is used.
Set ``HKFLOW_KERNELS=python`` or ``HKFLOW_KERNELS=cython`` to force a backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import _core_np

try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:
    _core = None

_FORCED = os.environ.get("HKFLOW_KERNELS", "auto").lower()
if _FORCED == "python":
    _BACKEND = "python"
elif _FORCED == "cython":
    if _core is None:
        raise ImportError(
            "HKFLOW_KERNELS=cython but the compiled extension is not available"
        )
    _BACKEND = "cython"
else:
    _BACKEND = "cython" if _core is not None else "python"


def backend_name() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return _BACKEND


def available_backends() -> tuple[str, ...]:
    return ("python", "cython") if _core is not None else ("python",)


def get_mesh_pass(backend: str | None = None):
    """Return the mesh_pass callable for `backend` (default: active one)."""
    name = backend or _BACKEND
    if name == "python":
        return _core_np.mesh_pass
    if name == "cython":
        if _core is None:
            raise ImportError("compiled kernel extension not built")
        return _core.mesh_pass
    raise ValueError(f"unknown backend {name!r}")


def mesh_pass(vertices: np.ndarray, faces: np.ndarray):
    """Dispatch to the active backend; see `_core_np.mesh_pass` for the contract."""
    if _BACKEND == "cython":
        return _core.mesh_pass(vertices, faces)
    return _core_np.mesh_pass(vertices, faces)
