"""Discrete H^k mean curvature flow on closed triangle meshes.

Evolves triangulated surfaces under dF/dt = -f(H) nu, evaluates the
associated Sobolev-type inequalities and Moser-iteration bounds with their
explicit constants, and monitors the curvature extension criterion, with the
shrinking sphere as the built-in analytic oracle.
"""

import os as _os

# Must run before numpy is first imported in this process so that BLAS/OpenMP
# pools respect the cap; harmless otherwise.
_threads = _os.environ.get("HKFLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from . import analytic, extension, flow, geometry, moser, sobolev  # noqa: E402
from .errors import HkflowError  # noqa: E402
from .kernels import backend_name  # noqa: E402
from .mesh import Hypersurface, ellipsoid, icosphere, torus  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "Hypersurface",
    "HkflowError",
    "analytic",
    "backend_name",
    "ellipsoid",
    "extension",
    "flow",
    "geometry",
    "icosphere",
    "moser",
    "sobolev",
    "torus",
    "__version__",
]
