"""Discrete differential geometry on closed triangle meshes.

Curvature extraction, lumped quadrature, Lp norms of vertex fields, and
piecewise-linear gradients.  Everything here is a pure function of the mesh;
`GeometryCache` only memoizes derived arrays.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DegenerateMesh, InvalidMesh, NegativeField
from .mesh import Hypersurface

ScalarField = np.ndarray


class GeometryCache:
    """Per-vertex geometric data for one mesh snapshot.

    Eager fields come from one kernel pass: outward unit `normals`, signed
    `mean_curvature` (sum of principal curvatures, positive on spheres),
    barycentric `area_weights`, and mesh statistics.  The shape operator
    (least-squares quadric fit over the two-ring, expressed in an orthonormal
    tangent frame) is computed lazily on first access.
    """

    def __init__(self, mesh: Hypersurface, normals: np.ndarray,
                 mean_curvature: np.ndarray, area_weights: np.ndarray,
                 mixed_area: np.ndarray,
                 stats: tuple[float, float, float, float]):
        self.mesh = mesh
        self.normals = normals
        self.mean_curvature = mean_curvature
        self.area_weights = area_weights
        self.mixed_area = mixed_area
        self.total_area, self.min_edge_length, self.min_quality, self.min_face_area = stats
        self._shape_operator: np.ndarray | None = None
        self._principal: np.ndarray | None = None
        self._gaussian: np.ndarray | None = None

    @property
    def shape_operator(self) -> np.ndarray:
        """(V, 2, 2) symmetric shape operator in a per-vertex tangent frame."""
        if self._shape_operator is None:
            self._shape_operator, self._principal = _fit_shape_operator(
                self.mesh, self.normals
            )
        return self._shape_operator

    @property
    def principal_curvatures(self) -> np.ndarray:
        """(V, 2) principal curvatures, ascending per vertex."""
        if self._principal is None:
            _ = self.shape_operator
        return self._principal

    @property
    def gaussian_curvature(self) -> np.ndarray:
        """Angle-defect Gaussian curvature over the mixed vertex area."""
        if self._gaussian is None:
            self._gaussian = _angle_defect_curvature(self.mesh, self.mixed_area)
        return self._gaussian

    @property
    def second_fund_norm_sq(self) -> np.ndarray:
        """|A|^2 per vertex via the surface identity H^2 - 2K.

        Combines the two sharpest estimators (cotangent H, angle-defect K);
        the quadric-fit eigenvalues give the same quantity but with a larger
        truncation bias, so they are reserved for the pinching tests.
        """
        return np.maximum(self.mean_curvature**2 - 2.0 * self.gaussian_curvature, 0.0)

    def scaled(self, mesh: Hypersurface, factor: float) -> "GeometryCache":
        """Exact cache for `mesh` = factor * this mesh (uniform dilation)."""
        out = GeometryCache(
            mesh,
            self.normals,
            self.mean_curvature / factor,
            self.area_weights * factor**2,
            self.mixed_area * factor**2,
            (
                self.total_area * factor**2,
                self.min_edge_length * factor,
                self.min_quality,
                self.min_face_area * factor**2,
            ),
        )
        if self._shape_operator is not None:
            out._shape_operator = self._shape_operator / factor
            out._principal = self._principal / factor
        if self._gaussian is not None:
            out._gaussian = self._gaussian / factor**2
        return out


def build_geometry(mesh: Hypersurface, validate: bool = True) -> GeometryCache:
    """Run the kernel pass and wrap the result; validates the mesh by default."""
    if validate:
        mesh.validate()
    normals, h, area_w, mixed, stats = kernels.mesh_pass(mesh.vertices, mesh.faces)
    return GeometryCache(mesh, normals, h, area_w, mixed, stats)


# keyed by id(faces); the stored reference keeps the array alive so ids
# cannot be recycled while cached (snapshots share one faces array)
_RING_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _angle_defect_curvature(mesh: Hypersurface, mixed_area: np.ndarray) -> np.ndarray:
    """(2 pi - sum of incident corner angles) / mixed area; satisfies the
    Gauss-Bonnet total exactly."""
    v = mesh.vertices
    f = mesh.faces
    defect = np.full(mesh.num_vertices, 2.0 * np.pi)
    for c in range(3):
        a = v[f[:, c]]
        u = v[f[:, (c + 1) % 3]] - a
        w = v[f[:, (c + 2) % 3]] - a
        cosv = np.einsum("ij,ij->i", u, w) / np.sqrt(
            np.sum(u**2, axis=1) * np.sum(w**2, axis=1)
        )
        np.subtract.at(defect, f[:, c], np.arccos(np.clip(cosv, -1.0, 1.0)))
    return defect / mixed_area


def _two_ring_pairs(mesh: Hypersurface) -> tuple[np.ndarray, np.ndarray]:
    """(center, neighbor) index pairs over the two-ring of every vertex."""
    cached = _RING_CACHE.get(id(mesh.faces))
    if cached is not None and cached[0] is mesh.faces:
        return cached[1], cached[2]
    nv = mesh.num_vertices
    one_ring: list[set[int]] = [set() for _ in range(nv)]
    for a, b, c in mesh.faces:
        one_ring[a].update((b, c))
        one_ring[b].update((a, c))
        one_ring[c].update((a, b))
    centers = []
    neighbors = []
    for i in range(nv):
        ring = set(one_ring[i])
        for j in one_ring[i]:
            ring.update(one_ring[j])
        ring.discard(i)
        centers.extend([i] * len(ring))
        neighbors.extend(sorted(ring))
    out = (np.asarray(centers, dtype=np.int64), np.asarray(neighbors, dtype=np.int64))
    if len(_RING_CACHE) > 32:
        _RING_CACHE.clear()
    _RING_CACHE[id(mesh.faces)] = (mesh.faces, out[0], out[1])
    return out


def _tangent_frames(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e1, e2) per vertex spanning the plane normal to `normals`."""
    nv = normals.shape[0]
    ref = np.zeros((nv, 3))
    ref[np.arange(nv), np.argmin(np.abs(normals), axis=1)] = 1.0
    e1 = np.cross(normals, ref)
    e1 /= np.sqrt(np.sum(e1**2, axis=1))[:, None]
    e2 = np.cross(normals, e1)
    return e1, e2


def _fit_shape_operator(mesh: Hypersurface, normals: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares quadric over the two-ring in each vertex's tangent frame.

    Fits the height w(u, v) = a u^2/2 + b uv + c v^2/2 + d u + e v over the
    projected neighbors; the symmetric shape operator follows from the first
    and second fundamental forms of the fitted graph at the origin.
    """
    nv = mesh.num_vertices
    centers, neighbors = _two_ring_pairs(mesh)
    e1, e2 = _tangent_frames(normals)

    d = mesh.vertices[neighbors] - mesh.vertices[centers]
    u = np.einsum("ij,ij->i", d, e1[centers])
    v = np.einsum("ij,ij->i", d, e2[centers])
    w = np.einsum("ij,ij->i", d, normals[centers])

    rows = np.stack([0.5 * u**2, u * v, 0.5 * v**2, u, v], axis=1)
    ata = np.zeros((nv, 5, 5))
    atb = np.zeros((nv, 5))
    np.add.at(ata, centers, rows[:, :, None] * rows[:, None, :])
    np.add.at(atb, centers, rows * w[:, None])
    # tiny Tikhonov term keeps near-flat or low-valence fits solvable
    tr = np.einsum("ijj->i", ata)
    ata += (1e-12 * tr)[:, None, None] * np.eye(5)
    theta = np.linalg.solve(ata, atb[..., None])[..., 0]

    a, b, c, du, dv = theta.T
    slope_sq = du**2 + dv**2
    scale = 1.0 / np.sqrt(1.0 + slope_sq)
    # second fundamental form of the graph (outward-normal height => sign flip)
    ii = np.empty((nv, 2, 2))
    ii[:, 0, 0] = -a * scale
    ii[:, 0, 1] = ii[:, 1, 0] = -b * scale
    ii[:, 1, 1] = -c * scale

    # closed-form inverse square root of the 2x2 first fundamental form
    det = 1.0 + slope_sq
    s = np.sqrt(det)
    trace = 2.0 + slope_sq
    det2 = det + s * trace + s**2
    t = np.sqrt(trace + 2.0 * s)
    inv_sqrt = np.empty((nv, 2, 2))
    inv_sqrt[:, 0, 0] = (1.0 + dv**2 + s) * t / det2
    inv_sqrt[:, 0, 1] = inv_sqrt[:, 1, 0] = -du * dv * t / det2
    inv_sqrt[:, 1, 1] = (1.0 + du**2 + s) * t / det2

    shape_op = inv_sqrt @ ii @ inv_sqrt
    mean = 0.5 * (shape_op[:, 0, 0] + shape_op[:, 1, 1])
    disc = np.sqrt(
        (0.5 * (shape_op[:, 0, 0] - shape_op[:, 1, 1])) ** 2 + shape_op[:, 0, 1] ** 2
    )
    principal = np.stack([mean - disc, mean + disc], axis=1)
    return shape_op, principal


def pinching_minimum(cache: GeometryCache) -> float:
    """Smallest shape-operator eigenvalue over the mesh.

    The pinching condition with constant C holds iff the return value >= C.
    """
    return float(cache.principal_curvatures[:, 0].min())


def check_field(cache: GeometryCache, field: ScalarField, nonnegative: bool = False
                ) -> np.ndarray:
    """Validate a per-vertex scalar field against the cache."""
    values = np.asarray(field, dtype=np.float64)
    if values.shape != (cache.mesh.num_vertices,):
        raise InvalidMesh(
            f"field has shape {values.shape}, expected ({cache.mesh.num_vertices},)"
        )
    if not np.all(np.isfinite(values)):
        raise InvalidMesh("field has non-finite entries")
    if nonnegative and values.min() < 0.0:
        raise NegativeField(f"field has negative entries (min {values.min():.3e})")
    return values


def lp_norm(cache: GeometryCache, field: ScalarField, p: float) -> float:
    """(sum_v |field_v|^p area_v)^(1/p) with the lumped vertex measure."""
    if not np.isfinite(p) or p < 1.0:
        raise ValueError("p must be finite and >= 1")
    values = check_field(cache, field)
    return float(np.sum(np.abs(values) ** p * cache.area_weights) ** (1.0 / p))


def face_gradients(mesh: Hypersurface, field: ScalarField) -> np.ndarray:
    """(F, 3) tangential gradient of the piecewise-linear interpolant."""
    f = np.asarray(field, dtype=np.float64)
    p = mesh.vertices[mesh.faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    double_area = np.sqrt(np.sum(cross**2, axis=1))
    if np.any(double_area == 0.0):
        raise DegenerateMesh("zero-area face in gradient evaluation")
    nhat = cross / double_area[:, None]
    # grad = sum_i f_i (nhat x edge_opposite_i) / (2A)
    edge_sum = (
        f[mesh.faces[:, 0], None] * (p[:, 2] - p[:, 1])
        + f[mesh.faces[:, 1], None] * (p[:, 0] - p[:, 2])
        + f[mesh.faces[:, 2], None] * (p[:, 1] - p[:, 0])
    )
    return np.cross(nhat, edge_sum) / double_area[:, None]


def gradient_lp_integral(cache: GeometryCache, field: ScalarField, p: float) -> float:
    """integral of |grad field|^p with face-area quadrature."""
    grads = face_gradients(cache.mesh, check_field(cache, field))
    mags = np.sqrt(np.sum(grads**2, axis=1))
    return float(np.sum(mags**p * cache.mesh.face_areas()))


def gradient_lp_norm(cache: GeometryCache, field: ScalarField, p: float) -> float:
    """Lp norm of the piecewise-linear tangential gradient."""
    return gradient_lp_integral(cache, field, p) ** (1.0 / p)


def gradient_l2_norm(cache: GeometryCache, field: ScalarField) -> float:
    """L2 norm of the piecewise-linear tangential gradient."""
    return gradient_lp_norm(cache, field, 2.0)


def laplace_beltrami(cache: GeometryCache, field: ScalarField) -> np.ndarray:
    """Cotangent Laplace-Beltrami of a vertex field, mixed-area normalized.

    Same operator the curvature kernel applies to the positions; on the unit
    sphere it reproduces eigenfunction identities such as (lap z) = -2 z.
    """
    f = check_field(cache, field)
    mesh = cache.mesh
    p0 = mesh.vertices[mesh.faces[:, 0]]
    p1 = mesh.vertices[mesh.faces[:, 1]]
    p2 = mesh.vertices[mesh.faces[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    double_area = np.sqrt(np.sum(cross**2, axis=1))
    cot0 = np.einsum("ij,ij->i", p1 - p0, p2 - p0) / double_area
    cot1 = np.einsum("ij,ij->i", p2 - p1, p0 - p1) / double_area
    cot2 = np.einsum("ij,ij->i", p0 - p2, p1 - p2) / double_area
    lap = np.zeros(mesh.num_vertices)
    for cot, j, k in ((cot0, 1, 2), (cot1, 2, 0), (cot2, 0, 1)):
        d = 0.5 * cot * (f[mesh.faces[:, k]] - f[mesh.faces[:, j]])
        np.add.at(lap, mesh.faces[:, j], d)
        np.add.at(lap, mesh.faces[:, k], -d)
    return lap / cache.mixed_area


def vertex_gradient_sq(cache: GeometryCache, field: ScalarField) -> np.ndarray:
    """|grad field|^2 lumped from faces onto vertices."""
    grads = face_gradients(cache.mesh, check_field(cache, field))
    gsq = np.sum(grads**2, axis=1)
    mesh = cache.mesh
    contrib = mesh.face_areas() / 3.0 * gsq
    out = np.zeros(mesh.num_vertices)
    for i in range(3):
        np.add.at(out, mesh.faces[:, i], contrib)
    return out / cache.area_weights


def random_smooth_field(mesh: Hypersurface, rng: np.random.Generator,
                        nonnegative: bool = True) -> np.ndarray:
    """Low-order polynomial in the embedding coordinates, optionally shifted
    to be strictly positive; used as generic test fields."""
    x = mesh.vertices / max(mesh.bbox_diagonal(), 1e-300)
    lin = rng.normal(size=3)
    quad = rng.normal(size=(3, 3))
    f = rng.normal() + x @ lin + np.einsum("ij,jk,ik->i", x, quad, x)
    if nonnegative:
        f = f - f.min() + 0.05 * (np.ptp(f) + 1e-12)
    return f
