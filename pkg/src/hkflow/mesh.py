"""Triangulated closed hypersurfaces: container, validation, and builders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh, InvalidMesh, OpenMesh

# Faces with area below DEGENERATE_REL_AREA * diag^2 are rejected (scale-invariant).
DEGENERATE_REL_AREA = 1e-12


@dataclass
class Hypersurface:
    """Closed oriented triangle mesh embedded in R^3.

    Parameters
    ----------
    vertices : (V, 3) float array
        Embedding coordinates.
    faces : (F, 3) int array
        Vertex index triples with consistent outward (counter-clockwise
        seen from outside) winding.
    n : int
        Intrinsic dimension; triangle meshes are always 2.
    """

    vertices: np.ndarray
    faces: np.ndarray
    n: int = 2

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int32)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise InvalidMesh("vertices must be a (V, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise InvalidMesh("faces must be a (F, 3) array")

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def bbox_diagonal(self) -> float:
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.sqrt(np.sum(span**2)))

    def face_areas(self) -> np.ndarray:
        p = self.vertices[self.faces]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.sqrt(np.sum(cross**2, axis=1))

    def total_area(self) -> float:
        return float(np.sum(self.face_areas()))

    def signed_volume(self) -> float:
        """Signed enclosed volume; positive for outward-consistent winding."""
        p = self.vertices[self.faces]
        return float(np.sum(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))) / 6.0)

    def with_vertices(self, vertices: np.ndarray) -> "Hypersurface":
        """New surface with the same connectivity (faces array is shared)."""
        out = Hypersurface.__new__(Hypersurface)
        out.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        out.faces = self.faces
        out.n = self.n
        return out

    def validate(self) -> None:
        """Raise if any structural invariant fails.

        Checks: >= 4 finite vertices, valid indices, every directed edge
        used exactly once (closed + consistently wound + manifold), no
        boundary edges, no degenerate faces, outward orientation.
        """
        if self.num_vertices < 4:
            raise InvalidMesh(f"need >= 4 vertices, got {self.num_vertices}")
        if not np.all(np.isfinite(self.vertices)):
            raise InvalidMesh("non-finite vertex coordinates")
        if self.num_faces == 0:
            raise InvalidMesh("mesh has no faces")
        if self.faces.min() < 0 or self.faces.max() >= self.num_vertices:
            raise InvalidMesh("face index out of range")
        if np.any(self.faces[:, 0] == self.faces[:, 1]) or np.any(
            self.faces[:, 1] == self.faces[:, 2]
        ) or np.any(self.faces[:, 0] == self.faces[:, 2]):
            raise DegenerateMesh("face with repeated vertex")

        areas = self.face_areas()
        eps = DEGENERATE_REL_AREA * self.bbox_diagonal() ** 2
        if np.any(areas <= eps):
            worst = int(np.argmin(areas))
            raise DegenerateMesh(f"face {worst} has area {areas[worst]:.3e} <= {eps:.3e}")

        # Directed-edge multiset: closed oriented manifold iff every directed
        # edge appears once and its reverse appears once.
        v = np.int64(self.num_vertices)
        i = self.faces.astype(np.int64)
        directed = np.concatenate(
            [i[:, 0] * v + i[:, 1], i[:, 1] * v + i[:, 2], i[:, 2] * v + i[:, 0]]
        )
        uniq, counts = np.unique(directed, return_counts=True)
        if np.any(counts > 1):
            raise InvalidMesh("duplicate directed edge: non-manifold or inconsistent winding")
        reverse = (uniq % v) * v + uniq // v
        if not np.array_equal(np.sort(reverse), uniq):
            raise OpenMesh("boundary edge found: mesh is not closed")

        if self.signed_volume() <= 0:
            raise InvalidMesh("winding is not outward (signed volume <= 0)")


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.sqrt(1.0 + phi**2)
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int32,
    )
    return verts, faces


def icosphere(level: int, radius: float = 1.0) -> Hypersurface:
    """Geodesic sphere from `level` loop subdivisions of an icosahedron.

    Vertex count is 10*4**level + 2; every vertex lies exactly on the
    sphere of the given radius centered at the origin.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if radius <= 0:
        raise ValueError("radius must be positive")
    verts, faces = _icosahedron()
    for _ in range(level):
        edge_mid: dict[tuple[int, int], int] = {}
        new_verts = [verts]
        next_id = len(verts)

        def midpoint(a: int, b: int) -> int:
            nonlocal next_id
            key = (a, b) if a < b else (b, a)
            idx = edge_mid.get(key)
            if idx is None:
                m = verts[a] + verts[b]
                m /= np.sqrt(np.sum(m**2))
                new_verts.append(m[None, :])
                idx = next_id
                edge_mid[key] = idx
                next_id += 1
            return idx

        new_faces = np.empty((4 * len(faces), 3), dtype=np.int32)
        for fi, (a, b, c) in enumerate(faces):
            ab = midpoint(int(a), int(b))
            bc = midpoint(int(b), int(c))
            ca = midpoint(int(c), int(a))
            new_faces[4 * fi + 0] = (a, ab, ca)
            new_faces[4 * fi + 1] = (b, bc, ab)
            new_faces[4 * fi + 2] = (c, ca, bc)
            new_faces[4 * fi + 3] = (ab, bc, ca)
        verts = np.concatenate(new_verts, axis=0)
        faces = new_faces
    return Hypersurface(radius * verts, faces)


def ellipsoid(a: float, b: float, c: float, level: int = 3) -> Hypersurface:
    """Axis-aligned ellipsoid with semi-axes (a, b, c), meshed from an icosphere."""
    if min(a, b, c) <= 0:
        raise ValueError("semi-axes must be positive")
    base = icosphere(level, 1.0)
    return base.with_vertices(base.vertices * np.array([a, b, c]))


def torus(major_radius: float = 1.0, minor_radius: float = 0.4,
          n_major: int = 48, n_minor: int = 24) -> Hypersurface:
    """Torus of revolution about the z-axis with outward-consistent winding."""
    if not 0 < minor_radius < major_radius:
        raise ValueError("need 0 < minor_radius < major_radius")
    theta = 2 * np.pi * np.arange(n_major) / n_major
    phi = 2 * np.pi * np.arange(n_minor) / n_minor
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    ring = major_radius + minor_radius * np.cos(ph)
    verts = np.stack(
        [ring * np.cos(th), ring * np.sin(th), minor_radius * np.sin(ph)], axis=-1
    ).reshape(-1, 3)

    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            v00 = i * n_minor + j
            v01 = i * n_minor + (j + 1) % n_minor
            v10 = ((i + 1) % n_major) * n_minor + j
            v11 = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
    surf = Hypersurface(verts, np.array(faces, dtype=np.int32))
    if surf.signed_volume() < 0:
        surf = Hypersurface(verts, surf.faces[:, ::-1].copy())
    return surf


def ellipsoid_principal_curvatures(point: np.ndarray, a: float, b: float, c: float
                                   ) -> tuple[float, float]:
    """Closed-form principal curvatures of the ellipsoid x^2/a^2+y^2/b^2+z^2/c^2=1.

    Independent oracle for mesh estimators: eigenvalues of the implicit-surface
    shape operator P Hess(F) P / |grad F| restricted to the tangent plane,
    positive on convex surfaces with outward normal.
    """
    x, y, z = np.asarray(point, dtype=np.float64)
    grad = 2.0 * np.array([x / a**2, y / b**2, z / c**2])
    gn = np.sqrt(np.sum(grad**2))
    nu = grad / gn
    hess = 2.0 * np.diag([1.0 / a**2, 1.0 / b**2, 1.0 / c**2])
    proj = np.eye(3) - np.outer(nu, nu)
    w = proj @ hess @ proj / gn
    evals = np.sort(np.linalg.eigvalsh(w))
    # one eigenvalue is ~0 along the normal direction; the remaining two are
    # the principal curvatures
    kept = sorted(evals, key=abs)[1:]
    k1, k2 = sorted(kept)
    return float(k1), float(k2)
