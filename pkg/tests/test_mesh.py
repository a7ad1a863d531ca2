import numpy as np
import pytest

from hkflow.errors import DegenerateMesh, InvalidMesh, OpenMesh
from hkflow.mesh import (
    Hypersurface,
    ellipsoid,
    ellipsoid_principal_curvatures,
    icosphere,
    torus,
)


def test_icosphere_counts():
    for level in (0, 1, 2, 3, 4):
        m = icosphere(level)
        assert m.num_vertices == 10 * 4**level + 2
        assert m.num_faces == 20 * 4**level
        m.validate()


def test_icosphere_radius_exact():
    m = icosphere(3, radius=2.5)
    r = np.linalg.norm(m.vertices, axis=1)
    assert np.allclose(r, 2.5, rtol=1e-14)


def test_icosphere_area_converges():
    errs = [abs(icosphere(lv).total_area() - 4 * np.pi) / (4 * np.pi) for lv in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 2e-3


def test_ellipsoid_and_torus_valid(triaxial3, torus_mesh):
    triaxial3.validate()
    torus_mesh.validate()
    assert torus_mesh.signed_volume() > 0


def test_signed_volume_sphere():
    m = icosphere(4)
    assert m.signed_volume() == pytest.approx(4 * np.pi / 3, rel=5e-3)


def test_validate_rejects_boundary():
    m = icosphere(1)
    open_mesh = Hypersurface(m.vertices, m.faces[:-1])
    with pytest.raises(OpenMesh):
        open_mesh.validate()


def test_validate_rejects_duplicate_face():
    m = icosphere(1)
    bad = Hypersurface(m.vertices, np.vstack([m.faces, m.faces[:1]]))
    with pytest.raises(InvalidMesh):
        bad.validate()


def test_validate_rejects_degenerate_face():
    m = icosphere(1)
    faces = m.faces.copy()
    faces[0, 1] = faces[0, 0]
    with pytest.raises(DegenerateMesh):
        Hypersurface(m.vertices, faces).validate()


def test_validate_rejects_inward_orientation():
    m = icosphere(1)
    with pytest.raises(InvalidMesh):
        Hypersurface(m.vertices, m.faces[:, ::-1].copy()).validate()


def test_validate_rejects_tiny_vertex_count():
    verts = np.eye(3)
    faces = np.array([[0, 1, 2]])
    with pytest.raises(InvalidMesh):
        Hypersurface(verts, faces).validate()


def test_ellipsoid_curvature_oracle_sphere_reduces():
    k1, k2 = ellipsoid_principal_curvatures([0.0, 0.0, 1.0], 1, 1, 1)
    assert k1 == pytest.approx(1.0, abs=1e-12)
    assert k2 == pytest.approx(1.0, abs=1e-12)


def test_ellipsoid_curvature_oracle_values():
    # oblate (1, 1, 0.8): umbilic poles at c/a^2, equator pair (a/b^2, a/c^2)
    k1, k2 = ellipsoid_principal_curvatures([0.0, 0.0, 0.8], 1, 1, 0.8)
    assert k1 == pytest.approx(0.8, rel=1e-12)
    assert k2 == pytest.approx(0.8, rel=1e-12)
    k1, k2 = ellipsoid_principal_curvatures([1.0, 0.0, 0.0], 1, 1, 0.8)
    assert k1 == pytest.approx(1.0, rel=1e-12)
    assert k2 == pytest.approx(1.0 / 0.8**2, rel=1e-12)
