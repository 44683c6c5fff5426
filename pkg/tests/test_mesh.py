import numpy as np
import pytest

from esdg import mesh as meshmod
from esdg import refops
from esdg.errors import MeshError


def channel_tags():
    return [
        ("bottom", lambda x, y: abs(y + 1) < 1e-12),
        ("top", lambda x, y: abs(y - 1) < 1e-12),
        ("left", lambda x, y: abs(x + 2) < 1e-12),
        ("right", lambda x, y: abs(x - 2) < 1e-12),
    ]


class TestBisectedQuadMesh:
    def test_unit_case(self):
        m = meshmod.bisected_quad_mesh(1, 1, (-1, 1, -1, 1))
        assert m.num_elements == 2
        assert 2.0 * m.J.sum() == pytest.approx(4.0, abs=1e-13)

    def test_area_partition(self):
        m = meshmod.bisected_quad_mesh(2, 1, (-1, 1, 0, 1))
        assert m.num_elements == 4
        areas = 2.0 * m.J
        assert np.allclose(areas, 0.5)
        assert areas.sum() == pytest.approx(2.0, abs=1e-13)

    def test_uniform_jacobians(self):
        m = meshmod.bisected_quad_mesh(4, 3, (0, 2, 0, 3))
        assert np.ptp(m.J) < 1e-14 * m.J[0]

    def test_degenerate_rectangle(self):
        with pytest.raises(MeshError):
            meshmod.bisected_quad_mesh(2, 2, (0, 0, 0, 1))
        with pytest.raises(MeshError):
            meshmod.bisected_quad_mesh(0, 2, (0, 1, 0, 1))


class TestGeometry:
    def test_reference_triangle_identity(self):
        verts = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        elems = np.array([[0, 1, 2]])
        G, J, normals, Jf = meshmod.compute_geometry(verts, elems)
        assert J[0] == pytest.approx(1.0)
        assert np.allclose(G[0], np.eye(2))
        assert np.allclose(normals[0], refops.REF_NORMALS)
        assert np.allclose(Jf[0], refops.REF_FACE_JAC)

    def test_translation_invariance(self):
        m = meshmod.bisected_quad_mesh(2, 2, (-1, 1, -1, 1))
        m2 = meshmod.apply_grading(m, lambda x, y: (x + 3.7, y - 1.2))
        assert np.allclose(m.J, m2.J)
        assert np.allclose(m.normals, m2.normals)
        assert np.allclose(m.G, m2.G)

    def test_hypotenuse_face_jacobian(self):
        h = 0.7
        verts = np.array([[0.0, 0.0], [2 * h, 0.0], [0.0, 2 * h]])
        _, _, _, Jf = meshmod.compute_geometry(verts, np.array([[0, 1, 2]]))
        assert Jf[0, 1] == pytest.approx(h * np.sqrt(2.0))

    def test_unit_normals(self):
        m = meshmod.bisected_quad_mesh(3, 3, (-2, 2, -1, 1))
        norms = np.hypot(m.normals[..., 0], m.normals[..., 1])
        assert np.abs(norms - 1.0).max() < 1e-14

    def test_watertight_per_element(self):
        m = meshmod.bisected_quad_mesh(3, 2, (-2, 2, -1, 1))
        m = meshmod.apply_grading(m, lambda x, y: (x, y + 0.25 * np.sin(np.pi * y)))
        closure = np.einsum("kf,kfi->ki", m.Jf * 2.0, m.normals)
        assert np.abs(closure).max() <= 1e-12

    def test_metric_consistency_scaled_normals(self):
        # n_i * Jf must equal sum_j G_ij nhat_j Jfhat on every face
        m = meshmod.bisected_quad_mesh(3, 2, (-2, 2, -1, 1))
        m = meshmod.apply_grading(m, lambda x, y: (x, y + 0.25 * np.sin(np.pi * y)))
        nref = refops.REF_NORMALS * refops.REF_FACE_JAC[:, None]  # (3, 2)
        via_G = np.einsum("kij,fj->kfi", m.G, nref)
        direct = m.normals * m.Jf[..., None]
        assert np.abs(via_G - direct).max() <= 1e-13 * max(1.0, np.abs(direct).max())

    def test_zero_area_triangle_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(MeshError):
            meshmod.compute_geometry(verts, np.array([[0, 1, 2]]))


class TestConnectivity:
    def test_involution(self):
        m = meshmod.bisected_quad_mesh(4, 3, (-2, 2, -1, 1))
        K = m.num_elements
        for k in range(K):
            for f in range(3):
                k2, f2 = m.EToE[k, f], m.EToF[k, f]
                assert m.EToE[k2, f2] == k
                assert m.EToF[k2, f2] == f

    def test_periodic_involution_and_pairing(self):
        m = meshmod.bisected_quad_mesh(4, 2, (-2, 2, -1, 1))
        m = meshmod.make_periodic(m, axis=0)
        assert len(m.periodic_pairs) == 2
        for (k, f), (k2, f2), shift in m.periodic_pairs:
            assert m.EToE[k, f] == k2 and m.EToF[k, f] == f2
            assert m.EToE[k2, f2] == k and m.EToF[k2, f2] == f
            a, b = m.face_endpoints(k, f)
            a2, b2 = m.face_endpoints(k2, f2)
            # same y-extent to tolerance
            assert sorted([a[1], b[1]]) == pytest.approx(sorted([a2[1], b2[1]]), abs=1e-12)
            assert shift[0] == pytest.approx(4.0)


class TestGrading:
    def test_identity_map(self):
        m = meshmod.bisected_quad_mesh(2, 2, (-1, 1, -1, 1))
        m2 = meshmod.apply_grading(m, lambda x, y: (x, y))
        assert np.array_equal(m.vertices, m2.vertices)
        assert np.array_equal(m.J, m2.J)

    def test_sine_grading_fixed_endpoints(self):
        m = meshmod.bisected_quad_mesh(2, 4, (-2, 2, -1, 1))
        m2 = meshmod.apply_grading(m, lambda x, y: (x, y + 0.25 * np.sin(np.pi * y)))
        on_wall = np.abs(np.abs(m.vertices[:, 1]) - 1.0) < 1e-14
        assert np.allclose(m2.vertices[on_wall], m.vertices[on_wall], atol=1e-15)
        assert not np.allclose(m2.vertices[~on_wall, 1], m.vertices[~on_wall, 1])

    def test_area_preserving_map(self):
        m = meshmod.bisected_quad_mesh(3, 3, (-1, 1, -1, 1))
        # shear preserves the total area of the straight-sided mesh
        m2 = meshmod.apply_grading(m, lambda x, y: (x + 0.3 * y, y))
        assert 2.0 * m2.J.sum() == pytest.approx(2.0 * m.J.sum(), abs=1e-12)

    def test_inversion_rejected(self):
        m = meshmod.bisected_quad_mesh(2, 2, (-1, 1, -1, 1))
        with pytest.raises(MeshError):
            meshmod.apply_grading(m, lambda x, y: (-x, y))


class TestTagging:
    def test_channel_partition(self):
        m = meshmod.bisected_quad_mesh(4, 2, (-2, 2, -1, 1))
        m = meshmod.tag_boundaries(m, channel_tags())
        counts = {t: len(m.boundary_faces(t)) for t in m.tag_names}
        assert counts == {"bottom": 4, "top": 4, "left": 2, "right": 2}
        assert sum(counts.values()) == int(np.count_nonzero(m.btag >= 0))

    def test_cavity_lid_tagging(self):
        m = meshmod.bisected_quad_mesh(4, 4, (-1, 1, -1, 1))
        m = meshmod.tag_boundaries(m, [
            ("lid", lambda x, y: abs(y - 1) < 1e-12),
            ("wall", lambda x, y: abs(y - 1) >= 1e-12),
        ])
        assert len(m.boundary_faces("lid")) == 4
        assert len(m.boundary_faces("wall")) == 12

    def test_untagged_face_error_names_centroid(self):
        m = meshmod.bisected_quad_mesh(2, 2, (-1, 1, -1, 1))
        with pytest.raises(MeshError, match="centroid"):
            meshmod.tag_boundaries(m, [("top", lambda x, y: abs(y - 1) < 1e-12)])

    def test_periodic_faces_not_tagged(self):
        m = meshmod.bisected_quad_mesh(4, 2, (-2, 2, -1, 1))
        m = meshmod.make_periodic(m, axis=0)
        m = meshmod.tag_boundaries(m, channel_tags()[:2])
        assert set(np.unique(m.btag)) <= {meshmod.INTERIOR, meshmod.PERIODIC, 0, 1}


class TestMeshFile:
    def test_round_trip_exact(self, tmp_path):
        m = meshmod.bisected_quad_mesh(3, 2, (-2, 2, -1, 1))
        m = meshmod.apply_grading(m, lambda x, y: (x, y + 0.25 * np.sin(np.pi * y)))
        m = meshmod.tag_boundaries(m, channel_tags())
        path = tmp_path / "channel.tri"
        meshmod.write_trimesh2d(m, path)
        m2 = meshmod.read_trimesh2d(path)
        assert np.array_equal(m.vertices, m2.vertices)
        assert np.array_equal(m.elements, m2.elements)
        assert np.array_equal(m.btag, m2.btag)
        assert m.tag_names == m2.tag_names

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.tri"
        path.write_text("NOTAMESH\n")
        with pytest.raises(MeshError):
            meshmod.read_trimesh2d(path)

    def test_mesh_info(self):
        m = meshmod.bisected_quad_mesh(2, 2, (-1, 1, -1, 1))
        m = meshmod.tag_boundaries(m, [("all", lambda x, y: True)])
        info = meshmod.mesh_info(m)
        assert info["elements"] == 8
        assert info["total_area"] == pytest.approx(4.0)
        assert info["min_edge_length"] == pytest.approx(1.0)
        assert info["J_min"] == pytest.approx(info["J_max"])
