import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kssav.mesh import (
    Mesh,
    MeshError,
    build_interval_mesh,
    build_rect_mesh,
    check_acute,
    compute_metrics,
    element_measures,
    export_csv,
)


def triangle_angles(p):
    """All three angles by the law of cosines."""
    a = np.linalg.norm(p[1] - p[2])
    b = np.linalg.norm(p[0] - p[2])
    c = np.linalg.norm(p[0] - p[1])
    A = math.acos((b * b + c * c - a * a) / (2 * b * c))
    B = math.acos((a * a + c * c - b * b) / (2 * a * c))
    return A, B, math.pi - A - B


class TestInterval:
    def test_unit_ten(self):
        m = build_interval_mesh(0, 1, 10)
        assert m.n_nodes == 11
        assert compute_metrics(m).h == pytest.approx(0.1, rel=1e-14)
        assert list(m.boundary_nodes) == [0, 10]

    def test_single_segment(self):
        m = build_interval_mesh(0, 1, 1)
        assert m.n_elements == 1
        assert list(m.boundary_nodes) == [0, 1]

    def test_published_spacing(self):
        m = build_interval_mesh(0, 10, 100)
        assert compute_metrics(m).h == pytest.approx(0.1, rel=1e-12)
        assert m.n_nodes == 101

    @pytest.mark.parametrize("args", [(0, 1, 0), (1, 0, 4), (0, math.inf, 3), (math.nan, 1, 3), (0, 1, 2.5)])
    def test_rejects(self, args):
        with pytest.raises(MeshError):
            build_interval_mesh(*args)

    def test_immutable(self):
        m = build_interval_mesh(0, 1, 4)
        with pytest.raises(ValueError):
            m.coords[0, 0] = 5.0


class TestRect:
    def test_single_cell(self):
        m = build_rect_mesh(1, 1, 1, 1)
        assert m.n_elements == 2 and m.n_nodes == 4

    def test_two_by_two_all_angles(self):
        m = build_rect_mesh(1, 1, 2, 2)
        assert m.n_elements == 8 and m.n_nodes == 9
        angles = [a for el in m.elements for a in triangle_angles(m.coords[el])]
        assert max(angles) <= math.pi / 2 + 1e-12
        assert check_acute(m)

    def test_diameter(self):
        m = build_rect_mesh(2, 1, 4, 2)
        assert compute_metrics(m).h == pytest.approx(math.sqrt(2) * 0.5, rel=1e-14)

    def test_lexicographic_numbering(self):
        m = build_rect_mesh(2, 1, 2, 1)
        # node (i, j) -> j * (nx + 1) + i
        np.testing.assert_allclose(m.coords[4], [1.0, 1.0])
        np.testing.assert_allclose(m.coords[2], [2.0, 0.0])
        assert set(m.boundary_nodes) == set(range(6))

    @pytest.mark.parametrize("args", [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)])
    def test_rejects(self, args):
        with pytest.raises(MeshError):
            build_rect_mesh(*args)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_always_acute_and_covering(self, nx, ny, Lx, Ly):
        m = build_rect_mesh(Lx, Ly, nx, ny)
        assert check_acute(m)
        assert m.n_elements == 2 * nx * ny
        assert abs(element_measures(m).sum() - Lx * Ly) <= 1e-12 * Lx * Ly


def test_obtuse_triangle_detected():
    p = np.array([[0.0, 0.0], [4.0, 0.0], [2.0, 0.5]])
    assert max(triangle_angles(p)) > math.pi / 2
    m = Mesh(2, p, [[0, 1, 2]], [0, 1, 2], 1.0)
    assert not check_acute(m)


def test_interval_is_acute():
    assert check_acute(build_interval_mesh(-3, 7, 13))


def test_invalid_meshes_rejected():
    p = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError, match="repeated"):
        Mesh(2, p, [[0, 1, 1]], [0], 0.5)
    with pytest.raises(MeshError, match="range"):
        Mesh(2, p, [[0, 1, 3]], [0], 0.5)
    with pytest.raises(MeshError, match="degenerate"):
        Mesh(2, np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), [[0, 1, 2]], [0], 0.0 + 1.0)
    with pytest.raises(MeshError, match="sum"):
        Mesh(2, p, [[0, 1, 2]], [0], 1.0)


class TestMetrics:
    def test_uniform_interval(self):
        m = compute_metrics(build_interval_mesh(0, 1, 10))
        assert m.h == pytest.approx(0.1, rel=1e-14)
        assert m.kappa_h == pytest.approx(0.1, rel=1e-14)
        assert m.G_h == 2

    def test_single_cell_altitude(self):
        # altitude of a right-isoceles triangle with unit legs onto its hypotenuse
        m = compute_metrics(build_rect_mesh(1, 1, 1, 1))
        assert m.kappa_h == pytest.approx(math.sqrt(2) / 2, rel=1e-14)

    def test_single_segment_neighbours(self):
        assert compute_metrics(build_interval_mesh(0, 1, 1)).G_h == 1

    def test_structured_2d_degree(self):
        # interior nodes of the diagonal split have six neighbours
        assert compute_metrics(build_rect_mesh(1, 1, 3, 3)).G_h == 6

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 8), st.floats(0.2, 5), st.floats(0.2, 5))
    def test_invariants(self, nx, ny, Lx, Ly):
        mesh = build_rect_mesh(Lx, Ly, nx, ny)
        m = compute_metrics(mesh)
        assert 0 < m.kappa_h <= m.h
        assert m.G_h >= 1
        assert m.quasi_uniformity <= 2.0
        for i, nb in enumerate(m.adjacency):
            assert i not in nb
            for j in nb:
                assert i in m.adjacency[j]


def test_export_csv(tmp_path):
    m = build_rect_mesh(1, 1, 1, 1)
    export_csv(m, tmp_path / "nodes.csv", tmp_path / "elems.csv")
    nodes = (tmp_path / "nodes.csv").read_text().splitlines()
    elems = (tmp_path / "elems.csv").read_text().splitlines()
    assert nodes[0] == "node_id,x,y" and len(nodes) == 5
    assert elems[0] == "elem_id,n0,n1,n2" and elems[1] == "0,0,1,3"
    m1 = build_interval_mesh(0, 1, 2)
    export_csv(m1, tmp_path / "n1.csv", tmp_path / "e1.csv")
    assert (tmp_path / "n1.csv").read_text().splitlines() == ["node_id,x", "0,0", "1,0.5", "2,1"]
