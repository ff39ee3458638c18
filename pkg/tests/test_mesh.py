"""Mesh construction, region selection, and problem definition checks."""
import numpy as np
import pytest

from cpdtopo.errors import InvalidProblemError
from cpdtopo.mesh import (DESIGNABLE, FORCED_SOLID, FORCED_VOID, ProblemDef,
                          build_mesh, mark_cylindrical_void, select_region)


def small_problem(nelx=4, nely=2, nelz=2, **kw):
    mesh = build_mesh(nelx, nely, nelz)
    fixed = np.array([0, 1, 2])
    defaults = dict(mesh=mesh, fixed_dofs=fixed,
                    load_dofs=np.array([mesh.n_dofs - 2]),
                    load_values=np.array([-1.0]))
    defaults.update(kw)
    return ProblemDef(**defaults)


class TestBuildMesh:
    def test_counts(self):
        mesh = build_mesh(3, 2, 4)
        assert mesh.n_elements == 24
        assert mesh.n_nodes == 4 * 3 * 5
        assert mesh.n_dofs == 3 * mesh.n_nodes
        assert mesh.element_volume == 1.0

    def test_first_element_connectivity(self):
        mesh = build_mesh(2, 2, 2)
        nx1, ny1 = 3, 3
        dz = nx1 * ny1
        expected = [0, 1, 1 + nx1, nx1, dz, 1 + dz, 1 + nx1 + dz, nx1 + dz]
        assert mesh.connectivity[0].tolist() == expected

    def test_element_numbering_x_fastest(self):
        mesh = build_mesh(3, 2, 2)
        # element (i, j, k) has index i + j*nelx + k*nelx*nely
        cent = mesh.element_centroids()
        e = 1 + 1 * 3 + 1 * 6
        assert cent[e].tolist() == [1.5, 1.5, 1.5]

    def test_element_dofs_node_major(self):
        mesh = build_mesh(2, 1, 1)
        dofs = mesh.element_dofs()
        assert dofs.shape == (2, 24)
        n0 = mesh.connectivity[0, 0]
        assert dofs[0, :3].tolist() == [3 * n0, 3 * n0 + 1, 3 * n0 + 2]

    def test_custom_spacing(self):
        mesh = build_mesh(2, 2, 2, h=0.5)
        assert mesh.element_volume == pytest.approx(0.125)
        assert mesh.node_coords()[:, 0].max() == pytest.approx(1.0)

    @pytest.mark.parametrize("bad", [(0, 1, 1), (1, -2, 1), (1, 1, 1.5)])
    def test_invalid_dims(self, bad):
        with pytest.raises(ValueError):
            build_mesh(*bad)

    def test_invalid_spacing(self):
        with pytest.raises(ValueError):
            build_mesh(2, 2, 2, h=0.0)


class TestSelectRegion:
    def test_face_selection(self):
        mesh = build_mesh(4, 3, 2)
        left = select_region(mesh, (0, 0, 0), (0, 3, 2))
        assert len(left) == 4 * 3
        assert np.all(mesh.node_coords()[left, 0] == 0)

    def test_single_node(self):
        mesh = build_mesh(4, 3, 2)
        nodes = select_region(mesh, (2, 1, 1), (2, 1, 1))
        assert len(nodes) == 1

    def test_empty_selection(self):
        mesh = build_mesh(2, 2, 2)
        assert len(select_region(mesh, (10, 10, 10), (11, 11, 11))) == 0


class TestProblemDef:
    def test_valid(self):
        p = small_problem()
        assert np.all(p.passive_mask == DESIGNABLE)

    def test_requires_support(self):
        with pytest.raises(InvalidProblemError):
            small_problem(fixed_dofs=np.array([], dtype=int))

    def test_requires_load(self):
        with pytest.raises(InvalidProblemError):
            small_problem(load_values=np.array([0.0]))

    def test_material_bounds(self):
        with pytest.raises(InvalidProblemError):
            small_problem(E_min=2.0)
        with pytest.raises(InvalidProblemError):
            small_problem(nu=0.6)

    def test_volume_fraction_bounds(self):
        with pytest.raises(InvalidProblemError):
            small_problem(vc=0.0)

    def test_forced_solid_within_budget(self):
        mesh = build_mesh(4, 2, 2)
        passive = np.full(mesh.n_elements, DESIGNABLE, dtype=np.int8)
        passive[:12] = FORCED_SOLID  # 75% solid vs vc = 0.3
        with pytest.raises(InvalidProblemError):
            small_problem(passive=passive, vc=0.3)

    def test_load_vector_accumulates(self):
        p = small_problem(load_dofs=np.array([5, 5]), load_values=np.array([-1.0, -2.0]))
        f = p.load_vector()
        assert f[5] == pytest.approx(-3.0)
        assert np.count_nonzero(f) == 1


class TestCylindricalVoid:
    def test_marked_count_matches_direct_enumeration(self):
        mesh = build_mesh(70, 30, 6)
        p = ProblemDef(mesh=mesh, fixed_dofs=np.array([0, 1, 2]),
                      load_dofs=np.array([3]), load_values=np.array([-1.0]),
                      vc=0.5)
        marked = mark_cylindrical_void(p, "z", (35.0, 15.0), 8.0)
        n_void = int(np.count_nonzero(marked.passive_mask == FORCED_VOID))
        cent = mesh.element_centroids()
        expected = int(np.count_nonzero(
            (cent[:, 0] - 35.0) ** 2 + (cent[:, 1] - 15.0) ** 2 < 64.0))
        assert n_void == expected
        assert n_void > 0

    def test_axis_projection(self):
        mesh = build_mesh(4, 4, 4)
        p = ProblemDef(mesh=mesh, fixed_dofs=np.array([0, 1, 2]),
                      load_dofs=np.array([3]), load_values=np.array([-1.0]))
        marked = mark_cylindrical_void(p, "x", (2.0, 2.0), 1.1)
        void = marked.passive_mask.reshape(4, 4, 4) == FORCED_VOID
        # voids run the full length of x at the (y, z) center
        assert np.all(void[1:3, 1:3, :])

    def test_full_cover_rejected(self):
        mesh = build_mesh(2, 2, 2)
        p = ProblemDef(mesh=mesh, fixed_dofs=np.array([0, 1, 2]),
                      load_dofs=np.array([3]), load_values=np.array([-1.0]))
        with pytest.raises(InvalidProblemError):
            mark_cylindrical_void(p, "z", (1.0, 1.0), 100.0)

    def test_bad_arguments(self):
        p = small_problem()
        with pytest.raises(ValueError):
            mark_cylindrical_void(p, "w", (0, 0), 1.0)
        with pytest.raises(ValueError):
            mark_cylindrical_void(p, "z", (0, 0), -1.0)
