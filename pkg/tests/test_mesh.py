import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracle_suite import random_mesh
from swedarcy.basis import Basis1D
from swedarcy.mesh import (
    DryingError,
    Mesh2D,
    adapt_free_surface,
    build_column_mesh,
    nodal_heights,
    project_mesh,
)
from swedarcy.scenarios import manufactured_meshes
from swedarcy.transform import GeometryError

OPP = [1, 0, 3, 2]


def test_unit_square_element():
    mesh = build_column_mesh([0.0, 1.0], 1, lambda x: 0 * x, lambda x: 0 * x + 1)
    assert mesh.K == 1
    np.testing.assert_array_equal(mesh.vertices[0], [[0, 0], [1, 0], [1, 1], [0, 1]])
    assert mesh.mapping.det_const[0] == 1.0
    assert mesh.mapping.det_lin[0] == 0.0


def test_sloped_bottom_gives_trapezoids():
    mesh = build_column_mesh([0.0, 50.0, 100.0], 1, lambda x: 0.005 * x, lambda x: 0 * x + 5)
    np.testing.assert_allclose(mesh.vertices[0], [[0, 0], [50, 0.25], [50, 5], [0, 5]])
    np.testing.assert_allclose(mesh.vertices[1], [[50, 0.25], [100, 0.5], [100, 5], [50, 5]])
    # [J²]₂₂ = (a3 − a2)² − (a4 − a1)² = −0.25 in both columns
    np.testing.assert_allclose(mesh.mapping.J2[:, 1, 1], [-0.25, -0.25])


def test_showcase_grid_size():
    mesh = build_column_mesh(np.linspace(0, 100, 43), 8, lambda x: 0 * x, lambda x: 0 * x + 5)
    assert mesh.K == 336


def test_inverted_profiles_rejected():
    with pytest.raises(GeometryError):
        build_column_mesh([0.0, 1.0], 2, lambda x: 0 * x + 1, lambda x: 0 * x)
    with pytest.raises(GeometryError):
        build_column_mesh([0.0, 0.0, 1.0], 1, lambda x: 0 * x, lambda x: 0 * x + 1)


def test_unknown_boundary_kind_rejected():
    with pytest.raises(ValueError):
        Mesh2D([0.0, 1.0], [[0.0, 1.0], [0.0, 1.0]], {"bottom": "wall", "top": "top", "left": "land", "right": "land"})


def test_element_numbering_is_column_major():
    mesh = build_column_mesh([0.0, 1.0, 2.0], 3, lambda x: 0 * x, lambda x: 0 * x + 3)
    np.testing.assert_array_equal(mesh.column, [0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(mesh.layer, [0, 1, 2, 0, 1, 2])
    np.testing.assert_array_equal(mesh.neighbor[1], [0, 2, 4, -1])


@given(st.integers(0, 2**31))
def test_interior_edges_match(seed):
    mesh = random_mesh(np.random.default_rng(seed))
    for k in range(mesh.K):
        for n in range(4):
            kk = mesh.neighbor[k, n]
            if kk < 0:
                continue
            assert mesh.neighbor[kk, OPP[n]] == k
            assert abs(mesh.lengths[k, n] - mesh.lengths[kk, OPP[n]]) <= 1e-13
            np.testing.assert_allclose(mesh.normals[k, n], -mesh.normals[kk, OPP[n]], atol=1e-13)
            np.testing.assert_allclose(np.linalg.norm(mesh.normals[k, n]), 1.0, atol=1e-14)


@given(st.integers(0, 2**31))
def test_element_areas_sum_to_domain_area(seed):
    mesh = random_mesh(np.random.default_rng(seed))
    dets = mesh.mapping.det_const + 0.5 * mesh.mapping.det_lin
    assert dets.sum() == pytest.approx(mesh.area(), rel=1e-12)


def test_projection_counts():
    mesh = build_column_mesh([0.0, 1.0, 2.0], 3, lambda x: 0 * x, lambda x: 0 * x + 3)
    mesh1d = project_mesh(mesh)
    assert mesh1d.K == 2
    np.testing.assert_array_equal(mesh1d.markT2DT.sum(axis=0), [3, 3])
    np.testing.assert_array_equal(mesh1d.markT2DT.sum(axis=1), 1)

    single = project_mesh(build_column_mesh([0.0, 1.0], 1, lambda x: 0 * x, lambda x: 0 * x + 1))
    assert single.K == 1
    np.testing.assert_array_equal(single.markT2DT, [[True]])


def test_manufactured_level_one_sizes():
    mesh, _ = manufactured_meshes(1, "swe")
    assert mesh.K == 8
    assert project_mesh(mesh).K == 4


def test_adaptation_fixed_point():
    mesh = build_column_mesh([0.0, 1.0, 3.0], 2, lambda x: 0.1 * x, lambda x: 0 * x + 4)
    depth = mesh.top - mesh.bottom
    # exact p=1 coefficients of the piecewise-linear height
    slope = np.diff(depth) / np.diff(mesh.x1)
    mean = 0.5 * (depth[:-1] + depth[1:])
    H = np.column_stack([mean, -slope * np.diff(mesh.x1) / (2 * np.sqrt(3))]).ravel()
    new, mesh1d = adapt_free_surface(mesh, H, Basis1D(1))
    np.testing.assert_allclose(new.z, mesh.z, atol=1e-14)
    np.testing.assert_allclose(mesh1d.Hs, depth, atol=1e-14)


def test_constant_height_sets_flat_surface():
    mesh = build_column_mesh([0.0, 1.0, 2.0], 1, lambda x: 0 * x, lambda x: 0 * x + 3)
    new, mesh1d = adapt_free_surface(mesh, [5.0, 5.0], Basis1D(0))
    np.testing.assert_array_equal(new.top, 5.0)
    np.testing.assert_array_equal(mesh1d.Hs, 5.0)


def test_nodal_heights_average_traces():
    b = Basis1D(1)
    H = np.array([[2.0, 0.5], [3.0, -0.25]])
    left = H @ b.eval(0.0)
    right = H @ b.eval(1.0)
    np.testing.assert_allclose(nodal_heights(H.ravel(), b), [left[0], 0.5 * (right[0] + left[1]), right[1]])


def test_interior_levels_equidistributed():
    mesh = build_column_mesh([0.0, 1.0], 4, lambda x: 0 * x, lambda x: 0 * x + 2)
    new, _ = adapt_free_surface(mesh, [6.0], Basis1D(0))
    np.testing.assert_allclose(new.z[0], [0.0, 1.5, 3.0, 4.5, 6.0])


def test_drying_aborts():
    mesh = build_column_mesh([0.0, 1.0], 2, lambda x: 0 * x, lambda x: 0 * x + 2)
    with pytest.raises(DryingError):
        adapt_free_surface(mesh, [-1.0], Basis1D(0))
    with pytest.raises(DryingError):
        adapt_free_surface(mesh, [np.nan], Basis1D(0))
