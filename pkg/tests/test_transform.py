import numpy as np
import pytest
from hypothesis import given, strategies as st

from swedarcy.transform import GeometryError, det_at, jacobian_at, map_point, mapping_from_vertices, physical_gradient

UNIT = [[0, 0], [1, 0], [1, 1], [0, 1]]
TRAPEZOID = [[0, 0], [1, 0], [1, 2], [0, 1]]


def test_unit_square():
    F = mapping_from_vertices(UNIT)
    np.testing.assert_array_equal(F.J1, np.eye(2))
    np.testing.assert_array_equal(F.J2, 0.0)
    np.testing.assert_array_equal(F.J3, 0.0)
    assert det_at(F, [[0.2, 0.9]])[0] == 1.0


def test_rectangle():
    w, h = 3.0, 0.5
    F = mapping_from_vertices([[1, 2], [1 + w, 2], [1 + w, 2 + h], [1, 2 + h]])
    np.testing.assert_array_equal(F.J2, 0.0)
    np.testing.assert_allclose(det_at(F, [[0.0, 0.0], [1.0, 1.0]]), w * h)
    np.testing.assert_allclose(physical_gradient(F, [[1.0, 0.0]], [[0.3, 0.7]]), [[1 / w, 0.0]])


def test_trapezoid_parts():
    F = mapping_from_vertices(TRAPEZOID)
    assert F.J1[1, 1] == 1.0
    assert F.J2[1, 1] == 1.0
    x = np.array([[0.0, 0.3], [0.5, 0.1], [1.0, 0.9]])
    np.testing.assert_allclose(det_at(F, x), 1 + x[:, 0])
    assert det_at(F, [[0.5, 0.77]])[0] == pytest.approx(1.5)


def test_corners_map_to_vertices():
    F = mapping_from_vertices(TRAPEZOID)
    np.testing.assert_allclose(map_point(F, [[0, 0], [1, 0], [1, 1], [0, 1]]), TRAPEZOID)


def test_trapezoid_gradient_against_differences():
    F = mapping_from_vertices(TRAPEZOID)

    def c_hat(s, t):
        return s**2 * t + np.sin(t)

    def inverse(x1, x2):
        # x1 = s, x2 = (1 + s) t
        return x1, x2 / (1 + x1)

    xhat = np.array([[0.5, 0.5]])
    x1, x2 = map_point(F, xhat)[0]
    grad_hat = np.array([[2 * 0.5 * 0.5, 0.25 + np.cos(0.5)]])
    h = 1e-6
    fd = [
        (c_hat(*inverse(x1 + h, x2)) - c_hat(*inverse(x1 - h, x2))) / (2 * h),
        (c_hat(*inverse(x1, x2 + h)) - c_hat(*inverse(x1, x2 - h))) / (2 * h),
    ]
    np.testing.assert_allclose(physical_gradient(F, grad_hat, xhat)[0], fd, atol=1e-6)


def test_rejects_inverted_element():
    with pytest.raises(GeometryError):
        mapping_from_vertices([[0, 0], [1, 0], [1, -1], [0, 1]])


def test_rejects_slanted_sides():
    with pytest.raises(GeometryError):
        mapping_from_vertices([[0, 0], [1, 0], [1.2, 1], [0, 1]])


@st.composite
def trapezoids(draw):
    f = st.floats(-2.0, 2.0)
    xl, zb_l, zb_r = draw(f), draw(f), draw(f)
    w = draw(st.floats(0.1, 3.0))
    hl, hr = draw(st.floats(0.1, 3.0)), draw(st.floats(0.1, 3.0))
    return np.array([[xl, zb_l], [xl + w, zb_r], [xl + w, zb_r + hr], [xl, zb_l + hl]])


@given(trapezoids(), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1), st.floats(0, 1))
def test_affine_fields_reproduce_their_slope(v, b1, b2, s, t):
    F = mapping_from_vertices(v)
    xhat = np.array([[s, t]])
    # c(x) = b·x pulled back: ∇̂ĉ = Jᵀ b
    J = jacobian_at(F, xhat)[0]
    grad_hat = (J.T @ np.array([b1, b2]))[None]
    np.testing.assert_allclose(physical_gradient(F, grad_hat, xhat)[0], [b1, b2], atol=1e-12)


@given(trapezoids(), st.floats(0, 1), st.floats(0, 1))
def test_determinant_is_jacobian_determinant(v, s, t):
    F = mapping_from_vertices(v)
    xhat = np.array([[s, t]])
    assert det_at(F, xhat)[0] == pytest.approx(np.linalg.det(jacobian_at(F, xhat)[0]), rel=1e-12, abs=1e-12)
    assert det_at(F, xhat)[0] > 0
