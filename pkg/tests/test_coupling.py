import numpy as np
import pytest
from hypothesis import given, strategies as st

from swedarcy.coupling import (
    CouplingConfig,
    CouplingError,
    HeadAccumulator,
    accumulate_head,
    darcy_interface_vectors,
    dynamic_head,
    swe_interface_vectors,
)
from swedarcy.darcy import DarcyConfig, DarcySolver
from swedarcy.mesh import build_column_mesh
from swedarcy.swe import SweConfig, SweSolver

LENGTH = 2.0


def identity(t, x1, x2):
    return np.broadcast_to(np.eye(2), np.broadcast(x1, x2).shape + (2, 2))


def aquifer(p=0):
    markers = dict(bottom="neumann", top="interface", left="neumann", right="neumann")
    mesh = build_column_mesh([0.0, LENGTH], 1, lambda x: 0 * x - 3, lambda x: 0 * x, markers)
    return DarcySolver(DarcyConfig(D=identity, h0=lambda a, b: 0 * a), mesh, p)


def river(p=0):
    markers = dict(bottom="interface", top="top", left="land", right="land")
    mesh = build_column_mesh([0.0, LENGTH], 1, lambda x: 0 * x, lambda x: 0 * x + 1, markers)
    cfg = SweConfig(g=10.0, D=identity, zeta_b=lambda x: 0 * x, h0=lambda x: 0 * x + 1, u10=lambda a, b: 0 * a)
    solver = SweSolver(cfg, mesh, p)
    return solver, solver.initial_state(mesh)


def test_constant_state_averages_to_its_head():
    acc = HeadAccumulator(4, (2, 3))
    for _ in range(5):
        accumulate_head(acc, np.full((2, 3), 5.0), np.zeros((2, 3)), np.zeros((2, 3)), 10.0)
    np.testing.assert_allclose(acc.mean, 5.0, atol=1e-15)


def test_single_substep_is_trapezoid():
    acc = HeadAccumulator(1, (1,))
    acc.add([2.0])
    acc.add([6.0])
    np.testing.assert_allclose(acc.mean, [4.0])


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_linear_history_averages_to_midpoint(a, b):
    n = 5
    acc = HeadAccumulator(n, (1,))
    for i in range(n + 1):
        acc.add([a + b * i / n])
    assert acc.mean[0] == pytest.approx(a + 0.5 * b, abs=1e-12)


def test_accumulator_guards():
    acc = HeadAccumulator(2, (1,))
    acc.add([1.0])
    with pytest.raises(CouplingError):
        acc.mean
    acc.add([1.0])
    acc.add([1.0])
    with pytest.raises(CouplingError):
        acc.add([1.0])


def test_dynamic_head():
    assert dynamic_head(2.0, 4.0, -1.0, 8.0) == pytest.approx(2.0 - 1.0 + 1.0)


def test_substep_count_must_be_positive():
    with pytest.raises(CouplingError):
        CouplingConfig(n_substep=0)
    with pytest.raises(CouplingError):
        CouplingConfig(n_substep=1.5)


def test_darcy_vectors_vanish_without_head():
    darcy = aquifer()
    for v in darcy_interface_vectors(np.zeros((1, darcy.ref.R)), darcy):
        np.testing.assert_array_equal(v, 0.0)


def test_darcy_vectors_for_constant_head():
    c = 3.5
    darcy = aquifer()
    J1, J2, K = darcy_interface_vectors(np.full((1, darcy.ref.R), c), darcy)
    assert K[0] == pytest.approx(c)
    assert J2[0] == pytest.approx(LENGTH * c)
    assert J1[0] == 0.0


def test_darcy_vectors_check_shape():
    darcy = aquifer()
    with pytest.raises(CouplingError):
        darcy_interface_vectors(np.zeros((2, darcy.ref.R)), darcy)


def test_swe_vectors_vanish_without_flux():
    swe, state = river()
    for v in swe_interface_vectors(swe, state, np.zeros((2, 1, swe.ref.R))):
        np.testing.assert_array_equal(v, 0.0)


def test_swe_vectors_for_constant_flux():
    d, q = 0.25, np.array([0.4, -1.2])
    swe, state = river()
    velocity = np.broadcast_to((d * q)[:, None, None], (2, 1, swe.ref.R))
    J1_u, J2_u, J_w, J1_uu, J2_uu = swe_interface_vectors(swe, state, velocity)
    # bed normal (0, −1)
    assert J1_u[0] == 0.0 and J1_uu[0] == 0.0
    assert J2_u[0] == pytest.approx(-LENGTH * d * q[0])
    assert J_w[0] == pytest.approx(-LENGTH * d * q[1])
    assert J2_uu[0] == pytest.approx(-LENGTH * (d * q[0]) * (d * q[1]))
