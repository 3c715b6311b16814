"""Subsurface flow: LDG discretisation of the head equation with implicit Euler.

Unknowns are the flux q̃ = −∇h̃ and the head h̃.  The system per step is

    (W + Δt A(t+Δt)) Y⁺ = W Y + Δt V(t+Δt),    Y = (Q̃¹, Q̃², H̃),

with W = diag(0, 0, M) and the block rows

    [ M   0   −H¹+Q¹+Q¹_N ]            [ −J¹_D            ]
    [ 0   M   −H²+Q²+Q²_N ]        V = [ −J²_D            ]
    [ −G¹+R¹+R¹_D  −G²+R²+R²_D  η(S+S_D) ]  [ ηK_D − K_N + L ]

Boundary edges marked ``dirichlet`` or ``interface`` take the Dirichlet
branch of the fluxes; data on ``interface`` edges come only from the slots
filled by the coupled driver.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import assembly as asm
from .linalg import BlockSparseMatrix, Factorization, bmat
from .mesh import Mesh2D

Field = Callable  # (t, x1, x2) -> array


def _zero(t, x1, x2):
    return np.zeros(np.broadcast(x1, x2).shape)


@dataclass
class DarcyConfig:
    """Coefficients and data of the subsurface problem.

    ``D`` returns the 2×2 conductivity tensor with shape x.shape + (2, 2).
    """

    D: Field
    h0: Callable  # (x1, x2)
    f: Field = _zero
    h_D: Field = _zero
    g_N: Field = _zero
    eta: float = 1.0
    D_time_dependent: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("penalty coefficient must be positive")


@dataclass
class DarcyState:
    Q1: np.ndarray
    Q2: np.ndarray
    H: np.ndarray
    t: float
    J1_int: np.ndarray = None
    J2_int: np.ndarray = None
    K_int: np.ndarray = None

    def __post_init__(self):
        for name in ("J1_int", "J2_int", "K_int"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros_like(self.H))

    @property
    def Y(self) -> np.ndarray:
        return np.concatenate([self.Q1, self.Q2, self.H])

    def set_interface(self, J1_int, J2_int, K_int):
        for name, vec in (("J1_int", J1_int), ("J2_int", J2_int), ("K_int", K_int)):
            vec = np.asarray(vec, dtype=float)
            if vec.shape != self.H.shape:
                raise ValueError(f"interface vector {name} has shape {vec.shape}, expected {self.H.shape}")
            setattr(self, name, vec)


def darcy_set_interface(state: DarcyState, J1_int, J2_int, K_int) -> None:
    state.set_interface(J1_int, J2_int, K_int)


@dataclass
class DarcyOperators:
    M: BlockSparseMatrix
    flux: tuple  # (−H^m + Q^m + Q^m_N) for m = 1, 2
    head: tuple  # (−G^m + R^m + R^m_D) for m = 1, 2
    penalty: BlockSparseMatrix  # η (S + S_D)
    D: np.ndarray  # projected conductivity coefficients (K, N, 2, 2)


class DarcySolver:
    def __init__(self, config: DarcyConfig, mesh: Mesh2D, p: int):
        self.config = config
        self.mesh = mesh
        self.ref = asm.ref_blocks(p)
        self.p = p
        bnd = mesh.neighbor < 0
        self.interior = ~bnd
        self.dirichlet = mesh.edge_mask("dirichlet", "interface")
        self.dirichlet_data = mesh.edge_mask("dirichlet")
        self.neumann = mesh.edge_mask("neumann")
        unknown = bnd & ~(self.dirichlet | self.neumann)
        if np.any(unknown):
            kinds = sorted(set(mesh.marker[unknown]))
            raise ValueError(f"subsurface boundary kinds {kinds} are not supported (use dirichlet/neumann/interface)")
        self.points = asm.quadrature_points(mesh, self.ref)
        self.epoints = asm.edge_points(mesh, self.ref)
        self.mass = asm.mass_blocks(mesh, self.ref)
        self.H_elem = [asm.assemble_elem_dphi_phi(mesh, self.ref, m) for m in (1, 2)]
        self._ops = None
        self._factor = None

    @property
    def size(self) -> int:
        return self.mesh.K * self.ref.N

    # -- assembly -----------------------------------------------------------

    def project_D(self, t) -> np.ndarray:
        return asm.l2_project(lambda a, b: self.config.D(t, a, b), self.mesh, self.ref, self.mass)

    def operators(self, t) -> DarcyOperators:
        if self._ops is not None and not self.config.D_time_dependent:
            return self._ops
        mesh, ref = self.mesh, self.ref
        D = self.project_D(t)
        M = BlockSparseMatrix.block_diagonal(self.mass)
        flux, head = [], []
        for m in (1, 2):
            Qm = asm.assemble_edge_phi_phi_nu(mesh, ref, m, self.interior, averaged=True)
            QmN = asm.assemble_edge_phi_phi_nu(mesh, ref, m, self.neumann, averaged=False)
            flux.append((Qm + QmN - self.H_elem[m - 1]).compress())
            G = asm.assemble_elem_dphi_phi_funcdisc(mesh, ref, D, m)
            R = asm.assemble_edge_phi_phi_funcdisc_nu(mesh, ref, D, m, self.interior, averaged=True)
            RD = asm.assemble_edge_phi_phi_funcdisc_nu(mesh, ref, D, m, self.dirichlet, averaged=False)
            head.append((R + RD - G).compress())
        S, SD = asm.assemble_penalty(mesh, ref, self.interior, self.dirichlet)
        ops = DarcyOperators(M, tuple(flux), tuple(head), (self.config.eta * (S + SD)).compress(), D)
        self._ops = ops
        return ops

    def data_vectors(self, t, state: DarcyState | None = None):
        """(J¹, J², K_rhs) where the flux rows get −J^m and the head row gets K_rhs."""
        mesh, ref, cfg = self.mesh, self.ref, self.config
        ex, ey = self.epoints[..., 0], self.epoints[..., 1]
        hD = np.broadcast_to(cfg.h_D(t, ex, ey), ex.shape)
        gN = np.broadcast_to(cfg.g_N(t, ex, ey), ex.shape)
        J = [asm.assemble_dirichlet_vector(mesh, ref, self.dirichlet_data, hD, m=m) for m in (1, 2)]
        KD = asm.assemble_dirichlet_vector(mesh, ref, self.dirichlet_data, hD / mesh.lengths[:, :, None])
        KN = asm.assemble_dirichlet_vector(mesh, ref, self.neumann, gN)
        fc = asm.l2_project(lambda a, b: cfg.f(t, a, b), mesh, ref, self.mass)
        L = np.einsum("kij,kj->ki", self.mass, fc).ravel()
        if state is not None:
            J = [J[0] + state.J1_int, J[1] + state.J2_int]
            KD = KD + state.K_int
        return J[0], J[1], cfg.eta * KD - KN + L

    def assemble(self, t, state: DarcyState | None = None):
        """(W, A, V) of the implicit system at time t."""
        ops = self.operators(t)
        K = self.mesh.K
        N = self.ref.N
        Z = BlockSparseMatrix.zeros((K * N, K * N), (N, N))
        W = bmat([[Z, None, None], [None, Z, None], [None, None, ops.M]])
        A = bmat([[ops.M, None, ops.flux[0]], [None, ops.M, ops.flux[1]], [ops.head[0], ops.head[1], ops.penalty]])
        J1, J2, Kr = self.data_vectors(t, state)
        V = np.concatenate([-J1, -J2, Kr])
        return W, A, V

    # -- stepping -----------------------------------------------------------

    def initial_state(self, t0: float = 0.0) -> DarcyState:
        mesh, ref = self.mesh, self.ref
        H = asm.l2_project(self.config.h0, mesh, ref, self.mass).ravel()
        state = DarcyState(np.zeros_like(H), np.zeros_like(H), H, t0)
        self.update_flux(state)
        return state

    def update_flux(self, state: DarcyState) -> None:
        """Recompute Q̃ from H̃ with the flux equations at the state's time."""
        ops = self.operators(state.t)
        J1, J2, _ = self.data_vectors(state.t, state)
        inv = np.linalg.inv(self.mass)
        for m, J in ((1, J1), (2, J2)):
            rhs = (-(ops.flux[m - 1] @ state.H) - J).reshape(self.mesh.K, self.ref.N)
            setattr(state, f"Q{m}", np.einsum("kij,kj->ki", inv, rhs).ravel())

    def step(self, state: DarcyState, dt: float) -> DarcyState:
        t_new = state.t + dt
        W, A, V = self.assemble(t_new, state)
        key = dt
        if self._factor is None or self._factor[0] != key or self.config.D_time_dependent:
            self._factor = (key, Factorization((W + dt * A).compress()))
        rhs = W @ state.Y + dt * V
        Y = self._factor[1].solve(rhs)
        n = self.size
        return DarcyState(Y[:n], Y[n : 2 * n], Y[2 * n :], t_new, state.J1_int, state.J2_int, state.K_int)


def darcy_step(solver: DarcySolver, state: DarcyState, dt: float) -> DarcyState:
    return solver.step(state, dt)


def darcy_assemble(solver: DarcySolver, t: float, state: DarcyState | None = None):
    return solver.assemble(t, state)
