"""Free-flow (2D vertical shallow-water) problem on a moving column mesh.

Per explicit Euler step at time tⁿ:

    Q^m = M⁻¹ (S_q^m + A_q^m U¹)                       diagnostic flux
    U²  = A_ww⁻¹ (S_w + A_wu U¹)                        vertical velocity, bottom to top
    U¹ += Δt M⁻¹ (S_u + A_uh H + Σ_m A_uu^m U^m + A_uq^m Q^m)
    H  += Δt M̄⁻¹ (S_h + A_h H)

followed by moving the surface nodes to the new water height.

Edge sets come from the side markers of the mesh:
``land``/``river``/``bottom``/``interface`` prescribe u¹, ``river``/``openSea``
prescribe h, ``top``/``openSea``/``radiation`` prescribe the diffusive flux,
``bottom``/``interface`` prescribe u².
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import assembly as asm
from .linalg import BlockSparseMatrix
from .mesh import DryingError, Mesh1D, Mesh2D, adapt_free_surface, equidistributed_levels, project_mesh

U_KINDS = ("land", "river", "bottom", "interface")
H_KINDS = ("river", "openSea")
Q_KINDS = ("top", "openSea", "radiation")
BOT_KINDS = ("bottom", "interface")
SUPPORTED = ("land", "river", "openSea", "radiation", "top", "bottom", "interface")


class NumericalFailure(RuntimeError):
    """Non-finite state or a singular diagnostic system."""


def _zero(t, x1, x2=None):
    shape = np.shape(x1) if x2 is None else np.broadcast(x1, x2).shape
    return np.zeros(shape)


@dataclass
class SweConfig:
    """Physical data of the free-flow problem.

    Field callables take (t, x1, x2) except ``h_D`` and ``f_h`` (t, x1),
    ``zeta_b`` and ``h0`` (x1) and ``u10`` (x1, x2).  ``D`` returns 2×2 tensors.
    ``q1_D``/``q2_D`` are the components of the prescribed diffusive flux D q.
    ``f_h`` is an optional source of the surface equation.
    """

    g: float
    D: Callable
    zeta_b: Callable
    h0: Callable
    u10: Callable
    f: Callable = _zero
    f_h: Callable | None = None
    h_D: Callable = _zero
    u1_D: Callable = _zero
    u2_D: Callable = _zero
    q1_D: Callable = _zero
    q2_D: Callable = _zero

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("gravitational acceleration must be positive")


@dataclass
class SweState:
    U1: np.ndarray
    H: np.ndarray
    mesh: Mesh2D
    mesh1d: Mesh1D
    t: float
    U2: np.ndarray = None
    Q1: np.ndarray = None
    Q2: np.ndarray = None
    J_u_int: np.ndarray = None  # (2, K·N)
    J_w_int: np.ndarray = None
    J_uu_int: np.ndarray = None  # (2, K·N)

    def __post_init__(self):
        z = np.zeros_like(self.U1)
        for name in ("U2", "Q1", "Q2", "J_w_int"):
            if getattr(self, name) is None:
                setattr(self, name, z.copy())
        for name in ("J_u_int", "J_uu_int"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros((2,) + z.shape))

    def set_interface(self, J1_u, J2_u, J_w, J1_uu, J2_uu):
        vecs = [np.asarray(v, dtype=float) for v in (J1_u, J2_u, J_w, J1_uu, J2_uu)]
        if any(v.shape != self.U1.shape for v in vecs):
            raise ValueError(f"interface vectors must have shape {self.U1.shape}")
        self.J_u_int = np.stack(vecs[:2])
        self.J_w_int = vecs[2]
        self.J_uu_int = np.stack(vecs[3:])


def swe_set_interface(state: SweState, J1_u, J2_u, J_w, J1_uu, J2_uu) -> None:
    state.set_interface(J1_u, J2_u, J_w, J1_uu, J2_uu)


@dataclass
class SweOperators:
    """Everything needed for one explicit step, assembled on the current mesh."""

    mass: np.ndarray  # (K, N, N)
    mass_inv: np.ndarray
    mass1d: np.ndarray  # (K̄,) element lengths (M̄ = |T̄| I)
    S_u: np.ndarray
    A_uh: BlockSparseMatrix
    A_uu: tuple
    A_uq: tuple
    S_q: tuple
    A_q: tuple
    A_wu: BlockSparseMatrix
    A_ww: BlockSparseMatrix
    S_w: np.ndarray
    S_h: np.ndarray
    A_h: BlockSparseMatrix
    parts: dict = field(default_factory=dict)


class SweSolver:
    def __init__(self, config: SweConfig, mesh: Mesh2D, p: int):
        self.config = config
        self.p = p
        self.ref = asm.ref_blocks(p)
        bad = set(mesh.marker[mesh.neighbor < 0]) - set(SUPPORTED)
        if bad:
            raise ValueError(f"free-flow boundary kinds {sorted(bad)} are not supported")
        if mesh.markers["top"] != "top":
            raise ValueError("the upper side of the free-flow mesh must be the free surface ('top')")
        self._masks(mesh)
        self.zeta_nodes = mesh.bottom.copy()
        self.slope = np.diff(self.zeta_nodes) / np.diff(mesh.x1)
        left, right = mesh.markers["left"], mesh.markers["right"]
        node_kinds = np.array([[left, "interior"]] + [["interior", "interior"]] * (mesh.n_columns - 2) + [["interior", right]])
        if mesh.n_columns == 1:
            node_kinds = np.array([[left, right]])
        self.node_interior = node_kinds == "interior"
        self.node_U = np.isin(node_kinds, U_KINDS)
        self.node_H = np.isin(node_kinds, H_KINDS)

    def _masks(self, mesh: Mesh2D):
        bnd = mesh.neighbor < 0
        vert = np.zeros((mesh.K, 4), dtype=bool)
        vert[:, 2:] = True
        self.interior = ~bnd
        self.vert = vert
        self.EU = mesh.edge_mask(*U_KINDS)
        self.EH = mesh.edge_mask(*H_KINDS)
        self.EQ = mesh.edge_mask(*Q_KINDS)
        self.Ebot = mesh.edge_mask(*BOT_KINDS)
        self.Eint = mesh.edge_mask("interface")
        self.bnd = bnd
        self.all_edges = np.ones((mesh.K, 4), dtype=bool)

    # -- setup ----------------------------------------------------------------

    def initial_state(self, mesh: Mesh2D, t0: float = 0.0) -> SweState:
        """Project the initial data; ``mesh`` provides columns, layers, bathymetry and markers."""
        cfg, ref = self.config, self.ref
        top = mesh.bottom + np.asarray(cfg.h0(mesh.x1), dtype=float)
        mesh = mesh.with_levels(equidistributed_levels(mesh.bottom, top, mesh.n_layers))
        mesh1d = project_mesh(mesh)
        H = asm.l2_project_1d(cfg.h0, mesh1d, ref).ravel()
        mesh, mesh1d = adapt_free_surface(mesh, H, ref.basis1d)
        U1 = asm.l2_project(cfg.u10, mesh, ref).ravel()
        state = SweState(U1, H, mesh, mesh1d, t0)
        self.refresh_diagnostics(state)
        return state

    # -- assembly -------------------------------------------------------------

    def assemble(self, state: SweState) -> SweOperators:
        cfg, ref = self.config, self.ref
        mesh, mesh1d, t = state.mesh, state.mesh1d, state.t
        g = cfg.g
        K, N = mesh.K, ref.N
        I, V, B = self.interior, self.vert, self.bnd
        EU, EH, EQ, Ebot, Eint = self.EU, self.EH, self.EQ, self.Ebot, self.Eint
        EUv, EHv = EU & V, EH & V
        EU_data = EU & ~Eint
        Ebot_data = Ebot & ~Eint

        mass = asm.mass_blocks(mesh, ref)
        mass_inv = np.linalg.inv(mass)
        ep = asm.edge_points(mesh, ref)
        ex, ez = ep[..., 0], ep[..., 1]

        # traces
        u_in = asm.edge_traces(state.U1, mesh, ref)
        h_in = asm.edge_traces_1d(state.H, mesh, ref)
        hs = asm.edge_column_heights(mesh1d, mesh, ref)
        uD = np.broadcast_to(cfg.u1_D(t, ex, ez), ex.shape)
        u2D = np.broadcast_to(cfg.u2_D(t, ex, ez), ex.shape)
        hD = np.broadcast_to(cfg.h_D(t, ex), ex.shape)
        u_out = asm.exterior(u_in, mesh, boundary=np.where(EU[:, :, None], uD, u_in))
        h_out = asm.exterior(h_in, mesh, boundary=np.where(EH[:, :, None], hD, h_in))
        lam = asm.compute_lambda(h_in, h_out, u_in, u_out, g)

        Dc = asm.l2_project(lambda a, b: cfg.D(t, a, b), mesh, ref, mass)

        # --- momentum -----------------------------------------------------
        Hm = [asm.assemble_elem_dphi_phi(mesh, ref, m) for m in (1, 2)]
        U1k = state.U1.reshape(K, N)
        A_uq, A_uu, A_q, S_q = [], [], [], []
        for m in (1, 2):
            G = asm.assemble_elem_dphi_phi_funcdisc(mesh, ref, Dc, m)
            R = asm.assemble_edge_phi_phi_funcdisc_nu(mesh, ref, Dc, m, I, averaged=True, one_sided=B & ~EQ)
            A_uq.append(BlockSparseMatrix.combine([(1, G), (-1, R)]))
            E = asm.assemble_elem_dphi_phi_funcdisc(mesh, ref, U1k, m)
            P = asm.assemble_edge_nonlinear_u(mesh, ref, U1k, m, I | EUv, averaged=True, one_sided=B & ~EU)
            A_uu.append(BlockSparseMatrix.combine([(1, E), (-1, P)]))
            Qm = asm.assemble_edge_phi_phi_nu(mesh, ref, m, I, averaged=True, one_sided=B & ~EU)
            A_q.append(BlockSparseMatrix.combine([(1, Hm[m - 1]), (-1, Qm)]))
            J_u = asm.assemble_dirichlet_vector(mesh, ref, EU_data, uD, m=m) + state.J_u_int[m - 1]
            S_q.append(-J_u)

        Hc = asm.assemble_elem_dphi_phi(mesh, ref, 1, trial="1d")
        Qc = asm.assemble_edge_h_to_u(mesh, ref, I | EHv, averaged=True, one_sided=B & ~EH)
        A_uh = BlockSparseMatrix.combine([(g, Hc), (-g, Qc)])

        fc = asm.l2_project(lambda a, b: cfg.f(t, a, b), mesh, ref, mass)
        L_u = np.einsum("kij,kj->ki", mass, fc).ravel()
        L_zb = (g * self.slope[mesh.column][:, None] * mass[:, :, 0]).ravel()
        nu1, nu2 = asm.normal_component(mesh, ref, 1), asm.normal_component(mesh, ref, 2)
        q1D = np.broadcast_to(cfg.q1_D(t, ex, ez), ex.shape)
        q2D = np.broadcast_to(cfg.q2_D(t, ex, ez), ex.shape)
        # all momentum edge terms share one integration: jumps, bottom/top/lateral boundary data
        jump_u = 0.5 * lam * (u_in - u_out)
        edge_u = (
            _on((I & V) | EUv, jump_u)
            + _on(Ebot_data, uD * (uD * nu1 + u2D * nu2))
            + _on(EQ, q1D * nu1 + q2D * nu2)
            + _on(EHv, 0.5 * g * hD * nu1)
            + _on(EUv, 0.5 * uD * uD * nu1)
        )
        S_u = L_u - L_zb - asm.edge_vector(mesh, ref, self.all_edges, edge_u) - (state.J_uu_int[0] + state.J_uu_int[1])

        # --- continuity -----------------------------------------------------
        Q_avg = asm.assemble_edge_phi_phi_nu(mesh, ref, 1, I & ~V, averaged=True, one_sided=B & ~EU & ~V)
        P_chk = asm.assemble_edge_height_weighted(
            mesh, mesh1d, ref, state.H, (I & V) | EUv | EHv, averaged=True, one_sided=B & V & ~EU & ~EH
        )
        A_wu = BlockSparseMatrix.combine([(1, Q_avg), (1, P_chk), (-1, Hm[0])])
        A_ww = BlockSparseMatrix.combine([(1, Hm[1]), (-1, asm.assemble_q_up(mesh, ref))])
        jump_h = 0.5 * lam * (h_in - h_out) / hs
        # terms shared by the continuity and free-surface right-hand sides
        edge_hs = (
            _on((I & V) | EHv, jump_h)
            + _on(EUv & ~EHv, 0.5 * uD * h_in * nu1 / hs)
            + _on(EUv & EHv, 0.5 * uD * hD * nu1 / hs)
        )
        edge_w = edge_hs + _on(EHv & ~EUv, 0.5 * u_in * hD * nu1 / hs) + _on(Ebot_data, uD * nu1 + u2D * nu2)
        S_w = asm.edge_vector(mesh, ref, self.all_edges, edge_w) + state.J_u_int[0] + state.J_w_int

        # --- free surface ---------------------------------------------------
        Ub1, Ub2 = asm.compute_depth_integrated_velocity(mesh, state.U1, ref)
        Gbar = asm.assemble_elem_1d_gbar(mesh1d, ref, Ub1, Ub2)
        Pbar = asm.assemble_v0t_1d(
            mesh1d, ref, Ub1, Ub2, self.node_interior | self.node_U | self.node_H, self.node_interior, 0.5
        )
        Pbar_b = asm.assemble_v0t_1d(
            mesh1d, ref, Ub1, Ub2, ~(self.node_interior | self.node_U | self.node_H), np.zeros_like(self.node_U), 1.0
        )
        A_h = BlockSparseMatrix.combine([(1, Gbar), (-1, Pbar), (-1, Pbar_b)])
        ubar_ends = asm.depth_integrated_at(Ub1, Ub2, ref, [0.0, 1.0])
        node = np.stack([np.arange(mesh.n_columns), np.arange(1, mesh.n_columns + 1)], axis=1)
        hD_nodes = np.asarray(cfg.h_D(t, mesh1d.x1[node]), dtype=float) * np.ones(node.shape)
        Jbar_h = asm.assemble_vertex_vector(
            mesh1d, ref, self.node_H & ~self.node_U, ubar_ends * hD_nodes / mesh1d.Hs[node]
        )
        S_h = -asm.edge_vector(mesh, ref, self.all_edges, edge_hs, test="1d") - 0.5 * Jbar_h
        if cfg.f_h is not None:
            S_h = S_h + (mesh1d.lengths[:, None] * asm.l2_project_1d(lambda x: cfg.f_h(t, x), mesh1d, ref)).ravel()

        return SweOperators(
            mass=mass,
            mass_inv=mass_inv,
            mass1d=mesh1d.lengths,
            S_u=S_u,
            A_uh=A_uh,
            A_uu=tuple(A_uu),
            A_uq=tuple(A_uq),
            S_q=tuple(S_q),
            A_q=tuple(A_q),
            A_wu=A_wu,
            A_ww=A_ww,
            S_w=S_w,
            S_h=S_h,
            A_h=A_h,
            parts=dict(lam=lam, L_u=L_u, L_zb=L_zb),
        )

    # -- solves ---------------------------------------------------------------

    def _apply_mass_inv(self, ops, v):
        K, N = ops.mass.shape[:2]
        return np.einsum("kij,kj->ki", ops.mass_inv, v.reshape(K, N)).ravel()

    def solve_diagnostics(self, state: SweState, ops: SweOperators):
        Q = [self._apply_mass_inv(ops, ops.S_q[m] + ops.A_q[m] @ state.U1) for m in (0, 1)]
        rhs = ops.S_w + ops.A_wu @ state.U1
        U2 = solve_vertical(ops.A_ww, rhs, state.mesh)
        return Q[0], Q[1], U2

    def refresh_diagnostics(self, state: SweState, ops: SweOperators | None = None):
        ops = self.assemble(state) if ops is None else ops
        state.Q1, state.Q2, state.U2 = self.solve_diagnostics(state, ops)
        return ops

    def tendencies(self, state: SweState, ops: SweOperators):
        """Time derivatives of U¹ and H (diagnostics must be current)."""
        r = ops.S_u + ops.A_uh @ state.H
        r = r + ops.A_uu[0] @ state.U1 + ops.A_uu[1] @ state.U2
        r = r + ops.A_uq[0] @ state.Q1 + ops.A_uq[1] @ state.Q2
        dU1 = self._apply_mass_inv(ops, r)
        N1 = self.ref.N1
        dH = ((ops.S_h + ops.A_h @ state.H).reshape(-1, N1) / ops.mass1d[:, None]).ravel()
        return dU1, dH

    def step(self, state: SweState, dt: float) -> SweState:
        ops = self.refresh_diagnostics(state)
        dU1, dH = self.tendencies(state, ops)
        U1 = state.U1 + dt * dU1
        H = state.H + dt * dH
        if not (np.all(np.isfinite(U1)) and np.all(np.isfinite(H))):
            raise NumericalFailure(f"non-finite free-flow state at t={state.t + dt:g}")
        mesh, mesh1d = adapt_free_surface(state.mesh, H, self.ref.basis1d)
        return replace(state, U1=U1, H=H, mesh=mesh, mesh1d=mesh1d, t=state.t + dt)


def _on(mask, values):
    return np.where(mask[:, :, None], values, 0.0)


def solve_vertical(A_ww: BlockSparseMatrix, rhs, mesh: Mesh2D) -> np.ndarray:
    """Forward substitution of the block lower-bidiagonal vertical system, bottom layer first."""
    L, Kb = mesh.n_layers, mesh.n_columns
    N = A_ww.block_shape[0]
    diag = np.zeros((mesh.K, N, N))
    below = np.zeros((mesh.K, N, N))
    sel = A_ww.rows == A_ww.cols
    np.add.at(diag, A_ww.rows[sel], A_ww.blocks[sel])
    sub = A_ww.cols == A_ww.rows - 1
    np.add.at(below, A_ww.rows[sub], A_ww.blocks[sub])
    if np.any(~(sel | sub)):
        raise NumericalFailure("vertical system is not block lower-bidiagonal")
    b = np.asarray(rhs, dtype=float).reshape(Kb, L, N)
    diag = diag.reshape(Kb, L, N, N)
    below = below.reshape(Kb, L, N, N)
    x = np.zeros_like(b)
    prev = np.zeros((Kb, N))
    for l in range(L):
        r = b[:, l] - np.einsum("kij,kj->ki", below[:, l], prev)
        try:
            prev = np.linalg.solve(diag[:, l], r[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular vertical velocity system; check the bottom boundary data") from exc
        x[:, l] = prev
    return x.ravel()


def swe_step(solver: SweSolver, state: SweState, dt: float) -> SweState:
    return solver.step(state, dt)


def swe_solve_diagnostics(solver: SweSolver, state: SweState):
    return solver.solve_diagnostics(state, solver.assemble(state))


def swe_assemble_all(solver: SweSolver, state: SweState) -> SweOperators:
    return solver.assemble(state)


__all__ = [
    "DryingError",
    "NumericalFailure",
    "SweConfig",
    "SweOperators",
    "SweSolver",
    "SweState",
    "solve_vertical",
    "swe_assemble_all",
    "swe_set_interface",
    "swe_solve_diagnostics",
    "swe_step",
]
