"""Two-way exchange between the free-flow and subsurface problems.

The free-flow solver runs ``n_substep`` explicit steps per implicit
subsurface step.  Across the interface

* the subsurface receives the time-averaged dynamic head ξ + (u¹)²/(2g)
  as Dirichlet data on its ``interface`` edges;
* the free flow receives the velocity D̃ q̃ of the latest subsurface state
  as Dirichlet data on its ``interface`` edges.

Interface edges are the bottom edges of the lowest free-flow layer and the top
edges of the highest subsurface layer; both meshes share their column nodes,
so edge quadrature points match one to one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import assembly as asm
from .darcy import DarcySolver, DarcyState
from .swe import SweSolver, SweState

log = logging.getLogger(__name__)

BOTTOM, TOP = 0, 1  # edge positions


class CouplingError(ValueError):
    """Meshes or settings that cannot be coupled."""


@dataclass(frozen=True)
class CouplingConfig:
    """``velocity_scale`` multiplies D̃ q̃ before it enters the free flow (the storativity factor, 1 by default)."""

    n_substep: int = 1
    velocity_scale: float = 1.0
    mass_tolerance: float = 1e-8

    def __post_init__(self):
        if int(self.n_substep) != self.n_substep or self.n_substep < 1:
            raise CouplingError("n_substep must be a positive integer")


@dataclass
class HeadAccumulator:
    """Trapezoidal time average of the dynamic head at the interface quadrature points, (K̄, R)."""

    n_substep: int
    shape: tuple
    total: np.ndarray = None
    calls: int = 0

    def __post_init__(self):
        self.reset()

    def reset(self):
        self.total = np.zeros(self.shape)
        self.calls = 0

    def weight(self, index: int) -> float:
        """Weight of the head after sub-step ``index`` (0 is the start of the macro step)."""
        n = self.n_substep
        return 0.5 / n if index in (0, n) else 1.0 / n

    def add(self, head, weight: float | None = None):
        if self.calls > self.n_substep:
            raise CouplingError(f"head accumulated more than n_substep + 1 = {self.n_substep + 1} times")
        w = self.weight(self.calls) if weight is None else weight
        self.total = self.total + w * np.asarray(head, dtype=float)
        self.calls += 1

    @property
    def complete(self) -> bool:
        return self.calls == self.n_substep + 1

    @property
    def mean(self) -> np.ndarray:
        if not self.complete:
            raise CouplingError(f"head average incomplete: {self.calls} of {self.n_substep + 1} samples")
        return self.total


def accumulate_head(acc: HeadAccumulator, h, u1, zeta_b, g: float, weight: float | None = None):
    """Add the dynamic head h + ζ_b + (u¹)²/(2g) given at the interface points."""
    acc.add(dynamic_head(h, u1, zeta_b, g), weight)


def dynamic_head(h, u1, zeta_b, g: float) -> np.ndarray:
    return np.asarray(h) + np.asarray(zeta_b) + np.asarray(u1) ** 2 / (2.0 * g)


def _interface_elements(swe_mesh, darcy_mesh):
    if swe_mesh.n_columns != darcy_mesh.n_columns or not np.allclose(swe_mesh.x1, darcy_mesh.x1):
        raise CouplingError("free-flow and subsurface meshes must share their column nodes")
    if swe_mesh.markers["bottom"] != "interface" or darcy_mesh.markers["top"] != "interface":
        raise CouplingError("mark the free-flow bottom and the subsurface top as 'interface'")
    cols = np.arange(swe_mesh.n_columns)
    return cols * swe_mesh.n_layers, cols * darcy_mesh.n_layers + darcy_mesh.n_layers - 1


def interface_head(swe: SweSolver, state: SweState) -> np.ndarray:
    """Dynamic head at the quadrature points of the free-flow interface edges, (K̄, R)."""
    mesh, ref = state.mesh, swe.ref
    k = np.arange(mesh.n_columns) * mesh.n_layers
    h = asm.edge_traces_1d(state.H, mesh, ref)[k, BOTTOM]
    u1 = asm.edge_traces(state.U1, mesh, ref)[k, BOTTOM]
    zeta = asm.edge_points(mesh, ref)[k, BOTTOM, :, 1]
    return dynamic_head(h, u1, zeta, swe.config.g)


def darcy_interface_vectors(head_mean, darcy: DarcySolver):
    """(J̃¹_int, J̃²_int, K̃_int) for averaged head values at the subsurface interface points."""
    mesh, ref = darcy.mesh, darcy.ref
    head_mean = np.asarray(head_mean, dtype=float)
    if head_mean.shape != (mesh.n_columns, ref.R):
        raise CouplingError(f"head values of shape {head_mean.shape}, expected {(mesh.n_columns, ref.R)}")
    mask = mesh.edge_mask("interface")
    kt = np.arange(mesh.n_columns) * mesh.n_layers + mesh.n_layers - 1
    if not np.array_equal(np.flatnonzero(mask[:, TOP]), kt) or mask[:, [BOTTOM, 2, 3]].any():
        raise CouplingError("subsurface interface edges must be exactly the top edges of the top layer")
    data = np.zeros((mesh.K, 4, ref.R))
    data[kt, TOP] = head_mean
    J1 = asm.assemble_dirichlet_vector(mesh, ref, mask, data, m=1)
    J2 = asm.assemble_dirichlet_vector(mesh, ref, mask, data, m=2)
    K = asm.assemble_dirichlet_vector(mesh, ref, mask, data / mesh.lengths[:, :, None])
    return J1, J2, K


def interface_velocity(darcy: DarcySolver, dstate: DarcyState, scale: float = 1.0) -> np.ndarray:
    """scale · D̃ q̃ at the subsurface interface points, (2, K̄, R)."""
    mesh, ref = darcy.mesh, darcy.ref
    kt = np.arange(mesh.n_columns) * mesh.n_layers + mesh.n_layers - 1
    q = np.stack([asm.edge_traces(Q, mesh, ref)[kt, TOP] for Q in (dstate.Q1, dstate.Q2)], axis=-1)
    D = asm.edge_traces(darcy.operators(dstate.t).D, mesh, ref)[kt, TOP]  # (K̄, R, 2, 2)
    return scale * np.moveaxis(np.einsum("crij,crj->cri", D, q), -1, 0)


def swe_interface_vectors(swe: SweSolver, state: SweState, velocity):
    """(J¹_u, J²_u, J_w, J¹_uu, J²_uu) on the free-flow interface edges for velocity data (2, K̄, R)."""
    mesh, ref = state.mesh, swe.ref
    velocity = np.asarray(velocity, dtype=float)
    if velocity.shape != (2, mesh.n_columns, ref.R):
        raise CouplingError(f"velocity data of shape {velocity.shape}, expected {(2, mesh.n_columns, ref.R)}")
    mask = mesh.edge_mask("interface")
    kb = np.arange(mesh.n_columns) * mesh.n_layers
    if not np.array_equal(np.flatnonzero(mask[:, BOTTOM]), kb) or mask[:, 1:].any():
        raise CouplingError("free-flow interface edges must be exactly the bottom edges of the lowest layer")
    u = np.zeros((2, mesh.K, 4, ref.R))
    u[:, kb, BOTTOM] = velocity
    J_u = [asm.assemble_dirichlet_vector(mesh, ref, mask, u[0], m=m) for m in (1, 2)]
    J_w = asm.assemble_dirichlet_vector(mesh, ref, mask, u[1], m=2)
    J_uu = [asm.assemble_dirichlet_vector(mesh, ref, mask, u[0] * u[m - 1], m=m) for m in (1, 2)]
    return J_u[0], J_u[1], J_w, J_uu[0], J_uu[1]


def interface_flux(mesh, ref, mask_pos: int, velocity_normal) -> float:
    """∫ over interface edges of the given normal velocity, (K̄, R) values."""
    k = np.flatnonzero(mesh.edge_mask("interface")[:, mask_pos])
    return float(np.sum(mesh.lengths[k, mask_pos][:, None] * ref.ws[None, :] * velocity_normal))


@dataclass
class MacroStep:
    acc: HeadAccumulator
    velocity: np.ndarray
    swe: SweState
    inflow: float = 0.0


@dataclass
class CoupledState:
    swe: SweState
    darcy: DarcyState
    ledger: list = field(default_factory=list)  # (t, subsurface outflow, free-flow inflow) per macro step

    @property
    def t(self) -> float:
        return self.darcy.t


class CoupledSolver:
    """Sub-stepped, non-iterative coupling of a free-flow and a subsurface solver."""

    def __init__(self, swe: SweSolver, darcy: DarcySolver, config: CouplingConfig, swe_mesh):
        if swe.p != darcy.p:
            raise CouplingError("both sub-problems need the same polynomial degree for point matching")
        _interface_elements(swe_mesh, darcy.mesh)
        self.swe = swe
        self.darcy = darcy
        self.config = config

    def initial_state(self, swe_mesh, t0: float = 0.0) -> CoupledState:
        s = self.swe.initial_state(swe_mesh, t0)
        d = self.darcy.initial_state(t0)
        # initial flux sees the current head as interface data
        d.set_interface(*darcy_interface_vectors(interface_head(self.swe, s), self.darcy))
        self.darcy.update_flux(d)
        return CoupledState(s, d)

    def begin(self, state: CoupledState) -> "MacroStep":
        """Start a subsurface step: fresh accumulator, free-flow slots from the latest subsurface flux."""
        acc = HeadAccumulator(self.config.n_substep, (state.swe.mesh.n_columns, self.swe.ref.R))
        velocity = interface_velocity(self.darcy, state.darcy, self.config.velocity_scale)
        s = replace(state.swe)
        s.set_interface(*swe_interface_vectors(self.swe, s, velocity))
        acc.add(interface_head(self.swe, s))
        return MacroStep(acc, velocity, s)

    def substep(self, macro: "MacroStep", dt_sub: float) -> None:
        # bathymetry edges never move, so the slots stay valid across sub-steps
        macro.inflow += dt_sub * self._swe_inflow(macro.swe, macro.velocity)
        macro.swe = self.swe.step(macro.swe, dt_sub)
        macro.acc.add(interface_head(self.swe, macro.swe))

    def finish(self, state: CoupledState, macro: "MacroStep", dt_sub: float) -> CoupledState:
        """Subsurface step with the averaged head; both problems end at the same time."""
        d = replace(state.darcy)
        d.set_interface(*darcy_interface_vectors(macro.acc.mean, self.darcy))
        d = self.darcy.step(d, self.config.n_substep * dt_sub)
        outflow = self.config.n_substep * dt_sub * self._darcy_outflow(d)
        ledger = state.ledger + [(d.t, outflow, macro.inflow)]
        if len(ledger) > 1:
            lag = ledger[-2][1] - macro.inflow
            if abs(lag) > self.config.mass_tolerance * max(1.0, abs(macro.inflow)):
                log.warning("interface mass lag %.3e at t=%g exceeds tolerance", lag, d.t)
        return CoupledState(macro.swe, d, ledger)

    def step(self, state: CoupledState, dt_sub: float) -> CoupledState:
        """Advance both problems by one subsurface step n_substep · dt_sub."""
        macro = self.begin(state)
        for _ in range(self.config.n_substep):
            self.substep(macro, dt_sub)
        return self.finish(state, macro, dt_sub)

    @staticmethod
    def mass_lag(state: CoupledState) -> np.ndarray:
        """Subsurface outflow of each step minus the free-flow inflow of the next."""
        led = np.array(state.ledger, dtype=float).reshape(-1, 3)
        return led[:-1, 1] - led[1:, 2]

    def _swe_inflow(self, s: SweState, velocity) -> float:
        mesh = s.mesh
        kb = np.arange(mesh.n_columns) * mesh.n_layers
        nu = mesh.normals[kb, BOTTOM]  # outward from the free flow, (K̄, 2)
        un = -(velocity[0] * nu[:, None, 0] + velocity[1] * nu[:, None, 1])
        return interface_flux(mesh, self.swe.ref, BOTTOM, un)

    def _darcy_outflow(self, d: DarcyState) -> float:
        velocity = interface_velocity(self.darcy, d, self.config.velocity_scale)
        mesh = self.darcy.mesh
        kt = np.arange(mesh.n_columns) * mesh.n_layers + mesh.n_layers - 1
        nu = mesh.normals[kt, TOP]
        un = velocity[0] * nu[:, None, 0] + velocity[1] * nu[:, None, 1]
        return interface_flux(mesh, self.darcy.ref, TOP, un)


def coupled_step(solver: CoupledSolver, state: CoupledState, dt_sub: float) -> CoupledState:
    return solver.step(state, dt_sub)
