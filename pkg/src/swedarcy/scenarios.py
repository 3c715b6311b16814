"""Built-in problem setups: the manufactured convergence study, the channel showcase and affine user setups."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import CoupledSolver, CouplingConfig
from .darcy import DarcyConfig, DarcySolver
from .manufactured import DEPTH, LENGTH, T_END, Fields, coupled_solution, isotropic
from .mesh import Mesh2D, build_column_mesh, equidistributed_levels
from .swe import SweConfig, SweSolver


@dataclass
class Setup:
    """Solvers and time grid of one simulation; ``dt`` is the free-flow step, ``dt_sub`` the subsurface step."""

    kind: str  # darcy | swe | coupled
    p: int
    t_end: float
    swe: SweSolver | None = None
    swe_mesh: Mesh2D | None = None
    darcy: DarcySolver | None = None
    coupled: CoupledSolver | None = None
    dt: float | None = None
    dt_sub: float | None = None
    exact: Fields | None = None
    level: int | None = None

    @property
    def n_substep(self) -> int:
        return self.coupled.config.n_substep if self.coupled else 1


# ---- manufactured solution -------------------------------------------------


def manufactured_dt(p: int, j: int) -> tuple[float, float]:
    """(free-flow Δt, subsurface Δt̃) on refinement level j."""
    scale = 2.0 ** (-p * (j + 1))
    return 4e-6 * scale, 4e-5 * scale


def manufactured_meshes(j: int, kind: str):
    fs = coupled_solution()
    x1 = np.linspace(0.0, LENGTH, 2 ** (j + 1) + 1)
    coupled = kind == "coupled"
    swe_mesh = build_column_mesh(
        x1, 2**j, fs.zeta_b, lambda x: fs.xi(0.0, x),
        markers=dict(bottom="interface" if coupled else "bottom", top="top", left="river", right="river"),
    )
    darcy_mesh = build_column_mesh(
        x1, 2**j, lambda x: np.full_like(x, DEPTH), fs.zeta_b,
        markers=dict(bottom="dirichlet", top="interface" if coupled else "dirichlet", left="dirichlet", right="dirichlet"),
    )
    return swe_mesh, darcy_mesh


def manufactured_swe_config(fs: Fields) -> SweConfig:
    return SweConfig(
        g=fs.g, D=isotropic(fs.D), zeta_b=fs.zeta_b, h0=lambda x: fs.h(0.0, x), u10=lambda a, b: fs.u1(0.0, a, b),
        f=fs.f, f_h=fs.f_h, h_D=fs.h, u1_D=fs.u1, u2_D=fs.u2, q1_D=fs.q1, q2_D=fs.q2,
    )


def manufactured_darcy_config(fs: Fields, eta: float = 1.0) -> DarcyConfig:
    return DarcyConfig(D=isotropic(fs.D_sub), h0=lambda a, b: fs.h_sub(0.0, a, b), f=fs.f_sub, h_D=fs.h_sub, eta=eta)


def manufactured_setup(kind: str, p: int, j: int, eta: float = 1.0, n_substep: int = 10, t_end: float = T_END) -> Setup:
    fs = coupled_solution()
    dt, dt_sub = manufactured_dt(p, j)
    swe_mesh, darcy_mesh = manufactured_meshes(j, kind)
    setup = Setup(kind=kind, p=p, t_end=t_end, dt=dt, dt_sub=dt_sub, exact=fs, level=j)
    if kind in ("swe", "coupled"):
        setup.swe = SweSolver(manufactured_swe_config(fs), swe_mesh, p)
        setup.swe_mesh = swe_mesh
    if kind in ("darcy", "coupled"):
        setup.darcy = DarcySolver(manufactured_darcy_config(fs, eta), darcy_mesh, p)
    if kind == "coupled":
        setup.dt_sub = n_substep * dt
        setup.coupled = CoupledSolver(setup.swe, setup.darcy, CouplingConfig(n_substep=n_substep), swe_mesh)
    elif kind not in ("swe", "darcy"):
        raise ValueError(f"unknown problem kind {kind!r}")
    return setup


# ---- channel showcase ------------------------------------------------------

SHOWCASE_SURFACE = 5.0
SHOWCASE_LAYER = (-8.0, -7.0)


def showcase_bathymetry(x1):
    x1 = np.asarray(x1, dtype=float)
    bump = np.cos((x1 - 35.0) / 20.0 * np.pi) + 1.0
    return np.where((x1 >= 15.0) & (x1 <= 95.0), bump, 0.0)


def showcase_river_velocity(t, x1, x2):
    return np.log(1.0 + (np.e - 1.0) * np.asarray(x2) / SHOWCASE_SURFACE) + 0.0 * np.asarray(x1)


def showcase_free_flow_diffusion(t, x1, x2):
    shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
    out = np.zeros(shape + (2, 2))
    out[..., 1, 1] = 0.08
    return out


def showcase_conductivity(t, x1, x2):
    x2 = np.broadcast_to(np.asarray(x2, dtype=float), np.broadcast(np.asarray(x1), np.asarray(x2)).shape)
    low, high = SHOWCASE_LAYER
    d = np.where((x2 >= low) & (x2 <= high), 1e-4, 1e-3)
    out = np.zeros(x2.shape + (2, 2))
    out[..., 0, 0] = out[..., 1, 1] = d
    return out


def showcase_subsurface_levels(bottom_depth: float, zeta_b, layers: int) -> np.ndarray:
    """Layer heights with element boundaries at both faces of the low-conductivity layer."""
    low, high = SHOWCASE_LAYER
    if layers < 3:
        raise ValueError("the showcase subsurface needs at least 3 layers")
    above = max(1, (layers - 1) // 2)
    below = layers - 1 - above
    zeta_b = np.asarray(zeta_b, dtype=float)
    lower = np.linspace(bottom_depth, low, below + 1)
    z = np.empty((len(zeta_b), layers + 1))
    z[:, : below + 1] = lower
    z[:, below + 1 :] = equidistributed_levels(np.full_like(zeta_b, high), zeta_b, above)
    return z


def showcase_setup(
    t_end: float = 30000.0, columns: int = 42, layers: int = 8, p: int = 1, dt_sub: float = 0.1, n_substep: int = 5,
    g: float = 10.0, eta: float = 1.0,
) -> Setup:
    x1 = np.linspace(0.0, LENGTH, columns + 1)
    zeta = showcase_bathymetry(x1)
    swe_mesh = build_column_mesh(
        x1, layers, showcase_bathymetry, lambda x: np.full_like(x, SHOWCASE_SURFACE),
        markers=dict(bottom="interface", top="top", left="river", right="openSea"),
    )
    darcy_mesh = Mesh2D(
        x1, showcase_subsurface_levels(DEPTH, zeta, layers),
        dict(bottom="neumann", top="interface", left="neumann", right="neumann"),
    )
    swe_cfg = SweConfig(
        g=g,
        D=showcase_free_flow_diffusion,
        zeta_b=showcase_bathymetry,
        h0=lambda x: SHOWCASE_SURFACE - showcase_bathymetry(x),
        u10=lambda a, b: np.zeros(np.broadcast(a, b).shape),
        h_D=lambda t, x: np.full(np.shape(x), SHOWCASE_SURFACE),
        u1_D=showcase_river_velocity,
    )
    darcy_cfg = DarcyConfig(D=showcase_conductivity, h0=lambda a, b: np.full(np.broadcast(a, b).shape, SHOWCASE_SURFACE), eta=eta)
    swe = SweSolver(swe_cfg, swe_mesh, p)
    darcy = DarcySolver(darcy_cfg, darcy_mesh, p)
    coupled = CoupledSolver(swe, darcy, CouplingConfig(n_substep=n_substep), swe_mesh)
    return Setup(
        kind="coupled", p=p, t_end=t_end, swe=swe, swe_mesh=swe_mesh, darcy=darcy, coupled=coupled,
        dt=dt_sub / n_substep, dt_sub=dt_sub,
    )


# ---- affine user setups ----------------------------------------------------


def _tensor(d11: float, d22: float):
    def tensor(t, x1, x2):
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        out = np.zeros(shape + (2, 2))
        out[..., 0, 0], out[..., 1, 1] = d11, d22
        return out

    return tensor


def custom_setup(
    problem, kind: str, p: int, columns: int, layers: int, t_end: float, dt: float, n_substep: int = 1, eta: float = 1.0
) -> Setup:
    """Flat-bottomed channel over an aquifer with constant or affine data.

    ``problem`` is a :class:`~swedarcy.config.CustomProblem`.  Without coupling
    the free flow sits on an impermeable bed and the subsurface has its head
    prescribed on top.
    """
    if kind not in ("swe", "darcy", "coupled"):
        raise ValueError(f"unknown problem kind {kind!r}")
    pr = problem
    x1 = np.linspace(0.0, pr.length, columns + 1)

    def bathymetry(x):
        return pr.bathymetry(0.0, x)

    coupled = kind == "coupled"
    setup = Setup(kind=kind, p=p, t_end=t_end, dt=dt, dt_sub=dt * (n_substep if coupled else 1))
    swe_mesh = build_column_mesh(
        x1, layers, bathymetry, lambda x: np.full_like(x, pr.surface),
        markers=dict(bottom="interface" if coupled else "bottom", top="top", left=pr.left, right=pr.right),
    )
    if kind in ("swe", "coupled"):
        cfg = SweConfig(
            g=pr.g,
            D=_tensor(*pr.free_flow_diffusion),
            zeta_b=bathymetry,
            h0=lambda x: pr.surface - bathymetry(x),
            u10=lambda a, b: np.zeros(np.broadcast(a, b).shape),
            h_D=lambda t, x: pr.surface - bathymetry(x),
            u1_D=pr.inflow_velocity,
        )
        setup.swe, setup.swe_mesh = SweSolver(cfg, swe_mesh, p), swe_mesh
    if kind in ("darcy", "coupled"):
        sides = pr.subsurface_sides
        darcy_mesh = build_column_mesh(
            x1, layers, lambda x: np.full_like(x, pr.depth), bathymetry,
            markers=dict(bottom="neumann", top="interface" if coupled else "dirichlet", left=sides, right=sides),
        )

        def head(t, a, b):
            return np.full(np.broadcast(a, b).shape, pr.subsurface_head)

        cfg = DarcyConfig(D=isotropic(pr.conductivity), h0=lambda a, b: head(0.0, a, b), h_D=head, eta=eta)
        setup.darcy = DarcySolver(cfg, darcy_mesh, p)
    if coupled:
        setup.coupled = CoupledSolver(setup.swe, setup.darcy, CouplingConfig(n_substep=n_substep), swe_mesh)
    return setup
