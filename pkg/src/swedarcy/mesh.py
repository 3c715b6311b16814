"""Trapezoidal column meshes, their 1D projection and free-surface adaptation.

Elements are stored column by column, bottom to top: element ``k`` lies in
column ``k // L`` and layer ``k % L``.  Local edges are 1 bottom, 2 top,
3 right, 4 left; array axes over edges use 0-based positions ``n - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Basis1D, opposite_edge_index  # noqa: F401  (re-exported)
from .transform import GeometryError, mapping_from_vertices

BOUNDARY_KINDS = (
    "land",
    "openSea",
    "river",
    "radiation",
    "top",
    "bottom",
    "dirichlet",
    "neumann",
    "interface",
)
SIDES = ("bottom", "top", "right", "left")  # edge n = 1..4


class DryingError(RuntimeError):
    """The free surface fell onto the layer below (no wetting/drying support)."""


@dataclass(frozen=True, eq=False)
class Mesh2D:
    x1: np.ndarray  # (K̄+1,) column nodes
    z: np.ndarray  # (K̄+1, L+1) layer interface heights at the column nodes
    markers: dict = field(default_factory=lambda: {"bottom": "bottom", "top": "top", "right": "land", "left": "land"})

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if x1.ndim != 1 or len(x1) < 2 or np.any(np.diff(x1) <= 0):
            raise GeometryError("column nodes must be strictly increasing")
        if z.shape[0] != len(x1) or z.ndim != 2 or z.shape[1] < 2:
            raise GeometryError("layer heights must have shape (nodes, layers + 1)")
        if np.any(np.diff(z, axis=1) <= 0):
            raise GeometryError("layer interfaces must increase upwards at every node")
        for side in SIDES:
            if self.markers.get(side) not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind {self.markers.get(side)!r} on side {side}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "markers", dict(self.markers))
        self._build()

    def _build(self):
        Kb, L = self.n_columns, self.n_layers
        c, l = np.divmod(np.arange(Kb * L), L)
        v = np.empty((Kb * L, 4, 2))
        v[:, 0] = np.stack([self.x1[c], self.z[c, l]], -1)
        v[:, 1] = np.stack([self.x1[c + 1], self.z[c + 1, l]], -1)
        v[:, 2] = np.stack([self.x1[c + 1], self.z[c + 1, l + 1]], -1)
        v[:, 3] = np.stack([self.x1[c], self.z[c, l + 1]], -1)
        mapping = mapping_from_vertices(v)

        k = np.arange(Kb * L)
        nb = np.full((Kb * L, 4), -1, dtype=np.int64)
        nb[:, 0] = np.where(l > 0, k - 1, -1)
        nb[:, 1] = np.where(l < L - 1, k + 1, -1)
        nb[:, 2] = np.where(c < Kb - 1, k + L, -1)
        nb[:, 3] = np.where(c > 0, k - L, -1)

        d_bot = v[:, 1] - v[:, 0]
        d_top = v[:, 2] - v[:, 3]
        lengths = np.stack(
            [
                np.hypot(*d_bot.T),
                np.hypot(*d_top.T),
                v[:, 2, 1] - v[:, 1, 1],
                v[:, 3, 1] - v[:, 0, 1],
            ],
            axis=1,
        )
        normals = np.zeros((Kb * L, 4, 2))
        normals[:, 0] = np.stack([d_bot[:, 1], -d_bot[:, 0]], -1) / lengths[:, 0, None]
        normals[:, 1] = np.stack([-d_top[:, 1], d_top[:, 0]], -1) / lengths[:, 1, None]
        normals[:, 2] = (1.0, 0.0)
        normals[:, 3] = (-1.0, 0.0)

        marker = np.full((Kb * L, 4), "interior", dtype=object)
        for n, side in enumerate(SIDES):
            marker[nb[:, n] < 0, n] = self.markers[side]

        for name, val in dict(
            vertices=v, mapping=mapping, neighbor=nb, lengths=lengths, normals=normals,
            column=c, layer=l, marker=marker, cache={},
        ).items():
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_columns(self) -> int:
        return len(self.x1) - 1

    @property
    def n_layers(self) -> int:
        return self.z.shape[1] - 1

    @property
    def K(self) -> int:
        return self.n_columns * self.n_layers

    @property
    def bottom(self) -> np.ndarray:
        return self.z[:, 0]

    @property
    def top(self) -> np.ndarray:
        return self.z[:, -1]

    def cached(self, key, compute):
        """Memoised geometric quantity; valid because the mesh is immutable."""
        if key not in self.cache:
            val = compute()
            for arr in val if isinstance(val, tuple) else (val,):
                arr.setflags(write=False)
            self.cache[key] = val
        return self.cache[key]

    def edge_mask(self, *kinds) -> np.ndarray:
        """Boolean (K, 4) mask of edges whose marker is one of kinds."""
        mask = np.zeros(self.marker.shape, dtype=bool)
        for kind in kinds:
            mask |= self.marker == kind
        return mask

    def boundary_mask(self) -> np.ndarray:
        return self.neighbor < 0

    def area(self) -> float:
        xs = self.x1
        return float(np.sum(0.5 * np.diff(xs) * ((self.top - self.bottom)[:-1] + (self.top - self.bottom)[1:])))

    def with_levels(self, z) -> "Mesh2D":
        return Mesh2D(self.x1, z, self.markers)


def equidistributed_levels(bottom, top, layers: int) -> np.ndarray:
    frac = np.linspace(0.0, 1.0, layers + 1)
    bottom = np.asarray(bottom, dtype=float)
    top = np.asarray(top, dtype=float)
    return bottom[:, None] + (top - bottom)[:, None] * frac[None, :]


def build_column_mesh(x1_partition, layers: int, bottom_profile, top_profile, markers=None) -> Mesh2D:
    """Column mesh with ``layers`` equally spaced layers between two profiles."""
    x1 = np.asarray(x1_partition, dtype=float)
    if layers < 1:
        raise GeometryError("need at least one layer")
    bot = np.broadcast_to(np.asarray(bottom_profile(x1), dtype=float), x1.shape)
    top = np.broadcast_to(np.asarray(top_profile(x1), dtype=float), x1.shape)
    if np.any(top <= bot):
        raise GeometryError("top profile must lie above the bottom profile")
    kw = {} if markers is None else {"markers": markers}
    return Mesh2D(x1, equidistributed_levels(bot, top, layers), **kw)


@dataclass(frozen=True, eq=False)
class Mesh1D:
    x1: np.ndarray  # (K̄+1,)
    column: np.ndarray  # (K,) 1D element of each 2D element
    Hs: np.ndarray  # (K̄+1,) smoothed mesh height at nodes
    markers: dict  # 'left'/'right' -> boundary kind

    @property
    def K(self) -> int:
        return len(self.x1) - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.x1)

    @property
    def markT2DT(self) -> np.ndarray:
        m = np.zeros((len(self.column), self.K), dtype=bool)
        m[np.arange(len(self.column)), self.column] = True
        return m


def project_mesh(mesh: Mesh2D) -> Mesh1D:
    Hs = mesh.top - mesh.bottom
    return Mesh1D(mesh.x1, mesh.column, Hs, {"left": mesh.markers["left"], "right": mesh.markers["right"]})


@dataclass(frozen=True)
class SurfaceGeometry:
    zeta_b: np.ndarray  # bathymetry at 1D nodes
    xi: np.ndarray  # free-surface elevation at 1D nodes

    def __post_init__(self):
        if np.any(np.asarray(self.xi) <= np.asarray(self.zeta_b)):
            raise DryingError("free surface must lie above the bathymetry at every node")


def nodal_heights(H, basis: Basis1D) -> np.ndarray:
    """Continuous nodal values of a 1D DG field: mean of the one-sided traces inside, one-sided at the ends."""
    Hc = np.asarray(H, dtype=float).reshape(-1, basis.size)
    left = Hc @ basis.eval(0.0)
    right = Hc @ basis.eval(1.0)
    nodes = np.empty(len(Hc) + 1)
    nodes[0] = left[0]
    nodes[-1] = right[-1]
    nodes[1:-1] = 0.5 * (right[:-1] + left[1:])
    return nodes


def adapt_free_surface(mesh: Mesh2D, H, basis: Basis1D) -> tuple[Mesh2D, Mesh1D]:
    """Move the surface nodes to bathymetry plus nodal water height and re-layer each column."""
    h_nodes = nodal_heights(H, basis)
    if not np.all(np.isfinite(h_nodes)):
        raise DryingError("non-finite water height")
    bottom = mesh.bottom
    if np.any(h_nodes <= 0) or np.any(bottom + h_nodes <= mesh.z[:, -2]):
        bad = int(np.argmin(bottom + h_nodes - mesh.z[:, -2]))
        raise DryingError(f"free surface dropped onto the layer below at node {bad} (x1={mesh.x1[bad]:g})")
    new = mesh.with_levels(equidistributed_levels(bottom, bottom + h_nodes, mesh.n_layers))
    return new, project_mesh(new)
