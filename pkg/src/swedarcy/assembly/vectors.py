"""Lax–Friedrichs eigenvalue, jump vectors and boundary-data vectors."""
from __future__ import annotations

import numpy as np

from ..mesh import DryingError, Mesh1D, Mesh2D
from .edge import edge_vector, normal_component
from .reference import RefBlocks


def compute_lambda(h_in, h_out, u_in, u_out, g: float) -> np.ndarray:
    """Largest eigenvalue magnitude of the flux Jacobian from averaged traces."""
    h_avg = 0.5 * (np.asarray(h_in) + np.asarray(h_out))
    u_avg = 0.5 * (np.asarray(u_in) + np.asarray(u_out))
    if np.any(h_avg < 0):
        raise DryingError("negative average water height in the eigenvalue estimate")
    return 1.5 * np.abs(u_avg) + 0.5 * np.sqrt(u_avg**2 + 4.0 * g * h_avg)


def assemble_jump_vectors(mesh: Mesh2D, ref: RefBlocks, mask, lam, v_in, v_out, Hs=None, test: str = "2d") -> np.ndarray:
    """∫_E φ_i ½|λ| (v⁻ − v⁺) [/H_s] over the masked edges.

    ``v_out`` already holds boundary data on Dirichlet edges.  With ``test='1d'``
    the column basis is used and element edges are summed per column.
    """
    vals = 0.5 * lam * (v_in - v_out)
    if Hs is not None:
        vals = vals / Hs
    return edge_vector(mesh, ref, mask, vals, test=test)


def assemble_dirichlet_vector(mesh: Mesh2D, ref: RefBlocks, mask, data, m: int | None = None, Hs=None, test: str = "2d") -> np.ndarray:
    """∫_E φ_i w_D (ν^m) (1/H_s) over the masked edges; ``data`` holds w_D at the edge quadrature points."""
    vals = np.broadcast_to(np.asarray(data, dtype=float), (mesh.K, 4, ref.R))
    if m is not None:
        vals = vals * normal_component(mesh, ref, m)
    if Hs is not None:
        vals = vals / Hs
    return edge_vector(mesh, ref, mask, vals, test=test)


def assemble_vertex_vector(mesh1d: Mesh1D, ref: RefBlocks, node_mask, values) -> np.ndarray:
    """Σ over masked endpoints of ν φ̄_i(a) · value(a) for each 1D element.

    node_mask and values are (K̄, 2) over (left, right) endpoints.
    """
    ends = ref.phi1_ends
    nu = np.array([-1.0, 1.0])
    w = np.where(node_mask, values, 0.0) * nu[None, :]
    return (w @ ends).ravel()
