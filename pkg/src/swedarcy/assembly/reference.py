"""Mesh-independent reference tensors: basis values at quadrature and edge points."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..basis import Basis1D, Basis2D, default_order, gamma_map, gauss_rule, tensor_rule


class RefBlocks:
    """Basis data on the unit square for one degree and quadrature order.

    Edge arrays are indexed by the 0-based edge position n-1 and quadrature
    point r of the edge parametrisation.
    """

    def __init__(self, p: int, R: int | None = None):
        self.p = p
        self.R = default_order(p) if R is None else R
        self.basis = Basis2D(p)
        self.basis1d = Basis1D(p)
        self.N = self.basis.size
        self.N1 = self.basis1d.size

        q2 = tensor_rule(self.R)
        self.points = q2.points
        self.weights = q2.weights
        self.phi = self.basis.eval(q2.points)  # (Q, N)
        self.dphi = self.basis.grad(q2.points)  # (Q, N, 2)
        self.phi1_q = self.basis1d.eval(q2.points[:, 0])  # (Q, N̄)

        q1 = gauss_rule(self.R)
        self.s = q1.points
        self.ws = q1.weights
        self.phi1 = self.basis1d.eval(q1.points)  # (R, N̄)
        self.dphi1 = self.basis1d.grad(q1.points)

        edge_pts = np.stack([gamma_map(n, q1.points) for n in (1, 2, 3, 4)])  # (4, R, 2)
        self.edge_points = edge_pts
        self.phi_e = self.basis.eval(edge_pts)  # (4, R, N)
        self.phi1_e = self.basis1d.eval(edge_pts[..., 0])  # (4, R, N̄)
        self.phi1_ends = self.basis1d.eval(np.array([0.0, 1.0]))  # (2, N̄)
        # φ_i ψ_j products on each edge, flattened over (i, j): own edge and the opposite edge of ψ
        opp = [1, 0, 3, 2]
        self.edge_outer = {}
        for trial, psi in (("2d", self.phi_e), ("1d", self.phi1_e)):
            own = np.einsum("nri,nrj->nrij", self.phi_e, psi)
            cross = np.einsum("nri,nrj->nrij", self.phi_e, psi[opp])
            self.edge_outer[trial] = (own.reshape(4, self.R, -1), cross.reshape(4, self.R, -1))

        # split mass matrix: det J = det_const + det_lin * x̂1
        wphi = self.weights[:, None] * self.phi
        self.mass_hat = (wphi.T @ self.phi, (wphi * self.points[:, :1]).T @ self.phi)

        for arr in vars(self).values():
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)
        for arr in self.mass_hat + sum(self.edge_outer.values(), ()):
            arr.setflags(write=False)

    def scaled_gradients(self, mapping) -> tuple[np.ndarray, np.ndarray]:
        """det J times the physical basis gradients at the quadrature points, each (K, Q, N)."""
        x1 = self.points[:, 0][None, :, None]
        x2 = self.points[:, 1][None, :, None]
        g1 = self.dphi[None, :, :, 0]
        g2 = self.dphi[None, :, :, 1]
        hl = mapping.left_height[:, None, None]
        c = mapping.height_change[:, None, None]
        b = mapping.bottom_rise[:, None, None]
        w = mapping.width[:, None, None]
        d1 = (hl + c * x1) * g1 - (b + c * x2) * g2
        d2 = w * g2
        return d1, d2

    def det(self, mapping) -> np.ndarray:
        """det J at the quadrature points, (K, Q)."""
        return mapping.det_const[:, None] + mapping.det_lin[:, None] * self.points[None, :, 0]


@lru_cache(maxsize=None)
def ref_blocks(p: int, R: int | None = None) -> RefBlocks:
    return RefBlocks(p, R)
