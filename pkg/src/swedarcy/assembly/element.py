"""Element integrals, projections and field evaluation."""
from __future__ import annotations

import numpy as np

from ..linalg import BlockSparseMatrix, kron_block_sum
from ..mesh import Mesh1D, Mesh2D
from ..transform import map_point
from .reference import RefBlocks


def quadrature_points(mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    """Physical coordinates of the element quadrature points, (K, Q, 2)."""
    return mesh.cached(("points", ref.p, ref.R), lambda: map_point(mesh.mapping, ref.points))


def scaled_gradients(mesh: Mesh2D, ref: RefBlocks):
    return mesh.cached(("grads", ref.p, ref.R), lambda: ref.scaled_gradients(mesh.mapping))


def evaluate(coeffs, ref: RefBlocks) -> np.ndarray:
    """DG field at element quadrature points, (K, Q) (or (K, Q, ...) for tensor coefficients)."""
    c = np.asarray(coeffs, dtype=float)
    c = c.reshape((-1, ref.N) + c.shape[2:]) if c.ndim > 1 else c.reshape(-1, ref.N)
    tail = c.shape[2:]
    out = ref.phi @ c.reshape(c.shape[0], ref.N, -1)
    return out.reshape(out.shape[:2] + tail)


def assemble_mass(mesh: Mesh2D, ref: RefBlocks) -> BlockSparseMatrix:
    m = mesh.mapping
    return kron_block_sum([m.det_const, m.det_lin], list(ref.mass_hat))


def mass_blocks(mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    def compute():
        m = mesh.mapping
        return m.det_const[:, None, None] * ref.mass_hat[0] + m.det_lin[:, None, None] * ref.mass_hat[1]

    return mesh.cached(("mass", ref.p, ref.R), compute)


def assemble_mass_1d(mesh1d: Mesh1D, ref: RefBlocks) -> BlockSparseMatrix:
    return kron_block_sum([mesh1d.lengths], [np.eye(ref.N1)])


def assemble_elem_dphi_phi(mesh: Mesh2D, ref: RefBlocks, m: int, trial: str = "2d") -> BlockSparseMatrix:
    """∫ ∂_{x^m} φ_i φ_j over each element; ``trial='1d'`` pairs with the column basis (Ȟ for m=1)."""
    d = scaled_gradients(mesh, ref)[m - 1]
    right = ref.phi if trial == "2d" else ref.phi1_q
    blocks = np.matmul(np.swapaxes(d * ref.weights[None, :, None], 1, 2), right)
    if trial == "2d":
        return BlockSparseMatrix.block_diagonal(blocks)
    K = mesh.K
    return BlockSparseMatrix((K * ref.N, mesh.n_columns * ref.N1), (ref.N, ref.N1), np.arange(K), mesh.column, blocks)


def _weighted_dphi_phi(d, weights_kq, ref):
    return np.matmul(np.swapaxes(d * (weights_kq * ref.weights[None, :])[..., None], 1, 2), ref.phi)


def assemble_elem_dphi_phi_funcdisc(mesh: Mesh2D, ref: RefBlocks, coeff, m: int) -> BlockSparseMatrix:
    """Triple-product matrix with a DG coefficient.

    A scalar coefficient c (shape (K, N)) gives ∫ ∂_{x^m}φ_i c φ_j  (E^m with c = u¹).
    A tensor coefficient D (shape (K, N, 2, 2)) gives Σ_r ∫ ∂_{x^r}φ_i D^{rm} φ_j  (G^m).
    """
    coeff = np.asarray(coeff, dtype=float)
    d = scaled_gradients(mesh, ref)
    if coeff.ndim == 2:
        blocks = _weighted_dphi_phi(d[m - 1], evaluate(coeff, ref), ref)
    else:
        vals = evaluate(coeff, ref)  # (K, Q, 2, 2)
        blocks = sum(_weighted_dphi_phi(d[r], vals[:, :, r, m - 1], ref) for r in range(2))
    return BlockSparseMatrix.block_diagonal(blocks)


def compute_depth_integrated_velocity(mesh: Mesh2D, U1, ref: RefBlocks) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (K̄, N̄) of the constant and x̂¹-linear parts of the depth-integrated u¹."""
    U = np.asarray(U1, dtype=float).reshape(mesh.K, ref.N)
    j = np.arange(ref.N1) ** 2  # 0-based position of phi_m(x̂1) * phi_1(x̂2)
    first = U[:, j]
    Kb = mesh.n_columns
    Ubar1 = np.zeros((Kb, ref.N1))
    Ubar2 = np.zeros((Kb, ref.N1))
    np.add.at(Ubar1, mesh.column, first * mesh.mapping.left_height[:, None])
    np.add.at(Ubar2, mesh.column, first * mesh.mapping.height_change[:, None])
    return Ubar1, Ubar2


def depth_integrated_at(Ubar1, Ubar2, ref: RefBlocks, xhat) -> np.ndarray:
    """ū at reference points x̂ of every column, (K̄, len(xhat))."""
    xhat = np.atleast_1d(np.asarray(xhat, dtype=float))
    phi = ref.basis1d.eval(xhat)
    return Ubar1 @ phi.T + (Ubar2 @ phi.T) * xhat[None, :]


def assemble_elem_1d_gbar(mesh1d: Mesh1D, ref: RefBlocks, Ubar1, Ubar2) -> BlockSparseMatrix:
    """∫ ∂_{x¹}φ̄_i ū φ̄_j / H_s over each 1D element."""
    s = ref.s
    hs = mesh1d.Hs[:-1, None] + (mesh1d.Hs[1:] - mesh1d.Hs[:-1])[:, None] * s[None, :]
    ubar = depth_integrated_at(Ubar1, Ubar2, ref, s)
    blocks = np.einsum("ri,kr,rj->kij", ref.dphi1, ref.ws[None, :] * ubar / hs, ref.phi1)
    return BlockSparseMatrix.block_diagonal(blocks)


def l2_project(fn, mesh: Mesh2D, ref: RefBlocks, mass=None) -> np.ndarray:
    """L2 projection of fn(x1, x2) into the broken polynomial space; returns (K, N) or (K, N, ...)."""
    pts = quadrature_points(mesh, ref)
    vals = np.asarray(fn(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2] + vals.shape[2:])
    det = ref.det(mesh.mapping)
    tail = vals.shape[2:]
    wq = (det * ref.weights[None, :]).reshape(det.shape + (1,) * len(tail))
    rhs = (ref.phi.T @ (vals * wq).reshape(mesh.K, det.shape[1], -1)).reshape((mesh.K, ref.N) + tail)
    M = mass_blocks(mesh, ref) if mass is None else mass
    if rhs.ndim == 2:
        return np.linalg.solve(M, rhs[..., None])[..., 0]
    shp = rhs.shape
    flat = rhs.reshape(shp[0], shp[1], -1)
    return np.linalg.solve(M, flat).reshape(shp)


def l2_project_1d(fn, mesh1d: Mesh1D, ref: RefBlocks) -> np.ndarray:
    """L2 projection of fn(x1) on the 1D mesh, (K̄, N̄)."""
    x = mesh1d.x1[:-1, None] + mesh1d.lengths[:, None] * ref.s[None, :]
    vals = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)
    return np.einsum("kr,r,ri->ki", vals, ref.ws, ref.phi1)


def assemble_rhs(mesh: Mesh2D, ref: RefBlocks, coeffs) -> np.ndarray:
    """∫ φ_i f_Δ for a projected source with coefficients (K, N): M times the coefficients."""
    return np.einsum("kij,kj->ki", mass_blocks(mesh, ref), np.asarray(coeffs).reshape(mesh.K, ref.N)).ravel()
