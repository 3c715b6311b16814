"""Edge integrals: traces, generic edge matrices/vectors and the named edge operators.

Every edge operator is an instance of two generic forms evaluated with the
edge quadrature of the reference square:

    diagonal block   Σ_r ω_r |E| w⁻(r) φ_i(γ_n(s_r)) ψ_j(γ_n(s_r))
    neighbour block  Σ_r ω_r |E| w⁺(r) φ_i(γ_n(s_r)) ψ⁺_j(γ_{n⁺}(s_r))

where ψ is either the 2D basis or the column (1D) basis and w± are pointwise
weights carrying normals, averaging factors and coefficient traces.
"""
from __future__ import annotations

import numpy as np

from ..linalg import BlockSparseMatrix
from ..mesh import Mesh1D, Mesh2D
from ..transform import map_point
from .element import depth_integrated_at
from .reference import RefBlocks

OPP = np.array([1, 0, 3, 2])  # 0-based opposite edge positions
VERTICAL = np.array([False, False, True, True])


def edge_points(mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    """Physical coordinates of edge quadrature points, (K, 4, R, 2)."""
    return mesh.cached(
        ("edge_points", ref.p, ref.R),
        lambda: np.stack([map_point(mesh.mapping, ref.edge_points[n]) for n in range(4)], axis=1),
    )


def edge_traces(coeffs, mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    """Interior traces of a 2D DG field at edge quadrature points, (K, 4, R) (or trailing tensor axes)."""
    c = np.asarray(coeffs, dtype=float)
    c = c.reshape((mesh.K, ref.N) + c.shape[2:]) if c.ndim > 2 else c.reshape(mesh.K, ref.N)
    tail = c.shape[2:]
    out = ref.phi_e.reshape(4 * ref.R, ref.N) @ c.reshape(mesh.K, ref.N, -1)
    return out.reshape((mesh.K, 4, ref.R) + tail)


def edge_traces_1d(coeffs1d, mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    """Traces of a column (1D) field on the edges of each 2D element, (K, 4, R)."""
    c = np.asarray(coeffs1d, dtype=float).reshape(mesh.n_columns, ref.N1)[mesh.column]
    return np.einsum("nri,ki->knr", ref.phi1_e, c)


def exterior(trace: np.ndarray, mesh: Mesh2D, boundary=None) -> np.ndarray:
    """Neighbour traces matched to the interior quadrature points; boundary edges get ``boundary`` or the interior trace."""
    nb = mesh.neighbor
    k = np.where(nb >= 0, nb, np.arange(mesh.K)[:, None])
    pos = np.where(nb >= 0, OPP[None, :], np.arange(4)[None, :])
    out = trace[k, pos]
    if boundary is not None:
        bmask = nb < 0
        out = np.where(bmask.reshape(bmask.shape + (1,) * (trace.ndim - 2)), boundary, out)
    return out


def edge_column_heights(mesh1d: Mesh1D, mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    """Smoothed height H_s at the edge quadrature points, (K, 4, R); nodal value on vertical edges."""
    c = mesh.column
    x1hat = ref.edge_points[..., 0]  # (4, R)
    lo, hi = mesh1d.Hs[c], mesh1d.Hs[c + 1]
    return lo[:, None, None] + (hi - lo)[:, None, None] * x1hat[None]


def edge_weights(mesh: Mesh2D, ref: RefBlocks) -> np.ndarray:
    """Physical edge quadrature weights |E|·w_r, (K, 4, R)."""
    return mesh.cached(("edge_weights", ref.R), lambda: mesh.lengths[:, :, None] * ref.ws[None, None, :])


def edge_matrix(mesh: Mesh2D, ref: RefBlocks, w_in, diag_mask, w_out=None, off_mask=None, trial: str = "2d") -> BlockSparseMatrix:
    K, N = mesh.K, ref.N
    if trial == "2d":
        Nt, ncol = N, K
    else:
        Nt, ncol = ref.N1, mesh.n_columns
    own, cross = ref.edge_outer[trial]
    lw = edge_weights(mesh, ref)
    rows, cols, blocks = [], [], []
    # all edges of an element land in the same diagonal block: sum over n in one batched product
    if diag_mask.any():
        wt = np.where(diag_mask[:, :, None], lw * w_in, 0.0).transpose(1, 0, 2)  # (4, K, R)
        diag = np.matmul(wt, own).sum(axis=0).reshape(K, N, Nt)
        sel = np.flatnonzero(diag_mask.any(axis=1))
        rows.append(sel)
        cols.append(sel if trial == "2d" else mesh.column[sel])
        blocks.append(diag[sel])
    if off_mask is not None:
        valid = off_mask & (mesh.neighbor >= 0)
        if valid.any():
            wt = np.where(valid[:, :, None], lw * w_out, 0.0).transpose(1, 0, 2)
            off = np.matmul(wt, cross).transpose(1, 0, 2)  # (K, 4, N*Nt)
            k, n = np.nonzero(valid)
            nbk = mesh.neighbor[k, n]
            rows.append(k)
            cols.append(nbk if trial == "2d" else mesh.column[nbk])
            blocks.append(off[k, n].reshape(-1, N, Nt))
    if not rows:
        return BlockSparseMatrix.zeros((K * N, ncol * Nt), (N, Nt))
    return BlockSparseMatrix(
        (K * N, ncol * Nt), (N, Nt), np.concatenate(rows), np.concatenate(cols), np.concatenate(blocks)
    )


def edge_vector(mesh: Mesh2D, ref: RefBlocks, mask, values, test: str = "2d") -> np.ndarray:
    """Σ over masked edges of ∫_E φ_i · value; ``test='1d'`` tests with the column basis and sums per column."""
    lw = edge_weights(mesh, ref) * np.where(mask[:, :, None], values, 0.0)
    if test == "2d":
        return (lw.reshape(mesh.K, -1) @ ref.phi_e.reshape(-1, ref.N)).ravel()
    per_elem = lw.reshape(mesh.K, -1) @ ref.phi1_e.reshape(-1, ref.N1)
    out = np.zeros((mesh.n_columns, ref.N1))
    np.add.at(out, mesh.column, per_elem)
    return out.ravel()


def interior_mask(mesh: Mesh2D) -> np.ndarray:
    return mesh.neighbor >= 0


def normal_component(mesh: Mesh2D, ref: RefBlocks, m: int) -> np.ndarray:
    return np.broadcast_to(mesh.normals[:, :, None, m - 1], (mesh.K, 4, ref.R))


# ---- named operators -------------------------------------------------------


def _central(mesh, ref, w_in, w_out, mask, averaged, one_sided=None, off_mask=None, trial="2d"):
    """Averaged form ½(w⁻ ψ⁻ + w⁺ ψ⁺) on ``mask`` (or one-sided w⁻ ψ⁻ without ``averaged``).

    ``one_sided`` adds further edges with the full one-sided weight in the same matrix.
    """
    if not averaged:
        full = mask if one_sided is None else mask | one_sided
        return edge_matrix(mesh, ref, w_in, full, trial=trial)
    off = mask if off_mask is None else off_mask
    if one_sided is None:
        return edge_matrix(mesh, ref, 0.5 * w_in, mask, 0.5 * w_out, off, trial=trial)
    scale = np.where(mask, 0.5, np.where(one_sided, 1.0, 0.0))[:, :, None]
    return edge_matrix(mesh, ref, scale * w_in, mask | one_sided, 0.5 * w_out, off, trial=trial)


def assemble_edge_phi_phi_nu(mesh, ref, m, mask, averaged: bool, one_sided=None) -> BlockSparseMatrix:
    """ν^m ∫ φ_i φ_j: with ``averaged`` the interior-edge form with factor ½ and neighbour blocks, else one-sided."""
    nu = normal_component(mesh, ref, m)
    return _central(mesh, ref, nu, nu, mask, averaged, one_sided)


def assemble_q_up(mesh, ref) -> BlockSparseMatrix:
    """ν² ∫ φ_i u²_↑: upwinding from the element below (own top edges and the lower neighbour on bottom edges)."""
    nu = normal_component(mesh, ref, 2)
    diag = np.zeros((mesh.K, 4), dtype=bool)
    diag[:, 1] = True
    off = np.zeros((mesh.K, 4), dtype=bool)
    off[:, 0] = mesh.neighbor[:, 0] >= 0
    return edge_matrix(mesh, ref, nu, diag, nu, off)


def assemble_edge_phi_phi_funcdisc_nu(mesh, ref, D, m, mask, averaged: bool, one_sided=None) -> BlockSparseMatrix:
    """Σ_r ν^r ∫ φ_i D^{rm}_Δ φ_j with traces of the DG tensor coefficient D (K, N, 2, 2)."""
    Dtr = edge_traces(D, mesh, ref)  # (K, 4, R, 2, 2)
    nu = mesh.normals[:, :, None, :]
    w_in = nu[..., 0] * Dtr[..., 0, m - 1] + nu[..., 1] * Dtr[..., 1, m - 1]
    w_out = None
    if averaged:
        Dex = exterior(Dtr, mesh)
        w_out = nu[..., 0] * Dex[..., 0, m - 1] + nu[..., 1] * Dex[..., 1, m - 1]
    return _central(mesh, ref, w_in, w_out, mask, averaged, one_sided)


def assemble_edge_nonlinear_u(mesh, ref, U1, m, mask, averaged: bool, off_mask=None, one_sided=None) -> BlockSparseMatrix:
    """ν^m ∫ φ_i u¹_Δ φ_j with u¹ traces from each side."""
    u = edge_traces(U1, mesh, ref)
    nu = normal_component(mesh, ref, m)
    return _central(mesh, ref, nu * u, nu * exterior(u, mesh), mask, averaged, one_sided, off_mask)


def assemble_edge_h_to_u(mesh, ref, mask, averaged: bool, off_mask=None, one_sided=None) -> BlockSparseMatrix:
    """ν¹ ∫ φ_i φ̄_j coupling the column height into the element equations."""
    nu = normal_component(mesh, ref, 1)
    return _central(mesh, ref, nu, nu, mask, averaged, one_sided, off_mask, trial="1d")


def assemble_edge_height_weighted(mesh, mesh1d, ref, H, mask, averaged: bool, off_mask=None, one_sided=None) -> BlockSparseMatrix:
    """ν¹ ∫ (1/H_s) φ_i h_Δ φ_j acting on u¹ (h traces from each side's column)."""
    h = edge_traces_1d(H, mesh, ref)
    hs = edge_column_heights(mesh1d, mesh, ref)
    nu = normal_component(mesh, ref, 1)
    return _central(mesh, ref, nu * h / hs, nu * exterior(h, mesh) / hs, mask, averaged, one_sided, off_mask)


def assemble_penalty(mesh, ref, interior, dirichlet) -> tuple[BlockSparseMatrix, BlockSparseMatrix]:
    """Jump penalty (1/|E|)∫[φ_i][φ_j] on interior edges and its one-sided Dirichlet part."""
    inv = np.broadcast_to(1.0 / mesh.lengths[:, :, None], (mesh.K, 4, ref.R))
    S = edge_matrix(mesh, ref, inv, interior, -inv, interior)
    S_D = edge_matrix(mesh, ref, inv, dirichlet)
    return S, S_D


def assemble_v0t_1d(mesh1d: Mesh1D, ref: RefBlocks, Ubar1, Ubar2, diag_nodes, off_nodes, factor: float) -> BlockSparseMatrix:
    """Vertex terms ν ū φ̄_i φ̄_j / H_s at the endpoints of each 1D element.

    diag_nodes and off_nodes are boolean (K̄, 2) masks over (left, right) endpoints.
    """
    Kb, N1 = mesh1d.K, ref.N1
    ends = ref.phi1_ends  # (2, N̄): x̂ = 0, 1
    ubar = depth_integrated_at(Ubar1, Ubar2, ref, [0.0, 1.0])  # (K̄, 2)
    rows, cols, blocks = [], [], []
    for side, (nu, node_off, other) in enumerate(((-1.0, 0, 1), (1.0, 1, 0))):
        node = np.arange(Kb) + node_off
        hs = mesh1d.Hs[node]
        sel = np.flatnonzero(diag_nodes[:, side])
        if sel.size:
            wt = factor * nu * ubar[sel, side] / hs[sel]
            blocks.append(wt[:, None, None] * np.outer(ends[side], ends[side])[None])
            rows.append(sel)
            cols.append(sel)
        nbr = np.arange(Kb) + (1 if side else -1)
        sel = np.flatnonzero(off_nodes[:, side] & (nbr >= 0) & (nbr < Kb))
        if sel.size:
            wt = factor * nu * ubar[nbr[sel], other] / hs[sel]
            blocks.append(wt[:, None, None] * np.outer(ends[side], ends[other])[None])
            rows.append(sel)
            cols.append(nbr[sel])
    if not rows:
        return BlockSparseMatrix.zeros((Kb * N1, Kb * N1), (N1, N1))
    return BlockSparseMatrix(
        (Kb * N1, Kb * N1), (N1, N1), np.concatenate(rows), np.concatenate(cols), np.concatenate(blocks)
    ).compress()
