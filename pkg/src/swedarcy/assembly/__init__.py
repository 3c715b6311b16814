"""Global matrices and vectors assembled from reference tensors and per-element scalars."""
from .edge import (
    assemble_edge_h_to_u,
    assemble_edge_height_weighted,
    assemble_edge_nonlinear_u,
    assemble_edge_phi_phi_funcdisc_nu,
    assemble_edge_phi_phi_nu,
    assemble_penalty,
    assemble_q_up,
    assemble_v0t_1d,
    edge_column_heights,
    edge_matrix,
    edge_points,
    edge_traces,
    edge_traces_1d,
    edge_vector,
    exterior,
    interior_mask,
    normal_component,
)
from .element import (
    assemble_elem_1d_gbar,
    assemble_elem_dphi_phi,
    assemble_elem_dphi_phi_funcdisc,
    assemble_mass,
    assemble_mass_1d,
    assemble_rhs,
    compute_depth_integrated_velocity,
    depth_integrated_at,
    evaluate,
    l2_project,
    l2_project_1d,
    mass_blocks,
    quadrature_points,
)
from .reference import RefBlocks, ref_blocks
from .vectors import assemble_dirichlet_vector, assemble_jump_vectors, assemble_vertex_vector, compute_lambda
