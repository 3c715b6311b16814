"""Structural properties of the discretisation: each check returns its worst deviation."""
from __future__ import annotations

import numpy as np

from oracle_suite import Trapezoid, random_mesh
from swedarcy import assembly as asm
from swedarcy.basis import MAX_DEGREE, Basis2D, gauss_rule, tensor_rule
from swedarcy.config import CustomProblem
from swedarcy.drivers import simulate
from swedarcy.scenarios import custom_setup, manufactured_setup
from swedarcy.transform import mapping_from_vertices, physical_gradient


def orthonormality() -> float:
    """max |∫ φ_i φ_j − δ_ij| on the reference square for every degree."""
    worst = 0.0
    for p in range(MAX_DEGREE + 1):
        rule = tensor_rule(p + 2)
        phi = Basis2D(p).eval(rule.points)
        gram = (phi * rule.weights[:, None]).T @ phi
        worst = max(worst, float(np.abs(gram - np.eye(len(gram))).max()))
    return worst


def quadrature_exactness() -> float:
    """Gauss rules with R points integrate x^d exactly for d ≤ 2R − 1, on [0, 1] and on the square."""
    worst = 0.0
    for R in range(1, 11):
        rule = gauss_rule(R)
        for d in range(2 * R):
            worst = max(worst, abs(rule.weights @ rule.points**d - 1.0 / (d + 1)))
        square = tensor_rule(R)
        for a in range(0, 2 * R, 3):
            for b in range(0, 2 * R, 2):
                exact = 1.0 / ((a + 1) * (b + 1))
                got = square.weights @ (square.points[:, 0] ** a * square.points[:, 1] ** b)
                worst = max(worst, abs(got - exact))
    return float(worst)


def gradient_against_differences(seed: int = 3) -> float:
    """Transformed basis gradients against central differences of φ ∘ F⁻¹ in physical space."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    h = 1e-6
    for p in range(1, MAX_DEGREE + 1):
        mesh = random_mesh(rng)
        basis = Basis2D(p)
        xhat = rng.uniform(0.1, 0.9, (6, 2))
        for k in range(mesh.K):
            v = mesh.vertices[k]
            el = Trapezoid(v[0, 0], v[1, 0], v[0, 1], v[1, 1], v[3, 1], v[2, 1], p)
            F = mapping_from_vertices(v)
            got = physical_gradient(F, basis.grad(xhat), xhat)  # (Q, N, 2)
            s, t = xhat[:, 0], xhat[:, 1]
            x1 = el.xl + el.w * s
            x2 = el.bottom_at(x1) + (el.top_at(x1) - el.bottom_at(x1)) * t
            for axis in range(2):
                step = np.zeros(2)
                step[axis] = h
                plus = basis.eval(np.stack(el.reference(x1 + step[0], x2 + step[1]), -1))
                minus = basis.eval(np.stack(el.reference(x1 - step[0], x2 - step[1]), -1))
                fd = (plus - minus) / (2 * h)
                scale = max(1.0, float(np.abs(fd).max()))
                worst = max(worst, float(np.abs(got[..., axis] - fd).max()) / scale)
    return worst


def projection_idempotence(seed: int = 4) -> float:
    """Projecting a discrete field returns its own coefficients."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in range(MAX_DEGREE + 1):
        mesh = random_mesh(rng)
        ref = asm.ref_blocks(p)
        c = rng.standard_normal((mesh.K, ref.N))
        again = asm.l2_project(lambda a, b: asm.evaluate(c, ref), mesh, ref)
        worst = max(worst, float(np.abs(again - c).max()))
    return worst


def determinant_positivity(seed: int = 5, meshes: int = 50) -> float:
    """Smallest det J over the corners of random valid meshes; must be positive."""
    rng = np.random.default_rng(seed)
    smallest = np.inf
    for _ in range(meshes):
        m = random_mesh(rng).mapping
        smallest = min(smallest, float(np.min(m.det_const)), float(np.min(m.det_const + m.det_lin)))
    return smallest


def _lake(**changes):
    fields = dict(surface=5.0, bathymetry={"constant": 0.0}, left="land", right="land", subsurface_head=5.0,
                  subsurface_sides="neumann", depth=-10.0)
    fields.update(changes)
    return CustomProblem(**fields)


def lake_at_rest(steps: int = 100, p: int = 1) -> float:
    """max change of U¹ and of the water height after ``steps`` free-flow steps of a lake at rest."""
    setup = custom_setup(_lake(), "swe", p, columns=4, layers=3, t_end=steps * 0.01, dt=0.01)
    start = setup.swe.initial_state(setup.swe_mesh)
    end = simulate(setup)
    return float(max(np.abs(end.U1 - start.U1).max(), np.abs(end.H - start.H).max(), np.abs(end.U2).max()))


def slot_zero_equivalence(steps: int = 20, p: int = 1) -> float:
    """Entries that differ between runs with zero interface slots and runs without any coupling.

    The free flow is run on a bed marked as coupling interface with empty slots
    and on an impermeable bed; the subsurface with explicitly zeroed slots and
    with default ones.  Both must agree bit for bit.
    """
    problem = _lake(inflow_velocity={"constant": 0.3}, left="river", right="openSea", surface=4.0)
    plain = custom_setup(problem, "swe", p, columns=4, layers=2, t_end=1.0, dt=0.01)
    linked = custom_setup(problem, "coupled", p, columns=4, layers=2, t_end=1.0, dt=0.01)
    a = plain.swe.initial_state(plain.swe_mesh)
    b = linked.swe.initial_state(linked.swe_mesh)
    for _ in range(steps):
        a = plain.swe.step(a, 0.01)
        b = linked.swe.step(b, 0.01)
    mismatches = sum(int(np.count_nonzero(x != y)) for x, y in ((a.U1, b.U1), (a.H, b.H), (a.U2, b.U2)))

    setup = manufactured_setup("darcy", p, 1)
    d = setup.darcy
    s1 = d.initial_state()
    s2 = d.initial_state()
    z = np.zeros_like(s2.H)
    s2.set_interface(z, z.copy(), z.copy())
    for _ in range(5):
        s1 = d.step(s1, setup.dt_sub)
        s2 = d.step(s2, setup.dt_sub)
    mismatches += int(np.count_nonzero(s1.Y != s2.Y))
    return float(mismatches)


def hydrostatic_mass_lag(macro_steps: int = 20, p: int = 1) -> float:
    """Largest |interface mass lag| of a coupled lake in equilibrium with its aquifer."""
    setup = custom_setup(_lake(), "coupled", p, columns=4, layers=2, t_end=macro_steps * 0.05, dt=0.01, n_substep=5)
    state = simulate(setup)
    lag = setup.coupled.mass_lag(state)
    if len(lag) != macro_steps - 1:
        raise AssertionError(f"expected {macro_steps - 1} ledger differences, got {len(lag)}")
    return float(np.abs(lag).max())


# name -> (check, tolerance, comparison)
CHECKS = {
    "basis orthonormality": (orthonormality, 1e-12, "max"),
    "quadrature exactness": (quadrature_exactness, 1e-13, "max"),
    "gradient transform vs finite differences": (gradient_against_differences, 1e-6, "max"),
    "projection idempotence": (projection_idempotence, 1e-11, "max"),
    "det J positivity": (determinant_positivity, 0.0, "min"),
    "lake at rest, 100 steps": (lake_at_rest, 1e-12, "max"),
    "interface-slot-zero equivalence": (slot_zero_equivalence, 0.0, "exact"),
    "hydrostatic mass lag": (hydrostatic_mass_lag, 1e-12, "max"),
}


def passes(name: str, value: float) -> bool:
    _, tol, kind = CHECKS[name]
    if kind == "min":
        return value > tol
    if kind == "exact":
        return value == tol
    return value <= tol


def run_structural_suite() -> dict:
    return {name: CHECKS[name][0]() for name in CHECKS}
