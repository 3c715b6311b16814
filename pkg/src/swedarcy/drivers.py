"""Simulation drivers: time loops on the generic framework, L2 errors and convergence tables."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import assembly as asm
from .basis import error_order
from .config import MANUFACTURED, RunConfig
from .framework import ProblemSteps, passthrough, run_problem
from .manufactured import LENGTH, T_END
from .mesh import Mesh1D, Mesh2D
from .output import write_csv, write_vtk
from .scenarios import Setup, custom_setup, manufactured_setup, showcase_setup

log = logging.getLogger(__name__)


# ---- errors ----------------------------------------------------------------


def compute_l2_error(coefficients, exact, mesh: Mesh2D, p: int) -> float:
    """‖c_Δ − c‖ over the mesh with p+4 Gauss points per direction; ``exact`` takes (x1, x2)."""
    ref = asm.ref_blocks(p, error_order(p))
    pts = asm.quadrature_points(mesh, ref)
    diff = asm.evaluate(np.asarray(coefficients, dtype=float), ref) - exact(pts[..., 0], pts[..., 1])
    return float(np.sqrt(np.sum(diff**2 * ref.det(mesh.mapping) * ref.weights)))


def compute_l2_error_1d(coefficients, exact, mesh1d: Mesh1D, p: int) -> float:
    """Same for a column field on the surface mesh; ``exact`` takes x1."""
    ref = asm.ref_blocks(p, error_order(p))
    x = mesh1d.x1[:-1, None] + mesh1d.lengths[:, None] * ref.s[None]
    diff = np.asarray(coefficients, dtype=float).reshape(-1, ref.N1) @ ref.phi1.T - exact(x)
    return float(np.sqrt(np.sum(diff**2 * ref.ws[None] * mesh1d.lengths[:, None])))


def compute_eoc(err_prev: float, err_cur: float, dx_prev: float, dx_cur: float) -> float:
    if err_prev <= 0 or err_cur <= 0:
        raise ValueError("EOC needs positive errors")
    if dx_prev <= 0 or dx_cur <= 0 or dx_prev == dx_cur:
        raise ValueError("EOC needs two distinct positive mesh widths")
    return math.log(err_prev / err_cur) / math.log(dx_prev / dx_cur)


@dataclass
class LevelResult:
    p: int
    j: int
    dx: float
    errors: dict
    eoc: dict = field(default_factory=dict)
    runtime: float = 0.0
    steps: int = 0


@dataclass
class ErrorReport:
    """Errors and orders per (p, j); EOC entries exist from the second level of a degree on."""

    scenario: str
    levels: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, level: LevelResult) -> LevelResult:
        prev = next((r for r in reversed(self.levels) if r.p == level.p), None)
        if prev is not None:
            level.eoc = {
                name: compute_eoc(prev.errors[name], err, prev.dx, level.dx)
                for name, err in level.errors.items()
                if name in prev.errors and prev.errors[name] > 0 and err > 0
            }
        self.levels.append(level)
        return level

    def level(self, p: int, j: int) -> LevelResult:
        for r in self.levels:
            if r.p == p and r.j == j:
                return r
        raise KeyError((p, j))

    def errors(self, p: int, name: str) -> list[float]:
        return [r.errors[name] for r in self.levels if r.p == p]

    def finest(self, p: int) -> LevelResult:
        return max((r for r in self.levels if r.p == p), key=lambda r: r.j)

    def format(self) -> str:
        names = [n for n in ("h", "u1", "u2", "h~", "q~1", "q~2") if any(n in r.errors for r in self.levels)]
        head = "p  j  " + "  ".join(f"{'Err(' + n + ')':>11} {'EOC':>5}" for n in names)
        lines = [head]
        for r in self.levels:
            cells = []
            for n in names:
                e = r.errors.get(n)
                o = r.eoc.get(n)
                cells.append(f"{e:11.3e} " + (f"{o:5.2f}" if o is not None else "    -"))
            lines.append(f"{r.p:<2} {r.j:<2} " + "  ".join(cells))
        return "\n".join(lines)


# ---- time loop -------------------------------------------------------------


@dataclass
class RunRecord:
    """Problem record handed through the framework phases."""

    setup: Setup
    n_steps: int
    state: object = None
    macro: object = None
    step: int = 0
    is_finished: bool = False
    on_output: object = None

    @property
    def n_substep(self) -> int:
        return self.setup.n_substep


def macro_step_size(setup: Setup) -> float:
    return setup.dt if setup.kind == "swe" else setup.dt_sub


def step_count(t_end: float, dt: float) -> int:
    n = round(t_end / dt)
    if n < 1 or abs(n * dt - t_end) > 1e-9 * t_end:
        raise ValueError(f"end time {t_end:g} is not a multiple of the step {dt:g}")
    return n


def problem_steps(setup: Setup) -> ProblemSteps:
    """Phase functions for one of the three problem kinds."""
    kind = setup.kind

    def finish_check(rec, k):
        rec.step = k
        rec.is_finished = k >= rec.n_steps
        return rec

    def output(rec, k):
        if rec.on_output is not None:
            rec.on_output(rec)
        return rec

    if kind == "darcy":

        def init(rec, _k):
            rec.state = setup.darcy.initial_state()
            rec.is_finished = rec.n_steps == 0
            return rec

        def solve(rec, _k):
            rec.state = setup.darcy.step(rec.state, setup.dt_sub)
            return rec

        return ProblemSteps(init=init, solve_step=solve, postprocess_step=finish_check, output_step=output)

    if kind == "swe":

        def init(rec, _k):
            rec.state = setup.swe.initial_state(setup.swe_mesh)
            rec.is_finished = rec.n_steps == 0
            return rec

        def solve(rec, _k):
            rec.state = setup.swe.step(rec.state, setup.dt)
            return rec

        return ProblemSteps(init=init, solve_step=solve, postprocess_step=finish_check, output_step=output)

    coupled = setup.coupled

    def init(rec, _k):
        rec.state = coupled.initial_state(setup.swe_mesh)
        rec.is_finished = rec.n_steps == 0
        return rec

    def begin(rec, _k):
        rec.macro = coupled.begin(rec.state)
        return rec

    def substep(rec, _k):
        coupled.substep(rec.macro, setup.dt)
        return rec

    def finish(rec, _k):
        rec.state = coupled.finish(rec.state, rec.macro, setup.dt)
        rec.macro = None
        return rec

    return ProblemSteps(
        init=init, preprocess_step=begin, solve_step=finish, postprocess_step=finish_check, output_step=output,
        preprocess_substep=passthrough, solve_substep=substep, postprocess_substep=passthrough,
    )


def simulate(setup: Setup, on_output=None, trace: list | None = None):
    """Run ``setup`` to its end time; returns the final solver state."""
    record = RunRecord(setup, step_count(setup.t_end, macro_step_size(setup)), on_output=on_output)
    return run_problem(problem_steps(setup), record, trace=trace).state


# ---- manufactured convergence ----------------------------------------------


def level_errors(setup: Setup, state) -> dict:
    fs, p = setup.exact, setup.p
    errors = {}
    swe_state = darcy_state = None
    if setup.kind == "swe":
        swe_state = state
    elif setup.kind == "darcy":
        darcy_state = state
    else:
        swe_state, darcy_state = state.swe, state.darcy
    if swe_state is not None:
        t = swe_state.t
        # vertical velocity is diagnostic; bring it to the final time first
        setup.swe.refresh_diagnostics(swe_state)
        errors["h"] = compute_l2_error_1d(swe_state.H, lambda x: fs.h(t, x), swe_state.mesh1d, p)
        errors["u1"] = compute_l2_error(swe_state.U1, lambda a, b: fs.u1(t, a, b), swe_state.mesh, p)
        errors["u2"] = compute_l2_error(swe_state.U2, lambda a, b: fs.u2(t, a, b), swe_state.mesh, p)
    if darcy_state is not None:
        t, mesh = darcy_state.t, setup.darcy.mesh
        errors["h~"] = compute_l2_error(darcy_state.H, lambda a, b: fs.h_sub(t, a, b), mesh, p)
        errors["q~1"] = compute_l2_error(darcy_state.Q1, lambda a, b: fs.q_sub1(t, a, b), mesh, p)
        errors["q~2"] = compute_l2_error(darcy_state.Q2, lambda a, b: fs.q_sub2(t, a, b), mesh, p)
    return errors


def run_level(scenario: str, p: int, j: int, eta: float = 1.0, n_substep: int = 10, t_end: float = T_END) -> LevelResult:
    kind = MANUFACTURED[scenario]
    start = time.perf_counter()
    setup = manufactured_setup(kind, p, j, eta=eta, n_substep=n_substep, t_end=t_end)
    state = simulate(setup)
    errors = level_errors(setup, state)
    return LevelResult(
        p=p, j=j, dx=LENGTH / 2 ** (j + 1), errors=errors, runtime=time.perf_counter() - start,
        steps=step_count(t_end, macro_step_size(setup)),
    )


def run_convergence(config: RunConfig, on_level=None) -> ErrorReport:
    """Sweep j = 0..levels for every configured degree on a manufactured scenario."""
    if config.scenario not in MANUFACTURED:
        raise ValueError(f"no manufactured solution for scenario {config.scenario!r}")
    t_end = config.time.t_end or T_END
    report = ErrorReport(config.scenario, metadata=dict(t_end=t_end, eta=config.eta, n_substep=config.time.n_substep))
    for p in config.degrees:
        for j in range(config.levels + 1):
            level = report.add(run_level(config.scenario, p, j, config.eta, config.time.n_substep, t_end))
            log.debug("p=%d j=%d %s (%.1f s)", p, j, level.errors, level.runtime)
            if on_level is not None:
                on_level(level)
    report.metadata["runtime"] = sum(r.runtime for r in report.levels)
    return report


# ---- field output ----------------------------------------------------------


def snapshot_fields(setup: Setup, state) -> list[tuple[str, Mesh2D, dict]]:
    """(label, mesh, fields) per sub-problem of a state."""
    out = []
    swe_state = state if setup.kind == "swe" else getattr(state, "swe", None)
    darcy_state = state if setup.kind == "darcy" else getattr(state, "darcy", None)
    if swe_state is not None:
        out.append(("free_flow", swe_state.mesh, {"h": swe_state.H, "velocity": (swe_state.U1, swe_state.U2)}))
    if darcy_state is not None:
        out.append(("subsurface", setup.darcy.mesh, {"head": darcy_state.H, "flux": (darcy_state.Q1, darcy_state.Q2)}))
    return out


def write_snapshot(setup: Setup, state, directory, stem: str, index: int) -> list[Path]:
    paths = []
    for label, mesh, fields in snapshot_fields(setup, state):
        path = Path(directory) / f"{stem}_{label}_{index:06d}.vtk"
        paths.append(write_vtk(mesh, fields, path, setup.p, title=f"{stem} {label} t={state.t:.6g}"))
    return paths


@dataclass
class RunResult:
    state: object
    setup: Setup
    files: list = field(default_factory=list)
    report: ErrorReport | None = None


def _writer(setup: Setup, directory, stem: str, every: int, files: list):
    def on_output(rec):
        if every and rec.step % every == 0 and not rec.is_finished:
            files.extend(write_snapshot(setup, rec.state, directory, stem, rec.step))

    return on_output


def run_showcase(config: RunConfig, out_dir=None) -> RunResult:
    """Channel flow over the obstacle; VTK snapshots every ``output.every`` subsurface steps and at the end."""
    t = config.time
    dt_sub = t.dt_sub or (t.dt * t.n_substep if t.dt else 0.1)
    n_substep = t.n_substep if (t.dt_sub or t.dt) else 5
    setup = showcase_setup(
        t_end=t.t_end or 30000.0, columns=config.mesh.columns, layers=config.mesh.layers, p=config.p,
        dt_sub=dt_sub, n_substep=n_substep, eta=config.eta,
    )
    return _run(setup, config, out_dir, "showcase")


def run_single(config: RunConfig, out_dir=None) -> RunResult:
    """One simulation of a manufactured level or a custom setup."""
    if config.scenario in MANUFACTURED:
        setup = manufactured_setup(
            config.kind, config.p, config.levels, eta=config.eta, n_substep=config.time.n_substep,
            t_end=config.time.t_end or T_END,
        )
    elif config.scenario == "custom":
        t = config.time
        if t.t_end is None or (t.dt is None and t.dt_sub is None):
            raise ValueError("custom runs need time.t_end and time.dt (or time.dt_sub)")
        n = t.n_substep if config.kind == "coupled" else 1
        dt = t.dt if t.dt is not None else t.dt_sub / n
        if config.kind == "darcy" and t.dt_sub is not None:
            dt = t.dt_sub
        setup = custom_setup(
            config.custom, config.kind, config.p, config.mesh.columns, config.mesh.layers, t.t_end, dt, n, config.eta
        )
    else:
        raise ValueError(f"scenario {config.scenario!r} is not a single run")
    result = _run(setup, config, out_dir, config.scenario)
    if setup.exact is not None:
        report = ErrorReport(config.scenario)
        report.add(LevelResult(config.p, config.levels, LENGTH / 2 ** (config.levels + 1), level_errors(setup, result.state)))
        result.report = report
    return result


def _run(setup: Setup, config: RunConfig, out_dir, stem: str) -> RunResult:
    files: list = []
    write = out_dir is not None and config.output.vtk
    on_output = _writer(setup, out_dir, stem, config.output.every, files) if write else None
    state = simulate(setup, on_output=on_output)
    if write:
        files.extend(write_snapshot(setup, state, out_dir, stem, step_count(setup.t_end, macro_step_size(setup))))
    return RunResult(state, setup, files)


def write_report(report: ErrorReport, out_dir, name: str | None = None) -> Path:
    return write_csv(report, Path(out_dir) / (name or f"{report.scenario}.csv"))
