"""Acceptance gate: seven criteria, one PASS/FAIL line each in the terminal summary."""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

import oracle_suite
import structural_suite
from swedarcy.config import builtin_config
from swedarcy.drivers import ErrorReport, run_convergence, run_level, run_showcase
from swedarcy.framework import ProblemSteps, run_problem
from swedarcy.output import read_vtk_points
from swedarcy.scenarios import showcase_bathymetry

pytestmark = pytest.mark.slow

# published subsurface errors, p -> unknown -> levels j = 0..3
SUBSURFACE_REFERENCE = {
    0: {"h~": (1.50e1, 8.29, 4.21, 2.11), "q~1": (7.78e-3, 5.27e-3, 2.44e-3, 1.15e-3), "q~2": (2.07, 1.11, 0.530, 0.258)},
    1: {"h~": (5.49, 1.32, 0.330, 8.24e-2), "q~1": (4.17e-3, 2.86e-3, 2.00e-3, 1.14e-3), "q~2": (0.361, 0.602, 0.419, 0.234)},
    2: {"h~": (0.633, 9.19e-2, 1.17e-2, 1.48e-3), "q~1": (3.03e-3, 6.72e-4, 8.91e-5, 1.10e-5), "q~2": (9.41e-2, 3.71e-2, 4.91e-3, 6.21e-4)},
}
# published orders at j = 3
SUBSURFACE_EOC = {0: {"h~": 1.00, "q~2": 1.04}, 1: {"h~": 2.00, "q~2": 0.84}, 2: {"h~": 2.99, "q~2": 2.98}}
FREE_FLOW_FINEST = {0: 4, 1: 4, 2: 3}
FREE_FLOW_H_P1_J4 = 4.99e-5
# published coupled Err(h) at p = 1, j = 0..3
COUPLED_H_P1 = (1.06e-2, 3.11e-3, 7.92e-4, 1.99e-4)


@pytest.fixture(scope="session")
def free_flow_report():
    report = ErrorReport("table1-swe")
    start = time.perf_counter()
    for p, finest in FREE_FLOW_FINEST.items():
        for j in range(finest + 1):
            report.add(run_level("table1-swe", p, j))
    report.metadata["wall"] = time.perf_counter() - start
    return report


def test_criterion_1_subsurface_convergence(record_criterion):
    start = time.perf_counter()
    report = run_convergence(builtin_config("table1-darcy"))
    runtime = time.perf_counter() - start
    problems = []
    for p, orders in SUBSURFACE_EOC.items():
        finest = report.finest(p)
        for name, expected in orders.items():
            tol = 0.15 if name == "h~" else 0.25
            if abs(finest.eoc[name] - expected) > tol:
                problems.append(f"EOC({name}) p={p}: {finest.eoc[name]:.2f} vs {expected:.2f}±{tol}")
        for name, values in SUBSURFACE_REFERENCE[p].items():
            for j, ref in enumerate(values):
                ratio = report.level(p, j).errors[name] / ref
                if not 0.5 <= ratio <= 2.0:
                    problems.append(f"Err({name}) p={p} j={j} off by factor {ratio:.2f}")
    if runtime >= 120:
        problems.append(f"runtime {runtime:.0f} s")
    eocs = ", ".join(f"p={p} {report.finest(p).eoc['h~']:.2f}/{report.finest(p).eoc['q~2']:.2f}" for p in SUBSURFACE_EOC)
    passed = record_criterion(1, "subsurface convergence", not problems, f"EOC h~/q~2 {eocs}; {runtime:.0f} s" + "".join("; " + m for m in problems))
    assert passed, problems


def test_criterion_2_free_flow_convergence(free_flow_report, record_criterion):
    report = free_flow_report
    problems = []
    for p in FREE_FLOW_FINEST:
        finest = report.finest(p)
        for name in ("h", "u1"):
            if abs(finest.eoc[name] - (p + 1)) > 0.15:
                problems.append(f"EOC({name}) p={p}: {finest.eoc[name]:.2f}")
    err = report.level(1, 4).errors["h"]
    if abs(err / FREE_FLOW_H_P1_J4 - 1.0) > 0.10:
        problems.append(f"Err(h) p=1 j=4 {err:.3e} vs {FREE_FLOW_H_P1_J4:.2e}")
    wall = report.metadata["wall"]
    if wall >= 600:
        problems.append(f"runtime {wall:.0f} s")
    eocs = ", ".join(f"p={p} {report.finest(p).eoc['h']:.2f}/{report.finest(p).eoc['u1']:.2f}" for p in FREE_FLOW_FINEST)
    passed = record_criterion(
        2, "free-flow convergence", not problems,
        f"EOC h/u1 {eocs}; Err(h) p=1 j=4 {err:.3e}; {wall:.0f} s" + "".join("; " + m for m in problems),
    )
    assert passed, problems


def test_criterion_3_coupled_convergence(free_flow_report, record_criterion):
    start = time.perf_counter()
    report = run_convergence(builtin_config("table2-coupled"))
    runtime = time.perf_counter() - start
    finest = report.finest(1)
    problems = []
    for name in ("h", "h~"):
        if abs(finest.eoc[name] - 2.0) > 0.15:
            problems.append(f"EOC({name}) {finest.eoc[name]:.2f}")
    coupled = [report.level(1, j).errors["h"] for j in range(4)]
    uncoupled = [free_flow_report.level(1, j).errors["h"] for j in range(4)]
    for j, (c, u) in enumerate(zip(coupled, uncoupled)):
        # three significant figures
        if abs(c - u) > 5e-3 * u:
            problems.append(f"Err(h) j={j}: coupled {c:.3e} vs free flow alone {u:.3e}")
    if runtime >= 600:
        problems.append(f"runtime {runtime:.0f} s")
    published = " ".join(f"{v:.2e}" for v in COUPLED_H_P1)
    measured = " ".join(f"{v:.2e}" for v in coupled)
    passed = record_criterion(
        3, "coupled convergence", not problems,
        f"EOC h {finest.eoc['h']:.2f}, h~ {finest.eoc['h~']:.2f}; Err(h) {measured} (published {published}); "
        f"{runtime:.0f} s" + "".join("; " + m for m in problems),
    )
    assert passed, problems


def test_criterion_4_assembly_oracle(record_criterion):
    start = time.perf_counter()
    worst = oracle_suite.run_oracle_suite()
    runtime = time.perf_counter() - start
    failing = {k: v for k, v in worst.items() if not v <= oracle_suite.TOLERANCE}
    ok = not failing and runtime < 30
    detail = f"{len(worst)} operators, worst {max(worst.values()):.1e}, {runtime:.1f} s"
    if failing:
        detail += "; " + ", ".join(f"{k} {v:.1e}" for k, v in failing.items())
    assert record_criterion(4, "assembly oracle suite", ok, detail), failing


def test_criterion_5_structural_properties(record_criterion):
    start = time.perf_counter()
    values = structural_suite.run_structural_suite()
    runtime = time.perf_counter() - start
    failing = {k: v for k, v in values.items() if not structural_suite.passes(k, v)}
    ok = not failing and runtime < 60
    detail = f"{len(values)} properties, {runtime:.1f} s"
    if failing:
        detail += "; " + ", ".join(f"{k} {v:.1e}" for k, v in failing.items())
    assert record_criterion(5, "structural property suite", ok, detail), failing


def test_criterion_6_showcase_smoke(tmp_path, record_criterion):
    config = builtin_config("showcase")
    config = config.with_overrides(time=config.time.model_copy(update={"t_end": 300.0}).model_dump())
    start = time.perf_counter()
    result = run_showcase(config, tmp_path)
    runtime = time.perf_counter() - start
    state = result.state
    mesh = state.swe.mesh
    finite = all(np.all(np.isfinite(v)) for v in (state.swe.U1, state.swe.H, state.darcy.H))
    away = showcase_bathymetry(mesh.x1) == 0.0
    surface = mesh.top[away]
    lo, hi = float(surface.min()), float(surface.max())
    loadable = []
    for path in result.files:
        n_points, n_cells = read_vtk_points(path)
        loadable.append(n_points == 4 * n_cells and n_cells > 0)
    ok = (
        math.isclose(state.t, 300.0) and finite and 4.9 <= lo and hi <= 5.1 and bool(result.files) and all(loadable)
        and runtime < 300
    )
    detail = f"t={state.t:g} s, surface away from obstacle in [{lo:.4f}, {hi:.4f}] m, {len(result.files)} VTK files, {runtime:.0f} s"
    assert record_criterion(6, "showcase smoke test", ok, detail)


class _Counter:
    __slots__ = ("count", "limit", "is_finished")

    def __init__(self, limit):
        self.count, self.limit, self.is_finished = 0, limit, False


def _tick(rec, _k):
    rec.count += 1
    rec.is_finished = rec.count >= rec.limit
    return rec


def test_criterion_7_framework_overhead(record_criterion):
    iterations = 10_000
    start = time.perf_counter()
    rec = run_problem(ProblemSteps(init=lambda r, _k: r, solve_step=_tick), _Counter(iterations))
    runtime = time.perf_counter() - start
    ok = rec.count == iterations and runtime < 10.0
    detail = f"{iterations} iterations in {runtime:.3f} s ({1e3 * runtime / iterations:.4f} ms each)"
    assert record_criterion(7, "framework overhead", ok, detail)
