"""Generic problem life-cycle shared by the sub-solvers and the coupled driver.

A problem is a set of step functions acting on an opaque record.  The only
fields the framework reads are ``is_finished`` and, when a sub-step trio is
registered, ``n_substep``.

    configure → preprocess → init
    repeat until is_finished:
        preprocess_step → solve_step → postprocess_step → output_step
            (solve_step first runs n_substep × [preprocess_substep → solve_substep → postprocess_substep])
    postprocess → error_eval → output
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Callable

Step = Callable[[Any, int], Any]

PHASES_SETUP = ("configure", "preprocess", "init")
PHASES_ITERATE = ("preprocess_step", "solve_step", "postprocess_step", "output_step")
PHASES_SUBSTEP = ("preprocess_substep", "solve_substep", "postprocess_substep")
PHASES_FINALIZE = ("postprocess", "error_eval", "output")


def passthrough(record, _k):
    return record


class StepError(RuntimeError):
    """A step failed; ``phase`` and ``iteration`` locate it, the original error is the cause."""

    def __init__(self, phase: str, iteration: int, substep: int | None, cause: BaseException):
        where = f"{phase} (iteration {iteration}" + (f", sub-step {substep})" if substep is not None else ")")
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")
        self.phase = phase
        self.iteration = iteration
        self.substep = substep


@dataclass(frozen=True)
class ProblemSteps:
    """Step functions ``(record, iteration) -> record``; unset steps pass the record through."""

    init: Step
    solve_step: Step
    configure: Step = passthrough
    preprocess: Step = passthrough
    preprocess_step: Step = passthrough
    postprocess_step: Step = passthrough
    output_step: Step = passthrough
    postprocess: Step = passthrough
    error_eval: Step = passthrough
    output: Step = passthrough
    preprocess_substep: Step | None = None
    solve_substep: Step | None = None
    postprocess_substep: Step | None = None

    def __post_init__(self):
        for f in fields(self):
            fn = getattr(self, f.name)
            if fn is not None and not callable(fn):
                raise TypeError(f"step {f.name} is not callable")
        trio = [getattr(self, name) for name in PHASES_SUBSTEP]
        if any(s is not None for s in trio) and not all(s is not None for s in trio):
            raise TypeError("sub-stepping needs all three sub-step functions")

    @property
    def has_substeps(self) -> bool:
        return self.solve_substep is not None


def run_problem(steps: ProblemSteps, record, trace: list | None = None, max_iterations: int | None = None):
    """Drive ``record`` through all phases; ``trace`` (if given) receives (phase, iteration[, sub-step]) tuples."""
    # bind once; no attribute lookups in the loop
    setup = [(name, getattr(steps, name)) for name in PHASES_SETUP]
    pre, solve, post, out = (getattr(steps, name) for name in PHASES_ITERATE)
    trio = [(name, getattr(steps, name)) for name in PHASES_SUBSTEP] if steps.has_substeps else []
    finalize = [(name, getattr(steps, name)) for name in PHASES_FINALIZE]
    log = trace.append if trace is not None else None

    def call(name, fn, rec, k, sub=None):
        if log is not None:
            log((name, k) if sub is None else (name, k, sub))
        try:
            return fn(rec, k)
        except StepError:
            raise
        except Exception as exc:
            raise StepError(name, k, sub, exc) from exc

    for name, fn in setup:
        record = call(name, fn, record, 0)
    k = 0
    while not record.is_finished:
        if max_iterations is not None and k >= max_iterations:
            raise StepError("iterate", k, None, RuntimeError(f"not finished after {max_iterations} iterations"))
        k += 1
        record = call("preprocess_step", pre, record, k)
        for s in range(record.n_substep if trio else 0):
            for name, fn in trio:
                record = call(name, fn, record, k, s)
        record = call("solve_step", solve, record, k)
        record = call("postprocess_step", post, record, k)
        record = call("output_step", out, record, k)
    for name, fn in finalize:
        record = call(name, fn, record, k)
    return record


def expected_trace(iterations: int, n_substep: int = 0) -> list:
    """Phase trace that :func:`run_problem` produces for a run of the given length."""
    out = [(name, 0) for name in PHASES_SETUP]
    for k in range(1, iterations + 1):
        out.append(("preprocess_step", k))
        for s in range(n_substep):
            out.extend((name, k, s) for name in PHASES_SUBSTEP)
        out.extend((name, k) for name in PHASES_ITERATE[1:])
    out.extend((name, iterations) for name in PHASES_FINALIZE)
    return out
