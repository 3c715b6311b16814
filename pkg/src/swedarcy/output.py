"""VTK legacy and CSV writers for solution snapshots and error tables."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .basis import Basis1D, Basis2D
from .mesh import Mesh2D

VTK_QUAD = 9
# reference coordinates of the element vertices in mesh vertex order
VERTEX_REF = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

CSV_UNKNOWNS = ("h", "u1", "u2", "h~", "q~1", "q~2")
CSV_HEADER = ["p", "j"] + [f"{kind}({name})" for name in CSV_UNKNOWNS for kind in ("Err", "EOC")]


class OutputError(OSError):
    """Writing an output file failed; the message names the path."""


def vertex_values(coefficients, mesh: Mesh2D, p: int) -> np.ndarray:
    """DG field evaluated at the four vertices of every element, (K, 4).

    Accepts 2D coefficients (K·N), column coefficients (K̄·N̄, extended over each
    column) or one value per element (K).
    """
    c = np.asarray(coefficients, dtype=float).ravel()
    K, Kb = mesh.K, mesh.n_columns
    N, N1 = (p + 1) ** 2, p + 1
    if c.size == K * N:
        return c.reshape(K, N) @ Basis2D(p).eval(VERTEX_REF).T
    if c.size == Kb * N1:
        per_col = c.reshape(Kb, N1) @ Basis1D(p).eval(VERTEX_REF[:, 0]).T
        return per_col[mesh.column]
    if c.size == K:
        return np.repeat(c[:, None], 4, axis=1)
    raise ValueError(f"field of length {c.size} fits neither K·N={K * N}, K̄·N̄={Kb * N1} nor K={K}")


def render_vtk(mesh: Mesh2D, fields: dict, p: int, title: str = "swedarcy") -> str:
    """Legacy ASCII UNSTRUCTURED_GRID text; every cell owns its 4 points.

    ``fields`` maps names to coefficient vectors, or to pairs of them for a
    vector field.
    """
    K = mesh.K
    out = io.StringIO()
    out.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    pts = mesh.vertices.reshape(-1, 2)
    out.write(f"POINTS {4 * K} double\n")
    np.savetxt(out, np.column_stack([pts, np.zeros(len(pts))]), fmt="%.17g")
    out.write(f"CELLS {K} {5 * K}\n")
    np.savetxt(out, np.column_stack([np.full(K, 4), np.arange(4 * K).reshape(K, 4)]), fmt="%d")
    out.write(f"CELL_TYPES {K}\n")
    np.savetxt(out, np.full(K, VTK_QUAD), fmt="%d")
    if fields:
        out.write(f"POINT_DATA {4 * K}\n")
    for name, value in fields.items():
        label = name.replace(" ", "_")
        if isinstance(value, (tuple, list)) and value and np.ndim(value[0]) > 0:
            if len(value) > 3:
                raise ValueError(f"vector field {name!r} has {len(value)} components, at most 3 allowed")
            comps = [vertex_values(v, mesh, p).ravel() for v in value]
            comps += [np.zeros(4 * K)] * (3 - len(comps))
            out.write(f"VECTORS {label} double\n")
            np.savetxt(out, np.column_stack(comps), fmt="%.17g")
        else:
            out.write(f"SCALARS {label} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(out, vertex_values(value, mesh, p).ravel(), fmt="%.17g")
    return out.getvalue()


def write_vtk(mesh: Mesh2D, fields: dict, path, p: int, title: str = "swedarcy") -> Path:
    path = Path(path)
    text = render_vtk(mesh, fields, p, title)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write VTK file {path}: {exc}") from exc
    return path


def read_vtk_points(path) -> tuple[int, int]:
    """(point count, cell count) declared in a legacy VTK file."""
    n_pts = n_cells = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("POINTS"):
                n_pts = int(line.split()[1])
            elif line.startswith("CELLS"):
                n_cells = int(line.split()[1])
    if n_pts is None or n_cells is None:
        raise ValueError(f"{path} is not a legacy unstructured-grid VTK file")
    return n_pts, n_cells


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return ""
    return f"{value:.6e}"


def csv_rows(report) -> list[list[str]]:
    rows = []
    for level in report.levels:
        row = [str(level.p), str(level.j)]
        for name in CSV_UNKNOWNS:
            row += [_fmt(level.errors.get(name)), _fmt(level.eoc.get(name))]
        rows.append(row)
    return rows


def render_csv(report) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(csv_rows(report))
    return out.getvalue()


def write_csv(report, path) -> Path:
    """Error table with the Err/EOC column pairs; unknowns a problem lacks stay empty."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_csv(report))
    except OSError as exc:
        raise OutputError(f"cannot write CSV file {path}: {exc}") from exc
    return path
