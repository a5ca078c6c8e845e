"""
File output: legacy ASCII VTK fields, CSV convergence histories, HTML
history plots and plain-text mesh dumps.

Every writer is byte-deterministic for identical inputs; reals are written
with 17 significant digits so files read back to the same doubles.
"""
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd
import plotly.graph_objects as go
from loguru import logger
from plotly.subplots import make_subplots

from flow_topopt.errors import FieldError, FlowTopOptError
from flow_topopt.fem.mesh import Mesh
from flow_topopt.fem.spaces import cr_cell_average, enrich_cr
from flow_topopt.fem.stokes import StokesSolution
from flow_topopt.schema.fields import P1Field
from flow_topopt.schema.history import HISTORY_COLUMNS, ConvergenceHistory

PathLike = Union[str, Path]

REAL_FORMAT = "%.17g"
VTK_TRIANGLE = 5


def _with_zero_z(values: np.ndarray) -> np.ndarray:
    return np.column_stack([values, np.zeros(len(values))])


def _write_block(handle, header: str, values: np.ndarray, fmt: str = REAL_FORMAT) -> None:
    handle.write(header + "\n")
    np.savetxt(handle, values, fmt=fmt)


def export_vtu(mesh: Mesh, phi: P1Field, sol: StokesSolution, path: PathLike) -> Path:
    """
    Write phi, pressure and both velocity representations as a legacy VTK
    unstructured grid.

    Raises:
        FieldError: the fields live on different meshes
    """
    phi.require_mesh(mesh)
    if sol.mesh is not mesh:
        raise FieldError("state solution lives on a different mesh")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    cells = np.column_stack([np.full(mesh.num_cells, 3), mesh.cells])
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write("# vtk DataFile Version 3.0\n")
        handle.write(f"flow_topopt level {mesh.level}\n")
        handle.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        _write_block(handle, f"POINTS {mesh.num_vertices} double", _with_zero_z(mesh.vertices))
        _write_block(handle, f"CELLS {mesh.num_cells} {4 * mesh.num_cells}", cells, fmt="%d")
        _write_block(handle, f"CELL_TYPES {mesh.num_cells}",
                     np.full((mesh.num_cells, 1), VTK_TRIANGLE), fmt="%d")

        handle.write(f"POINT_DATA {mesh.num_vertices}\n")
        _write_block(handle, "SCALARS phi double 1\nLOOKUP_TABLE default", phi.values[:, None])
        _write_block(handle, "VECTORS velocity_enriched double",
                     _with_zero_z(enrich_cr(sol.u).vertex_values))

        handle.write(f"CELL_DATA {mesh.num_cells}\n")
        _write_block(handle, "SCALARS pressure double 1\nLOOKUP_TABLE default", sol.p.values[:, None])
        _write_block(handle, "VECTORS velocity_cellavg double", _with_zero_z(cr_cell_average(sol.u)))

    logger.info("Exported level {} fields to {}", mesh.level, path)
    return path


def history_frame(history: ConvergenceHistory) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in history.records], columns=HISTORY_COLUMNS)


def write_history_csv(history: ConvergenceHistory, path: PathLike) -> Path:
    """One row per outer iteration with the fixed column order"""
    if not len(history):
        raise FlowTopOptError("refusing to write an empty convergence history")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    history_frame(history).to_csv(path, index=False, float_format=REAL_FORMAT, lineterminator="\n")
    logger.info("Wrote {} history rows to {}", len(history), path)
    return path


def plot_history_html(history: ConvergenceHistory, path: PathLike) -> Path:
    """Objective and volume error against the total outer iteration"""
    if not len(history):
        raise FlowTopOptError("refusing to plot an empty convergence history")
    frame = history_frame(history)
    iteration = np.arange(1, len(frame) + 1)

    fig = make_subplots(rows=2, cols=1, shared_xaxes=True,
                        subplot_titles=("Augmented Lagrangian", "Volume constraint error |W|"))
    fig.add_trace(go.Scatter(x=iteration, y=frame["total"], name="total"), row=1, col=1)
    fig.add_trace(go.Scatter(x=iteration, y=frame["dissipated"], name="dissipated power"), row=1, col=1)
    fig.add_trace(go.Scatter(x=iteration, y=frame["volume_gap"].abs(), name="|W|"), row=2, col=1)
    for start in frame.groupby("level")["outer"].idxmin():
        if start > 0:
            fig.add_vline(x=start + 0.5, line_dash="dot", line_color="gray")
    fig.update_yaxes(type="log", row=2, col=1)
    fig.update_xaxes(title_text="outer iteration", row=2, col=1)
    fig.update_layout(title="Convergence history", height=700)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.write_html(path, include_plotlyjs="cdn")
    logger.info("Wrote history plot to {}", path)
    return path


def write_mesh_text(mesh: Mesh, stem: PathLike) -> Tuple[Path, Path]:
    """
    Plain <stem>.node ("x y" per vertex) and <stem>.ele ("i j k" per cell,
    0-based) files without headers or markers.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    node, ele = stem.parent / f"{stem.name}.node", stem.parent / f"{stem.name}.ele"
    with open(node, "w", encoding="ascii", newline="\n") as handle:
        np.savetxt(handle, mesh.vertices, fmt=REAL_FORMAT)
    with open(ele, "w", encoding="ascii", newline="\n") as handle:
        np.savetxt(handle, mesh.cells, fmt="%d")
    logger.info("Wrote {} vertices to {} and {} cells to {}", mesh.num_vertices, node, mesh.num_cells, ele)
    return node, ele
