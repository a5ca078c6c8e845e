"""
Multilevel phase-field topology optimization.

For every refinement level the loop alternates a state solve with M
stabilized phase-field steps on the frozen velocity, then updates the
volume multiplier and penalty. After a level the mesh is red-refined and
the phase field carried over by exact nodal prolongation; the multiplier
and penalty continue across levels.
"""
import time
import uuid
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from flow_topopt.errors import FieldError, FlowTopOptError, OptimizationError
from flow_topopt.export import export_vtu, plot_history_html, write_history_csv
from flow_topopt.fem.cases import generate_case_mesh
from flow_topopt.fem.mesh import Mesh, refine_red
from flow_topopt.fem.phasefield import (PhaseStepper, augmented_lagrangian, project_box,
                                        update_duals, volume_gap)
from flow_topopt.fem.spaces import prolong_p1
from flow_topopt.fem.stokes import StokesSolution, solve_state
from flow_topopt.schema.fields import P1Field
from flow_topopt.schema.history import ConvergenceHistory, HistoryRecord, ObjectiveBreakdown
from flow_topopt.schema.params import (DualState, InitialPhase, InitialPhaseKind, PhaseParams,
                                       RunConfig)


class RunResult(BaseModel):
    """Final state of an optimization run and the files it wrote"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    run_id: str
    mesh: Mesh
    phi: P1Field
    solution: StokesSolution
    duals: DualState
    history: ConvergenceHistory
    exports: List[Path] = Field(default_factory=list, description="Files written, in order")


def initial_phase(mesh: Mesh, initial: InitialPhase, beta: float) -> P1Field:
    """Level-0 phase field; deterministic for a given seed"""
    if initial.kind == InitialPhaseKind.CONSTANT:
        return P1Field.constant(mesh, beta if initial.value is None else initial.value)
    if initial.kind == InitialPhaseKind.RANDOM:
        rng = np.random.default_rng(initial.seed)
        return P1Field(mesh=mesh, values=rng.uniform(0.0, 1.0, mesh.num_vertices))
    distance = np.hypot(mesh.vertices[:, 0] - initial.center[0], mesh.vertices[:, 1] - initial.center[1])
    inside = (distance <= initial.radius).astype(float)
    values = inside if initial.kind == InitialPhaseKind.DISK else 1.0 - inside
    return P1Field(mesh=mesh, values=values)


def objective_report(phi: P1Field, sol: StokesSolution, duals: DualState,
                     params: PhaseParams) -> ObjectiveBreakdown:
    """All parts of L at (phi, u); the dissipated part is the benchmark objective"""
    return augmented_lagrangian(phi, sol.u, duals, params)


def _elapsed(started: Optional[float]) -> float:
    return 0.0 if started is None else time.perf_counter() - started


def run_level(phi: P1Field,
              duals: DualState,
              mesh: Mesh,
              config: RunConfig,
              level: int = 0,
              run_id: str = "-",
              started: Optional[float] = None) -> Tuple[P1Field, DualState, List[HistoryRecord]]:
    """
    N outer iterations on one mesh.

    Each outer iteration solves the state for the current phi, records the
    objective with the current duals, takes M projected phase steps with the
    velocity frozen and finally updates the duals with W of the last iterate.

    Raises:
        FieldError: phi is outside [0, 1] or lives on another mesh
        OptimizationError: a state solve failed or the time budget ran out;
            the records gathered so far travel with the exception
    """
    phi.require_mesh(mesh)
    if np.any((phi.values < 0.0) | (phi.values > 1.0)):
        raise FieldError("phase field must take values in [0, 1]")
    params = config.phase
    counts = config.iterations
    clock = started if started is not None else time.perf_counter()
    records: List[HistoryRecord] = []

    for outer in range(counts.outer):
        if counts.max_seconds is not None and time.perf_counter() - clock > counts.max_seconds:
            raise OptimizationError(f"time budget of {counts.max_seconds}s exhausted at level {level}, "
                                    f"outer iteration {outer}",
                                    history=ConvergenceHistory(records=records))
        try:
            solution = solve_state(mesh, phi, params.physics)
        except FlowTopOptError as exc:
            logger.error("[{}] State solve failed at level {}, outer iteration {}: {}",
                         run_id, level, outer, exc)
            raise OptimizationError(f"state solve failed at level {level}, outer iteration {outer}: {exc}",
                                    history=ConvergenceHistory(records=records)) from exc

        breakdown = objective_report(phi, solution, duals, params)
        records.append(HistoryRecord(
            level=level, outer=outer, total=breakdown.total, brinkman=breakdown.brinkman,
            dissipated=breakdown.dissipated, ginzburg_landau=breakdown.ginzburg_landau,
            volume_gap=breakdown.volume_gap, ell=duals.ell, zeta=duals.zeta,
            seconds=_elapsed(started) if config.output.record_wall_time else 0.0,
        ))
        logger.debug("[{}] level {} outer {}: {}", run_id, level, outer, breakdown.as_str)

        stepper = PhaseStepper(solution.u, params)
        for _ in range(counts.inner):
            phi = project_box(stepper.step(phi, duals))
        duals = update_duals(duals, volume_gap(phi, params.beta), params)

    return phi, duals, records


def run(config: RunConfig, export: bool = True) -> RunResult:
    """
    Run all K+1 levels of a configured case.

    With export enabled, the fields of every level (re-solved for the final
    phi of the level) go to VTK files and the history to a CSV file in the
    configured output directory.

    Raises:
        OptimizationError: carries the history of all completed iterations
    """
    run_id = str(uuid.uuid4())[:8]
    started = time.perf_counter()
    params = config.phase
    out_dir = Path(config.output.directory)
    case = config.case.value
    logger.info("[{}] Optimization initialized with case {}, n={}, K={}, N={}, M={}",
                run_id, case, config.resolution, config.iterations.levels,
                config.iterations.outer, config.iterations.inner)

    mesh = generate_case_mesh(config.case, config.resolution)
    phi = initial_phase(mesh, config.initial, params.beta)
    duals = DualState.initial(params)
    history = ConvergenceHistory()
    exports: List[Path] = []
    solution: Optional[StokesSolution] = None

    for level in range(config.iterations.levels + 1):
        if level > 0:
            mesh = refine_red(mesh)
            phi = prolong_p1(phi, mesh)
        logger.info("[{}] Level {}: {} vertices, {} cells, {} velocity dofs",
                    run_id, level, mesh.num_vertices, mesh.num_cells, 2 * mesh.num_edges)
        try:
            phi, duals, records = run_level(phi, duals, mesh, config, level=level,
                                            run_id=run_id, started=started)
        except OptimizationError as exc:
            history.extend(exc.history.records if exc.history is not None else [])
            exc.history = history
            logger.error("[{}] Run aborted after {} outer iterations: {}", run_id, len(history), exc)
            raise
        history.extend(records)
        try:
            solution = solve_state(mesh, phi, params.physics)
        except FlowTopOptError as exc:
            logger.error("[{}] Final state solve of level {} failed: {}", run_id, level, exc)
            raise OptimizationError(f"final state solve of level {level} failed: {exc}",
                                    history=history) from exc

        report = objective_report(phi, solution, duals, params)
        logger.info("[{}] Level {} done: dissipated power {:.6g}, W {:.3e}, ell {:.4g}, zeta {:.4g}",
                    run_id, level, report.dissipated, report.volume_gap, duals.ell, duals.zeta)
        if export and config.output.write_vtk:
            exports.append(export_vtu(mesh, phi, solution, out_dir / f"{case}_level{level}.vtk"))

    if export:
        exports.append(write_history_csv(history, out_dir / f"{case}_history.csv"))
        if config.output.plot:
            exports.append(plot_history_html(history, out_dir / f"{case}_history.html"))

    logger.info("[{}] Optimization finished in {:.1f}s", run_id, time.perf_counter() - started)
    return RunResult(run_id=run_id, mesh=mesh, phi=phi, solution=solution, duals=duals,
                     history=history, exports=exports)
