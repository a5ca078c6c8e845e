"""
Benchmark presets: the hyper-parameters of the five 2D cases, the global
constants shared by all of them, default grid resolutions, default initial
phase fields and the published mesh sizes used for the DOF table.
"""
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from flow_topopt.fem.cases import CaseName
from flow_topopt.schema.params import (InitialPhase, InitialPhaseKind, IterationCounts,
                                       OutputOptions, PhaseParams, RunConfig)

ALPHA0 = 10000.0
KAPPA = 1.1
LEVELS = 3
ELL0 = 0.0
MU = 1.0


class PresetRow(BaseModel):
    """One row of the hyper-parameter table"""
    outer: int = Field(..., description="N, state solves per level")
    inner: int = Field(..., description="M, phase steps per state solve")
    dt: float
    epsilon: float
    gamma: float
    zeta0: float
    beta: float
    s_tilde: float


PRESETS: Dict[CaseName, PresetRow] = {
    CaseName.PIPE_BEND: PresetRow(outer=50, inner=10, dt=5e-4, epsilon=1e-2, gamma=1e-2,
                                  zeta0=100.0, beta=0.3, s_tilde=0.25),
    CaseName.LEFT_INFLOW: PresetRow(outer=50, inner=10, dt=1e-4, epsilon=1e-2, gamma=1e-2,
                                    zeta0=100.0, beta=0.5, s_tilde=0.25),
    CaseName.THREE_INFLOWS: PresetRow(outer=50, inner=10, dt=5e-5, epsilon=1e-2, gamma=1e-2,
                                      zeta0=100.0, beta=0.36, s_tilde=0.25),
    CaseName.RUGBY: PresetRow(outer=50, inner=10, dt=1e-3, epsilon=1e-3, gamma=1e-3,
                              zeta0=100.0, beta=0.925, s_tilde=0.25),
    CaseName.BYPASS: PresetRow(outer=50, inner=10, dt=5e-4, epsilon=5e-3, gamma=1e-1,
                               zeta0=50.0, beta=0.1667, s_tilde=1.0),
}

# grid steps per unit length; each puts every boundary segment on grid lines
DEFAULT_RESOLUTION: Dict[CaseName, int] = {
    CaseName.PIPE_BEND: 30,
    CaseName.LEFT_INFLOW: 30,
    CaseName.THREE_INFLOWS: 30,
    CaseName.RUGBY: 20,
    CaseName.BYPASS: 40,
}

# (vertices, cells) of the published unstructured level-0 meshes
REFERENCE_LEVEL0: Dict[CaseName, Tuple[int, int]] = {
    CaseName.PIPE_BEND: (945, 1792),
    CaseName.LEFT_INFLOW: (945, 1792),
    CaseName.THREE_INFLOWS: (945, 1792),
    CaseName.RUGBY: (881, 1664),
    CaseName.BYPASS: (2174, 4202),
}

# published per-level sizes of the three level-0 meshes, columns as in DofReport.as_row;
# the bypass level-3 vertex count is the recurrence value, which the th_p column confirms
PUBLISHED_COLUMNS = ("vertices", "elements", "cr_u", "p0_p", "th_u", "th_p")
PUBLISHED_MESH_TABLE: Dict[CaseName, List[Tuple[int, int, int, int, int, int]]] = {
    CaseName.PIPE_BEND: [
        (945, 1792, 5472, 1792, 7362, 945),
        (3681, 7168, 21696, 7168, 29058, 3681),
        (14529, 28672, 86400, 28672, 115458, 14529),
        (57729, 114688, 344832, 114688, 460290, 57729),
    ],
    CaseName.RUGBY: [
        (881, 1664, 5088, 1664, 6850, 881),
        (3425, 6656, 20160, 6656, 27010, 3425),
        (13505, 26624, 80256, 26624, 107266, 13505),
        (53633, 106496, 320256, 106496, 427522, 53633),
    ],
    CaseName.BYPASS: [
        (2174, 4202, 12750, 4202, 17098, 2174),
        (8549, 16808, 50712, 16808, 67810, 8549),
        (33905, 67232, 202272, 67232, 270082, 33905),
        (135041, 268928, 807936, 268928, 1078018, 135041),
    ],
}

# the rugby obstacle holds the solid fraction (1 - beta) of the (2 x 1) channel
DEFAULT_INITIAL: Dict[CaseName, InitialPhase] = {
    CaseName.PIPE_BEND: InitialPhase(kind=InitialPhaseKind.CONSTANT, value=1.0),
    CaseName.LEFT_INFLOW: InitialPhase(kind=InitialPhaseKind.CONSTANT, value=1.0),
    CaseName.THREE_INFLOWS: InitialPhase(kind=InitialPhaseKind.CONSTANT, value=1.0),
    CaseName.RUGBY: InitialPhase(kind=InitialPhaseKind.OBSTACLE, center=(0.5, 0.0), radius=0.2185),
    CaseName.BYPASS: InitialPhase(kind=InitialPhaseKind.CONSTANT, value=1.0),
}


def phase_params(case: CaseName) -> PhaseParams:
    row = PRESETS[CaseName(case)]
    return PhaseParams(epsilon=row.epsilon, gamma=row.gamma, dt=row.dt, s_tilde=row.s_tilde,
                       beta=row.beta, kappa=KAPPA, zeta0=row.zeta0, ell0=ELL0,
                       alpha0=ALPHA0, mu=MU)


def preset_config(case: CaseName,
                  resolution: Optional[int] = None,
                  levels: int = LEVELS,
                  directory: str = "output") -> RunConfig:
    """Full run configuration of a benchmark case with its published parameters"""
    case = CaseName(case)
    row = PRESETS[case]
    return RunConfig(case=case,
                     resolution=resolution or DEFAULT_RESOLUTION[case],
                     iterations=IterationCounts(levels=levels, outer=row.outer, inner=row.inner),
                     phase=phase_params(case),
                     initial=DEFAULT_INITIAL[case],
                     output=OutputOptions(directory=directory))
