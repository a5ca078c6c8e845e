from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from flow_topopt.fem.cases import CaseName


class PhysParams(BaseModel):
    """Material constants of the Stokes-Brinkman state equation"""
    model_config = ConfigDict(frozen=True)

    mu: float = Field(1.0, gt=0, description="Viscosity")
    alpha0: float = Field(10000.0, ge=0, description="Inverse permeability of the solid phase")


class PhaseParams(BaseModel):
    """All scalars of the phase-field gradient flow and the augmented Lagrangian"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(..., gt=0, description="Interface width of the Ginzburg-Landau energy")
    gamma: float = Field(..., gt=0, description="Weight of the Ginzburg-Landau regularization")
    dt: float = Field(..., gt=0, description="Pseudo-time step of the gradient flow")
    s_tilde: float = Field(..., ge=0, description="Stabilization of the semi-implicit step")
    beta: float = Field(..., gt=0, lt=1, description="Target fluid volume fraction")
    kappa: float = Field(1.1, ge=1, description="Growth factor of the penalty parameter")
    zeta0: float = Field(..., gt=0, description="Initial penalty parameter")
    ell0: float = Field(0.0, description="Initial Lagrange multiplier")
    alpha0: float = Field(10000.0, ge=0, description="Inverse permeability of the solid phase")
    mu: float = Field(1.0, gt=0, description="Viscosity")

    @property
    def physics(self) -> PhysParams:
        return PhysParams(mu=self.mu, alpha0=self.alpha0)


class DualState(BaseModel):
    """Lagrange multiplier and penalty parameter of the volume constraint"""
    model_config = ConfigDict(frozen=True)

    ell: float = Field(0.0, description="Lagrange multiplier")
    zeta: float = Field(..., gt=0, description="Penalty parameter")

    @classmethod
    def initial(cls, params: PhaseParams) -> "DualState":
        return cls(ell=params.ell0, zeta=params.zeta0)

    @classmethod
    def switched_off(cls) -> "DualState":
        """
        ell = zeta = 0, which drops the volume terms from a phase step.

        Only for pure Allen-Cahn steps and fixed-point checks; skips the
        zeta > 0 validation that every optimization run must satisfy.
        """
        return cls.model_construct(ell=0.0, zeta=0.0)


class InitialPhaseKind(str, Enum):
    CONSTANT = "constant"
    RANDOM = "random"
    DISK = "disk"
    OBSTACLE = "obstacle"


class InitialPhase(BaseModel):
    """How the level-0 phase field is initialized"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: InitialPhaseKind = Field(InitialPhaseKind.CONSTANT,
                                   description="Constant, random, disk or obstacle")
    value: Optional[float] = Field(None, ge=0, le=1,
                                   description="Value of a constant initial field; beta when omitted")
    seed: int = Field(0, ge=0, description="Seed of the uniform random field")
    center: Tuple[float, float] = Field((0.5, 0.5), description="Disk centre")
    radius: float = Field(0.25, gt=0, description="Disk radius")


class IterationCounts(BaseModel):
    """Loop bounds of the nested optimization"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    levels: int = Field(3, ge=0, description="Number of uniform refinements K")
    outer: int = Field(50, ge=1, description="State solves per level N")
    inner: int = Field(10, ge=1, description="Phase-field steps per state solve M")
    max_seconds: Optional[float] = Field(None, gt=0, description="Optional wall-time budget")


class OutputOptions(BaseModel):
    """Where and what a run writes"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: str = Field("output", description="Output directory")
    record_wall_time: bool = Field(True, description="Write elapsed seconds in the history")
    write_vtk: bool = Field(True, description="Export fields at every level boundary")
    plot: bool = Field(False, description="Write an HTML convergence plot")


class RunConfig(BaseModel):
    """Complete input of an optimization run"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    case: CaseName = Field(..., description="Benchmark case")
    resolution: int = Field(..., ge=4, description="Grid steps per unit length of the level-0 mesh")
    iterations: IterationCounts = Field(default_factory=IterationCounts)
    phase: PhaseParams
    initial: InitialPhase = Field(default_factory=InitialPhase)
    output: OutputOptions = Field(default_factory=OutputOptions)

    @property
    def physics(self) -> PhysParams:
        return self.phase.physics
