from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class BoundaryKind(str, Enum):
    """Kind of boundary condition carried by a boundary edge"""
    INLET = "inlet_dirichlet"
    OUTLET = "outlet_neumann"
    WALL = "wall_dirichlet_zero"


class BoundaryTag(BaseModel):
    """Boundary condition attached to one boundary edge"""
    model_config = ConfigDict(frozen=True)

    kind: BoundaryKind = Field(..., description="Inlet (prescribed g), outlet (natural) or no-slip wall")
    profile: Optional[str] = Field(None, description="Inlet profile id, only for inlet edges")

    @model_validator(mode="after")
    def _profile_only_on_inlets(self):
        if self.kind == BoundaryKind.INLET and not self.profile:
            raise ValueError("inlet tags need a profile id")
        if self.kind != BoundaryKind.INLET and self.profile is not None:
            raise ValueError(f"{self.kind.value} tags carry no profile")
        return self

    @property
    def is_dirichlet(self) -> bool:
        return self.kind != BoundaryKind.OUTLET

    @classmethod
    def inlet(cls, profile: str) -> "BoundaryTag":
        return cls(kind=BoundaryKind.INLET, profile=profile)

    @classmethod
    def outlet(cls) -> "BoundaryTag":
        return cls(kind=BoundaryKind.OUTLET)

    @classmethod
    def wall(cls) -> "BoundaryTag":
        return cls(kind=BoundaryKind.WALL)


class DofReport(BaseModel):
    """Mesh sizes and degrees of freedom of the CR-P0 and Taylor-Hood pairs"""
    level: int = Field(0, description="Refinement level")
    vertices: int = Field(..., ge=0, description="Number of vertices")
    edges: int = Field(..., ge=0, description="Number of edges")
    cells: int = Field(..., ge=0, description="Number of triangles")

    @property
    def cr_velocity_dofs(self) -> int:
        return 2 * self.edges

    @property
    def p0_pressure_dofs(self) -> int:
        return self.cells

    @property
    def th_velocity_dofs(self) -> int:
        return 2 * (self.vertices + self.edges)

    @property
    def th_pressure_dofs(self) -> int:
        return self.vertices

    def as_row(self) -> dict:
        return {
            "level": self.level,
            "vertices": self.vertices,
            "elements": self.cells,
            "cr_u": self.cr_velocity_dofs,
            "p0_p": self.p0_pressure_dofs,
            "th_u": self.th_velocity_dofs,
            "th_p": self.th_pressure_dofs,
        }


class MeshQuality(BaseModel):
    """Shape measures of a triangulation"""
    h_max: float = Field(..., description="Largest local mesh size |T|^(1/2)")
    min_angle: float = Field(..., description="Smallest interior angle in degrees")
