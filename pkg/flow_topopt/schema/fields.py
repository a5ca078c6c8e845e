import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from flow_topopt.errors import FieldError
from flow_topopt.fem.mesh import Mesh


class _DiscreteField(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mesh: Mesh = Field(..., description="Mesh the field lives on")
    values: np.ndarray = Field(..., description="Degrees of freedom")

    def _expect_shape(self, shape):
        if self.values.shape != shape:
            raise FieldError(f"{type(self).__name__} needs values of shape {shape}, "
                             f"got {self.values.shape}")

    def require_mesh(self, mesh: Mesh) -> None:
        if self.mesh is not mesh:
            raise FieldError(f"{type(self).__name__} lives on a different mesh")


class CrField(_DiscreteField):
    """Crouzeix-Raviart vector field: one velocity vector per edge, shape (E, 2)"""

    @model_validator(mode="after")
    def _check_shape(self):
        self._expect_shape((self.mesh.num_edges, 2))
        return self

    @property
    def vector(self) -> np.ndarray:
        """Global DOF vector: all x-components by edge, then all y-components"""
        return np.concatenate([self.values[:, 0], self.values[:, 1]])

    @classmethod
    def from_vector(cls, mesh: Mesh, vector: np.ndarray) -> "CrField":
        ne = mesh.num_edges
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (2 * ne,):
            raise FieldError(f"velocity vector needs {2 * ne} entries, got {vector.shape}")
        return cls(mesh=mesh, values=np.column_stack([vector[:ne], vector[ne:]]))

    @classmethod
    def zeros(cls, mesh: Mesh) -> "CrField":
        return cls(mesh=mesh, values=np.zeros((mesh.num_edges, 2)))


class P0Field(_DiscreteField):
    """Piecewise-constant scalar field: one value per cell"""

    @model_validator(mode="after")
    def _check_shape(self):
        self._expect_shape((self.mesh.num_cells,))
        return self


class P1Field(_DiscreteField):
    """Continuous piecewise-linear scalar field: one value per vertex"""

    @model_validator(mode="after")
    def _check_shape(self):
        self._expect_shape((self.mesh.num_vertices,))
        return self

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "P1Field":
        return cls(mesh=mesh, values=np.full(mesh.num_vertices, float(value)))

    def with_values(self, values: np.ndarray) -> "P1Field":
        return P1Field(mesh=self.mesh, values=np.asarray(values, dtype=float))


class EnrichedField(BaseModel):
    """Conforming P2 nodal values of an enriched CR field"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mesh: Mesh
    vertex_values: np.ndarray = Field(..., description="(V, 2) values at vertices")
    midpoint_values: np.ndarray = Field(..., description="(E, 2) values at edge midpoints")

    @property
    def nodal(self) -> np.ndarray:
        return np.vstack([self.vertex_values, self.midpoint_values])
