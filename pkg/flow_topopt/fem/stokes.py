"""
Discrete Stokes-Brinkman problem on the CR-P0 pair.

The unknowns (u, p) solve the symmetric saddle system

    [  A  -B^T ] [u]   [F]
    [ -B   0   ] [p] = [0]

with A = mu*K + M_alpha(phi). Dirichlet velocities are eliminated
symmetrically; outlets carry the natural condition and fix the pressure.
Without an outlet the pressure is pinned to mean zero by a bordered
multiplier, which also absorbs any net flux of the boundary data.
"""
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from flow_topopt.errors import ConvergenceError, GaugeError, SolverError
from flow_topopt.fem.assembly import (SparseMatrix, apply_dirichlet, assemble_cr_stiffness,
                                      assemble_divergence, assemble_velocity_load,
                                      assemble_weighted_cr_mass, phi_at_quadrature)
from flow_topopt.fem.cases import inlet_profile
from flow_topopt.fem.mesh import Mesh
from flow_topopt.fem.quadrature import ORDER4, gauss_edge
from flow_topopt.fem.spaces import NormKind, cr_evaluate, edge_average, field_norms
from flow_topopt.schema.fields import CrField, P0Field, P1Field
from flow_topopt.schema.params import PhysParams

VectorFunction = Callable[[np.ndarray], np.ndarray]

RESIDUAL_TOL = 1e-10
REFINEMENT_STEPS = 3
# exact edge means up to degree 5, which covers the quartic bypass profile
BOUNDARY_RULE = gauss_edge(3)


def inverse_permeability(alpha0: float) -> Callable[[np.ndarray], np.ndarray]:
    """alpha(phi) = alpha0 * (1 - phi)^2: zero in fluid, alpha0 in solid"""
    def alpha(phi: np.ndarray) -> np.ndarray:
        return alpha0 * (1.0 - phi) ** 2
    return alpha


class SaddleSystem(BaseModel):
    """Assembled blocks and boundary data of one state problem"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mesh: Mesh
    velocity_block: SparseMatrix = Field(..., description="A = mu*K + M_alpha(phi)")
    divergence: SparseMatrix = Field(..., description="B, one row per cell")
    load: np.ndarray = Field(..., description="F, integral of f against the CR basis")
    dirichlet_dofs: np.ndarray = Field(..., description="Constrained velocity DOFs")
    dirichlet_values: np.ndarray = Field(..., description="Edge averages of the boundary datum")
    mean_zero_pressure: bool = Field(..., description="True when no outlet fixes the pressure")

    @property
    def num_velocity_dofs(self) -> int:
        return self.velocity_block.shape[0]

    @property
    def num_pressure_dofs(self) -> int:
        return self.divergence.shape[0]

    def block_matrix(self) -> sp.csr_matrix:
        """The saddle matrix, bordered by cell areas when the pressure needs a gauge"""
        a, b = self.velocity_block.csr, self.divergence.csr
        if not self.mean_zero_pressure:
            return sp.bmat([[a, -b.T], [-b, None]], format="csr")
        areas = sp.csr_matrix(self.mesh.areas[:, None])
        zero_col = sp.csr_matrix((a.shape[0], 1))
        return sp.bmat([[a, -b.T, zero_col],
                        [-b, None, areas],
                        [zero_col.T, areas.T, None]], format="csr")

    def block_rhs(self) -> np.ndarray:
        extra = 1 if self.mean_zero_pressure else 0
        return np.concatenate([self.load, np.zeros(self.num_pressure_dofs + extra)])


class StokesSolution(BaseModel):
    """Velocity, pressure and solve diagnostics of one state problem"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u: CrField
    p: P0Field
    linear_residual: float = Field(..., description="Relative residual of the eliminated system")
    max_cell_divergence: float = Field(..., description="max over cells of |integral div u| / |T|")
    flux_defect: float = Field(0.0, description="Net outflow forced by incompatible Dirichlet data")
    solver: str = Field("direct", description="direct or minres")

    @property
    def mesh(self) -> Mesh:
        return self.u.mesh


def _dirichlet_data(mesh: Mesh, g: Optional[VectorFunction]) -> Tuple[np.ndarray, np.ndarray]:
    edges = mesh.dirichlet_edges
    values = np.zeros((mesh.num_edges, 2))
    if g is not None:
        values[edges] = edge_average(mesh, g, BOUNDARY_RULE)[edges]
    else:
        for name, group in mesh.inlet_groups().items():
            values[group] = edge_average(mesh, inlet_profile(name), BOUNDARY_RULE)[group]
    dofs = np.concatenate([edges, edges + mesh.num_edges])
    return dofs, np.concatenate([values[edges, 0], values[edges, 1]])


def build_system(mesh: Mesh,
                 phi: P1Field,
                 phys: PhysParams,
                 f: Optional[VectorFunction] = None,
                 g: Optional[VectorFunction] = None) -> SaddleSystem:
    """
    Assemble the Stokes-Brinkman saddle system for a frozen phase field.

    Args:
        mesh: mesh carrying the boundary tags
        phi: phase field on mesh
        phys: viscosity and solid inverse permeability
        f: body force, zero when omitted
        g: Dirichlet datum applied on every Dirichlet edge; when omitted the
           inlet profiles of the tags are used and walls get zero

    Raises:
        GaugeError: the boundary data leave pressure or velocity undetermined
    """
    phi.require_mesh(mesh)
    has_dirichlet = mesh.dirichlet_edges.size > 0
    if not has_dirichlet and not mesh.has_outlet:
        raise GaugeError("no Dirichlet edges and no outlet: the pressure gauge is undetermined")

    alpha = inverse_permeability(phys.alpha0)
    if not has_dirichlet and not np.any(alpha(phi_at_quadrature(phi)) > 0):
        raise GaugeError("no Dirichlet edges and a vanishing Brinkman term: "
                         "constant velocities are undetermined")

    stiffness = assemble_cr_stiffness(mesh)
    mass = assemble_weighted_cr_mass(mesh, phi, alpha)
    velocity_block = SparseMatrix((phys.mu * stiffness.csr + mass.csr).tocsr(), symmetric=True)
    dofs, values = _dirichlet_data(mesh, g)
    return SaddleSystem(mesh=mesh,
                        velocity_block=velocity_block,
                        divergence=assemble_divergence(mesh),
                        load=assemble_velocity_load(mesh, f),
                        dirichlet_dofs=dofs,
                        dirichlet_values=values,
                        mean_zero_pressure=not mesh.has_outlet)


def _first_empty_row(matrix: sp.csr_matrix) -> Optional[int]:
    empty = np.flatnonzero(np.diff(matrix.indptr) == 0)
    return int(empty[0]) if empty.size else None


def _relative_residual(matrix: sp.csr_matrix, x: np.ndarray, rhs: np.ndarray) -> float:
    scale = np.linalg.norm(rhs)
    residual = np.linalg.norm(rhs - matrix @ x)
    return float(residual / scale) if scale > 0 else float(residual)


def _solve_direct(matrix: sp.csr_matrix, rhs: np.ndarray) -> Tuple[np.ndarray, float]:
    try:
        lu = spla.splu(matrix.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"factorization of the saddle system failed: {exc}",
                          dof=_first_empty_row(matrix)) from exc
    x = lu.solve(rhs)
    residual = _relative_residual(matrix, x, rhs)
    steps = 0
    while residual > RESIDUAL_TOL and steps < REFINEMENT_STEPS:
        x = x + lu.solve(rhs - matrix @ x)
        residual = _relative_residual(matrix, x, rhs)
        steps += 1
    if steps:
        logger.warning("Direct solve needed {} refinement step(s), residual {:.2e}", steps, residual)
    if not np.all(np.isfinite(x)):
        raise SolverError("direct solve produced non-finite values",
                          dof=int(np.flatnonzero(~np.isfinite(x))[0]))
    if residual > RESIDUAL_TOL:
        raise SolverError(f"direct solve stalled at relative residual {residual:.2e}")
    return x, residual


def _solve_minres(matrix: sp.csr_matrix, rhs: np.ndarray) -> Tuple[np.ndarray, float]:
    # the stopping test of MINRES is scaled by |A||x|, hence the tighter rtol
    x, info = spla.minres(matrix, rhs, rtol=1e-3 * RESIDUAL_TOL, maxiter=20 * matrix.shape[0])
    residual = _relative_residual(matrix, x, rhs)
    if residual > RESIDUAL_TOL:
        raise ConvergenceError(f"MINRES stopped with info={info} at relative residual {residual:.2e}")
    return x, residual


def solve_saddle(system: SaddleSystem, method: str = "direct") -> StokesSolution:
    """
    Solve the eliminated saddle system to a relative residual of 1e-10.

    Raises:
        SolverError: the factorization broke down
        ConvergenceError: MINRES missed the residual contract
    """
    solvers = {"direct": _solve_direct, "minres": _solve_minres}
    if method not in solvers:
        raise ValueError(f"unknown solver '{method}', expected one of {sorted(solvers)}")

    matrix, rhs = apply_dirichlet(system.block_matrix(), system.block_rhs(),
                                  system.dirichlet_dofs, system.dirichlet_values)
    if np.linalg.norm(rhs) == 0.0:
        x, residual = np.zeros_like(rhs), 0.0
    else:
        x, residual = solvers[method](matrix, rhs)

    mesh = system.mesh
    nu, npr = system.num_velocity_dofs, system.num_pressure_dofs
    u = CrField.from_vector(mesh, x[:nu])
    pressure = x[nu:nu + npr]
    flux_defect = float(x[-1] * mesh.area) if system.mean_zero_pressure else 0.0
    divergence = system.divergence @ x[:nu]
    max_div = float(np.max(np.abs(divergence) / mesh.areas))
    if abs(flux_defect) > RESIDUAL_TOL * max(1.0, float(np.abs(system.dirichlet_values).max(initial=0.0))):
        logger.warning("Dirichlet data carry a net flux of {:.3e}; divergence absorbs it", flux_defect)
    logger.debug("Solved saddle system ({}, {} unknowns): residual {:.2e}, max cell divergence {:.2e}",
                 method, len(rhs), residual, max_div)
    return StokesSolution(u=u, p=P0Field(mesh=mesh, values=pressure),
                          linear_residual=residual, max_cell_divergence=max_div,
                          flux_defect=flux_defect, solver=method)


def solve_state(mesh: Mesh,
                phi: P1Field,
                phys: PhysParams,
                f: Optional[VectorFunction] = None,
                g: Optional[VectorFunction] = None,
                method: str = "direct") -> StokesSolution:
    """State solve u = S(phi) with the boundary data carried by the mesh tags"""
    return solve_saddle(build_system(mesh, phi, phys, f=f, g=g), method=method)


def brinkman_energy(u: CrField, phi: P1Field, alpha0: float) -> float:
    """1/2 integral of alpha(phi)|u|^2, exact for the quartic integrand"""
    phi.require_mesh(u.mesh)
    values = cr_evaluate(u, ORDER4.points)
    alpha = inverse_permeability(alpha0)(phi_at_quadrature(phi))
    speed2 = np.einsum("tqc,tqc->tq", values, values)
    return float(0.5 * np.einsum("t,q,tq,tq->", u.mesh.areas, ORDER4.weights, alpha, speed2))


def state_diagnostics(sol: StokesSolution, phi: P1Field, phys: PhysParams) -> Tuple[float, float]:
    """(dissipated power 1/2 mu |u|_{1,T}^2, Brinkman energy 1/2 u^T M(phi) u)"""
    dissipated = 0.5 * phys.mu * field_norms(sol.u, NormKind.BROKEN_H1) ** 2
    return dissipated, brinkman_energy(sol.u, phi, phys.alpha0)


def energy_balance(system: SaddleSystem, sol: StokesSolution) -> Tuple[float, float]:
    """
    Both sides of the discrete energy identity, tested with v = u - lift.

    Returns (v^T A u, F.v + p.(B u - B lift)); they agree up to the solver
    residual. On a divergence-free solution with homogeneous data the right
    side reduces to the work of the body force.
    """
    u = sol.u.vector
    lift = np.zeros_like(u)
    lift[system.dirichlet_dofs] = system.dirichlet_values
    v = u - lift
    energy = float(v @ (system.velocity_block @ u))
    b = system.divergence
    work = float(system.load @ v + sol.p.values @ (b @ u - b @ lift))
    return energy, work
