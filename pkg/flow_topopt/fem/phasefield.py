"""
Phase-field update: double-well chemistry, Ginzburg-Landau and augmented
Lagrangian energies, the stabilized semi-implicit gradient step, box
projection and the Uzawa update of the volume multiplier.
"""
import weakref
from typing import Tuple

import numpy as np
import scipy.sparse.linalg as spla
from loguru import logger

from flow_topopt.fem.assembly import (SparseMatrix, assemble_p1_load, assemble_p1_operators,
                                      assemble_p1_weighted_mass, phi_at_quadrature)
from flow_topopt.fem.mesh import Mesh
from flow_topopt.fem.quadrature import ORDER4
from flow_topopt.fem.spaces import NormKind, cr_evaluate, field_norms
from flow_topopt.fem.stokes import brinkman_energy
from flow_topopt.schema.fields import CrField, P1Field
from flow_topopt.schema.history import ObjectiveBreakdown
from flow_topopt.schema.params import DualState, PhaseParams


def double_well(phi):
    """f(phi) = 1/4 phi^2 (1 - phi)^2"""
    return 0.25 * phi ** 2 * (1.0 - phi) ** 2


def double_well_prime(phi):
    """f'(phi) = 1/2 phi (1 - phi) (1 - 2 phi)"""
    return 0.5 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)


# entries die with their mesh, so refined levels do not pile up
_P1_OPERATORS: "weakref.WeakKeyDictionary[Mesh, Tuple[SparseMatrix, SparseMatrix]]" = \
    weakref.WeakKeyDictionary()


def p1_operators(mesh: Mesh) -> Tuple[SparseMatrix, SparseMatrix]:
    """P1 stiffness and mass, kept only as long as the mesh itself is alive"""
    operators = _P1_OPERATORS.get(mesh)
    if operators is None:
        operators = _P1_OPERATORS[mesh] = assemble_p1_operators(mesh)
    return operators


def fluid_volume(phi: P1Field) -> float:
    """integral of phi, which is 1^T M phi for P1"""
    mesh = phi.mesh
    return float(mesh.areas @ phi.values[mesh.cells].mean(axis=1))


def volume_gap(phi: P1Field, beta: float) -> float:
    """W(phi) = integral of phi - beta |Omega|"""
    return fluid_volume(phi) - beta * phi.mesh.area


def ginzburg_landau(phi: P1Field, params: PhaseParams) -> float:
    """P_eps = eps/2 |grad phi|^2 + 1/eps integral f(phi), quadrature of degree 4"""
    stiffness, _ = p1_operators(phi.mesh)
    gradient_part = 0.5 * params.epsilon * stiffness.quadratic_form(phi.values)
    well = double_well(phi_at_quadrature(phi))
    well_part = np.einsum("t,q,tq->", phi.mesh.areas, ORDER4.weights, well) / params.epsilon
    return float(gradient_part + well_part)


def augmented_lagrangian(phi: P1Field, u: CrField, duals: DualState,
                         params: PhaseParams) -> ObjectiveBreakdown:
    """L = J + ell*W + zeta/2*W^2 with J = Brinkman + dissipated + gamma*P_eps"""
    phi.require_mesh(u.mesh)
    gap = volume_gap(phi, params.beta)
    return ObjectiveBreakdown(
        brinkman=brinkman_energy(u, phi, params.alpha0),
        dissipated=0.5 * params.mu * field_norms(u, NormKind.BROKEN_H1) ** 2,
        ginzburg_landau=params.gamma * ginzburg_landau(phi, params),
        multiplier_term=duals.ell * gap,
        penalty_term=0.5 * duals.zeta * gap ** 2,
        volume_gap=gap,
    )


class PhaseStepper:
    """
    Stabilized semi-implicit Allen-Cahn step with the velocity frozen.

    Solves [(1/dt) M + eps*gamma K + M_w + zeta m m^T] phi+ = (1/dt) M phi + b
    where M_w is the mass weighted by 1/2 alpha0 |u|^2 + S, m = M 1 is the
    vector of basis integrals and b collects the explicit parts of the first
    variation. The penalty zeta*W is taken at phi+, which keeps the step stable
    however large zeta grows; at a fixed point phi+ = phi both forms agree.

    The sparse part depends on u only, so it is factorized once and reused for
    every inner step. The rank-one penalty is added by Sherman-Morrison.
    """

    def __init__(self, u: CrField, params: PhaseParams):
        self.mesh = u.mesh
        self.params = params
        values = cr_evaluate(u, ORDER4.points)
        self.speed2 = np.einsum("tqc,tqc->tq", values, values)
        self.half_brinkman = 0.5 * params.alpha0 * self.speed2

        stiffness, mass = p1_operators(self.mesh)
        self.mass = mass
        self.basis_integrals = np.asarray(mass.csr.sum(axis=1)).ravel()
        weighted = assemble_p1_weighted_mass(self.mesh, self.half_brinkman + params.s_tilde)
        self.matrix = (mass.csr / params.dt + params.epsilon * params.gamma * stiffness.csr
                       + weighted.csr).tocsc()
        self._solve = spla.factorized(self.matrix)
        self._response = self._solve(self.basis_integrals)
        logger.debug("PhaseStepper initialized with {} nodes, max |u|^2 {:.3e}",
                     self.mesh.num_vertices, float(self.speed2.max(initial=0.0)))

    def load(self, phi: P1Field, duals: DualState) -> np.ndarray:
        """Explicit right-hand side b, integrated against the P1 basis"""
        p = self.params
        at_q = phi_at_quadrature(phi)
        gap = volume_gap(phi, p.beta)
        integrand = (-(p.gamma / p.epsilon) * double_well_prime(at_q)
                     + p.alpha0 * self.speed2
                     - duals.ell - duals.zeta * gap
                     + (p.s_tilde - self.half_brinkman) * at_q)
        return assemble_p1_load(self.mesh, integrand)

    def step(self, phi: P1Field, duals: DualState) -> P1Field:
        """One step without projection"""
        phi.require_mesh(self.mesh)
        m = self.basis_integrals
        # move zeta*(m.phi) m from the explicit load to the matrix
        rhs = (self.mass @ phi.values / self.params.dt + self.load(phi, duals)
               + duals.zeta * (m @ phi.values) * m)
        solution = self._solve(rhs)
        if duals.zeta > 0.0:
            solution = solution - self._response * (duals.zeta * (m @ solution)
                                                    / (1.0 + duals.zeta * (m @ self._response)))
        return phi.with_values(solution)


def phase_step(phi: P1Field, u: CrField, duals: DualState, params: PhaseParams) -> P1Field:
    return PhaseStepper(u, params).step(phi, duals)


def project_box(phi: P1Field) -> P1Field:
    """Pointwise min(max(0, phi), 1)"""
    return phi.with_values(np.clip(phi.values, 0.0, 1.0))


def update_duals(duals: DualState, gap: float, params: PhaseParams) -> DualState:
    """ell+ = ell + zeta*W, zeta+ = kappa*zeta"""
    return DualState(ell=duals.ell + duals.zeta * gap, zeta=params.kappa * duals.zeta)
