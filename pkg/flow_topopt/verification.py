"""
Self-checks behind `flow-topopt verify`.

Each check exercises one contract of the discretization on small inputs
and reports a CheckResult; none of them writes files.
"""
from typing import Callable, List

import numpy as np
from loguru import logger
from pydantic import BaseModel

from flow_topopt.fem.assembly import (assemble_cr_stiffness, assemble_p1_operators,
                                      assemble_weighted_cr_mass)
from flow_topopt.fem.cases import CaseName, generate_case_mesh
from flow_topopt.fem.mesh import build_topology, reference_dof_table, refine_red
from flow_topopt.fem.phasefield import PhaseStepper, update_duals
from flow_topopt.fem.quadrature import gauss_edge
from flow_topopt.fem.spaces import NormKind, cr_interpolate, enrich_cr, field_norms
from flow_topopt.fem.stokes import solve_state
from flow_topopt.presets import PUBLISHED_COLUMNS, PUBLISHED_MESH_TABLE, REFERENCE_LEVEL0, phase_params
from flow_topopt.schema.fields import CrField, P1Field
from flow_topopt.schema.params import DualState

TOL = 1e-12
DIVERGENCE_TOL = 1e-9

# smallest grids that put every boundary segment on grid lines
VERIFY_RESOLUTION = {
    CaseName.PIPE_BEND: 10,
    CaseName.LEFT_INFLOW: 10,
    CaseName.THREE_INFLOWS: 10,
    CaseName.RUGBY: 4,
    CaseName.BYPASS: 20,
}


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


def check_dof_table() -> CheckResult:
    mismatches = []
    for case, published in PUBLISHED_MESH_TABLE.items():
        rows = reference_dof_table(*REFERENCE_LEVEL0[case], levels=len(published) - 1)
        for row, expected in zip(rows, published):
            computed = row.as_row()
            wrong = [c for c, value in zip(PUBLISHED_COLUMNS, expected) if computed[c] != value]
            if wrong:
                mismatches.append(f"{case.value} level {row.level}: {', '.join(wrong)}")
    return CheckResult(name="dof_table", passed=not mismatches,
                       detail="; ".join(mismatches) or "published mesh table reproduced")


def _random_triangle(rng: np.random.Generator) -> np.ndarray:
    while True:
        p = rng.uniform(-1.0, 1.0, size=(3, 2))
        d1, d2 = p[1] - p[0], p[2] - p[0]
        signed = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if abs(signed) > 1e-3:
            return p if signed > 0 else p[[0, 2, 1]]


def check_local_matrices(samples: int = 50, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = _random_triangle(rng)
        mesh = build_topology(p, np.array([[0, 1, 2]]))
        area = mesh.areas[0]
        # edge vectors opposite each vertex
        e = np.roll(p, -2, axis=0) - np.roll(p, -1, axis=0)
        exact_stiffness = (e @ e.T) / area
        exact_p1_mass = area / 12.0 * (np.ones((3, 3)) + np.eye(3))

        local = mesh.cell_to_edges[0]
        stiffness = assemble_cr_stiffness(mesh).csr.toarray()[np.ix_(local, local)]
        cr_mass = assemble_weighted_cr_mass(mesh).csr.toarray()[np.ix_(local, local)]
        _, p1_mass = assemble_p1_operators(mesh)
        errors = [
            np.abs(stiffness - exact_stiffness).max() / np.abs(exact_stiffness).max(),
            np.abs(cr_mass - area / 3.0 * np.eye(3)).max() / area,
            np.abs(p1_mass.csr.toarray() - exact_p1_mass).max() / area,
        ]
        worst = max(worst, *errors)
    return CheckResult(name="local_matrices", passed=worst <= TOL,
                       detail=f"max relative error {worst:.2e} on {samples} triangles")


def check_interpolation() -> CheckResult:
    mesh = refine_red(generate_case_mesh(CaseName.PIPE_BEND, 10))

    def cubic(x):
        return np.stack([x[..., 0] ** 3 - x[..., 1], x[..., 0] * x[..., 1] ** 2], axis=-1)

    def linear(x):
        return np.stack([2.0 * x[..., 0] - x[..., 1] + 0.5, x[..., 0] + 3.0 * x[..., 1]], axis=-1)

    rule = gauss_edge(10)
    start = mesh.vertices[mesh.edges[:, 0]]
    delta = mesh.vertices[mesh.edges[:, 1]] - start
    points = start[:, None, :] + rule.points[None, :, None] * delta[:, None, :]
    averages = np.einsum("q,eqc->ec", rule.weights, cubic(points))
    average_error = np.abs(cr_interpolate(mesh, cubic).values - averages).max()

    u = cr_interpolate(mesh, linear)
    enriched = enrich_cr(u)
    vertex_error = np.abs(enriched.vertex_values - linear(mesh.vertices)).max()
    midpoint_error = np.abs(enriched.midpoint_values - u.values).max()
    worst = max(average_error, vertex_error, midpoint_error)
    return CheckResult(name="interpolation", passed=worst <= TOL,
                       detail=f"edge averages {average_error:.1e}, enrichment {vertex_error:.1e}")


def check_phase_fixed_points() -> CheckResult:
    mesh = generate_case_mesh(CaseName.PIPE_BEND, 10)
    zero_u = CrField.zeros(mesh)
    no_duals = DualState.switched_off()

    params = phase_params(CaseName.PIPE_BEND)
    zero_phi = P1Field.constant(mesh, 0.0)
    well_error = np.abs(PhaseStepper(zero_u, params).step(zero_phi, no_duals).values).max()

    frozen = params.model_copy(update={"gamma": 0.0, "s_tilde": 0.0})
    phi = P1Field(mesh=mesh, values=np.random.default_rng(1).uniform(0.0, 1.0, mesh.num_vertices))
    identity_error = np.abs(PhaseStepper(zero_u, frozen).step(phi, no_duals).values - phi.values).max()
    worst = max(well_error, identity_error)
    return CheckResult(name="phase_fixed_points", passed=worst <= TOL,
                       detail=f"well {well_error:.1e}, frozen step {identity_error:.1e}")


def check_dual_updates() -> CheckResult:
    params = phase_params(CaseName.PIPE_BEND)
    updated = update_duals(DualState(ell=0.0, zeta=100.0), 0.01, params)
    unchanged = update_duals(DualState(ell=2.5, zeta=100.0), 0.0, params)
    passed = (abs(updated.ell - 1.0) <= TOL and abs(updated.zeta - 110.0) <= 1e-12 * 110.0
              and unchanged.ell == 2.5)
    return CheckResult(name="dual_updates", passed=passed,
                       detail=f"ell {updated.ell!r}, zeta {updated.zeta!r}")


def check_mass_conservation() -> CheckResult:
    worst = 0.0
    for case, n in VERIFY_RESOLUTION.items():
        params = phase_params(case)
        mesh = generate_case_mesh(case, n)
        for _ in range(2):
            phi = P1Field.constant(mesh, params.beta)
            sol = solve_state(mesh, phi, params.physics)
            h_min = float(np.sqrt(mesh.areas.min()))
            scale = max(field_norms(sol.u, NormKind.BROKEN_H1) / h_min, 1.0)
            worst = max(worst, sol.max_cell_divergence / scale)
            mesh = refine_red(mesh)
    return CheckResult(name="mass_conservation", passed=worst <= DIVERGENCE_TOL,
                       detail=f"max scaled cell divergence {worst:.2e}")


CHECKS: List[Callable[[], CheckResult]] = [
    check_dof_table,
    check_local_matrices,
    check_interpolation,
    check_phase_fixed_points,
    check_dual_updates,
    check_mass_conservation,
]


def run_checks() -> List[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            result = check()
        except Exception as exc:  # a crashing check is a failed check
            result = CheckResult(name=check.__name__.removeprefix("check_"), passed=False,
                                 detail=f"{type(exc).__name__}: {exc}")
        logger.info("{} {}: {}", "PASS" if result.passed else "FAIL", result.name, result.detail)
        results.append(result)
    return results
