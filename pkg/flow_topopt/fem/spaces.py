"""
Discrete spaces: Crouzeix-Raviart velocities, P0 pressures and P1 phase fields.

Transfer operators (interpolation, enrichment, prolongation) and exact
elementwise norms live here; global operators are assembled in assembly.py.
"""
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np

from flow_topopt.errors import FieldError
from flow_topopt.fem.mesh import Mesh
from flow_topopt.fem.quadrature import EDGE_GAUSS2, ORDER4, EdgeRule
from flow_topopt.schema.fields import CrField, EnrichedField, P0Field, P1Field

VectorFunction = Callable[[np.ndarray], np.ndarray]
ScalarFunction = Callable[[np.ndarray], np.ndarray]


class NormKind(str, Enum):
    L2 = "L2"
    BROKEN_H1 = "broken_H1"


def cr_basis(barycentric: np.ndarray) -> np.ndarray:
    """CR shape functions psi_i = 1 - 2*lambda_i at barycentric points, shape (Q, 3)"""
    return 1.0 - 2.0 * np.asarray(barycentric)


def cr_evaluate(u: CrField, barycentric: np.ndarray) -> np.ndarray:
    """Values of the per-cell CR polynomial at barycentric points, shape (T, Q, 2)"""
    local = u.values[u.mesh.cell_to_edges]
    return np.einsum("qi,tic->tqc", cr_basis(barycentric), local)


def cr_cell_gradients(u: CrField) -> np.ndarray:
    """Constant per-cell gradients, grad[t, c, d] = d u_c / d x_d, shape (T, 2, 2)"""
    local = u.values[u.mesh.cell_to_edges]
    return np.einsum("tic,tid->tcd", local, -2.0 * u.mesh.grad_lambda)


def cr_cell_average(u: CrField) -> np.ndarray:
    """Cell means of the CR polynomial (its value at the centroid), shape (T, 2)"""
    return u.values[u.mesh.cell_to_edges].mean(axis=1)


def edge_average(mesh: Mesh, v: VectorFunction, rule: EdgeRule = EDGE_GAUSS2) -> np.ndarray:
    """Mean value of v over every edge, shape (E, 2)"""
    start = mesh.vertices[mesh.edges[:, 0]]
    delta = mesh.vertices[mesh.edges[:, 1]] - start
    points = start[:, None, :] + rule.points[None, :, None] * delta[:, None, :]
    return np.einsum("q,eqc->ec", rule.weights, v(points))


def cr_interpolate(mesh: Mesh, v: VectorFunction) -> CrField:
    """
    Interpolate into the CR space by preserving edge averages.

    The two-point Gauss rule is exact for cubic data, which covers every inlet
    profile and all polynomial fields used in the checks.
    """
    return CrField(mesh=mesh, values=edge_average(mesh, v))


def p1_interpolate(mesh: Mesh, fn: ScalarFunction) -> P1Field:
    return P1Field(mesh=mesh, values=np.asarray(fn(mesh.vertices), dtype=float))


def enrich_cr(u: CrField) -> EnrichedField:
    """
    Map a CR field to conforming P2 nodal values.

    Vertex values average the evaluations of all incident cell polynomials;
    midpoint values are the CR degrees of freedom themselves.
    """
    mesh = u.mesh
    local = u.values[mesh.cell_to_edges]
    # psi_i at local vertex j is 1 - 2*delta_ij
    at_vertices = local.sum(axis=1, keepdims=True) - 2.0 * local
    flat = mesh.cells.ravel()
    counts = np.bincount(flat, minlength=mesh.num_vertices).astype(float)
    vertex_values = np.column_stack([
        np.bincount(flat, weights=at_vertices[:, :, c].ravel(), minlength=mesh.num_vertices)
        for c in range(2)
    ]) / counts[:, None]
    return EnrichedField(mesh=mesh, vertex_values=vertex_values, midpoint_values=u.values.copy())


def prolong_p1(phi: P1Field, fine: Mesh) -> P1Field:
    """
    Nodal interpolation of a P1 field onto its red refinement.

    Raises:
        FieldError: fine is not the red child of phi's mesh
    """
    coarse = phi.mesh
    if not fine.is_child_of(coarse):
        raise FieldError("target mesh is not the red refinement of the field's mesh")
    midpoints = phi.values[coarse.edges].mean(axis=1)
    return P1Field(mesh=fine, values=np.concatenate([phi.values, midpoints]))


def _cr_norm_squared(u: CrField, kind: NormKind) -> float:
    mesh = u.mesh
    if kind == NormKind.L2:
        # CR shape functions are L2-orthogonal on each cell with norm |T|/3
        local = u.values[mesh.cell_to_edges]
        return float(np.sum(mesh.areas / 3.0 * np.einsum("tic,tic->t", local, local)))
    grads = cr_cell_gradients(u)
    return float(np.sum(mesh.areas * np.einsum("tcd,tcd->t", grads, grads)))


def _p1_norm_squared(phi: P1Field, kind: NormKind) -> float:
    mesh = phi.mesh
    local = phi.values[mesh.cells]
    if kind == NormKind.L2:
        quad = np.einsum("ti,ti->t", local, local) + local.sum(axis=1) ** 2
        return float(np.sum(mesh.areas / 12.0 * quad))
    grad = np.einsum("ti,tid->td", local, mesh.grad_lambda)
    return float(np.sum(mesh.areas * np.einsum("td,td->t", grad, grad)))


def field_norms(field: Union[CrField, P1Field], kind: NormKind = NormKind.L2) -> float:
    """L2 norm or broken H1 seminorm, integrated exactly cell by cell"""
    kind = NormKind(kind)
    if isinstance(field, CrField):
        return float(np.sqrt(_cr_norm_squared(field, kind)))
    if isinstance(field, P1Field):
        return float(np.sqrt(_p1_norm_squared(field, kind)))
    raise FieldError(f"no norm defined for {type(field).__name__}")


def discrete_poincare_ratio(u: CrField) -> float:
    """||u||_L2 / ||u||_{1,T}; bounded independently of h on zero-boundary fields"""
    return field_norms(u, NormKind.L2) / field_norms(u, NormKind.BROKEN_H1)


def p0_mean(p: P0Field) -> float:
    return float(p.values @ p.mesh.areas / p.mesh.area)


def velocity_error_norms(u_h: CrField,
                         exact: VectorFunction,
                         exact_gradient: Callable[[np.ndarray], np.ndarray]) -> Tuple[float, float]:
    """
    L2 and broken H1 errors against an analytic velocity.

    exact_gradient returns (..., 2, 2) with entry [c, d] = d u_c / d x_d.
    """
    mesh = u_h.mesh
    points = mesh.cell_points(ORDER4.points)
    diff = exact(points) - cr_evaluate(u_h, ORDER4.points)
    gdiff = exact_gradient(points) - cr_cell_gradients(u_h)[:, None, :, :]
    l2 = np.einsum("t,q,tqc,tqc->", mesh.areas, ORDER4.weights, diff, diff)
    h1 = np.einsum("t,q,tqcd,tqcd->", mesh.areas, ORDER4.weights, gdiff, gdiff)
    return float(np.sqrt(l2)), float(np.sqrt(h1))


def pressure_error_norm(p_h: P0Field, exact: ScalarFunction, remove_mean: bool = True) -> float:
    """L2 error of a P0 pressure, optionally after matching means"""
    mesh = p_h.mesh
    points = mesh.cell_points(ORDER4.points)
    p_exact = exact(points)
    diff = p_exact - p_h.values[:, None]
    if remove_mean:
        diff = diff - np.einsum("t,q,tq->", mesh.areas, ORDER4.weights, diff) / mesh.area
    return float(np.sqrt(np.einsum("t,q,tq,tq->", mesh.areas, ORDER4.weights, diff, diff)))
