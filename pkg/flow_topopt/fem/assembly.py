"""
Element integration and global sparse assembly.

Every bilinear form is integrated exactly: constant integrands with the
centroid rule, the quadratic-times-quadratic integrands arising from
alpha0*(1 - phi)^2 with the six-point degree-4 rule. Physical constants (mu,
1/dt) are applied when systems are composed, never inside the operators.
"""
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from flow_topopt.errors import AssemblyError, FieldError
from flow_topopt.fem.mesh import DEGENERATE_AREA, Mesh
from flow_topopt.fem.quadrature import ORDER4, TriangleRule
from flow_topopt.fem.spaces import cr_basis
from flow_topopt.schema.fields import P1Field

ScalarMap = Callable[[np.ndarray], np.ndarray]
VectorFunction = Callable[[np.ndarray], np.ndarray]


class SparseMatrix:
    """Finalized CSR matrix with a symmetry flag"""

    def __init__(self, csr: sp.csr_matrix, symmetric: bool = False):
        self.csr = csr
        self.symmetric = symmetric

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.csr.nnz}, symmetric={self.symmetric})"

    @property
    def shape(self) -> Tuple[int, int]:
        return self.csr.shape

    def __matmul__(self, other):
        return self.csr @ other

    def quadratic_form(self, v: np.ndarray) -> float:
        return float(v @ (self.csr @ v))

    def asymmetry(self) -> float:
        """max |a_ij - a_ji| relative to max |a_ij|"""
        scale = abs(self.csr).max() if self.csr.nnz else 0.0
        if scale == 0.0:
            return 0.0
        return float(abs(self.csr - self.csr.T).max() / scale)

    def scaled(self, factor: float) -> "SparseMatrix":
        return SparseMatrix(self.csr * factor, self.symmetric)


class TripletAssembler:
    """
    Collects (row, col, value) blocks and sums duplicates in a fixed order.

    Duplicates are reduced after sorting by row, column and value, so the
    finalized matrix does not depend on the order cells were visited in.
    """

    def __init__(self, shape: Tuple[int, int]):
        self.shape = shape
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []

    def add(self, rows: np.ndarray, cols: np.ndarray, values: np.ndarray) -> None:
        rows, cols, values = np.broadcast_arrays(rows, cols, values)
        self._rows.append(rows.ravel().astype(np.int64))
        self._cols.append(cols.ravel().astype(np.int64))
        self._vals.append(values.ravel().astype(float))

    def add_local(self, dofs_row: np.ndarray, dofs_col: np.ndarray, local: np.ndarray) -> None:
        """Scatter per-cell blocks local[t, i, j] to (dofs_row[t, i], dofs_col[t, j])"""
        self.add(dofs_row[:, :, None], dofs_col[:, None, :], local)

    def finalize(self, symmetric: bool = False) -> SparseMatrix:
        nrows, ncols = self.shape
        if not self._rows:
            return SparseMatrix(sp.csr_matrix(self.shape), symmetric)
        rows = np.concatenate(self._rows)
        cols = np.concatenate(self._cols)
        vals = np.concatenate(self._vals)
        order = np.lexsort((vals, cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        keys = rows * ncols + cols
        starts = np.flatnonzero(np.concatenate([[True], keys[1:] != keys[:-1]]))
        data = np.add.reduceat(vals, starts)
        indptr = np.concatenate([[0], np.cumsum(np.bincount(rows[starts], minlength=nrows))])
        csr = sp.csr_matrix((data, cols[starts], indptr), shape=self.shape)
        return SparseMatrix(csr, symmetric)


def _check_cells(mesh: Mesh) -> None:
    small = np.flatnonzero(mesh.areas <= DEGENERATE_AREA * mesh.diameter ** 2)
    if small.size:
        raise AssemblyError(f"degenerate element {int(small[0])}: area {mesh.areas[small[0]]:.3e}")


def _velocity_dofs(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    return mesh.cell_to_edges, mesh.cell_to_edges + mesh.num_edges


def local_cr_stiffness(mesh: Mesh) -> np.ndarray:
    """Scalar CR stiffness per cell, |T| grad(psi_i).grad(psi_j), shape (T, 3, 3)"""
    g = mesh.grad_lambda
    return 4.0 * mesh.areas[:, None, None] * np.einsum("tik,tjk->tij", g, g)


def local_p1_mass(mesh: Mesh) -> np.ndarray:
    pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return mesh.areas[:, None, None] * pattern


def local_p1_stiffness(mesh: Mesh) -> np.ndarray:
    g = mesh.grad_lambda
    return mesh.areas[:, None, None] * np.einsum("tik,tjk->tij", g, g)


def _expand_vector(mesh: Mesh, local: np.ndarray) -> SparseMatrix:
    """Block-diagonal two-component expansion of a scalar CR form"""
    asm = TripletAssembler((2 * mesh.num_edges, 2 * mesh.num_edges))
    for dofs in _velocity_dofs(mesh):
        asm.add_local(dofs, dofs, local)
    return asm.finalize(symmetric=True)


def assemble_cr_stiffness(mesh: Mesh) -> SparseMatrix:
    """Broken H1 stiffness of the vector CR space (without mu)"""
    _check_cells(mesh)
    return _expand_vector(mesh, local_cr_stiffness(mesh))


def phi_at_quadrature(phi: P1Field, rule: TriangleRule = ORDER4) -> np.ndarray:
    """Phase-field values at the quadrature points of every cell, shape (T, Q)"""
    return phi.values[phi.mesh.cells] @ rule.points.T


def local_weighted_cr_mass(mesh: Mesh, weights: np.ndarray, rule: TriangleRule = ORDER4) -> np.ndarray:
    psi = cr_basis(rule.points)
    return mesh.areas[:, None, None] * np.einsum("q,tq,qi,qj->tij", rule.weights, weights, psi, psi)


def assemble_weighted_cr_mass(mesh: Mesh,
                              phi: Optional[P1Field] = None,
                              alpha: Optional[ScalarMap] = None) -> SparseMatrix:
    """
    CR mass matrix weighted by alpha(phi(x)); unweighted when phi is omitted.

    Raises:
        FieldError: phi lives on a different mesh
    """
    _check_cells(mesh)
    if phi is None:
        weights = np.ones((mesh.num_cells, len(ORDER4.weights)))
    else:
        phi.require_mesh(mesh)
        if alpha is None:
            raise FieldError("a weight function is required together with phi")
        weights = alpha(phi_at_quadrature(phi))
    return _expand_vector(mesh, local_weighted_cr_mass(mesh, weights))


def assemble_divergence(mesh: Mesh) -> SparseMatrix:
    """Rows per cell: B[T, j] = integral over T of div(psi_j)"""
    _check_cells(mesh)
    grad_psi = -2.0 * mesh.grad_lambda * mesh.areas[:, None, None]
    asm = TripletAssembler((mesh.num_cells, 2 * mesh.num_edges))
    rows = np.repeat(np.arange(mesh.num_cells)[:, None], 3, axis=1)
    for c, dofs in enumerate(_velocity_dofs(mesh)):
        asm.add(rows, dofs, grad_psi[:, :, c])
    return asm.finalize()


def assemble_p1_operators(mesh: Mesh) -> Tuple[SparseMatrix, SparseMatrix]:
    """P1 stiffness K and consistent mass M"""
    _check_cells(mesh)
    stiffness = TripletAssembler((mesh.num_vertices, mesh.num_vertices))
    stiffness.add_local(mesh.cells, mesh.cells, local_p1_stiffness(mesh))
    mass = TripletAssembler((mesh.num_vertices, mesh.num_vertices))
    mass.add_local(mesh.cells, mesh.cells, local_p1_mass(mesh))
    return stiffness.finalize(symmetric=True), mass.finalize(symmetric=True)


def assemble_p1_weighted_mass(mesh: Mesh, weights: np.ndarray, rule: TriangleRule = ORDER4) -> SparseMatrix:
    """P1 mass weighted by values given at the quadrature points, weights shape (T, Q)"""
    local = mesh.areas[:, None, None] * np.einsum("q,tq,qi,qj->tij", rule.weights, weights,
                                                  rule.points, rule.points)
    asm = TripletAssembler((mesh.num_vertices, mesh.num_vertices))
    asm.add_local(mesh.cells, mesh.cells, local)
    return asm.finalize(symmetric=True)


def assemble_p1_load(mesh: Mesh, values: np.ndarray, rule: TriangleRule = ORDER4) -> np.ndarray:
    """Entries integral(g * lambda_j) for g given at the quadrature points, shape (T, Q)"""
    local = mesh.areas[:, None] * np.einsum("q,tq,qi->ti", rule.weights, values, rule.points)
    return np.bincount(mesh.cells.ravel(), weights=local.ravel(), minlength=mesh.num_vertices)


def assemble_velocity_load(mesh: Mesh, f: Optional[VectorFunction] = None,
                           rule: TriangleRule = ORDER4) -> np.ndarray:
    """Entries integral(f . psi_j) in the x-then-y DOF ordering"""
    ne = mesh.num_edges
    if f is None:
        return np.zeros(2 * ne)
    values = f(mesh.cell_points(rule.points))
    psi = cr_basis(rule.points)
    local = mesh.areas[:, None, None] * np.einsum("q,tqc,qi->tic", rule.weights, values, psi)
    flat = mesh.cell_to_edges.ravel()
    return np.concatenate([
        np.bincount(flat, weights=local[:, :, c].ravel(), minlength=ne) for c in range(2)
    ])


def apply_dirichlet(matrix: sp.spmatrix, rhs: np.ndarray, dofs: np.ndarray,
                    values: np.ndarray) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Symmetric elimination of prescribed DOFs.

    Known columns move to the right-hand side; their rows and columns are
    replaced by the identity, so a symmetric matrix stays symmetric.
    """
    n = matrix.shape[0]
    known = np.zeros(n)
    known[dofs] = values
    rhs = rhs - matrix @ known
    keep = np.ones(n)
    keep[dofs] = 0.0
    mask = sp.diags(keep)
    reduced = (mask @ matrix @ mask + sp.diags(1.0 - keep)).tocsr()
    rhs[dofs] = values
    logger.debug("Eliminated {} Dirichlet dofs out of {}", len(dofs), n)
    return reduced, rhs
