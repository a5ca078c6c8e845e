import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flow_topopt.errors import AssemblyError, FieldError
from flow_topopt.fem.assembly import (TripletAssembler, apply_dirichlet, assemble_cr_stiffness,
                                      assemble_divergence, assemble_p1_load, assemble_p1_operators,
                                      assemble_p1_weighted_mass, assemble_velocity_load,
                                      assemble_weighted_cr_mass, local_cr_stiffness)
from flow_topopt.fem.mesh import Mesh, build_topology
from flow_topopt.fem.quadrature import ORDER4
from flow_topopt.fem.spaces import cr_evaluate, cr_interpolate
from flow_topopt.fem.stokes import inverse_permeability
from flow_topopt.schema.fields import CrField, P1Field
from oracles import integrate_oracle, triangle_oracle


def test_local_stiffness_of_reference_triangle():
    mesh = build_topology([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
    expected = 2.0 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    np.testing.assert_allclose(local_cr_stiffness(mesh)[0], expected, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_triplet_assembly_is_order_independent(seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 6, 40)
    cols = rng.integers(0, 6, 40)
    vals = rng.normal(size=40)
    perm = rng.permutation(40)
    first = TripletAssembler((6, 6))
    first.add(rows, cols, vals)
    second = TripletAssembler((6, 6))
    second.add(rows[perm[:15]], cols[perm[:15]], vals[perm[:15]])
    second.add(rows[perm[15:]], cols[perm[15:]], vals[perm[15:]])
    a, b = first.finalize().csr, second.finalize().csr
    np.testing.assert_array_equal(a.indptr, b.indptr)
    np.testing.assert_array_equal(a.indices, b.indices)
    np.testing.assert_array_equal(a.data, b.data)


def test_empty_assembler_gives_zero_matrix():
    assert TripletAssembler((3, 4)).finalize().csr.nnz == 0


def test_stiffness_is_symmetric_with_constant_kernel(pipe_mesh):
    stiffness = assemble_cr_stiffness(pipe_mesh)
    assert stiffness.asymmetry() <= 1e-14
    ones_x = np.concatenate([np.ones(pipe_mesh.num_edges), np.zeros(pipe_mesh.num_edges)])
    np.testing.assert_allclose(stiffness @ ones_x, 0.0, atol=1e-12)


def test_stiffness_quadratic_form_is_broken_dirichlet_energy(pipe_mesh, rng):
    u = CrField(mesh=pipe_mesh, values=rng.normal(size=(pipe_mesh.num_edges, 2)))
    local = u.values[pipe_mesh.cell_to_edges]
    grads = np.einsum("tic,tid->tcd", local, -2.0 * pipe_mesh.grad_lambda)
    energy = np.sum(pipe_mesh.areas * np.einsum("tcd,tcd->t", grads, grads))
    assert assemble_cr_stiffness(pipe_mesh).quadratic_form(u.vector) == pytest.approx(energy, rel=1e-12)


def test_weighted_mass_matches_oracle(pipe_mesh, rng):
    u = CrField(mesh=pipe_mesh, values=rng.normal(size=(pipe_mesh.num_edges, 2)))
    phi = P1Field(mesh=pipe_mesh, values=rng.uniform(0.0, 1.0, pipe_mesh.num_vertices))
    alpha = inverse_permeability(10.0)
    mass = assemble_weighted_cr_mass(pipe_mesh, phi, alpha)

    bary, weights = triangle_oracle()
    values = cr_evaluate(u, bary)
    phi_q = phi.values[pipe_mesh.cells] @ bary.T
    exact = np.einsum("t,q,tq,tqc,tqc->", pipe_mesh.areas, weights, alpha(phi_q), values, values)
    assert mass.quadratic_form(u.vector) == pytest.approx(exact, rel=1e-12)


def test_weighted_mass_limits(unit_square):
    alpha = inverse_permeability(7.0)
    fluid = assemble_weighted_cr_mass(unit_square, P1Field.constant(unit_square, 1.0), alpha)
    assert np.abs(fluid.csr.data).max(initial=0.0) == 0.0
    solid = assemble_weighted_cr_mass(unit_square, P1Field.constant(unit_square, 0.0), alpha)
    plain = assemble_weighted_cr_mass(unit_square)
    np.testing.assert_allclose(solid.csr.toarray(), 7.0 * plain.csr.toarray(), atol=1e-14)


def test_weighted_mass_decreases_as_phi_grows(pipe_mesh, rng):
    alpha = inverse_permeability(1e4)
    lower = rng.uniform(0.0, 1.0, pipe_mesh.num_vertices)
    upper = lower + rng.uniform(0.0, 1.0, pipe_mesh.num_vertices) * (1.0 - lower)
    solid = assemble_weighted_cr_mass(pipe_mesh, P1Field(mesh=pipe_mesh, values=lower), alpha)
    fluid = assemble_weighted_cr_mass(pipe_mesh, P1Field(mesh=pipe_mesh, values=upper), alpha)
    for _ in range(20):
        v = rng.normal(size=2 * pipe_mesh.num_edges)
        assert solid.quadratic_form(v) >= fluid.quadratic_form(v)


def test_plain_cr_mass_is_diagonal(unit_square):
    mass = assemble_weighted_cr_mass(unit_square).csr.toarray()
    np.testing.assert_allclose(mass, np.diag(np.diag(mass)), atol=1e-15)
    assert np.trace(mass) == pytest.approx(2.0, rel=1e-13)


def test_weighted_mass_needs_weight_and_mesh(unit_square, pipe_mesh):
    with pytest.raises(FieldError):
        assemble_weighted_cr_mass(unit_square, P1Field.constant(unit_square, 0.5))
    with pytest.raises(FieldError):
        assemble_weighted_cr_mass(unit_square, P1Field.constant(pipe_mesh, 0.5), inverse_permeability(1.0))


def test_divergence_of_interpolated_linear_field(unit_square):
    u = cr_interpolate(unit_square, lambda x: np.stack([x[..., 0], x[..., 1]], axis=-1))
    div = assemble_divergence(unit_square) @ u.vector
    np.testing.assert_allclose(div, 2.0 * unit_square.areas, rtol=1e-12)


def test_divergence_of_rigid_motion_vanishes(unit_square):
    u = cr_interpolate(unit_square, lambda x: np.stack([-x[..., 1] + 1.0, x[..., 0]], axis=-1))
    np.testing.assert_allclose(assemble_divergence(unit_square) @ u.vector, 0.0, atol=1e-14)


def test_p1_operators(unit_square, rng):
    stiffness, mass = assemble_p1_operators(unit_square)
    ones = np.ones(unit_square.num_vertices)
    assert mass.quadratic_form(ones) == pytest.approx(1.0, rel=1e-13)
    np.testing.assert_allclose(stiffness @ ones, 0.0, atol=1e-12)
    phi = rng.uniform(size=unit_square.num_vertices)
    bary, weights = triangle_oracle()
    phi_q = phi[unit_square.cells] @ bary.T
    exact = np.einsum("t,q,tq->", unit_square.areas, weights, phi_q ** 2)
    assert mass.quadratic_form(phi) == pytest.approx(exact, rel=1e-12)


def test_p1_weighted_mass_and_load(unit_square):
    weights = np.full((unit_square.num_cells, len(ORDER4.weights)), 2.0)
    _, mass = assemble_p1_operators(unit_square)
    weighted = assemble_p1_weighted_mass(unit_square, weights)
    np.testing.assert_allclose(weighted.csr.toarray(), 2.0 * mass.csr.toarray(), atol=1e-15)
    load = assemble_p1_load(unit_square, np.ones_like(weights))
    np.testing.assert_allclose(load, mass @ np.ones(unit_square.num_vertices), atol=1e-15)
    assert load.sum() == pytest.approx(1.0)

    square = unit_square.cell_points(ORDER4.points)[..., 0] ** 2
    exact = integrate_oracle(unit_square, lambda x: x[..., 0] ** 2)
    assert assemble_p1_load(unit_square, square).sum() == pytest.approx(exact, rel=1e-13)


def test_velocity_load(unit_square):
    load = assemble_velocity_load(unit_square, lambda x: np.stack(
        [np.ones(x.shape[:-1]), np.zeros(x.shape[:-1])], axis=-1))
    ne = unit_square.num_edges
    assert load[:ne].sum() == pytest.approx(1.0, rel=1e-13)
    np.testing.assert_allclose(load[ne:], 0.0)
    np.testing.assert_array_equal(assemble_velocity_load(unit_square), np.zeros(2 * ne))


def test_apply_dirichlet_keeps_symmetry_and_solution(unit_square):
    matrix = assemble_cr_stiffness(unit_square).csr + assemble_weighted_cr_mass(unit_square).csr
    exact = np.linspace(-1.0, 1.0, matrix.shape[0])
    rhs = matrix @ exact
    dofs = np.array([0, 5, 17])
    reduced, new_rhs = apply_dirichlet(matrix, rhs, dofs, exact[dofs])
    assert abs(reduced - reduced.T).max() == 0.0
    x = np.linalg.solve(reduced.toarray(), new_rhs)
    np.testing.assert_allclose(x, exact, atol=1e-10)


def test_degenerate_element_is_reported(unit_square):
    vertices = unit_square.vertices.copy()
    # collapse the first cell by moving its corner onto the next grid vertex
    vertices[0] = vertices[1]
    broken = Mesh(vertices, unit_square.cells.copy(), unit_square.edges.copy(),
                  unit_square.cell_to_edges.copy(), unit_square.edge_to_cells.copy(),
                  unit_square.boundary_tags)
    with pytest.raises(AssemblyError, match="degenerate element 0"):
        assemble_cr_stiffness(broken)
