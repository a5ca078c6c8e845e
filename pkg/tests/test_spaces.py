import numpy as np
import pytest

from flow_topopt.errors import FieldError
from flow_topopt.fem.cases import structured_mesh
from flow_topopt.fem.mesh import refine_red
from flow_topopt.fem.spaces import (NormKind, cr_cell_average, cr_evaluate, cr_interpolate, enrich_cr,
                                    discrete_poincare_ratio, field_norms, p0_mean, p1_interpolate,
                                    pressure_error_norm, prolong_p1, velocity_error_norms)
from flow_topopt.schema.fields import CrField, P0Field, P1Field
from oracles import edge_oracle


def cubic(x):
    return np.stack([x[..., 0] ** 3 - 2.0 * x[..., 0] * x[..., 1], x[..., 1] ** 3 + x[..., 0] ** 2], axis=-1)


def linear(x):
    return np.stack([2.0 * x[..., 0] - x[..., 1] + 0.5, x[..., 0] + 3.0 * x[..., 1]], axis=-1)


def linear_gradient(x):
    grad = np.zeros(x.shape[:-1] + (2, 2))
    grad[..., 0, :] = [2.0, -1.0]
    grad[..., 1, :] = [1.0, 3.0]
    return grad


def test_interpolation_preserves_edge_averages(pipe_mesh):
    u = cr_interpolate(pipe_mesh, cubic)
    np.testing.assert_allclose(u.values, edge_oracle(pipe_mesh, cubic), rtol=0, atol=1e-12)


def test_evaluation_at_midpoints_returns_dofs(unit_square, rng):
    u = CrField(mesh=unit_square, values=rng.normal(size=(unit_square.num_edges, 2)))
    # midpoint of local edge i has barycentric coordinate 0 at vertex i
    midpoints = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    values = cr_evaluate(u, midpoints)
    for i in range(3):
        np.testing.assert_allclose(values[:, i], u.values[unit_square.cell_to_edges[:, i]], atol=1e-14)


def test_linear_fields_are_reproduced(unit_square):
    u = cr_interpolate(unit_square, linear)
    points = unit_square.cell_points(np.array([[0.2, 0.3, 0.5]]))
    np.testing.assert_allclose(cr_evaluate(u, np.array([[0.2, 0.3, 0.5]])), linear(points), atol=1e-13)
    centroids = unit_square.vertices[unit_square.cells].mean(axis=1)
    np.testing.assert_allclose(cr_cell_average(u), linear(centroids), atol=1e-13)


def test_enrichment_is_exact_for_linear_fields(pipe_mesh):
    u = cr_interpolate(pipe_mesh, linear)
    enriched = enrich_cr(u)
    np.testing.assert_allclose(enriched.vertex_values, linear(pipe_mesh.vertices), atol=1e-12)
    np.testing.assert_array_equal(enriched.midpoint_values, u.values)
    assert enriched.nodal.shape == (pipe_mesh.num_vertices + pipe_mesh.num_edges, 2)


def test_prolongation_is_exact_for_linear_phi(unit_square):
    phi = p1_interpolate(unit_square, lambda x: 0.3 * x[:, 0] + 0.6 * x[:, 1])
    fine = refine_red(unit_square)
    fine_phi = prolong_p1(phi, fine)
    np.testing.assert_allclose(fine_phi.values, 0.3 * fine.vertices[:, 0] + 0.6 * fine.vertices[:, 1],
                               atol=1e-15)


def test_prolongation_stays_in_range(unit_square, rng):
    phi = P1Field(mesh=unit_square, values=rng.uniform(0.0, 1.0, unit_square.num_vertices))
    fine_phi = prolong_p1(phi, refine_red(unit_square))
    assert fine_phi.values.min() >= phi.values.min()
    assert fine_phi.values.max() <= phi.values.max()


def test_prolongation_needs_the_child_mesh(unit_square, pipe_mesh):
    phi = P1Field.constant(unit_square, 0.5)
    with pytest.raises(FieldError):
        prolong_p1(phi, refine_red(pipe_mesh))


def test_norms_of_simple_fields(unit_square):
    const = cr_interpolate(unit_square,
                           lambda x: np.stack([np.ones_like(x[..., 0]), np.zeros_like(x[..., 0])], -1))
    assert field_norms(const, NormKind.L2) == pytest.approx(1.0, rel=1e-13)
    assert field_norms(const, NormKind.BROKEN_H1) == pytest.approx(0.0, abs=1e-12)

    shear = cr_interpolate(unit_square, lambda x: np.stack([x[..., 0], np.zeros(x.shape[:-1])], -1))
    assert field_norms(shear, NormKind.BROKEN_H1) == pytest.approx(1.0, rel=1e-13)
    assert field_norms(shear, NormKind.L2) == pytest.approx(np.sqrt(1.0 / 3.0), rel=1e-13)

    phi = p1_interpolate(unit_square, lambda x: x[:, 0])
    assert field_norms(phi, NormKind.L2) == pytest.approx(np.sqrt(1.0 / 3.0), rel=1e-13)
    assert field_norms(phi, NormKind.BROKEN_H1) == pytest.approx(1.0, rel=1e-13)


def test_norm_of_unsupported_field(unit_square):
    with pytest.raises(FieldError):
        field_norms(P0Field(mesh=unit_square, values=np.zeros(unit_square.num_cells)))


def test_discrete_poincare_ratio_is_mesh_independent():
    def bump(x):
        s = np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])
        return np.stack([s, np.zeros_like(s)], axis=-1)

    mesh = structured_mesh((0.0, 1.0), (0.0, 1.0), 8)
    ratios = []
    for _ in range(3):
        ratios.append(discrete_poincare_ratio(cr_interpolate(mesh, bump)))
        mesh = refine_red(mesh)
    # continuous value 1 / (pi sqrt 2)
    assert all(0.2 < r < 0.25 for r in ratios)
    assert abs(ratios[-1] - 1.0 / (np.pi * np.sqrt(2.0))) < 0.01


def test_error_norms_vanish_on_exact_fields(unit_square):
    u = cr_interpolate(unit_square, linear)
    l2, h1 = velocity_error_norms(u, linear, linear_gradient)
    assert l2 == pytest.approx(0.0, abs=1e-12)
    assert h1 == pytest.approx(0.0, abs=1e-12)

    p = P0Field(mesh=unit_square, values=np.full(unit_square.num_cells, 3.0))
    assert pressure_error_norm(p, lambda x: np.full(x.shape[:-1], -1.0)) == pytest.approx(0.0, abs=1e-13)
    assert pressure_error_norm(p, lambda x: np.full(x.shape[:-1], -1.0), remove_mean=False) == \
        pytest.approx(4.0)
    assert p0_mean(p) == pytest.approx(3.0)


def test_fields_check_their_shape(unit_square):
    with pytest.raises(FieldError):
        CrField(mesh=unit_square, values=np.zeros((3, 2)))
    with pytest.raises(FieldError):
        CrField.from_vector(unit_square, np.zeros(5))


def test_velocity_vector_ordering(unit_square, rng):
    u = CrField(mesh=unit_square, values=rng.normal(size=(unit_square.num_edges, 2)))
    vector = u.vector
    np.testing.assert_array_equal(vector[:unit_square.num_edges], u.values[:, 0])
    np.testing.assert_array_equal(CrField.from_vector(unit_square, vector).values, u.values)
