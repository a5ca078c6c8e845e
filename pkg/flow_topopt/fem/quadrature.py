"""
Quadrature rules on the reference triangle and on edges.

Triangle rules are given in barycentric coordinates with weights that sum to
one, so the integral over a cell T is |T| * sum(w_q * g(x_q)).
"""
from typing import NamedTuple

import numpy as np


class TriangleRule(NamedTuple):
    """Barycentric points (Q, 3) and weights (Q,) summing to one"""
    points: np.ndarray
    weights: np.ndarray
    degree: int


class EdgeRule(NamedTuple):
    """Parameters t in [0, 1] (Q,) and weights (Q,) summing to one"""
    points: np.ndarray
    weights: np.ndarray
    degree: int


def _symmetric_orbit(a: float) -> np.ndarray:
    b = 1.0 - 2.0 * a
    return np.array([[a, a, b], [a, b, a], [b, a, a]])


def centroid_rule() -> TriangleRule:
    return TriangleRule(np.full((1, 3), 1.0 / 3.0), np.ones(1), 1)


def dunavant_degree4() -> TriangleRule:
    """Six-point rule exact for polynomials of degree four"""
    a1, w1 = 0.445948490915964886318329253883, 0.223381589678011465944827151656
    a2, w2 = 0.091576213509770743459571463402, 0.109951743655321867388506181677
    points = np.vstack([_symmetric_orbit(a1), _symmetric_orbit(a2)])
    weights = np.array([w1, w1, w1, w2, w2, w2])
    return TriangleRule(points, weights, 4)


def gauss_edge(npoints: int = 2) -> EdgeRule:
    """Gauss-Legendre rule on [0, 1], exact to degree 2*npoints - 1"""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return EdgeRule(0.5 * (x + 1.0), 0.5 * w, 2 * npoints - 1)


CENTROID = centroid_rule()
ORDER4 = dunavant_degree4()
EDGE_GAUSS2 = gauss_edge(2)
