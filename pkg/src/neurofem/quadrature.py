"""Quadrature rules on reference elements."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference element.

    1D rules live on [0, 1]; triangle rules on the reference triangle with
    vertices (0,0), (1,0), (0,1).  Weights sum to the reference measure
    (1 for the interval, 1/2 for the triangle).
    """

    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self):
        return len(self.weights)


def gauss_quadrature_1d(order):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of degree 2*order - 1."""
    if not 1 <= order <= 5:
        raise ValueError("supported orders are 1..5")
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(points=0.5 * (x + 1.0), weights=0.5 * w)


def triangle_midedge_rule():
    """Three-point edge-midpoint rule on the reference triangle, exact for degree 2."""
    pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
    wts = np.full(3, 1.0 / 6.0)
    return QuadratureRule(points=pts, weights=wts)
