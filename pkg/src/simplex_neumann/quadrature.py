"""Gauss-Legendre rules on the unit interval, triangle and tetrahedron.

Simplex rules are tensor Gauss-Legendre rules collapsed onto the simplex
(Duffy transform).  Reference domains are the standard simplices
``conv(0, e_1, ..., e_d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on the ``dimension``-dimensional reference simplex.

    ``order`` is the total polynomial degree integrated exactly.
    """

    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def reference_measure(self) -> float:
        return 1.0 / math.factorial(self.dimension)

    def map_to(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Push the rule onto the simplex with vertex rows ``points``.

        ``points`` has shape ``(dimension + 1, ambient)``; the ambient space may be
        larger than the simplex dimension (faces embedded in R^n).  Returns
        physical nodes and weights that sum to the simplex measure.
        """
        points = np.asarray(points, dtype=float)
        if points.shape[0] != self.dimension + 1:
            raise ValueError(
                f"rule of dimension {self.dimension} needs {self.dimension + 1} vertices, "
                f"got {points.shape[0]}"
            )
        E = (points[1:] - points[0]).T
        measure = math.sqrt(max(float(np.linalg.det(E.T @ E)), 0.0))
        x = points[0] + self.nodes @ E.T
        return x, self.weights * measure


@lru_cache(maxsize=64)
def _leggauss01(npts: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_legendre(npts: int, dimension: int) -> QuadratureRule:
    """Collapsed Gauss-Legendre rule with ``npts`` points per direction."""
    if npts < 1:
        raise ValueError("npts must be positive")
    if dimension == 3 and npts < 2:
        raise ValueError("the collapsed tetrahedron rule needs at least 2 points per direction")
    t, w = _leggauss01(npts)
    if dimension == 1:
        nodes, weights, order = t[:, None], w.copy(), 2 * npts - 1
    elif dimension == 2:
        u, v = np.meshgrid(t, t, indexing="ij")
        wu, wv = np.meshgrid(w, w, indexing="ij")
        nodes = np.column_stack([u.ravel(), (v * (1 - u)).ravel()])
        weights = (wu * wv * (1 - u)).ravel()
        order = 2 * npts - 2
    elif dimension == 3:
        u, v, s = np.meshgrid(t, t, t, indexing="ij")
        wu, wv, ws = np.meshgrid(w, w, w, indexing="ij")
        nodes = np.column_stack(
            [u.ravel(), (v * (1 - u)).ravel(), (s * (1 - u) * (1 - v)).ravel()]
        )
        weights = (wu * wv * ws * (1 - u) ** 2 * (1 - v)).ravel()
        order = 2 * npts - 3
    else:
        raise ValueError(f"unsupported quadrature dimension {dimension}")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(dimension, nodes, weights, order)


def points_for_wavenumber(kmax: int) -> int:
    """Points per direction for trig integrands of frequency up to ``2 kmax pi``."""
    return 4 * int(kmax) + 10
