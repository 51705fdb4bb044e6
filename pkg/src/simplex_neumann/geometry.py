"""Exact simplex geometry.

Vertex 0 is the affine base point and face ``j`` is the face opposite
vertex ``j``.  With this convention face 0 of the standard simplex is the
slanted face and face ``j >= 1`` lies in the hyperplane ``x_j = 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegenerateSimplex, InvalidCoefficients

SUPPORTED_DIMENSIONS = (2, 3, 4)
_DEGENERACY_RTOL = 1e-14


@dataclass(frozen=True)
class Face:
    """A facet of a simplex.

    Attributes
    ----------
    index : int
        Index of the opposite vertex.
    vertex_indices : tuple of int
        The ``n`` vertices spanning the face.
    normal : ndarray, shape (n,)
        Unit outward normal.
    measure : float
        ``(n-1)``-dimensional volume.
    """

    index: int
    vertex_indices: tuple[int, ...]
    normal: np.ndarray
    measure: float


@dataclass(frozen=True)
class Simplex:
    """Non-degenerate simplex given by ``n+1`` vertices in R^n."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"expected (n+1, n) vertex array, got shape {v.shape}")
        if v.shape[1] not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"dimension {v.shape[1]} not in {SUPPORTED_DIMENSIONS}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        _check_nondegenerate(v)

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def edge_matrix(self) -> np.ndarray:
        """Matrix ``A`` whose columns are ``p_j - p_0``."""
        return (self.vertices[1:] - self.vertices[0]).T

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def barycentric(self, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of ``points`` (shape (..., n)) -> (..., n+1)."""
        points = np.asarray(points, dtype=float)
        B = np.linalg.inv(self.edge_matrix)
        t = (points - self.vertices[0]) @ B.T
        return np.concatenate([1.0 - t.sum(axis=-1, keepdims=True), t], axis=-1)

    def scaled(self, factor: float) -> "Simplex":
        return Simplex(factor * self.vertices)

    def to_dict(self) -> dict[str, Any]:
        return {"dimension": self.dimension, "vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Simplex":
        vertices = np.asarray(data["vertices"], dtype=float)
        n = data.get("dimension", vertices.shape[-1])
        if vertices.shape != (n + 1, n):
            raise ValueError(
                f"dimension {n} requires {n + 1} vertices of length {n}, "
                f"got array of shape {vertices.shape}"
            )
        return cls(vertices)

    @classmethod
    def from_json(cls, text: str) -> "Simplex":
        return cls.from_dict(json.loads(text))


def _check_nondegenerate(vertices: np.ndarray) -> None:
    n = vertices.shape[1]
    edges = vertices[1:] - vertices[0]
    scale = float(np.max(np.linalg.norm(edges, axis=1)))
    det = float(np.linalg.det(edges))
    if scale == 0.0 or abs(det) < _DEGENERACY_RTOL * scale**n:
        raise DegenerateSimplex(f"simplex is degenerate (det={det:.3e}, scale={scale:.3e})")


def standard_simplex(n: int) -> Simplex:
    """Origin plus the unit basis vectors ``e_1, ..., e_n``."""
    return Simplex(np.vstack([np.zeros(n), np.eye(n)]))


def alcove_simplex(n: int) -> Simplex:
    """Order simplex ``{1 >= x_1 >= ... >= x_n >= 0}``.

    Vertices are ``(0,..,0), (1,0,..,0), (1,1,0,..), ..., (1,..,1)``.
    """
    return Simplex(np.tril(np.ones((n + 1, n)), k=-1))


def volume(s: Simplex) -> float:
    """``|det A| / n!``."""
    n = s.dimension
    return abs(float(np.linalg.det(s.edge_matrix))) / math.factorial(n)


def _face_measure(points: np.ndarray) -> float:
    # Gram determinant of the (n-1) spanning edges
    E = (points[1:] - points[0]).T
    gram = E.T @ E
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0)) / math.factorial(E.shape[1])


def faces(s: Simplex) -> list[Face]:
    """Faces in index order; face ``j`` is opposite vertex ``j``."""
    n = s.dimension
    # rows of the inverse of [1 | x] are the (constant) barycentric gradients
    augmented = np.hstack([np.ones((n + 1, 1)), s.vertices])
    grads = np.linalg.inv(augmented)[1:].T
    out = []
    for j in range(n + 1):
        idx = tuple(i for i in range(n + 1) if i != j)
        g = grads[j]
        normal = -g / np.linalg.norm(g) + 0.0  # no signed zeros
        normal.setflags(write=False)
        out.append(Face(j, idx, normal, _face_measure(s.vertices[list(idx)])))
    return out


def face(s: Simplex, j: int) -> Face:
    n = s.dimension
    if not 0 <= j <= n:
        raise IndexError(f"face index {j} out of range 0..{n}")
    return faces(s)[j]


def affine_maps(s: Simplex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(A, B, Gamma)`` for the map ``y = B (x - p_0)`` onto the standard simplex.

    ``A`` has columns ``p_j - p_0``, ``B = A^{-1}`` and ``Gamma = B B^T`` is the
    coefficient matrix of the pulled-back Laplacian.
    """
    A = s.edge_matrix.copy()
    B = np.linalg.inv(A)
    gamma = B @ B.T
    gamma = 0.5 * (gamma + gamma.T)
    return A, B, gamma


def predicted_neumann_mass(s: Simplex, j: int) -> float:
    """Semiclassical Neumann mass on face ``j``: ``2 |G_j| / (n |T|)``.

    The value is the same for every L^2-normalised Dirichlet eigenfunction.
    """
    n = s.dimension
    if not 0 <= j <= n:
        raise IndexError(f"face index {j} out of range 0..{n}")
    return 2.0 * faces(s)[j].measure / (n * volume(s))


def predicted_neumann_masses(s: Simplex) -> np.ndarray:
    n = s.dimension
    vol = volume(s)
    return np.array([2.0 * f.measure / (n * vol) for f in faces(s)])


@dataclass(frozen=True)
class EllipticCoefficients:
    """Symmetric positive-definite coefficients of ``P = -Gamma_ij h d_i h d_j``.

    ``factor`` is an optional ``B`` with ``gamma == B @ B.T``.
    """

    gamma: np.ndarray
    factor: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidCoefficients(f"gamma must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InvalidCoefficients("gamma must be finite")
        scale = max(float(np.max(np.abs(g))), np.finfo(float).tiny)
        if np.max(np.abs(g - g.T)) > 1e-12 * scale:
            raise InvalidCoefficients("gamma is not symmetric")
        g = 0.5 * (g + g.T)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise InvalidCoefficients("gamma is not positive definite") from None
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        if self.factor is not None:
            b = np.array(self.factor, dtype=float)
            b.setflags(write=False)
            object.__setattr__(self, "factor", b)

    @property
    def dimension(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def identity(cls, n: int) -> "EllipticCoefficients":
        return cls(np.eye(n), np.eye(n))

    @classmethod
    def from_factor(cls, B: np.ndarray) -> "EllipticCoefficients":
        B = np.asarray(B, dtype=float)
        return cls(B @ B.T, B)

    def quadratic_form(self, v: np.ndarray) -> float:
        """``v^T Gamma v`` (equal to ``|B^T v|^2``)."""
        v = np.asarray(v, dtype=float)
        return float(v @ self.gamma @ v)
