"""P1 finite elements for the Dirichlet eigenproblem of ``-div(Gamma grad u)`` on a simplex.

The domain is uniformly refined (red refinement in 2D, Bey's octasection in
3D), Dirichlet vertices are eliminated, and the generalised problem
``K x = lambda M x`` is solved for the lowest modes.  Face Neumann masses are
read off from the per-cell constant gradients on boundary facets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidCoefficients, NumericalBreakdown, ResourceLimit
from .geometry import EllipticCoefficients, Simplex, faces

MAX_LEVEL = {2: 9, 3: 6}
DENSE_LIMIT = 3000
_ON_FACE_TOL = 1e-12

# local vertex pairs and child tables; entries >= n+1 refer to edge midpoints
_EDGES = {
    2: [(0, 1), (1, 2), (0, 2)],
    3: [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
}


def _child_table(n: int) -> np.ndarray:
    if n == 2:
        a, b, c = 0, 1, 2
        ab, bc, ca = 3, 4, 5
        return np.array([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]])
    # Bey's octasection; the inner octahedron is cut along x02 -- x13
    x0, x1, x2, x3 = 0, 1, 2, 3
    x01, x02, x03, x12, x13, x23 = 4, 5, 6, 7, 8, 9
    return np.array(
        [
            [x0, x01, x02, x03],
            [x01, x1, x12, x13],
            [x02, x12, x2, x23],
            [x03, x13, x23, x3],
            [x01, x02, x03, x13],
            [x01, x02, x12, x13],
            [x02, x03, x13, x23],
            [x02, x12, x13, x23],
        ]
    )


@dataclass(frozen=True)
class SimplexMesh:
    """Conforming uniform refinement of a single simplex.

    ``boundary_faces`` rows are ``(cell, local face, parent face j)``; local
    face ``f`` of a cell is the facet opposite its local vertex ``f``.
    """

    simplex: Simplex
    vertices: np.ndarray
    cells: np.ndarray
    boundary_faces: np.ndarray
    level: int

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    def cell_volumes(self) -> np.ndarray:
        X = self.vertices[self.cells]
        E = X[:, 1:] - X[:, :1]
        return np.abs(np.linalg.det(E)) / math.factorial(self.dimension)

    def boundary_vertices(self) -> np.ndarray:
        """Boolean mask of vertices lying on the parent simplex boundary."""
        bary = self.simplex.barycentric(self.vertices)
        return np.any(np.abs(bary) < _ON_FACE_TOL, axis=1)

    def transformed(self, target: Simplex) -> "SimplexMesh":
        """Image of this mesh under the affine map sending ``simplex`` onto ``target``."""
        if target.dimension != self.dimension:
            raise ValueError("target simplex has a different dimension")
        bary = self.simplex.barycentric(self.vertices)
        vertices = bary @ target.vertices
        cells, boundary = _orient(vertices, self.cells.copy(), self.boundary_faces.copy())
        return SimplexMesh(target, vertices, cells, boundary, self.level)

    def to_dict(self) -> dict[str, Any]:
        return {"vertices": self.vertices.tolist(), "cells": self.cells.tolist()}


def _bey_order(vertices: np.ndarray) -> np.ndarray:
    # pick the vertex ordering whose x02--x13 diagonal is the shortest one
    candidates = [(0, 1, 2, 3), (0, 2, 1, 3), (0, 1, 3, 2)]
    lengths = []
    for p in candidates:
        q = vertices[list(p)]
        lengths.append(np.linalg.norm(0.5 * (q[0] + q[2]) - 0.5 * (q[1] + q[3])))
    best = int(np.argmin(np.round(np.array(lengths), 12)))
    return np.array(candidates[best])


def _refine_once(vertices: np.ndarray, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = vertices.shape[1]
    pairs = np.array(_EDGES[n])
    ends = np.sort(cells[:, pairs], axis=2)  # (M, E, 2)
    keys, inverse = np.unique(ends.reshape(-1, 2), axis=0, return_inverse=True)
    mid = vertices.shape[0] + inverse.reshape(ends.shape[:2])
    new_vertices = np.vstack([vertices, 0.5 * (vertices[keys[:, 0]] + vertices[keys[:, 1]])])
    local = np.hstack([cells, mid])  # (M, n+1+E)
    children = local[:, _child_table(n)]  # (M, C, n+1)
    return new_vertices, children.reshape(-1, n + 1)


def _orient(vertices: np.ndarray, cells: np.ndarray, boundary: np.ndarray):
    X = vertices[cells]
    det = np.linalg.det(X[:, 1:] - X[:, :1])
    flip = det < 0
    if np.any(flip):
        cells[flip, -2:] = cells[flip, -1:-3:-1]
        # swapping the last two local vertices swaps the matching local faces
        n = vertices.shape[1]
        rows = flip[boundary[:, 0]]
        lf = boundary[rows, 1]
        lf = np.where(lf == n, n - 1, np.where(lf == n - 1, n, lf))
        boundary[rows, 1] = lf
    return cells, boundary


def _boundary_facets(simplex: Simplex, vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    n = vertices.shape[1]
    on_face = np.abs(simplex.barycentric(vertices)) < _ON_FACE_TOL  # (N, n+1)
    rows = []
    for f in range(n + 1):
        others = [i for i in range(n + 1) if i != f]
        hit = np.all(on_face[cells[:, others]], axis=1)  # (M, n+1)
        cell_idx, parent = np.nonzero(hit)
        rows.append(np.column_stack([cell_idx, np.full_like(cell_idx, f), parent]))
    out = np.vstack(rows)
    return out[np.lexsort((out[:, 1], out[:, 0], out[:, 2]))]


def refine(s: Simplex, level: int, max_level: int | None = None) -> SimplexMesh:
    """Uniformly refine ``s`` ``level`` times (4**level triangles or 8**level tetrahedra)."""
    n = s.dimension
    if n not in MAX_LEVEL:
        raise ValueError(f"FEM supports dimensions 2 and 3, got {n}")
    if level < 0:
        raise ValueError("level must be non-negative")
    cap = MAX_LEVEL[n] if max_level is None else max_level
    if level > cap:
        raise ResourceLimit(f"level {level} exceeds the cap {cap} for n={n}")
    order = _bey_order(s.vertices) if n == 3 else np.arange(n + 1)
    vertices = s.vertices.copy()
    cells = order[None, :].copy()
    for _ in range(level):
        vertices, cells = _refine_once(vertices, cells)
    boundary = _boundary_facets(s, vertices, cells)
    cells, boundary = _orient(vertices, cells, boundary)
    vertices.setflags(write=False)
    cells.setflags(write=False)
    boundary.setflags(write=False)
    return SimplexMesh(s, vertices, cells, boundary, level)


@dataclass(frozen=True)
class FemSystem:
    """Assembled P1 system.

    ``K_full``/``M_full`` act on all vertices; ``K``/``M`` are restricted to the
    interior (Dirichlet-eliminated) degrees of freedom listed in ``interior``.
    """

    mesh: SimplexMesh
    coeffs: EllipticCoefficients
    K_full: sp.csr_matrix
    M_full: sp.csr_matrix
    K: sp.csr_matrix
    M: sp.csr_matrix
    interior: np.ndarray
    cell_grads: np.ndarray = field(repr=False)

    @property
    def num_dofs(self) -> int:
        return self.interior.size

    def full_vector(self, x: np.ndarray) -> np.ndarray:
        u = np.zeros(self.mesh.vertices.shape[0])
        u[self.interior] = x
        return u


def _barycentric_gradients(mesh: SimplexMesh) -> tuple[np.ndarray, np.ndarray]:
    X = mesh.vertices[mesh.cells]
    E = X[:, 1:] - X[:, :1]  # rows are edges
    vols = np.abs(np.linalg.det(E)) / math.factorial(mesh.dimension)
    Binv = np.linalg.inv(E)  # columns of inv(E) = rows of inv(E^T)
    g = np.transpose(Binv, (0, 2, 1))  # (M, n, n): grad t_i = row i
    g0 = -g.sum(axis=1, keepdims=True)
    return np.concatenate([g0, g], axis=1), vols


def assemble(mesh: SimplexMesh, coeffs: EllipticCoefficients | np.ndarray | None = None) -> FemSystem:
    """Assemble stiffness ``int grad(phi_i)^T Gamma grad(phi_j)`` and mass ``int phi_i phi_j``."""
    n = mesh.dimension
    if coeffs is None:
        coeffs = EllipticCoefficients.identity(n)
    elif not isinstance(coeffs, EllipticCoefficients):
        coeffs = EllipticCoefficients(coeffs)
    if coeffs.dimension != n:
        raise InvalidCoefficients(f"coefficient dimension {coeffs.dimension} != mesh dimension {n}")
    grads, vols = _barycentric_gradients(mesh)
    Kloc = np.einsum("cai,ij,cbj->cab", grads, coeffs.gamma, grads) * vols[:, None, None]
    Kloc = 0.5 * (Kloc + np.transpose(Kloc, (0, 2, 1)))
    Mref = (np.ones((n + 1, n + 1)) + np.eye(n + 1)) / ((n + 1) * (n + 2))
    Mloc = vols[:, None, None] * Mref
    rows = np.repeat(mesh.cells, n + 1, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, n + 1)).ravel()
    N = mesh.vertices.shape[0]
    K_full = sp.csr_matrix((Kloc.ravel(), (rows, cols)), shape=(N, N))
    M_full = sp.csr_matrix((Mloc.ravel(), (rows, cols)), shape=(N, N))
    interior = np.flatnonzero(~mesh.boundary_vertices())
    K = K_full[interior][:, interior].tocsr()
    M = M_full[interior][:, interior].tocsr()
    grads.setflags(write=False)
    return FemSystem(mesh, coeffs, K_full, M_full, K, M, interior, grads)


class FemEigenpair(NamedTuple):
    """Discrete eigenpair; ``vector`` holds interior values with ``x^T M x = 1``."""

    eigenvalue: float
    vector: np.ndarray
    index: int

    @property
    def h(self) -> float:
        return self.eigenvalue**-0.5


def _fix_signs(X: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(X), axis=0)
    signs = np.sign(X[idx, np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    return X * signs


def solve_eigenpairs(sys: FemSystem, k: int = 1, sigma: float = 0.0) -> list[FemEigenpair]:
    """The ``k`` smallest eigenpairs of ``(K, M)``, ascending and M-orthonormal.

    Dense generalised ``eigh`` up to ``DENSE_LIMIT`` interior unknowns,
    shift-invert Lanczos (``eigsh`` with shift ``sigma``) above.
    """
    ndof = sys.num_dofs
    if not 1 <= k <= ndof:
        raise ValueError(f"k must be in 1..{ndof}, got {k}")
    try:
        if ndof <= DENSE_LIMIT:
            w, X = scipy.linalg.eigh(
                sys.K.toarray(), sys.M.toarray(), subset_by_index=[0, k - 1]
            )
        else:
            w, X = spla.eigsh(sys.K.tocsc(), k=k, M=sys.M.tocsc(), sigma=sigma, which="LM")
            order = np.argsort(w)
            w, X = w[order], X[:, order]
            # re-orthonormalise in the M inner product (clusters may come out skewed)
            G = X.T @ (sys.M @ X)
            L = np.linalg.cholesky(0.5 * (G + G.T))
            X = np.linalg.solve(L, X.T).T
    except (np.linalg.LinAlgError, spla.ArpackError, RuntimeError) as exc:
        raise NumericalBreakdown(f"eigensolve failed: {exc}") from exc
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise NumericalBreakdown("non-positive or non-finite eigenvalue")
    X = _fix_signs(X)
    return [FemEigenpair(float(w[i]), X[:, i].copy(), i) for i in range(k)]


def eigen_residual(pair: FemEigenpair, sys: FemSystem) -> float:
    """``||K x - lambda M x|| / ||M x||``."""
    Mx = sys.M @ pair.vector
    return float(np.linalg.norm(sys.K @ pair.vector - pair.eigenvalue * Mx) / np.linalg.norm(Mx))


class FaceFlux(NamedTuple):
    raw: np.ndarray
    weighted: np.ndarray


def _facet_geometry(mesh: SimplexMesh) -> tuple[np.ndarray, np.ndarray]:
    n = mesh.dimension
    bf = mesh.boundary_faces
    keep = np.ones((bf.shape[0], n + 1), dtype=bool)
    keep[np.arange(bf.shape[0]), bf[:, 1]] = False
    facet_vertices = mesh.cells[bf[:, 0]][keep].reshape(-1, n)
    P = mesh.vertices[facet_vertices]
    E = P[:, 1:] - P[:, :1]
    gram = np.einsum("fai,fbi->fab", E, E)
    area = np.sqrt(np.abs(np.linalg.det(gram))) / math.factorial(n - 1)
    return facet_vertices, area


def _raw_flux(pair: FemEigenpair, sys: FemSystem) -> FaceFlux:
    mesh = sys.mesh
    n = mesh.dimension
    u = sys.full_vector(pair.vector)
    cell_grad = np.einsum("ca,cai->ci", u[mesh.cells], sys.cell_grads)
    normals = np.array([f.normal for f in faces(mesh.simplex)])
    cell, parent = mesh.boundary_faces[:, 0], mesh.boundary_faces[:, 2]
    _, area = _facet_geometry(mesh)
    g = cell_grad[cell]
    nu = normals[parent]
    dn = np.einsum("fi,fi->f", g, nu)
    conormal = np.einsum("fi,ij,fj->f", nu, sys.coeffs.gamma, g)
    h2 = 1.0 / pair.eigenvalue
    raw = h2 * np.bincount(parent, weights=area * dn**2, minlength=n + 1)
    weighted = h2 * np.bincount(parent, weights=area * dn * conormal, minlength=n + 1)
    return FaceFlux(raw, weighted)


def neumann_masses_fem(pair: FemEigenpair, sys: FemSystem) -> FaceFlux:
    """Per parent face: raw mass ``h^2 int (nu.grad u)^2`` and weighted mass
    ``h^2 int (nu.grad u)(nu^T Gamma grad u)``, from the per-cell constant
    gradient on each boundary facet."""
    return _raw_flux(pair, sys)


def neumann_mass_fem(pair: FemEigenpair, sys: FemSystem, j: int, weighted: bool = False) -> float:
    n = sys.mesh.dimension
    if not 0 <= j <= n:
        raise IndexError(f"face index {j} out of range 0..{n}")
    result = neumann_masses_fem(pair, sys)
    return float((result.weighted if weighted else result.raw)[j])
