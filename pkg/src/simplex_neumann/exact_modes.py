"""Closed-form Dirichlet eigenfunctions on order simplices ("alcoves").

On ``{1 >= x_1 >= ... >= x_n >= 0}`` the antisymmetrised sine product

    u(x) = c * sum_sigma sgn(sigma) prod_i sin(k_sigma(i) pi x_i)

vanishes on every face and satisfies ``-Laplace u = pi^2 |k|^2 u``.  These
modes give machine-precision reference values for face Neumann masses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IdenticallyZeroMode
from .geometry import Face, Simplex, alcove_simplex, faces
from .quadrature import QuadratureRule, gauss_legendre, points_for_wavenumber


def _permutation_sign(perm: tuple[int, ...]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


@dataclass(frozen=True)
class AlcoveMode:
    """Normalised exact eigenfunction on the ``n``-dimensional alcove.

    Use :func:`make_mode` to construct; ``norm_constant`` is chosen so that
    the L^2 norm over the alcove is one.
    """

    dimension: int
    wavenumbers: tuple[int, ...]
    norm_constant: float = 1.0
    _terms: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self._terms:
            k = np.asarray(self.wavenumbers, dtype=float) * math.pi
            terms = tuple(
                (_permutation_sign(p), k[list(p)])
                for p in itertools.permutations(range(self.dimension))
            )
            object.__setattr__(self, "_terms", terms)

    @property
    def eigenvalue(self) -> float:
        return math.pi**2 * float(sum(k * k for k in self.wavenumbers))

    @property
    def h(self) -> float:
        return self.eigenvalue**-0.5

    @property
    def simplex(self) -> Simplex:
        return alcove_simplex(self.dimension)

    @property
    def label(self) -> str:
        return ",".join(str(k) for k in self.wavenumbers)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for sign, kk in self._terms:
            out += sign * np.prod(np.sin(kk * x), axis=-1)
        return self.norm_constant * out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for sign, kk in self._terms:
            s = np.sin(kk * x)
            c = kk * np.cos(kk * x)
            for i in range(self.dimension):
                others = np.prod(np.delete(s, i, axis=-1), axis=-1)
                out[..., i] += sign * c[..., i] * others
        return self.norm_constant * out

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        """Analytic Laplacian, summed term by term from second derivatives."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for sign, kk in self._terms:
            s = np.sin(kk * x)
            for i in range(self.dimension):
                others = np.prod(np.delete(s, i, axis=-1), axis=-1)
                out += sign * (-kk[i] ** 2) * s[..., i] * others
        return self.norm_constant * out


def volume_rule(mode: AlcoveMode, npts: int | None = None) -> QuadratureRule:
    if npts is None:
        npts = points_for_wavenumber(max(mode.wavenumbers))
    return gauss_legendre(npts, mode.dimension)


def face_rule(mode: AlcoveMode, npts: int | None = None) -> QuadratureRule:
    if npts is None:
        npts = points_for_wavenumber(max(mode.wavenumbers))
    return gauss_legendre(npts, mode.dimension - 1)


def inner_product(a: AlcoveMode, b: AlcoveMode, rule: QuadratureRule | None = None) -> float:
    """``int u_a u_b`` over the common alcove."""
    if a.dimension != b.dimension:
        raise ValueError("modes live on alcoves of different dimension")
    if rule is None:
        rule = volume_rule(a, points_for_wavenumber(max(a.wavenumbers + b.wavenumbers)))
    x, w = rule.map_to(a.simplex.vertices)
    return float(w @ (a.value(x) * b.value(x)))


def make_mode(n: int, wavenumbers, rule: QuadratureRule | None = None) -> AlcoveMode:
    """Build the normalised alcove mode with the given integer wavenumbers.

    Wavenumbers are sorted into decreasing order.  Repeated wavenumbers make the
    antisymmetrisation vanish and raise :class:`IdenticallyZeroMode`.
    """
    if n not in (2, 3):
        raise ValueError(f"alcove modes are provided for n in (2, 3), got {n}")
    ks = tuple(int(k) for k in wavenumbers)
    if len(ks) != n:
        raise ValueError(f"need {n} wavenumbers, got {len(ks)}")
    if any(k != kf for k, kf in zip(ks, wavenumbers)) or min(ks) < 1:
        raise ValueError(f"wavenumbers must be positive integers, got {tuple(wavenumbers)}")
    if len(set(ks)) != n:
        raise IdenticallyZeroMode(f"repeated wavenumbers {ks} give u = 0")
    ks = tuple(sorted(ks, reverse=True))
    raw = AlcoveMode(n, ks)
    if rule is None:
        rule = volume_rule(raw)
    x, w = rule.map_to(raw.simplex.vertices)
    norm2 = float(w @ raw.value(x) ** 2)
    return AlcoveMode(n, ks, 1.0 / math.sqrt(norm2), raw._terms)


def _check_face(mode: AlcoveMode, face: Face) -> np.ndarray:
    n = mode.dimension
    if len(face.vertex_indices) != n or not 0 <= face.index <= n:
        raise ValueError("face does not belong to the mode's alcove")
    return mode.simplex.vertices[list(face.vertex_indices)]


def neumann_mass_exact(mode: AlcoveMode, face: Face, rule: QuadratureRule | None = None) -> float:
    """``h^2 int_face |nu . grad u|^2 dS`` by quadrature."""
    if rule is None:
        rule = face_rule(mode)
    if rule.dimension != mode.dimension - 1:
        raise ValueError(
            f"face rule must have dimension {mode.dimension - 1}, got {rule.dimension}"
        )
    pts = _check_face(mode, face)
    x, w = rule.map_to(pts)
    dn = mode.gradient(x) @ face.normal
    return mode.h**2 * float(w @ dn**2)


def neumann_masses_exact(mode: AlcoveMode, rule: QuadratureRule | None = None) -> np.ndarray:
    return np.array([neumann_mass_exact(mode, f, rule) for f in faces(mode.simplex)])


def rellich_boundary_sum(mode: AlcoveMode, shift, rule: QuadratureRule | None = None) -> float:
    """``sum_j int_{G_j} (h X u)(h d_nu u) dS`` with ``X = (x + m) . grad``.

    The integrand is evaluated pointwise; the commutator identity says the sum
    equals ``2 ||u||^2 = 2``.
    """
    m = np.asarray(shift, dtype=float)
    if m.shape != (mode.dimension,):
        raise ValueError(f"shift must have length {mode.dimension}")
    if rule is None:
        rule = face_rule(mode)
    total = 0.0
    for f in faces(mode.simplex):
        x, w = rule.map_to(_check_face(mode, f))
        g = mode.gradient(x)
        xu = np.einsum("...i,...i->...", x + m, g)
        total += float(w @ (xu * (g @ f.normal)))
    return mode.h**2 * total


def rellich_identity_check(mode: AlcoveMode, shift, rule: QuadratureRule | None = None) -> float:
    """Residual ``|boundary sum - 2|`` of the commutator identity."""
    return abs(rellich_boundary_sum(mode, shift, rule) - 2.0)


def rellich_coefficients(s: Simplex, shift) -> np.ndarray:
    """Per-face constants ``(x + m) . nu_j``, constant on each face's hyperplane."""
    m = np.asarray(shift, dtype=float)
    return np.array([(s.vertices[f.vertex_indices[0]] + m) @ f.normal for f in faces(s)])


def masses_from_rellich(s: Simplex, shifts) -> np.ndarray:
    """Face masses solving ``sum_j c_j(m) J_j = 2`` for several shifts ``m``.

    With ``n+1`` generic shifts (or more, in least squares) the system has a
    unique solution; no eigenfunction enters.
    """
    C = np.array([rellich_coefficients(s, m) for m in shifts])
    if C.shape[0] < s.dimension + 1:
        raise ValueError(f"need at least {s.dimension + 1} shifts, got {C.shape[0]}")
    J, *_ = np.linalg.lstsq(C, np.full(C.shape[0], 2.0), rcond=None)
    return J
