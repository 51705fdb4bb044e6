"""Inverse problems from Neumann data norms.

* A triangle is determined (up to congruence) by its three face masses.
* On the standard triangle, the three masses of any eigenfunction of
  ``P = -Gamma_ij h d_i h d_j`` determine ``Gamma`` in closed form.
* In 3D the four masses do not determine ``Gamma``: :func:`counterexample_3d`
  builds a one-parameter family with the same masses as ``Gamma = I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import EpsilonTooLarge, InconsistentData, InvalidCoefficients, NoSuchTriangle
from .geometry import EllipticCoefficients

SPD_RTOL = 1e-12


@dataclass(frozen=True)
class TriangleNeumannData:
    """Neumann masses on the three sides of a triangle."""

    N_a: float
    N_b: float
    N_c: float

    def __post_init__(self) -> None:
        for v in self.as_array():
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"Neumann masses must be positive and finite, got {self.as_array()}")

    def as_array(self) -> np.ndarray:
        return np.array([self.N_a, self.N_b, self.N_c], dtype=float)


class RecoveredTriangle(NamedTuple):
    sides: tuple[float, float, float]  # descending
    area: float


def heron(a: float, b: float, c: float) -> float:
    """Triangle area from side lengths, in Kahan's stable ordering.

    Raises :class:`NoSuchTriangle` if the sides violate the strict triangle
    inequality.
    """
    a, b, c = sorted((float(a), float(b), float(c)), reverse=True)
    if c <= 0 or c - (a - b) <= 0:
        raise NoSuchTriangle(f"sides ({a}, {b}, {c}) violate the triangle inequality")
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(prod)


def triangle_masses(sides) -> np.ndarray:
    """Forward map: side lengths -> Neumann masses ``side / Area``."""
    sides = np.asarray(sides, dtype=float)
    return sides / heron(*sides)


def recover_triangle(d: TriangleNeumannData) -> RecoveredTriangle:
    """Reconstruct side lengths and area from the three face masses.

    Masses are ``N_x = x / Area``; the triangle with sides ``N`` has area
    ``H = Area^{-2} Area``, hence ``Area = 1/H`` and ``x = N_x / H``.
    """
    N = d.as_array()
    H = heron(*N)
    if H == 0.0:
        raise NoSuchTriangle("Neumann data describe a degenerate triangle")
    sides = tuple(sorted((float(x) for x in N / H), reverse=True))
    return RecoveredTriangle(sides, 1.0 / H)


@dataclass(frozen=True)
class StandardSimplexNeumannData:
    """Masses on the standard simplex: ``J[j-1]`` on ``{x_j = 0}``, ``J0`` on the slanted face."""

    J: tuple[float, ...]
    J0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "J", tuple(float(x) for x in self.J))
        values = self.J + (float(self.J0),)
        if not all(math.isfinite(v) and v > 0 for v in values):
            raise ValueError(f"Neumann masses must be positive and finite, got {values}")

    @property
    def dimension(self) -> int:
        return len(self.J)

    def as_list(self) -> list[float]:
        """``[J_1, ..., J_n, J_0]``."""
        return [*self.J, float(self.J0)]

    def by_face(self) -> np.ndarray:
        """Masses indexed by face number (face 0 is the slanted face)."""
        return np.array([float(self.J0), *self.J])

    @classmethod
    def from_list(cls, values) -> "StandardSimplexNeumannData":
        values = [float(v) for v in values]
        if len(values) < 3:
            raise ValueError("need at least three masses [J_1, ..., J_n, J_0]")
        return cls(tuple(values[:-1]), values[-1])


def _as_coeffs(coeffs) -> EllipticCoefficients:
    if isinstance(coeffs, EllipticCoefficients):
        return coeffs
    return EllipticCoefficients(np.asarray(coeffs, dtype=float))


def gamma_forward(coeffs, n: int | None = None) -> StandardSimplexNeumannData:
    """Face masses of any normalised eigenfunction of ``P`` on the standard simplex.

    ``J_j = 2 / (nu_j^T Gamma nu_j)`` on coordinate faces and
    ``J_0 = 2 sqrt(n) / (nu_0^T Gamma nu_0)`` on the slanted face.
    """
    coeffs = _as_coeffs(coeffs)
    if n is None:
        n = coeffs.dimension
    if coeffs.dimension != n:
        raise InvalidCoefficients(f"Gamma is {coeffs.dimension}x{coeffs.dimension}, expected n={n}")
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    # for n = 3 the slanted-face constant 2 sqrt(3) comes from the general
    # weighted identity on the slanted face, not from a stated 3D formula
    J = tuple(2.0 / coeffs.gamma[j, j] for j in range(n))
    nu0 = np.full(n, n**-0.5)
    J0 = 2.0 * math.sqrt(n) / coeffs.quadratic_form(nu0)
    return StandardSimplexNeumannData(J, J0)


def validate_spd(gamma: np.ndarray, rtol: float = SPD_RTOL) -> np.ndarray:
    """Return a symmetric positive-definite copy of ``gamma``.

    Eigenvalues within ``rtol`` of zero (relative to the largest) are treated
    as roundoff and clamped; anything more negative raises
    :class:`InconsistentData`.
    """
    g = np.asarray(gamma, dtype=float)
    g = 0.5 * (g + g.T)
    w, V = np.linalg.eigh(g)
    top = float(np.max(np.abs(w)))
    if top == 0.0 or w[-1] <= 0 or w[0] <= -rtol * top:
        raise InconsistentData(f"recovered matrix is not positive definite (eigenvalues {w})")
    if w[0] <= rtol * top:
        w = np.maximum(w, rtol * top)
        g = (V * w) @ V.T
        g = 0.5 * (g + g.T)
    return g


def recover_gamma_2d(d: StandardSimplexNeumannData) -> EllipticCoefficients:
    """Closed-form ``Gamma`` on the standard triangle from ``(J_1, J_2, J_0)``."""
    if d.dimension != 2:
        raise ValueError(f"closed-form recovery needs 2D data, got n={d.dimension}")
    J1, J2 = d.J
    g11 = 2.0 / J1
    g22 = 2.0 / J2
    g12 = 2.0 * math.sqrt(2.0) / d.J0 - 1.0 / J1 - 1.0 / J2
    gamma = np.array([[g11, g12], [g12, g22]])
    return EllipticCoefficients(validate_spd(gamma))


def _d_of(eps: float) -> float:
    s = math.sqrt(1.0 - eps * eps)
    return (-3.0 * eps * s - eps * eps) / (s + eps)


def _a_squared(eps: float) -> float:
    return 1.0 - _d_of(eps) ** 2 - eps * eps


def max_admissible_epsilon() -> float:
    """Supremum of ``eps`` in ``(0, 1)`` with ``1 - d^2 - eps^2 > 0`` (found by root bracketing)."""
    grid = np.linspace(0.0, 1.0, 1001)[1:-1]
    vals = np.array([_a_squared(e) for e in grid])
    bad = np.flatnonzero(vals <= 0)
    if bad.size == 0:
        return 1.0
    hi = grid[bad[0]]
    lo = grid[bad[0] - 1] if bad[0] > 0 else 0.0
    return float(brentq(_a_squared, lo, hi, xtol=1e-15))


def counterexample_3d(eps: float) -> tuple[np.ndarray, np.ndarray]:
    """The 3D family ``(B, Gamma = B B^T)`` whose four Neumann masses equal those of ``I``.

    ``B^T`` has rows ``(a, 0, 0)``, ``(d, s, eps)``, ``(eps, eps, s)`` with
    ``s = sqrt(1 - eps^2)``, ``d = (-3 eps s - eps^2) / (s + eps)`` and
    ``a = sqrt(1 - d^2 - eps^2)``.
    """
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise EpsilonTooLarge(f"epsilon must lie in [0, 1), got {eps}")
    a2 = _a_squared(eps)
    if a2 <= 0:
        raise EpsilonTooLarge(
            f"epsilon={eps} makes 1 - d^2 - eps^2 = {a2:.3e} <= 0; "
            f"admissible range is eps < {max_admissible_epsilon():.6f}"
        )
    s = math.sqrt(1.0 - eps * eps)
    Bt = np.array([[math.sqrt(a2), 0.0, 0.0], [_d_of(eps), s, eps], [eps, eps, s]])
    B = Bt.T.copy()
    gamma = B @ B.T
    return B, 0.5 * (gamma + gamma.T)


def quadratic_form_values(B: np.ndarray) -> np.ndarray:
    """``|B^T e_1|^2, ..., |B^T e_n|^2, |B^T (1,..,1)|^2``."""
    Bt = np.asarray(B, dtype=float).T
    n = Bt.shape[0]
    cols = [Bt[:, j] for j in range(n)] + [Bt @ np.ones(n)]
    return np.array([float(c @ c) for c in cols])
