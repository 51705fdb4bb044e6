"""Experiments comparing measured face Neumann masses with the exact prediction."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import exact_modes, fem
from .errors import ResourceLimit
from .geometry import EllipticCoefficients, Simplex, faces, predicted_neumann_masses, standard_simplex

THREADS_ENV = "SIMPLEX_NEUMANN_THREADS"
CSV_FIELDS = ("source", "n", "level", "mode", "face", "predicted", "measured", "residual")
CLUSTER_RTOL = 1e-8


@dataclass
class FaceRecord:
    face: int
    predicted: float
    measured: float
    residual: float
    raw_predicted: float | None = None
    raw_measured: float | None = None


@dataclass
class NeumannReport:
    """Per-face comparison for one eigenfunction.

    ``measured`` is the conormal-weighted mass ``h^2 int (nu.grad u)(nu^T Gamma grad u)``,
    which reduces to the plain Neumann mass for ``Gamma = I``; ``raw_*`` fields
    carry the unweighted mass when ``Gamma != I``.
    """

    simplex: dict[str, Any]
    source: str
    level: int | None
    mode: str
    eigenvalue: float
    faces: list[FaceRecord]
    gamma: list[list[float]] | None = None
    cluster: list[int] | None = None
    timestamp: str | None = None

    @property
    def n(self) -> int:
        return int(self.simplex["dimension"])

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.faces)

    def predicted(self) -> np.ndarray:
        return np.array([r.predicted for r in self.faces])

    def measured(self) -> np.ndarray:
        return np.array([r.measured for r in self.faces])

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["max_residual"] = self.max_residual
        return d

    def csv_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "source": self.source,
                "n": self.n,
                "level": "" if self.level is None else self.level,
                "mode": self.mode,
                "face": r.face,
                "predicted": r.predicted,
                "measured": r.measured,
                "residual": r.residual,
            }
            for r in self.faces
        ]


def reports_to_csv(reports: Sequence[NeumannReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        for row in rep.csv_rows():
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _records(predicted: np.ndarray, measured: np.ndarray, raw_predicted=None, raw_measured=None):
    out = []
    for j, (p, m) in enumerate(zip(predicted, measured)):
        out.append(
            FaceRecord(
                face=j,
                predicted=float(p),
                measured=float(m),
                residual=abs(float(m) - float(p)) / float(p),
                raw_predicted=None if raw_predicted is None else float(raw_predicted[j]),
                raw_measured=None if raw_measured is None else float(raw_measured[j]),
            )
        )
    return out


def verify_exact(n: int, wavenumbers: Sequence[int], npts: int | None = None) -> NeumannReport:
    """Face masses of an exact alcove mode against the predicted values."""
    mode = exact_modes.make_mode(n, wavenumbers)
    s = mode.simplex
    rule = None if npts is None else exact_modes.face_rule(mode, npts)
    measured = exact_modes.neumann_masses_exact(mode, rule)
    return NeumannReport(
        simplex=s.to_dict(),
        source="exact-oracle",
        level=None,
        mode=mode.label,
        eigenvalue=mode.eigenvalue,
        faces=_records(predicted_neumann_masses(s), measured),
    )


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    return value or (os.cpu_count() or 1)


def _clusters(eigenvalues: Sequence[float]) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, lam in enumerate(eigenvalues):
        if groups and abs(lam - eigenvalues[groups[-1][-1]]) < CLUSTER_RTOL * lam:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


@dataclass
class ConvergenceTable:
    """Residuals per (mode, level, face) with observed orders between successive levels."""

    levels: list[int]
    eigenvalues: np.ndarray  # (modes, levels)
    residuals: np.ndarray  # (modes, levels, faces)
    raw_masses: np.ndarray  # (modes, levels, faces)
    measured: np.ndarray  # (modes, levels, faces)
    predicted: np.ndarray | None = None  # (faces,)

    def observed_orders(self) -> np.ndarray:
        """``log2(r(L) / r(L+1))`` for consecutive levels, shape (modes, levels-1, faces)."""
        r = self.residuals
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log2(r[:, :-1] / r[:, 1:])

    def error_bars(self, raw: bool = True) -> np.ndarray:
        """Richardson error estimate at the finest level, shape (modes, faces).

        Uses the order observed over the last three levels when available
        (clamped to [1, 3]) and first order otherwise.
        """
        J = self.raw_masses if raw else self.measured
        if J.shape[1] < 2:
            raise ValueError("need at least two levels for an error bar")
        diff = np.abs(J[:, -1] - J[:, -2])
        if J.shape[1] >= 3:
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.log2(np.abs(J[:, -2] - J[:, -3]) / diff)
            p = np.clip(np.nan_to_num(p, nan=1.0, posinf=3.0, neginf=1.0), 1.0, 3.0)
        else:
            p = np.ones_like(diff)
        return diff / (2.0**p - 1.0)

    def observed_errors(self) -> np.ndarray:
        """``|measured - predicted|`` at the finest level, shape (modes, faces).

        A direct error bar when the exact value is known; it does not rely on
        the coarse levels being in the asymptotic regime.
        """
        if self.predicted is None:
            raise ValueError("table has no predicted values")
        return np.abs(self.measured[:, -1] - self.predicted)

    def to_dict(self) -> dict[str, Any]:
        orders = self.observed_orders()
        return {
            "levels": list(self.levels),
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "observed_orders": [[[None if not math.isfinite(v) else float(v) for v in row] for row in m] for m in orders],
        }


@dataclass
class FemStudy:
    reports: list[NeumannReport]
    table: ConvergenceTable
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "convergence": self.table.to_dict(),
            **self.extra,
        }


def _solve_level(s: Simplex, coeffs: EllipticCoefficients, level: int, num_modes: int):
    mesh = fem.refine(s, level)
    system = fem.assemble(mesh, coeffs)
    k = min(num_modes, system.num_dofs)
    pairs = fem.solve_eigenpairs(system, k)
    return [(p, fem.neumann_masses_fem(p, system)) for p in pairs]


def verify_fem(
    simplex: Simplex | None = None,
    gamma=None,
    levels: Sequence[int] = (3, 4, 5, 6),
    num_modes: int = 1,
    threads: int | None = None,
) -> FemStudy:
    """Run P1 eigen-solves over ``levels`` and compare face masses with the prediction.

    With ``Gamma != I`` the compared quantity is the conormal-weighted mass,
    whose exact value is the same geometric prediction; the unweighted mass is
    reported alongside with prediction ``predicted / (nu^T Gamma nu)``.
    """
    levels = [int(L) for L in levels]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"levels must be strictly ascending, got {levels}")
    if simplex is None:
        n = 2 if gamma is None else np.asarray(
            gamma.gamma if isinstance(gamma, EllipticCoefficients) else gamma
        ).shape[0]
        simplex = standard_simplex(n)
    n = simplex.dimension
    if gamma is None:
        coeffs = EllipticCoefficients.identity(n)
    elif isinstance(gamma, EllipticCoefficients):
        coeffs = gamma
    else:
        coeffs = EllipticCoefficients(np.asarray(gamma, dtype=float))
    if coeffs.dimension != n:
        raise ValueError("gamma and simplex dimensions differ")
    cap = fem.MAX_LEVEL.get(n)
    if cap is None:
        raise ValueError(f"FEM supports dimensions 2 and 3, got {n}")
    if levels[0] < 0:
        raise ValueError("levels must be non-negative")
    if levels[-1] > cap:
        raise ResourceLimit(f"level {levels[-1]} exceeds the cap {cap} for n={n}")

    workers = threads if threads is not None else thread_count()
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(levels)))) as pool:
        results = list(pool.map(lambda L: _solve_level(simplex, coeffs, L, num_modes), levels))

    predicted = predicted_neumann_masses(simplex)
    stretch = np.array([coeffs.quadratic_form(f.normal) for f in faces(simplex)])
    raw_predicted = predicted / stretch
    is_identity = np.array_equal(coeffs.gamma, np.eye(n))
    k = min(len(r) for r in results)
    reports = []
    eig = np.zeros((k, len(levels)))
    res = np.zeros((k, len(levels), n + 1))
    raw = np.zeros_like(res)
    meas = np.zeros_like(res)
    for li, (L, pairs) in enumerate(zip(levels, results)):
        clusters = _clusters([p.eigenvalue for p, _ in pairs])
        member = {i: g for g in clusters for i in g}
        for mi, (pair, flux) in enumerate(pairs[:k]):
            measured = flux.raw if is_identity else flux.weighted
            rep = NeumannReport(
                simplex=simplex.to_dict(),
                source="fem",
                level=L,
                mode=str(mi),
                eigenvalue=pair.eigenvalue,
                faces=_records(
                    predicted,
                    measured,
                    None if is_identity else raw_predicted,
                    None if is_identity else flux.raw,
                ),
                gamma=None if is_identity else coeffs.gamma.tolist(),
                cluster=member[mi] if len(member[mi]) > 1 else None,
            )
            reports.append(rep)
            eig[mi, li] = pair.eigenvalue
            res[mi, li] = [r.residual for r in rep.faces]
            raw[mi, li] = flux.raw
            meas[mi, li] = measured
    return FemStudy(reports, ConvergenceTable(levels, eig, res, raw, meas, predicted))


def random_simplex(n: int, seed: int, min_quality: float = 0.2) -> Simplex:
    """Random simplex with vertices in ``[0, 1]^n``, rejecting slivers.

    Quality is ``n! |T| / max_edge^n`` relative to the regular simplex.
    """
    rng = np.random.default_rng(seed)
    regular = math.sqrt(n + 1) / 2 ** (n / 2)
    while True:
        v = rng.random((n + 1, n))
        edges = [np.linalg.norm(v[i] - v[j]) for i in range(n + 1) for j in range(i)]
        q = abs(np.linalg.det(v[1:] - v[0])) / max(edges) ** n / regular
        if q >= min_quality:
            return Simplex(v)
