"""Command-line entry point.

Exit status: 0 on success, 1 on domain errors (the input describes no valid
object), 2 on usage or I/O errors.  Errors are written to stderr as a single
JSON line.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import fem, inverse, verify
from .errors import DomainError, ResourceLimit, SimplexNeumannError
from .geometry import (
    EllipticCoefficients,
    Simplex,
    alcove_simplex,
    faces,
    predicted_neumann_masses,
    standard_simplex,
    volume,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _load_json(value: str) -> Any:
    """Parse ``value`` as inline JSON if it looks like JSON, else as a file path."""
    text = value.strip()
    if not text.startswith(("{", "[")):
        try:
            text = Path(value).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {value}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON in {value!r}: {exc.msg}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _simplex_from_args(args) -> Simplex:
    if getattr(args, "simplex", None):
        data = _load_json(args.simplex)
        if not isinstance(data, dict) or "vertices" not in data:
            raise UsageError('simplex JSON must be an object {"dimension": n, "vertices": [...]}')
        try:
            return Simplex.from_dict(data)
        except (TypeError, KeyError) as exc:
            raise UsageError(f"malformed simplex JSON: {exc}") from None
    if getattr(args, "random", None):
        return verify.random_simplex(args.random, args.seed)
    if getattr(args, "alcove", None):
        return alcove_simplex(args.alcove)
    return standard_simplex(getattr(args, "standard", None) or 2)


def _gamma_from_args(args, n: int):
    if not args.gamma:
        return None
    data = _load_json(args.gamma)
    try:
        g = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise UsageError("gamma must be an n x n numeric JSON array") from None
    if g.shape != (n, n):
        raise UsageError(f"gamma must be {n}x{n}, got shape {g.shape}")
    return EllipticCoefficients(g)


def cmd_predict(args) -> dict[str, Any]:
    s = _simplex_from_args(args)
    fs = faces(s)
    masses = predicted_neumann_masses(s)
    return {
        "simplex": s.to_dict(),
        "volume": volume(s),
        "faces": [
            {"face": f.index, "measure": f.measure, "normal": f.normal.tolist(), "predicted": float(m)}
            for f, m in zip(fs, masses)
        ],
    }


def cmd_verify_exact(args) -> verify.NeumannReport:
    ks = args.wavenumbers
    n = args.dimension or len(ks)
    return verify.verify_exact(n, ks, args.npts)


def cmd_verify_fem(args) -> verify.FemStudy:
    s = _simplex_from_args(args)
    coeffs = _gamma_from_args(args, s.dimension)
    study = verify.verify_fem(s, coeffs, args.level, args.num_modes)
    if args.mesh_out:
        mesh = fem.refine(s, args.level[-1])
        Path(args.mesh_out).write_text(json.dumps(mesh.to_dict()), encoding="utf-8")
    return study


def cmd_recover_triangle(args) -> dict[str, Any]:
    data = _load_json(args.data)
    if not isinstance(data, dict) or "N" not in data or len(data["N"]) != 3:
        raise UsageError('triangle data must be {"N": [N_a, N_b, N_c]}')
    try:
        d = inverse.TriangleNeumannData(*(float(x) for x in data["N"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    tri = inverse.recover_triangle(d)
    forward = np.sort(inverse.triangle_masses(tri.sides))[::-1]
    given = np.sort(d.as_array())[::-1]
    return {
        "N": d.as_array().tolist(),
        "sides": list(tri.sides),
        "area": tri.area,
        "forward_residual": float(np.max(np.abs(forward - given) / given)),
    }


def cmd_recover_gamma(args) -> dict[str, Any]:
    data = _load_json(args.data)
    if not isinstance(data, dict) or "J" not in data:
        raise UsageError('gamma data must be {"J": [J_1, ..., J_n, J_0]}')
    try:
        d = inverse.StandardSimplexNeumannData.from_list(data["J"])
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if d.dimension != 2:
        raise UsageError(
            f"closed-form recovery exists only for n = 2; {d.dimension}D norms do not determine Gamma"
        )
    coeffs = inverse.recover_gamma_2d(d)
    forward = np.array(inverse.gamma_forward(coeffs, 2).as_list())
    given = np.array(d.as_list())
    return {
        "J": d.as_list(),
        "gamma": coeffs.gamma.tolist(),
        "forward_residual": float(np.max(np.abs(forward - given) / given)),
    }


def cmd_counterexample(args) -> dict[str, Any]:
    eps = args.epsilon
    B, gamma = inverse.counterexample_3d(eps)
    masses = inverse.gamma_forward(gamma, 3).as_list()
    return {
        "epsilon": eps,
        "B": B.tolist(),
        "gamma": gamma.tolist(),
        "quadratic_forms": inverse.quadratic_form_values(B).tolist(),
        "gamma_minus_identity_inf": float(np.max(np.abs(gamma - np.eye(3)))),
        "min_eigenvalue": float(np.linalg.eigvalsh(gamma)[0]),
        "neumann_masses": masses,
        "identity_neumann_masses": inverse.gamma_forward(np.eye(3), 3).as_list(),
        "max_admissible_epsilon": inverse.max_admissible_epsilon(),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="simplex-neumann",
        description="Neumann data mass on simplices: predictions, verification and inverse problems.",
    )
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--timestamp", action="store_true", help="stamp reports with the current UTC time")

    def simplex_opts(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--simplex", help='simplex JSON file or inline {"dimension": n, "vertices": [...]}')
        g.add_argument("--standard", type=int, metavar="N", help="standard N-simplex (default 2)")
        g.add_argument("--alcove", type=int, metavar="N", help="order simplex {1 >= x_1 >= ... >= x_N >= 0}")
        g.add_argument("--random", type=int, metavar="N", help="random N-simplex in the unit cube")
        p.add_argument("--seed", type=int, default=0, help="seed for --random")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", parents=[common], help="predicted face masses of a simplex")
    simplex_opts(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify-exact", parents=[common], help="exact alcove mode vs prediction")
    p.add_argument("--wavenumbers", type=_int_list, required=True, help="e.g. 2,1 or 3,2,1")
    p.add_argument("--dimension", type=int, help="defaults to the number of wavenumbers")
    p.add_argument("--npts", type=int, help="quadrature points per direction")
    p.set_defaults(func=cmd_verify_exact)

    p = sub.add_parser("verify-fem", parents=[common], help="P1 FEM convergence study")
    simplex_opts(p)
    p.add_argument("--gamma", help="n x n coefficient matrix (JSON file or inline array)")
    p.add_argument("--level", type=_int_list, default=[3, 4, 5, 6], help="ascending levels, e.g. 3,4,5")
    p.add_argument("--num-modes", type=int, default=1)
    p.add_argument("--mesh-out", help="write the finest mesh as JSON")
    p.set_defaults(func=cmd_verify_fem)

    p = sub.add_parser("recover-triangle", parents=[common], help="triangle from its three face masses")
    p.add_argument("--data", required=True, help='{"N": [N_a, N_b, N_c]} inline or as a file')
    p.set_defaults(func=cmd_recover_triangle)

    p = sub.add_parser("recover-gamma", parents=[common], help="Gamma on the standard triangle from masses")
    p.add_argument("--data", required=True, help='{"J": [J_1, J_2, J_0]} inline or as a file')
    p.set_defaults(func=cmd_recover_gamma)

    p = sub.add_parser("counterexample", parents=[common], help="3D family with the masses of Gamma = I")
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_counterexample)
    return parser


def _render(result: Any, fmt: str, stamp: str | None) -> str:
    if isinstance(result, verify.NeumannReport):
        result.timestamp = stamp
        reports = [result]
        payload = result.to_dict()
    elif isinstance(result, verify.FemStudy):
        for r in result.reports:
            r.timestamp = stamp
        reports = result.reports
        payload = result.to_dict()
    else:
        reports = None
        payload = result
    if fmt == "csv":
        if reports is None:
            raise UsageError("CSV output is only available for verify-exact and verify-fem")
        return verify.reports_to_csv(reports)
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(2, "UsageError", str(exc))
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "verify-fem" and any(b <= a for a, b in zip(args.level, args.level[1:])):
        return _fail(2, "UsageError", f"--level must be strictly ascending, got {args.level}")
    if args.command == "counterexample" and not math.isfinite(args.epsilon):
        return _fail(2, "UsageError", "--epsilon must be finite")
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if args.timestamp else None
    try:
        text = _render(args.func(args), args.format, stamp)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except DomainError as exc:
        return _fail(1, type(exc).__name__, str(exc))
    except (UsageError, ResourceLimit, OSError, ValueError, IndexError) as exc:
        return _fail(2, type(exc).__name__, str(exc))
    except SimplexNeumannError as exc:
        return _fail(1, type(exc).__name__, str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
