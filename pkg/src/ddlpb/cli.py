"""Command-line entry points: solve, sweep, spectrum.

Defaults mirror the standard experimental setup (eps1=1, eps2=78.54,
kappa=0.104 1/A, lmax=7, 86 Lebedev points, alpha=1, tol=1e-4, kmax=60).
Reports are CSV (one '#' preamble line with the resolved configuration,
one column-header line, data rows, '#' summary footer) or JSON mirroring
the same fields.  CSV output is deterministic and byte-identical across
repeated runs with the same flags; wall time therefore appears only in
JSON reports and on stderr.

Exit codes: 0 success/convergence, 2 non-convergence of a solve, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .ball import (
    PhysicalParams,
    mode_spectrum,
    optimal_alpha,
    practical_alpha,
    sobolev_ball_bound,
    spectral_bounds,
)
from .cavity import PqrFormatError, parse_pqr
from .coupling import (
    DivergedError,
    IterationReport,
    SolverConfig,
    alpha_sweep,
    richardson_run,
)
from .interior import InnerSolveError

__all__ = ["main"]

FORMAT_VERSION = "ddlpb-report/1"


def _add_physics_flags(p: argparse.ArgumentParser):
    p.add_argument("--eps1", type=float, default=1.0, help="solute permittivity")
    p.add_argument("--eps2", type=float, default=78.54, help="solvent permittivity")
    p.add_argument("--kappa", type=float, default=0.104,
                   help="inverse screening length (1/Angstrom)")
    p.add_argument("--lmax", type=int, default=7, help="spherical-harmonic degree cutoff")


def _add_solver_flags(p: argparse.ArgumentParser):
    _add_physics_flags(p)
    p.add_argument("--leb", type=int, default=86, help="Lebedev points per sphere")
    p.add_argument("--alpha", type=float, default=1.0, help="stepping parameter")
    p.add_argument("--tol", type=float, default=1e-4, help="relative energy tolerance")
    p.add_argument("--kmax", type=int, default=60, help="maximum outer iterations")
    p.add_argument("--g0", choices=("zero", "psi0"), default="psi0",
                   help="initial interface guess")
    p.add_argument("--threads", type=int, default=1, help="worker cap for sweeps")


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddlpb",
        description="Linearized Poisson-Boltzmann solver on union-of-ball cavities "
                    "with a tunable interfacial stepping parameter.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run one interfacial iteration to convergence")
    ps.add_argument("pqr", help="PQR file (ATOM/HETATM records)")
    _add_solver_flags(ps)
    _add_output_flags(ps)

    pw = sub.add_parser("sweep", help="iteration counts over a stepping-parameter grid")
    pw.add_argument("pqr", help="PQR file (ATOM/HETATM records)")
    _add_solver_flags(pw)
    pw.add_argument("--alpha-grid", default="0.1:0.1:2.0",
                    help="grid as start:step:stop (inclusive)")
    _add_output_flags(pw)

    pc = sub.add_parser("spectrum", help="analytic per-mode spectrum on a single ball")
    pc.add_argument("--radius", type=float, required=True, help="ball radius (Angstrom)")
    _add_physics_flags(pc)
    _add_output_flags(pc)
    return parser


def _parse_grid(spec: str) -> list[float]:
    try:
        start, step, stop = (float(t) for t in spec.split(":"))
    except ValueError as exc:
        raise ValueError(f"bad --alpha-grid {spec!r}; expected start:step:stop") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad --alpha-grid {spec!r}")
    n = int(round((stop - start) / step))
    grid = [round(start + i * step, 12) for i in range(n + 1)]
    return [a for a in grid if a <= stop + 1e-12]


def _config_from_args(args) -> SolverConfig:
    return SolverConfig(
        params=PhysicalParams(eps1=args.eps1, eps2=args.eps2, kappa=args.kappa),
        lmax=args.lmax,
        leb_order=args.leb,
        alpha=args.alpha,
        tol=args.tol,
        kmax=args.kmax,
        g0=args.g0,
    )


def _emit(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _csv_report(config: dict, columns: list[str], rows: list[list], footer: dict) -> str:
    lines = [f"# {FORMAT_VERSION} config={json.dumps(config, sort_keys=True)}"]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    if footer:
        lines.append("# " + " ".join(f"{k}={_fmt(v)}" for k, v in footer.items()))
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _json_report(config: dict, body: dict) -> str:
    doc = {"format": FORMAT_VERSION, "config": config}
    doc.update(body)
    return json.dumps(doc, sort_keys=True, indent=1, default=_jsonable) + "\n"


def _solve_rows(report: IterationReport):
    rows = []
    for k, energy in enumerate(report.energies_kjmol, start=1):
        err = float(report.errors[k - 1]) if k - 1 < len(report.errors) else float("nan")
        rows.append([k, float(energy), err])
    return rows


def _write_solve_report(args, config_echo, report, wall_time):
    footer = {
        "converged": report.converged,
        "n_ite": report.n_ite,
        "energy_kjmol": report.energy_kjmol,
    }
    if args.format == "csv":
        text = _csv_report(config_echo, ["k", "energy_kjmol", "err"],
                           _solve_rows(report), footer)
    else:
        text = _json_report(config_echo, {
            "command": "solve",
            "converged": report.converged,
            "n_ite": report.n_ite,
            "energy_kjmol": _jsonable(report.energy_kjmol),
            "wall_time_s": wall_time,
            "iterations": [
                {"k": k, "energy_kjmol": _jsonable(e), "err": _jsonable(err)}
                for k, e, err in _solve_rows(report)
            ],
        })
    _emit(text, args.out)


def _cmd_solve(args) -> int:
    atoms = parse_pqr(open(args.pqr).read())
    config = _config_from_args(args)
    config_echo = _echo(args, ("pqr", "eps1", "eps2", "kappa", "lmax", "leb",
                               "alpha", "tol", "kmax", "g0"))
    t0 = time.perf_counter()
    try:
        report = richardson_run(atoms, config)
    except DivergedError as exc:
        report = exc.report
    wall = time.perf_counter() - t0
    _write_solve_report(args, config_echo, report, wall)
    print(f"ddlpb solve: converged={report.converged} n_ite={report.n_ite} "
          f"E={report.energy_kjmol:.6f} kJ/mol ({wall:.2f}s)", file=sys.stderr)
    return 0 if report.converged else 2


def _cmd_sweep(args) -> int:
    atoms = parse_pqr(open(args.pqr).read())
    config = _config_from_args(args)
    grid = _parse_grid(args.alpha_grid)
    config_echo = _echo(args, ("pqr", "eps1", "eps2", "kappa", "lmax", "leb",
                               "tol", "kmax", "g0", "alpha_grid", "threads"))
    t0 = time.perf_counter()
    result = alpha_sweep(atoms, config, grid, threads=args.threads)
    wall = time.perf_counter() - t0
    rows = [[r.alpha, r.n_ite, r.converged, r.energy_kjmol, r.err_final]
            for r in result.rows]
    footer = {
        "alpha_empirical": result.alpha_empirical if result.alpha_empirical is not None
        else float("nan"),
        "alpha_practical": result.alpha_practical,
    }
    if args.format == "csv":
        text = _csv_report(config_echo,
                           ["alpha", "n_ite", "converged", "energy_kjmol", "err_final"],
                           rows, footer)
    else:
        text = _json_report(config_echo, {
            "command": "sweep",
            "rows": [
                {"alpha": r.alpha, "n_ite": r.n_ite, "converged": r.converged,
                 "energy_kjmol": _jsonable(r.energy_kjmol),
                 "err_final": _jsonable(r.err_final)}
                for r in result.rows
            ],
            "alpha_empirical": result.alpha_empirical,
            "alpha_practical": result.alpha_practical,
            "wall_time_s": wall,
        })
    _emit(text, args.out)
    print(f"ddlpb sweep: {len(grid)} runs, alpha_empirical={result.alpha_empirical} "
          f"alpha_practical={result.alpha_practical:.4f} ({wall:.2f}s)", file=sys.stderr)
    return 0


def _cmd_spectrum(args) -> int:
    params = PhysicalParams(eps1=args.eps1, eps2=args.eps2, kappa=args.kappa)
    spec = mode_spectrum(args.radius, params, lmax=args.lmax)
    c1, c2 = spectral_bounds(params, sobolev_ball_bound(args.radius))
    mu = spec.mu
    config_echo = _echo(args, ("radius", "eps1", "eps2", "kappa", "lmax"))
    rows = [[int(l), float(spec.lam_r[l]), float(spec.lam_c[l]),
             float(spec.lam_e[l]), float(mu[l])] for l in spec.ells]
    footer = {
        "C1": c1,
        "C2": c2,
        "mu_min": float(mu.min()),
        "mu_max": float(mu.max()),
        "alpha_op": optimal_alpha(c1, c2),
        "alpha_practical": practical_alpha(params),
    }
    if args.format == "csv":
        text = _csv_report(config_echo,
                           ["ell", "lambda_r", "lambda_c", "lambda_e", "mu"],
                           rows, footer)
    else:
        text = _json_report(config_echo, {
            "command": "spectrum",
            "modes": [
                {"ell": r[0], "lambda_r": r[1], "lambda_c": r[2],
                 "lambda_e": r[3], "mu": r[4]} for r in rows
            ],
            **footer,
        })
    _emit(text, args.out)
    return 0


def _echo(args, keys) -> dict:
    return {k: getattr(args, k.replace("-", "_")) for k in keys}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_spectrum(args)
    except (OSError, ValueError, PqrFormatError, InnerSolveError) as exc:
        print(f"ddlpb: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
