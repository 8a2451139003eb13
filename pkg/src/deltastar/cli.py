"""Command-line front end.

    deltastar bound angle --alpha 1 --phi-deg 90
    deltastar bound star --rays 0:1,120:1,240:1
    deltastar solve lines --alpha 1 --phi-deg 90 --L 20 --h 0.05
    deltastar sweep angle --phi-deg-list 30,60,90 --out sweep.csv --plot-data sweep.dat
    deltastar verify angle
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from .bounds import NoAdmissibleSplit, angle_bound, lines_bound, llp_bound, star_bound
from .discretization import assemble, build_grid, write_matrix
from .eigensolver import NonConvergence, lowest_eigenpairs
from .geometry import DomainError, angle_config, lines_config, star_config
from .sweep import (
    DEFAULT_TOL_DISC,
    SweepSettings,
    convergence_study,
    run_sweep,
    sweep_row,
    verify_rows,
    write_csv,
    write_plot_data,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_ANGLE_SWEEP = (30.0, 60.0, 90.0, 120.0, 150.0, 180.0)
DEFAULT_LINES_SWEEP = (30.0, 45.0, 60.0, 90.0)
CONFIG_KEYS = {"alpha", "phi_deg", "L", "h", "k", "tol", "mode", "out"}

log = logging.getLogger("deltastar")


class UsageError(Exception):
    pass


def read_config(path: str) -> Dict[str, str]:
    """Parse a ``key=value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _parse_float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _parse_rays(text: str):
    angles, couplings = [], []
    for item in text.split(","):
        try:
            a, c = item.split(":")
            angles.append(math.radians(float(a)))
            couplings.append(float(c))
        except ValueError as exc:
            raise UsageError(f"bad ray {item!r}; expected deg:coupling") from exc
    return angles, couplings


def _common(p: argparse.ArgumentParser, modes: Sequence[str]) -> None:
    p.add_argument("mode", nargs="?", choices=modes)
    p.add_argument("--config", help="key=value file; flags take precedence")
    p.add_argument("--alpha", type=float)
    p.add_argument("--phi-deg", type=float)
    p.add_argument("--phi-rad", type=float)


def _numerics(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, help="overrides DELTA_WEDGE_SEED")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltastar", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="analytic lower bound")
    _common(p, ("angle", "lines", "star"))
    p.add_argument("--rays", help="star mode: comma list of deg:coupling")

    p = sub.add_parser("solve", help="discretize and compute the lowest eigenvalues")
    _common(p, ("angle", "lines", "star"))
    _numerics(p)
    p.add_argument("--rays")
    p.add_argument("--k", type=int)
    p.add_argument("--csv", help="append-free CSV with one sweep row (angle/lines modes)")
    p.add_argument("--dump-matrix", help="write the assembled pencil matrix")

    for name, text in (("sweep", "sweep the opening angle"), ("verify", "sweep and check the bounds")):
        p = sub.add_parser(name, help=text)
        _common(p, ("angle", "lines"))
        _numerics(p)
        p.add_argument("--phi-deg-list", help="comma separated angles in degrees")
        p.add_argument("--phi-range", help="start:stop:count in degrees, inclusive")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--plot-data", help="two-column plot data path")
        p.add_argument("--tol-disc", type=float)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--bound-factor", type=float, default=1.0, help=argparse.SUPPRESS)
        if name == "verify":
            p.add_argument("--convergence-study", action="store_true",
                           help="measure tol_disc on h in {0.2, 0.1, 0.05} at phi = 180 deg")
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fold config-file values under explicit flags."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    pairs = {"alpha": float, "L": float, "h": float, "tol": float, "k": int}
    for key, conv in pairs.items():
        if hasattr(args, key) and getattr(args, key) is None and key in cfg:
            setattr(args, key, conv(cfg[key]))
    if args.mode is None:
        args.mode = cfg.get("mode")
    if args.mode is None:
        raise UsageError("mode is required (positional or in the config file)")
    if args.phi_deg is None and args.phi_rad is None and "phi_deg" in cfg:
        args.phi_deg = float(cfg["phi_deg"])
    if hasattr(args, "out") and args.out is None and "out" in cfg:
        args.out = cfg["out"]
    defaults = {"alpha": 1.0, "L": 20.0, "h": 0.05, "tol": 1e-8, "k": 1}
    for key, value in defaults.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _phi(args: argparse.Namespace) -> float:
    if (args.phi_deg is None) == (args.phi_rad is None):
        raise UsageError("give exactly one of --phi-deg / --phi-rad")
    return math.radians(args.phi_deg) if args.phi_deg is not None else args.phi_rad


def _config(args: argparse.Namespace):
    if args.mode == "star":
        if not args.rays:
            raise UsageError("star mode needs --rays")
        angles, couplings = _parse_rays(args.rays)
        return star_config(angles, couplings)
    phi = _phi(args)
    return angle_config(phi, args.alpha) if args.mode == "angle" else lines_config(phi, args.alpha)


def cmd_bound(args: argparse.Namespace) -> int:
    if args.mode == "star":
        res = star_bound(_config(args))
        print(f"bound {res.bound:.10g}")
        print("gammas " + " ".join(f"{g:.10g}" for g in res.split.gammas))
        return EXIT_OK
    phi = _phi(args)
    if args.mode == "angle":
        res = angle_bound(args.alpha, phi)
        print(f"bound {res.bound:.10g}")
        print(f"beta {res.beta:.10g}")
        print(f"alpha_minus_beta {args.alpha - res.beta:.10g}")
        print(f"llp {llp_bound(args.alpha, phi):.10g}")
    else:
        res = lines_bound(args.alpha, phi)
        print(f"bound {res.bound:.10g}")
        print(f"beta {res.beta:.10g}")
        print(f"alpha_minus_beta {args.alpha - res.beta:.10g}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _config(args)
    form = assemble(build_grid(args.L, args.h), cfg)
    if args.dump_matrix:
        with open(args.dump_matrix, "w", newline="\n") as fh:
            write_matrix(form, fh)
    est = lowest_eigenpairs(form, k=args.k, tol=args.tol, seed=args.seed, keep_vectors=False)
    print(f"# n={form.grid.n} unknowns={form.grid.size} h={args.h} L={args.L} shift={est.shift:.6g}")
    print("index eigenvalue residual converged")
    for i, (lam, res, ok) in enumerate(zip(est.eigenvalues, est.residuals, est.converged)):
        print(f"{i} {lam:.12g} {res:.3e} {'true' if ok else 'false'}")
    if args.csv:
        if args.mode == "star":
            raise UsageError("--csv rows exist for angle and lines modes only")
        s = SweepSettings(args.mode, args.alpha, args.L, args.h, args.tol, DEFAULT_TOL_DISC, args.seed)
        with open(args.csv, "w", newline="\n") as fh:
            write_csv([sweep_row(_phi(args), s)], fh)
    return EXIT_OK if est.all_converged else EXIT_SOLVER


def _sweep_phis(args: argparse.Namespace) -> List[float]:
    if args.phi_deg_list is not None and args.phi_range is not None:
        raise UsageError("give at most one of --phi-deg-list / --phi-range")
    if args.phi_deg_list is not None:
        degs = _parse_float_list(args.phi_deg_list)
    elif args.phi_range is not None:
        try:
            start, stop, count = args.phi_range.split(":")
            degs = list(np.linspace(float(start), float(stop), int(count)))
        except ValueError as exc:
            raise UsageError(f"bad --phi-range {args.phi_range!r}") from exc
    elif args.phi_deg is not None or args.phi_rad is not None:
        return [_phi(args)]
    else:
        degs = list(DEFAULT_ANGLE_SWEEP if args.mode == "angle" else DEFAULT_LINES_SWEEP)
    if not degs:
        raise UsageError("empty angle list")
    return [math.radians(d) for d in degs]


def _run(args: argparse.Namespace, tol_disc: float):
    s = SweepSettings(args.mode, args.alpha, args.L, args.h, args.tol, tol_disc, args.seed, args.bound_factor)
    rows = run_sweep(_sweep_phis(args), s, jobs=args.jobs)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    if args.plot_data:
        with open(args.plot_data, "w", newline="\n") as fh:
            write_plot_data(rows, fh)
    return s, rows


def cmd_sweep(args: argparse.Namespace) -> int:
    _, rows = _run(args, args.tol_disc if args.tol_disc is not None else DEFAULT_TOL_DISC)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_SOLVER


def cmd_verify(args: argparse.Namespace) -> int:
    tol_disc = args.tol_disc if args.tol_disc is not None else DEFAULT_TOL_DISC
    if args.convergence_study:
        study = convergence_study(args.alpha, args.L, seed=args.seed)
        for h, e in zip(study.hs, study.energies):
            print(f"# study h={h:g} e={e:.10g} err={abs(e - study.exact):.3e}", file=sys.stderr)
        print(f"# study order={study.order:.3g} extrapolated={study.extrapolated:.10g} "
              f"monotone={'true' if study.monotone else 'false'}", file=sys.stderr)
        if args.tol_disc is None:
            tol_disc = 2.0 * study.error
        print(f"# tol_disc={tol_disc:.6g}", file=sys.stderr)
    s, rows = _run(args, tol_disc)
    if not all(r.converged for r in rows):
        print("solver did not converge on every row", file=sys.stderr)
        return EXIT_SOLVER
    failures = verify_rows(rows, s)
    for f in failures:
        print(f"FAIL phi_deg={math.degrees(f.phi_rad):.6g} check={f.check}: {f.detail}", file=sys.stderr)
    if failures:
        return EXIT_VERIFY
    print(f"verified {len(rows)} rows", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"bound": cmd_bound, "solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _resolve(args)
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, NoAdmissibleSplit, OSError) as exc:
        print(f"deltastar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergence as exc:
        print(f"deltastar: solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
