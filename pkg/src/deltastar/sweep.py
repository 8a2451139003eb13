"""Angle sweeps, verification of the analytic bounds, and CSV/plot-data output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from .bounds import angle_bound, lines_bound, llp_bound
from .discretization import assemble, build_grid
from .eigensolver import count_below_inertia, lowest_eigenpairs
from .geometry import DomainError, angle_config, lines_config

DEFAULT_TOL_DISC = 0.02
# tolerance on the crossing-lines reference value at phi = pi/2
LINES_REFERENCE_TOL = 0.05
CSV_COLUMNS = (
    "phi_rad", "bound_new", "bound_llp", "bound_lines", "e_num", "gap",
    "ess_threshold", "n_below_ess", "h", "L", "converged",
)
MODES = ("angle", "lines")


@dataclass(frozen=True)
class SweepRow:
    phi_rad: float
    bound_new: float
    bound_llp: Optional[float]
    bound_lines: Optional[float]
    e_num: float
    gap: float
    ess_threshold: float
    n_below_ess: int
    h: float
    L: float
    converged: bool


@dataclass(frozen=True)
class SweepSettings:
    mode: str = "angle"
    alpha: float = 1.0
    L: float = 20.0
    h: float = 0.05
    tol: float = 1e-8
    tol_disc: float = DEFAULT_TOL_DISC
    seed: Optional[int] = None
    # test hook: multiplies the analytic bound before it enters a row
    bound_factor: float = 1.0


def analytic_bounds(mode: str, alpha: float, phi: float) -> Tuple[float, Optional[float], Optional[float]]:
    """(bound_new, bound_llp, bound_lines) for one angle."""
    if mode == "angle":
        return angle_bound(alpha, phi).bound, llp_bound(alpha, phi), None
    if mode == "lines":
        b = lines_bound(alpha, phi).bound
        return b, None, b
    raise DomainError(f"unknown sweep mode {mode!r}")


def config_for(mode: str, alpha: float, phi: float):
    if mode == "angle":
        return angle_config(phi, alpha)
    if mode == "lines":
        return lines_config(phi, alpha)
    raise DomainError(f"unknown sweep mode {mode!r}")


def sweep_row(phi: float, s: SweepSettings) -> SweepRow:
    bound_new, bound_llp, bound_lines = analytic_bounds(s.mode, s.alpha, phi)
    bound_new *= s.bound_factor
    if bound_lines is not None:
        bound_lines = bound_new
    form = assemble(build_grid(s.L, s.h), config_for(s.mode, s.alpha, phi))
    est = lowest_eigenpairs(form, k=1, tol=s.tol, seed=s.seed, keep_vectors=False)
    e_num = est.eigenvalues[0] if est.eigenvalues else math.nan
    ess = -(s.alpha ** 2) / 4.0
    n_below = count_below_inertia(form, ess - s.tol_disc)
    return SweepRow(
        phi_rad=phi,
        bound_new=bound_new,
        bound_llp=bound_llp,
        bound_lines=bound_lines,
        e_num=e_num,
        gap=e_num - bound_new,
        ess_threshold=ess,
        n_below_ess=n_below,
        h=s.h,
        L=s.L,
        converged=est.all_converged,
    )


def _row_task(args):
    return sweep_row(*args)


def run_sweep(phis: Sequence[float], s: SweepSettings, jobs: int = 1) -> List[SweepRow]:
    """One row per angle, returned in ascending angle order."""
    if not phis:
        raise DomainError("empty angle list")
    ordered = sorted(phis)
    if jobs <= 1:
        return [sweep_row(p, s) for p in ordered]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_row_task, [(p, s) for p in ordered]))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return format(v, ".17g")


def write_csv(rows: Iterable[SweepRow], out: TextIO) -> None:
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS) + "\n")


def read_csv(src: TextIO) -> List[SweepRow]:
    rows = []
    for rec in csv.DictReader(src):
        vals: Dict[str, object] = {}
        for f in fields(SweepRow):
            raw = rec[f.name]
            if f.name == "converged":
                vals[f.name] = raw == "true"
            elif f.name == "n_below_ess":
                vals[f.name] = int(raw)
            else:
                vals[f.name] = float(raw) if raw != "" else None
        rows.append(SweepRow(**vals))
    return rows


def write_plot_data(rows: Sequence[SweepRow], out: TextIO) -> None:
    """Blocks of ``phi energy`` pairs, one per curve, separated by blank lines."""
    curves = [("e_num", "e_num"), ("bound_new", "bound_new"), ("bound_llp", "bound_llp"),
              ("bound_lines", "bound_lines"), ("ess_threshold", "ess_threshold")]
    first = True
    for name, attr in curves:
        pts = [(r.phi_rad, getattr(r, attr)) for r in rows if getattr(r, attr) is not None]
        if not pts:
            continue
        if not first:
            out.write("\n\n")
        first = False
        out.write(f"# {name}\n")
        for phi, e in pts:
            out.write(f"{phi:.17g} {e:.17g}\n")


@dataclass(frozen=True)
class Failure:
    phi_rad: float
    check: str
    detail: str


def verify_rows(rows: Sequence[SweepRow], s: SweepSettings) -> List[Failure]:
    """Checks, per row:

    a. e_num >= bound_new - tol_disc
    b. bound_new >= bound_llp (angle mode)
    c. bound_new >= -alpha^2
    d. angle mode: no eigenvalue below the threshold at phi = pi, at least one otherwise
    e. exactly solvable cases: e_num near -alpha^2/4 (straight line) or -alpha^2/2 (perpendicular lines)
    """
    out = []
    a2 = s.alpha ** 2
    for r in rows:
        if r.gap < -s.tol_disc:
            out.append(Failure(r.phi_rad, "a", f"e_num {r.e_num:.6g} < bound {r.bound_new:.6g} - {s.tol_disc}"))
        if r.bound_llp is not None and r.bound_new < r.bound_llp:
            out.append(Failure(r.phi_rad, "b", f"bound {r.bound_new:.6g} < llp {r.bound_llp:.6g}"))
        if r.bound_new < -a2:
            out.append(Failure(r.phi_rad, "c", f"bound {r.bound_new:.6g} < -alpha^2"))
        straight = abs(r.phi_rad - math.pi) < 1e-9
        if s.mode == "angle":
            if straight and r.n_below_ess != 0:
                out.append(Failure(r.phi_rad, "d", f"{r.n_below_ess} eigenvalues below threshold at phi = pi"))
            if not straight and r.n_below_ess < 1:
                out.append(Failure(r.phi_rad, "d", "no eigenvalue below threshold for phi < pi"))
            if straight and abs(r.e_num + a2 / 4) > s.tol_disc:
                out.append(Failure(r.phi_rad, "e", f"e_num {r.e_num:.6g} not within {s.tol_disc} of -alpha^2/4"))
        elif s.mode == "lines" and abs(r.phi_rad - math.pi / 2) < 1e-9:
            if abs(r.e_num + a2 / 2) > LINES_REFERENCE_TOL:
                out.append(Failure(r.phi_rad, "e", f"e_num {r.e_num:.6g} not within {LINES_REFERENCE_TOL} of -alpha^2/2"))
    return out


@dataclass(frozen=True)
class ConvergenceStudy:
    hs: Tuple[float, ...]
    energies: Tuple[float, ...]
    exact: float
    extrapolated: float
    order: float
    monotone: bool

    @property
    def error(self) -> float:
        """Measured discretization margin at the finest spacing."""
        e = self.energies[-1]
        return max(abs(e - self.exact), abs(e - self.extrapolated))


def convergence_study(alpha: float = 1.0, L: float = 20.0, hs: Sequence[float] = (0.2, 0.1, 0.05),
                      tol: float = 1e-8, seed: Optional[int] = None) -> ConvergenceStudy:
    """Straight-line ground energy on successively halved grids, Richardson-extrapolated."""
    if len(hs) != 3:
        raise DomainError("the study needs exactly three spacings")
    cfg = angle_config(math.pi, alpha)
    es = []
    for h in hs:
        est = lowest_eigenpairs(assemble(build_grid(L, h), cfg), k=1, tol=tol, seed=seed, keep_vectors=False)
        es.append(est.eigenvalues[0])
    exact = -(alpha ** 2) / 4
    d1, d2 = es[0] - es[1], es[1] - es[2]
    ratio = hs[0] / hs[1]
    if d1 != 0.0 and d2 != 0.0 and d1 / d2 > 0:
        p = math.log(d1 / d2) / math.log(ratio)
        extrap = es[2] - d2 / (ratio ** p - 1.0)
    else:
        p, extrap = math.nan, es[2]
    errs = [abs(e - exact) for e in es]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    return ConvergenceStudy(tuple(hs), tuple(es), exact, extrap, p, monotone)
