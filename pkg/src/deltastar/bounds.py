"""Closed-form spectral lower bounds and the coupling-splitting optimizer.

Every bound here has the same structure.  The rays cut the plane into
wedges; each ray's coupling is shared between its two neighbouring wedges,
and each wedge contributes the one-wedge estimate

    |grad f|^2 - gamma |f on boundary|^2 >= -c(theta) gamma^2 |f|^2,

with ``c(theta) = 1/sin^2(theta/2)`` for openings up to ``pi`` and ``c = 1``
beyond.  The best split minimizes the worst per-wedge constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .geometry import (
    TWO_PI,
    DomainError,
    RayConfig,
    wedges_of,
)

GOLDEN_TOL = 1e-10
CONSISTENCY_RTOL = 1e-10


class NoAdmissibleSplit(DomainError):
    """No non-negative per-wedge coupling split satisfies the ray constraints."""


@dataclass(frozen=True)
class SplitSolution:
    gammas: Tuple[float, ...]


@dataclass(frozen=True)
class BoundResult:
    bound: float
    split: SplitSolution
    per_wedge_bounds: Tuple[float, ...]
    # the two-parameter families also report the share given to the
    # narrower (opening phi) wedges
    beta: Optional[float] = None


def wedge_constant(theta: float) -> float:
    if not (0.0 < theta < TWO_PI):
        raise DomainError(f"wedge opening must lie in (0, 2pi), got {theta!r}")
    if theta <= math.pi:
        return 1.0 / math.sin(theta / 2.0) ** 2
    return 1.0


def wedge_lower_bound(gamma: float, theta: float) -> float:
    """Lower bound on the form of a single wedge of opening ``theta`` with boundary coupling ``gamma``."""
    if gamma < 0.0 or not math.isfinite(gamma):
        raise DomainError(f"gamma must be non-negative, got {gamma!r}")
    if not (0.0 < theta < TWO_PI):
        raise DomainError(f"wedge opening must lie in (0, 2pi), got {theta!r}")
    if theta <= math.pi:
        return -(gamma ** 2) / math.sin(theta / 2.0) ** 2
    return -(gamma ** 2)


def _check_alpha(alpha: float) -> None:
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise DomainError(f"alpha must be positive, got {alpha!r}")


def llp_bound(alpha: float, phi: float) -> float:
    """The older bound for the angle: equal split of the coupling."""
    _check_alpha(alpha)
    if not (0.0 < phi <= math.pi):
        raise DomainError(f"phi must lie in (0, pi], got {phi!r}")
    return -(alpha ** 2) / (4.0 * math.sin(phi / 2.0) ** 2)


def _result(gammas: Sequence[float], openings: Sequence[float], bound: float, beta=None) -> BoundResult:
    per_wedge = tuple(wedge_lower_bound(g, th) for g, th in zip(gammas, openings))
    return BoundResult(bound, SplitSolution(tuple(gammas)), per_wedge, beta)


def angle_bound(alpha: float, phi: float) -> BoundResult:
    """Optimal-split bound for two rays meeting at angle ``phi``.

    Gammas are ordered like ``wedges_of(angle_config(phi, alpha))``: the
    reflex wedge (opening ``2pi - phi``) first, then the ``phi`` wedge.
    """
    _check_alpha(alpha)
    if not (0.0 < phi <= math.pi):
        raise DomainError(f"phi must lie in (0, pi], got {phi!r}")
    s = math.sin(phi / 2.0)
    beta = alpha * s / (1.0 + s)
    bound = -(alpha ** 2) / (1.0 + s) ** 2
    return _result((alpha - beta, beta), (TWO_PI - phi, phi), bound, beta)


def lines_bound(alpha: float, phi: float) -> BoundResult:
    """Optimal-split bound for two lines crossing at angle ``phi``.

    Gammas follow ``wedges_of(lines_config(phi, alpha))``, openings
    ``(phi, pi - phi, phi, pi - phi)``.
    """
    _check_alpha(alpha)
    if not (0.0 < phi < math.pi):
        raise DomainError(f"phi must lie in (0, pi), got {phi!r}")
    t = math.tan(phi / 2.0)
    beta = alpha * t / (1.0 + t)
    bound = -(alpha ** 2) / (1.0 + math.sin(phi))
    rest = alpha - beta
    return _result(
        (beta, rest, beta, rest),
        (phi, math.pi - phi, phi, math.pi - phi),
        bound,
        beta,
    )


def _chain(couplings: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """gamma_k = offset_k + sign_k * gamma_0 from the ray constraints on rays 1..N-1.

    Ray ``i`` separates wedges ``i-1`` and ``i``.
    """
    n = len(couplings)
    offset = np.zeros(n)
    sign = np.ones(n)
    for k in range(1, n):
        offset[k] = couplings[k] - offset[k - 1]
        sign[k] = -sign[k - 1]
    return offset, sign


def _golden_min(f, a: float, b: float, tol: float = GOLDEN_TOL) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _polish(consts: np.ndarray, offset: np.ndarray, sign: np.ndarray, lo: float, hi: float, t0: float) -> float:
    """Snap the golden-section estimate onto the exact kink or vertex of the max.

    The objective is the upper envelope of parabolas c_k (o_k + s_k t)^2, so its
    minimum sits at an endpoint, at a parabola vertex, or where two parabolas
    cross.  Only candidates that do at least as well as ``t0`` are accepted.
    """

    def obj(t: float) -> float:
        return float(np.max(consts * (offset + sign * t) ** 2))

    cands = [lo, hi, t0]
    n = len(consts)
    for k in range(n):
        cands.append(-offset[k] / sign[k])
    r = np.sqrt(consts)
    for i in range(n):
        for j in range(i + 1, n):
            # r_i (o_i + s_i t) = +-r_j (o_j + s_j t)
            for sgn in (1.0, -1.0):
                den = r[i] * sign[i] - sgn * r[j] * sign[j]
                if den != 0.0:
                    cands.append((sgn * r[j] * offset[j] - r[i] * offset[i]) / den)
    best_t, best_v = t0, obj(t0)
    for t in sorted(cands):
        if lo <= t <= hi and abs(t - t0) <= 1e-6 * max(1.0, hi - lo):
            v = obj(t)
            # ties resolve to the smaller gamma_0, i.e. lexicographically smallest split
            if v < best_v or (v == best_v and t < best_t):
                best_t, best_v = t, v
    return best_t


def star_bound(config: RayConfig) -> BoundResult:
    """Optimal coupling split for an arbitrary star of rays.

    With an odd number of rays the split is unique.  With an even number the
    ray constraints leave one free parameter, and the convex objective is
    minimized over it by golden-section search.
    """
    couplings = config.couplings
    openings = wedges_of(config).openings
    n = len(couplings)
    consts = np.array([wedge_constant(th) for th in openings])
    offset, sign = _chain(couplings)
    scale = max(couplings)

    if n % 2 == 1:
        # closing ray 0: gamma_{N-1} + gamma_0 = alpha_0 with sign_{N-1} = +1
        t = 0.5 * (couplings[0] - offset[-1])
        gammas = offset + sign * t
        if np.any(gammas < -CONSISTENCY_RTOL * scale):
            raise NoAdmissibleSplit(f"unique split has a negative entry: {gammas.tolist()}")
    else:
        if abs(offset[-1] - couplings[0]) > CONSISTENCY_RTOL * scale:
            raise NoAdmissibleSplit(
                "alternating sum of couplings is non-zero; ray constraints are inconsistent"
            )
        even = sign > 0
        lo = max(0.0, float(np.max(-offset[even])))
        hi = float(np.min(offset[~even]))
        if lo > hi + CONSISTENCY_RTOL * scale:
            raise NoAdmissibleSplit("no split keeps every wedge coupling non-negative")
        hi = max(hi, lo)

        def obj(t: float) -> float:
            return float(np.max(consts * (offset + sign * t) ** 2))

        t = _golden_min(obj, lo, hi)
        t = _polish(consts, offset, sign, lo, hi, t)
        gammas = offset + sign * t
    gammas = np.maximum(gammas, 0.0)
    res = _result(gammas.tolist(), openings, 0.0)
    return BoundResult(min(res.per_wedge_bounds), res.split, res.per_wedge_bounds)


def brute_force_star_bound(config: RayConfig, resolution: int = 10 ** 6) -> BoundResult:
    """Grid search over the admissible splits; an oracle for :func:`star_bound`.

    The constraint system is handled with dense linear algebra (solve or
    particular solution plus null vector) and the free parameter, if any, is
    scanned on a uniform grid.  Nothing is shared with the recurrence and
    golden-section route.
    """
    n = len(config)
    if n > 6:
        raise DomainError("brute force is limited to at most 6 rays")
    if resolution < 10 ** 3:
        raise DomainError("resolution must be at least 1000")
    alpha = np.asarray(config.couplings, dtype=float)
    openings = wedges_of(config).openings
    consts = np.array([wedge_constant(th) for th in openings])
    # ray i touches wedges i-1 and i
    m = np.zeros((n, n))
    for i in range(n):
        m[i, i] = 1.0
        m[i, (i - 1) % n] = 1.0
    tol = 1e-9 * alpha.max()

    _, sv, vt = np.linalg.svd(m)
    if sv.min() > 1e-8:
        g = np.linalg.solve(m, alpha)
        if np.any(g < -tol):
            raise NoAdmissibleSplit("unique split has a negative entry")
        g = np.maximum(g, 0.0)
    else:
        part, *_ = np.linalg.lstsq(m, alpha, rcond=None)
        if np.linalg.norm(m @ part - alpha) > tol:
            raise NoAdmissibleSplit("ray constraints are inconsistent")
        null = vt[-1]
        lo, hi = -np.inf, np.inf
        for p, v in zip(part, null):
            if abs(v) < 1e-14:
                if p < -tol:
                    raise NoAdmissibleSplit("no non-negative split")
                continue
            edge = -p / v
            if v > 0:
                lo = max(lo, edge)
            else:
                hi = min(hi, edge)
        if lo > hi + tol:
            raise NoAdmissibleSplit("no split keeps every wedge coupling non-negative")
        ts = np.linspace(lo, max(lo, hi), resolution + 1)
        best_val, best_g = np.inf, None
        for chunk in np.array_split(ts, max(1, resolution // 100000)):
            gs = np.maximum(part[None, :] + chunk[:, None] * null[None, :], 0.0)
            vals = np.max(consts[None, :] * gs ** 2, axis=1)
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val, best_g = vals[i], gs[i]
        g = best_g
    per_wedge = tuple(float(-c * x ** 2) for c, x in zip(consts, g))
    return BoundResult(min(per_wedge), SplitSolution(tuple(float(x) for x in g)), per_wedge)
