"""Star configurations of rays through the origin and the wedges between them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

TWO_PI = 2.0 * math.pi
ANGLE_EPS = 1e-12


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def normalize_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod of a tiny negative angle can round up to exactly 2*pi
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True)
class Ray:
    angle: float
    coupling: float


@dataclass(frozen=True)
class RayConfig:
    """Rays emanating from the origin, sorted by angle, each with its own coupling.

    A full straight line is two opposite rays.
    """

    rays: Tuple[Ray, ...]

    def __post_init__(self) -> None:
        if len(self.rays) < 2:
            raise DomainError("a ray configuration needs at least 2 rays")
        for r in self.rays:
            if not (0.0 <= r.angle < TWO_PI):
                raise DomainError(f"ray angle {r.angle!r} not in [0, 2pi)")
            if not (r.coupling > 0.0) or not math.isfinite(r.coupling):
                raise DomainError(f"ray coupling must be positive, got {r.coupling!r}")
        angles = [r.angle for r in self.rays]
        for a, b in zip(angles, angles[1:]):
            if not b - a > ANGLE_EPS:
                raise DomainError("ray angles must be distinct and strictly increasing")
        if angles[0] + TWO_PI - angles[-1] <= ANGLE_EPS:
            raise DomainError("first and last rays coincide modulo 2pi")

    @classmethod
    def from_rays(cls, rays: Iterable[Tuple[float, float]]) -> "RayConfig":
        """Build from (angle, coupling) pairs in any order; angles are normalized."""
        items = sorted((normalize_angle(a), float(c)) for a, c in rays)
        return cls(tuple(Ray(a, c) for a, c in items))

    @property
    def angles(self) -> Tuple[float, ...]:
        return tuple(r.angle for r in self.rays)

    @property
    def couplings(self) -> Tuple[float, ...]:
        return tuple(r.coupling for r in self.rays)

    def __len__(self) -> int:
        return len(self.rays)

    def scaled(self, c: float) -> "RayConfig":
        return RayConfig(tuple(Ray(r.angle, c * r.coupling) for r in self.rays))


@dataclass(frozen=True)
class Wedge:
    opening: float
    left_ray: int
    right_ray: int


@dataclass(frozen=True)
class WedgeDecomposition:
    wedges: Tuple[Wedge, ...]

    @property
    def openings(self) -> Tuple[float, ...]:
        return tuple(w.opening for w in self.wedges)

    def __len__(self) -> int:
        return len(self.wedges)


def _check_alpha(alpha: float) -> None:
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise DomainError(f"coupling alpha must be positive, got {alpha!r}")


def angle_config(phi: float, alpha: float) -> RayConfig:
    """Two rays forming an angle of opening ``phi``, bisected by the positive x-axis."""
    if not (0.0 < phi <= math.pi):
        raise DomainError(f"phi must lie in (0, pi], got {phi!r}")
    _check_alpha(alpha)
    return RayConfig.from_rays([(-phi / 2.0, alpha), (phi / 2.0, alpha)])


def lines_config(phi: float, alpha: float) -> RayConfig:
    """Two full lines crossing at the origin at angle ``phi``, as four rays."""
    if not (0.0 < phi < math.pi):
        raise DomainError(f"phi must lie in (0, pi), got {phi!r}")
    _check_alpha(alpha)
    return RayConfig.from_rays(
        [(0.0, alpha), (phi, alpha), (math.pi, alpha), (math.pi + phi, alpha)]
    )


def star_config(angles: Sequence[float], couplings: Sequence[float] | float) -> RayConfig:
    if isinstance(couplings, (int, float)):
        couplings = [float(couplings)] * len(angles)
    if len(couplings) != len(angles):
        raise DomainError("angles and couplings differ in length")
    return RayConfig.from_rays(zip(angles, couplings))


def wedges_of(config: RayConfig) -> WedgeDecomposition:
    """Wedge ``k`` lies between ray ``k`` and ray ``k+1`` (cyclic)."""
    angles = config.angles
    n = len(angles)
    wedges = []
    for k in range(n):
        nxt = (k + 1) % n
        opening = angles[nxt] - angles[k]
        if nxt == 0:
            opening += TWO_PI
        wedges.append(Wedge(opening, k, nxt))
    return WedgeDecomposition(tuple(wedges))
