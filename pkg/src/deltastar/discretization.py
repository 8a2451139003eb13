"""Finite-difference assembly of the delta-interaction quadratic form on a box.

The plane is truncated to a square of half-width ``L`` with zero Dirichlet
data, the gradient term becomes the 5-point graph Laplacian, and the trace
on each ray is sampled at arclength midpoints and reconstructed by bilinear
interpolation.  All geometry is computed in grid units (lengths divided by
``h``) so that grids with the same ``L/h`` produce bit-identical stencils.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, TextIO, Tuple

import numpy as np
import scipy.sparse as sp

from .geometry import DomainError, RayConfig

MAX_UNKNOWNS = 4_000_000


@dataclass(frozen=True)
class Grid:
    """Interior nodes ``(-L + i h, -L + j h)`` for ``i, j = 1..n``; row-major with x fastest."""

    L: float
    h: float
    n: int

    @property
    def size(self) -> int:
        return self.n * self.n

    @property
    def ratio(self) -> float:
        return self.L / self.h

    def coords(self) -> np.ndarray:
        return -self.L + self.h * np.arange(1, self.n + 1)

    def index(self, i: int, j: int) -> int:
        """Unknown index of the node with 1-based grid coordinates ``(i, j)``."""
        return (j - 1) * self.n + (i - 1)

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(x, y)`` (vectorized) on the interior nodes in unknown order."""
        x = self.coords()
        xx, yy = np.meshgrid(x, x, indexing="xy")
        return np.asarray(fn(xx, yy), dtype=float).ravel()


def build_grid(L: float, h: float, max_unknowns: int = MAX_UNKNOWNS) -> Grid:
    if not (L > 0.0) or not (h > 0.0):
        raise DomainError("L and h must be positive")
    if not h < L / 4.0:
        raise DomainError(f"spacing h={h} must be below L/4={L / 4}")
    # the epsilon guards ratios such as 20/0.05 that land a hair below an integer
    n = int(math.floor(2.0 * L / h + 1e-9)) - 1
    if n * n > max_unknowns:
        raise DomainError(f"{n * n} unknowns exceeds the cap of {max_unknowns}")
    return Grid(float(L), float(h), n)


@dataclass(frozen=True)
class TraceQuadrature:
    """Midpoint samples along one ray.

    ``stencil_nodes[j]`` and ``stencil_weights[j]`` hold up to four unknowns
    and their bilinear weights for sample ``j``; Dirichlet nodes are dropped.
    """

    ray: int
    arclength: np.ndarray
    weights: np.ndarray
    stencil_nodes: Tuple[np.ndarray, ...]
    stencil_weights: Tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.weights)


def _unit(angle: float) -> Tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    # exact zeros keep axis-aligned rays on grid lines and mirror pairs symmetric
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    return c, s


def trace_quadrature(grid: Grid, angle: float, ray: int = 0) -> TraceQuadrature:
    n = grid.n
    top = n + 1  # Dirichlet layer in grid units
    r = grid.ratio
    c, s = _unit(angle)
    arcs, nodes, bw = [], [], []
    j = 0
    while True:
        t = j + 0.5
        u = r + t * c
        v = r + t * s
        if not (0.0 < u < top and 0.0 < v < top):
            break
        i0, j0 = math.floor(u), math.floor(v)
        fx, fy = u - i0, v - j0
        idx, wts = [], []
        for di, wx in ((0, 1.0 - fx), (1, fx)):
            for dj, wy in ((0, 1.0 - fy), (1, fy)):
                w = wx * wy
                ii, jj = i0 + di, j0 + dj
                if w == 0.0 or not (1 <= ii <= n and 1 <= jj <= n):
                    continue
                idx.append(grid.index(ii, jj))
                wts.append(w)
        arcs.append(t * grid.h)
        nodes.append(np.array(idx, dtype=np.int64))
        bw.append(np.array(wts))
        j += 1
    m = len(arcs)
    return TraceQuadrature(ray, np.array(arcs), np.full(m, grid.h), tuple(nodes), tuple(bw))


def stiffness(n: int) -> sp.csr_matrix:
    """5-point graph Laplacian: ``f^T K f`` is the sum of squared differences over grid edges."""
    one = sp.identity(n, format="csr")
    d = sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    k = (sp.kron(one, d) + sp.kron(d, one)).tocsr()
    k.sort_indices()
    return k


def trace_matrix(grid: Grid, quad: TraceQuadrature) -> sp.csr_matrix:
    """Sum over samples of ``w_j / h * b_j b_j^T``."""
    rows, cols, vals = [], [], []
    for w, idx, b in zip(quad.weights, quad.stencil_nodes, quad.stencil_weights):
        if len(idx) == 0:
            continue
        rows.append(np.repeat(idx, len(idx)))
        cols.append(np.tile(idx, len(idx)))
        vals.append((w / grid.h) * np.outer(b, b).ravel())
    size = grid.size
    if not rows:
        return sp.csr_matrix((size, size))
    t = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    ).tocsr()
    t.sum_duplicates()
    t.sort_indices()
    return t


@dataclass(frozen=True)
class DiscreteForm:
    """Pencil ``(K - sum_i alpha_i h T_i) v = lambda h^2 v`` on ``grid``."""

    grid: Grid
    K: sp.csr_matrix
    traces: Tuple[sp.csr_matrix, ...]
    couplings: Tuple[float, ...]
    quadratures: Tuple[TraceQuadrature, ...] = field(repr=False, default=())
    config: Optional[RayConfig] = None
    # constant potential added to the operator, in per-area energy units
    energy_shift: float = 0.0

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def mass_scale(self) -> float:
        return self.grid.h ** 2

    def pencil(self) -> sp.csr_matrix:
        """Left-hand matrix ``K - sum_i alpha_i h T_i`` (dimensionless)."""
        a = self.K.copy()
        for alpha, t in zip(self.couplings, self.traces):
            a = a - (alpha * self.h) * t
        if self.energy_shift:
            a = a + (self.energy_shift * self.mass_scale) * sp.identity(self.grid.size, format="csr")
        a = a.tocsr()
        a.sort_indices()
        return a

    def shifted(self, s: float) -> "DiscreteForm":
        return replace(self, energy_shift=self.energy_shift + s)

    def operator(self) -> sp.csr_matrix:
        """Standard-form operator in per-area units; the mass is ``h^2`` times identity."""
        return (self.pencil() / self.mass_scale).tocsr()


def assemble(grid: Grid, config: RayConfig) -> DiscreteForm:
    quads = tuple(trace_quadrature(grid, ray.angle, i) for i, ray in enumerate(config.rays))
    traces = tuple(trace_matrix(grid, q) for q in quads)
    return DiscreteForm(grid, stiffness(grid.n), traces, config.couplings, quads, config)


def laplacian_form(grid: Grid) -> DiscreteForm:
    """The pure Dirichlet Laplacian (no interaction)."""
    return DiscreteForm(grid, stiffness(grid.n), (), ())


def form_value(form: DiscreteForm, f: np.ndarray) -> float:
    """Discrete Rayleigh quotient of ``f``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (form.grid.size,):
        raise DomainError(f"expected a vector of length {form.grid.size}")
    norm2 = float(f @ f)
    if norm2 == 0.0:
        raise DomainError("the zero vector has no Rayleigh quotient")
    num = float(f @ (form.K @ f))
    for alpha, t in zip(form.couplings, form.traces):
        num -= alpha * form.h * float(f @ (t @ f))
    return num / (form.mass_scale * norm2) + form.energy_shift


def write_matrix(form: DiscreteForm, out: TextIO) -> None:
    """Dump the pencil matrix: header ``n nnz h L``, then lower-triangle ``row col value``."""
    low = sp.tril(form.pencil(), format="coo")
    order = np.lexsort((low.col, low.row))
    out.write(f"{form.grid.size} {low.nnz} {form.h:.17g} {form.grid.L:.17g}\n")
    for k in order:
        out.write(f"{low.row[k]} {low.col[k]} {low.data[k]:.17g}\n")


def read_matrix(src: TextIO) -> Tuple[sp.csr_matrix, float, float]:
    """Inverse of :func:`write_matrix`; returns the full symmetric matrix, ``h`` and ``L``."""
    head = src.readline().split()
    size, nnz, h, L = int(head[0]), int(head[1]), float(head[2]), float(head[3])
    data = np.loadtxt(src, ndmin=2) if nnz else np.zeros((0, 3))
    rows = data[:, 0].astype(np.int64)
    cols = data[:, 1].astype(np.int64)
    vals = data[:, 2]
    low = sp.coo_matrix((vals, (rows, cols)), shape=(size, size))
    full = (low + sp.tril(low, k=-1).T).tocsr()
    full.sort_indices()
    return full, h, L
