"""Lowest eigenpairs of the assembled pencil and counts below a threshold."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .bounds import NoAdmissibleSplit, star_bound
from .discretization import DiscreteForm
from .geometry import DomainError

log = logging.getLogger(__name__)

DEFAULT_SEED = 42
SEED_ENV = "DELTA_WEDGE_SEED"
MAX_ITER = 10_000
MAX_K = 20


class NonConvergence(RuntimeError):
    """Raised when a count or solve cannot be completed; ``partial`` holds what was computed."""

    def __init__(self, msg: str, partial: Optional["SpectrumEstimate"] = None):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class SpectrumEstimate:
    """Ascending eigenvalues in per-area units with their residuals.

    ``residuals[i]`` is ``||H v - lambda v|| / (max(1, |lambda|) ||v||)`` for
    ``H = (K - sum alpha h T) / h^2``, recomputed by a fresh product after
    the solve.  Eigenvectors are columns of ``vectors`` when retained.
    """

    eigenvalues: Tuple[float, ...]
    residuals: Tuple[float, ...]
    converged: Tuple[bool, ...]
    iterations: int
    shift: float
    vectors: Optional[np.ndarray] = None

    @property
    def all_converged(self) -> bool:
        return bool(self.converged) and all(self.converged)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else DEFAULT_SEED


def gershgorin_floor(a: sp.spmatrix) -> float:
    a = sp.csr_matrix(a)
    diag = a.diagonal()
    off = np.asarray(abs(a).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - off))


def spectral_floor(form: DiscreteForm) -> float:
    """Inversion shift: 1.5 times the analytic lower bound of the configuration.

    Forms without a usable configuration fall back to the Gershgorin floor.
    """
    cfg = form.config
    if cfg is None:
        if not form.couplings:
            return form.energy_shift
        return gershgorin_floor(form.operator())
    try:
        return 1.5 * star_bound(cfg).bound + form.energy_shift
    except (NoAdmissibleSplit, DomainError):
        return gershgorin_floor(form.operator())


def factor(a: sp.spmatrix):
    """Sparse LU with a symmetric permutation and diagonal pivots.

    For a symmetric matrix this is an LDL^T factorization in disguise, so the
    signs of ``diag(U)`` give the inertia.
    """
    return sla.splu(
        sp.csc_matrix(a),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )


def residual_norms(h: sp.spmatrix, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    r = h @ vecs - vecs * vals[None, :]
    return np.linalg.norm(r, axis=0) / (np.maximum(1.0, np.abs(vals)) * np.linalg.norm(vecs, axis=0))


def _rayleigh_ritz(h: sp.spmatrix, vecs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # re-orthonormalizes the block, which also separates vectors inside clusters
    q, _ = np.linalg.qr(vecs)
    small = q.T @ (h @ q)
    w, y = np.linalg.eigh(0.5 * (small + small.T))
    return w, q @ y


def lowest_eigenpairs(
    form: DiscreteForm,
    k: int = 1,
    tol: float = 1e-8,
    seed: Optional[int] = None,
    keep_vectors: bool = True,
    shift: Optional[float] = None,
    maxiter: int = MAX_ITER,
) -> SpectrumEstimate:
    """The ``k`` algebraically smallest eigenpairs of the pencil.

    Shift-invert Lanczos (ARPACK) around a shift below the whole spectrum, so
    the shifted matrix is positive definite and the wanted eigenvalues are
    the largest of its inverse.  If the factorization reveals a negative
    pivot the shift is moved below the Gershgorin floor.
    """
    if not 1 <= k <= MAX_K:
        raise DomainError(f"k must lie in [1, {MAX_K}]")
    if not 1e-12 <= tol <= 1e-4:
        raise DomainError("tol must lie in [1e-12, 1e-4]")
    if seed is None:
        seed = default_seed()
    h = form.operator()
    size = h.shape[0]
    if k >= size - 1:
        raise DomainError("k must be well below the number of unknowns")
    eye = sp.identity(size, format="csr")
    sigma = spectral_floor(form) if shift is None else float(shift)
    lu = factor(h - sigma * eye)
    if np.any(lu.U.diagonal() <= 0.0):
        sigma = min(sigma, gershgorin_floor(h)) - 1.0
        log.warning("shift was not below the spectrum; retrying at %g", sigma)
        lu = factor(h - sigma * eye)

    solves = 0

    def apply_inverse(x):
        nonlocal solves
        solves += 1
        return lu.solve(x)

    opinv = sla.LinearOperator((size, size), matvec=apply_inverse, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(size)
    ncv = min(size - 1, max(2 * k + 1, 20))
    complete = True
    try:
        vals, vecs = sla.eigsh(
            h, k=k, sigma=sigma, which="LM", OPinv=opinv, v0=v0, ncv=ncv,
            tol=0.01 * tol, maxiter=maxiter,
        )
    except sla.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        complete = False
    if vecs.shape[1]:
        vals, vecs = _rayleigh_ritz(h, vecs)
    res = residual_norms(h, vals, vecs)
    conv = [bool(r <= tol) and complete for r in res]
    conv += [False] * (k - len(conv))
    return SpectrumEstimate(
        tuple(float(v) for v in vals),
        tuple(float(r) for r in res),
        tuple(conv),
        solves,
        float(sigma),
        vecs if keep_vectors else None,
    )


def count_below_inertia(form: DiscreteForm, threshold: float) -> int:
    """Number of eigenvalues strictly below ``threshold`` from the inertia of ``H - threshold``."""
    h = form.operator()
    lu = factor(h - threshold * sp.identity(h.shape[0], format="csr"))
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise NonConvergence("factorization pivoted off the diagonal; inertia unavailable")
    d = lu.U.diagonal()
    if np.any(d == 0.0):
        raise NonConvergence("threshold is an eigenvalue to working precision")
    return int(np.count_nonzero(d < 0.0))


def count_below_extend(form: DiscreteForm, threshold: float, tol: float = 1e-8, seed: Optional[int] = None) -> int:
    """Number of eigenvalues strictly below ``threshold`` by growing ``k`` until one lands above it."""
    k = 2
    while True:
        est = lowest_eigenpairs(form, k=k, tol=tol, seed=seed, keep_vectors=False)
        if not est.all_converged:
            raise NonConvergence("eigensolver did not converge while counting", est)
        if est.eigenvalues[-1] >= threshold:
            return sum(1 for v in est.eigenvalues if v < threshold)
        if k == MAX_K:
            raise NonConvergence(f"more than {MAX_K - 1} eigenvalues below threshold", est)
        k = min(2 * k, MAX_K)


def count_below(
    form: DiscreteForm,
    threshold: float,
    tol: float = 1e-8,
    method: str = "inertia",
    seed: Optional[int] = None,
) -> int:
    """Eigenvalues strictly below a negative ``threshold``.

    ``method`` is ``"inertia"``, ``"extend"`` or ``"both"``; with ``"both"``
    the two counts must agree.
    """
    if not threshold < 0.0:
        raise DomainError("threshold must be negative")
    if method == "inertia":
        return count_below_inertia(form, threshold)
    if method == "extend":
        return count_below_extend(form, threshold, tol, seed)
    if method == "both":
        a = count_below_inertia(form, threshold)
        b = count_below_extend(form, threshold, tol, seed)
        if a != b:
            raise NonConvergence(f"inertia count {a} disagrees with eigenvalue count {b}")
        return a
    raise DomainError(f"unknown counting method {method!r}")
