"""Inverse Sturm-Liouville recovery of symmetric edge potentials.

Potentials are sought in the basis ``1, cos(2 pi z), ..., cos(2 pi b z)`` by
damped Gauss-Newton against the forward shooting solver, with the Jacobian
taken by finite differences.  Two data types are supported: the Dirichlet
spectrum and samples of the Weyl function ``psi'(1, lam) / psi(1, lam)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .edge_ode import TAU_ROOT, SymmetricPotential, dirichlet_eigenvalues, shoot_many
from .errors import FitError, UninformativeError

__all__ = [
    "TAU_FIT",
    "SpectrumTarget",
    "WeylTarget",
    "FitInfo",
    "CoverageWarning",
    "recover_from_spectrum",
    "recover_from_weyl",
    "eigenvalues_from_psi_samples",
    "sign_change_brackets",
]

TAU_FIT = 1e-10
MAX_ITER = 50
MAX_HALVINGS = 30
XTOL = 1e-12


class CoverageWarning(UserWarning):
    """Fewer zeros than expected were found in a sampled characteristic function."""


@dataclass(frozen=True)
class SpectrumTarget:
    eigs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.eigs, dtype=np.float64)
        if e.ndim != 1 or e.size == 0 or np.any(np.diff(e) <= 0):
            raise ValueError("eigenvalues must be a non-empty strictly ascending vector")
        object.__setattr__(self, "eigs", e)


@dataclass(frozen=True)
class WeylTarget:
    lams: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lams = np.asarray(self.lams, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if lams.shape != vals.shape or lams.ndim != 1:
            raise ValueError("lams and values must be 1-D arrays of equal length")
        if np.unique(lams).size != lams.size:
            raise ValueError("Weyl sample abscissae must be distinct")
        object.__setattr__(self, "lams", lams)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_pairs(cls, pairs) -> "WeylTarget":
        arr = np.asarray(list(pairs), dtype=np.float64)
        return cls(arr[:, 0], arr[:, 1])


@dataclass
class FitInfo:
    residual: float
    iterations: int
    converged: bool
    n_data: int
    history: list = field(default_factory=list)


def _gauss_newton(residual_fn, p0, tol=TAU_FIT, max_iter=MAX_ITER, fd_step=1e-6):
    """Damped Gauss-Newton with step halving; deterministic schedule."""
    p = np.asarray(p0, dtype=np.float64).copy()
    r = residual_fn(p)
    cost = float(r @ r)
    history = [cost]
    it = 0
    converged = cost <= tol
    for it in range(1, max_iter + 1):
        J = np.empty((r.size, p.size))
        for j in range(p.size):
            h = fd_step * max(1.0, abs(p[j]))
            dp = np.zeros_like(p)
            dp[j] = h
            J[:, j] = (residual_fn(p + dp) - r) / h
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        t = 1.0
        for _ in range(MAX_HALVINGS):
            trial = p + t * step
            try:
                rt = residual_fn(trial)
                ct = float(rt @ rt)
            except (ArithmeticError, ValueError):
                ct = math.inf
            if ct < cost or (ct <= cost and t * np.linalg.norm(step) <= XTOL):
                break
            t *= 0.5
        else:
            break  # no descent direction left
        small = t * np.linalg.norm(step) <= XTOL * (1.0 + np.linalg.norm(p))
        p, r, cost = trial, rt, ct
        history.append(cost)
        converged = cost <= tol
        if small or cost == 0.0:
            break
    return p, cost, it, converged, history


def _finish(p, cost, it, converged, history, n, full_output, what):
    q = SymmetricPotential.from_coefficients(p)
    info = FitInfo(cost, it, converged, n, history)
    if not converged:
        raise FitError(f"{what} fit did not reach tolerance (residual {cost:.3g})", best=q, residual=cost)
    return (q, info) if full_output else q


def recover_from_spectrum(target, basis_dim: int, *, tol: float = TAU_FIT, full_output: bool = False):
    """Symmetric potential whose first Dirichlet eigenvalues match ``target``.

    Starts from ``c0 = eigs[0] - pi^2`` and zero cosine coefficients.
    """
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(target)
    eigs = target.eigs
    n = eigs.size
    if basis_dim > n - 1:
        raise ValueError(f"basis_dim={basis_dim} needs at least {basis_dim + 1} eigenvalues, got {n}")
    last = {"eigs": None}

    def residual(p):
        q = SymmetricPotential.from_coefficients(p)
        lam = dirichlet_eigenvalues(q, n, guess=last["eigs"])
        last["eigs"] = lam
        return lam - eigs

    p0 = np.zeros(basis_dim + 1)
    p0[0] = eigs[0] - math.pi**2
    out = _gauss_newton(residual, p0, tol=tol)
    return _finish(*out, n, full_output, "spectrum")


def _weyl_residual(q, lams, vals):
    rows = shoot_many(q, lams)
    S1, dS1 = rows[:, 0], rows[:, 1]
    mu = np.sqrt(np.maximum(lams, 1.0))
    # sine of the angle between (dS1, mu S1) and (m, mu); bounded and pole-free
    num = mu * (dS1 - vals * S1)
    den = np.hypot(dS1, mu * S1) * np.hypot(vals, mu)
    return num / den


def recover_from_weyl(
    target,
    basis_dim: int,
    *,
    m_cap: float = 1e3,
    q_bound: float = 10.0,
    tol: float = TAU_FIT,
    full_output: bool = False,
):
    """Symmetric potential whose Weyl function matches the samples.

    Samples with ``|m| > m_cap`` are discarded as near-pole.  The constant
    term is initialised by a coarse scan over ``[-q_bound, q_bound]``.
    """
    if not isinstance(target, WeylTarget):
        target = WeylTarget.from_pairs(target)
    keep = np.isfinite(target.values) & (np.abs(target.values) <= m_cap)
    lams, vals = target.lams[keep], target.values[keep]
    need = 3 * (basis_dim + 1)
    if lams.size < need:
        raise UninformativeError(f"{lams.size} usable Weyl samples, need at least {need}")

    def residual(p):
        return _weyl_residual(SymmetricPotential.from_coefficients(p), lams, vals)

    scan = np.arange(-q_bound, q_bound + 1e-9, 0.25)
    costs = []
    for c0 in scan:
        r = residual(np.r_[c0, np.zeros(basis_dim)])
        costs.append(float(r @ r))
    p0 = np.zeros(basis_dim + 1)
    p0[0] = scan[int(np.argmin(costs))]
    out = _gauss_newton(residual, p0, tol=tol)
    return _finish(*out, lams.size, full_output, "Weyl")


def sign_change_brackets(lams, vals) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)`` of consecutive finite samples with a sign change."""
    lams = np.asarray(lams, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    idx = np.nonzero(np.isfinite(vals))[0]
    out = []
    for a, b in zip(idx[:-1], idx[1:]):
        fa, fb = vals[a], vals[b]
        if fa == 0.0:
            if not out or out[-1][1] != a:
                out.append((a, a))
            continue
        if fa * fb < 0.0:
            out.append((a, b))
    if idx.size and vals[idx[-1]] == 0.0 and (not out or out[-1][1] != idx[-1]):
        out.append((idx[-1], idx[-1]))
    return out


def eigenvalues_from_psi_samples(
    lams,
    psis,
    refine: Callable[[float], float] | None = None,
    expected: int | None = None,
    tol: float = TAU_ROOT,
) -> np.ndarray:
    """Zeros of a sampled characteristic function.

    Sign changes are bracketed on the sample grid and refined with Brent's
    method through ``refine`` (linear interpolation of the samples when no
    evaluator is given).  Tangential zeros are invisible; if ``expected`` is
    given and fewer zeros are found a :class:`CoverageWarning` is issued.
    """
    lams = np.asarray(lams, dtype=np.float64)
    psis = np.asarray(psis, dtype=np.float64)
    order = np.argsort(lams)
    lams, psis = lams[order], psis[order]
    roots = []
    for a, b in sign_change_brackets(lams, psis):
        if a == b:
            roots.append(lams[a])
            continue
        if refine is None:
            fa, fb = psis[a], psis[b]
            roots.append(lams[a] - fa * (lams[b] - lams[a]) / (fb - fa))
            continue
        fa, fb = refine(lams[a]), refine(lams[b])
        if fa * fb > 0.0:
            # evaluator disagrees with the samples at the bracket ends
            warnings.warn(f"refinement lost the bracket [{lams[a]:.6g}, {lams[b]:.6g}]", CoverageWarning)
            roots.append(lams[a] - psis[a] * (lams[b] - lams[a]) / (psis[b] - psis[a]))
            continue
        if fa == 0.0 or fb == 0.0:
            roots.append(lams[a] if fa == 0.0 else lams[b])
            continue
        roots.append(brentq(refine, lams[a], lams[b], xtol=tol, rtol=4 * np.finfo(float).eps))
    roots = np.array(sorted(roots))
    if expected is not None and roots.size < expected:
        warnings.warn(
            f"found {roots.size} zeros, expected at least {expected}; tangential zeros or a too-small "
            "window are likely",
            CoverageWarning,
        )
    return roots


def local_polynomial(lams, vals, degree: int = 10) -> Callable[[float], float]:
    """Least-squares polynomial through samples, in a centred/scaled variable."""
    lams = np.asarray(lams, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    deg = int(min(degree, lams.size - 3))
    if deg < 1:
        raise UninformativeError("too few samples for a local interpolant")
    cheb = np.polynomial.Chebyshev.fit(lams, vals, deg)
    return lambda x: float(cheb(x))


def weyl_samples(q: SymmetricPotential, lams: Sequence[float]) -> WeylTarget:
    """Exact Weyl samples of a known potential (testing helper)."""
    rows = shoot_many(q, lams)
    return WeylTarget(np.asarray(lams, dtype=float), rows[:, 1] / rows[:, 0])
