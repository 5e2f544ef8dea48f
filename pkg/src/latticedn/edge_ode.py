"""One-edge Schrodinger machinery on [0, 1].

Fundamental solutions of ``-y'' + q y = lam y``::

    S(0) = 0, S'(0) = 1        C(0) = 1, C'(0) = 0

For a symmetric potential ``S(1, lam)`` is the characteristic function whose
zeros are the Dirichlet eigenvalues, ``C(1) = S'(1)``, and ``S'(1)/S(1)`` is
the Weyl function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from . import _backend
from .errors import IntegrationError, NearEigenvalueError, WindowExhaustedError

__all__ = [
    "SymmetricPotential",
    "EdgeCharData",
    "steps_for",
    "shoot",
    "shoot_many",
    "char_psi",
    "psi_and_weyl",
    "weyl",
    "dirichlet_eigenvalues",
    "free_psi",
    "free_dpsi",
    "EPS_DEN",
]

MIN_STEPS = 2048
STEPS_PER_ROOT_LAMBDA = 256
EPS_DEN = 1e-8
TAU_ROOT = 1e-12


@dataclass(frozen=True, eq=False)
class SymmetricPotential:
    """``q(z) = c0 + sum_m c[m-1] cos(2 pi m z)``, or piecewise-linear samples.

    When ``samples`` is given it defines ``q`` on a uniform grid of [0, 1]
    and the cosine coefficients are ignored for evaluation.
    """

    c0: float = 0.0
    c: tuple = ()
    samples: np.ndarray | None = None
    _nodes: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        if self.samples is not None:
            s = np.asarray(self.samples, dtype=np.float64)
            if s.ndim != 1 or s.size < 2:
                raise ValueError("samples must be a 1-D array with at least two values")
            if not np.allclose(s, s[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(s).max())):
                raise ValueError("sampled potential is not symmetric about z = 1/2")
            object.__setattr__(self, "samples", s)

    @classmethod
    def zero(cls) -> "SymmetricPotential":
        return cls()

    @classmethod
    def constant(cls, c0: float) -> "SymmetricPotential":
        return cls(c0)

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[float]) -> "SymmetricPotential":
        coeffs = list(coeffs)
        return cls(coeffs[0], tuple(coeffs[1:]))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array((self.c0,) + self.c)

    @property
    def basis_dim(self) -> int:
        return len(self.c)

    def padded(self, basis_dim: int) -> np.ndarray:
        out = np.zeros(basis_dim + 1)
        k = min(basis_dim + 1, len(self.c) + 1)
        out[:k] = self.coefficients[:k]
        return out

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.samples is not None:
            grid = np.linspace(0.0, 1.0, self.samples.size)
            return np.interp(z, grid, self.samples)
        out = np.full(z.shape, self.c0)
        for m, cm in enumerate(self.c, start=1):
            if cm:
                out = out + cm * np.cos(2.0 * np.pi * m * z)
        return out

    def nodes(self, n: int) -> np.ndarray:
        """Potential at the ``2n + 1`` RK4 half-step nodes."""
        arr = self._nodes.get(n)
        if arr is None:
            arr = np.ascontiguousarray(self(np.arange(2 * n + 1) / (2.0 * n)))
            self._nodes[n] = arr
        return arr

    def is_zero(self) -> bool:
        if self.samples is not None:
            return not np.any(self.samples)
        return self.c0 == 0.0 and not any(self.c)

    def l2_norm(self) -> float:
        if self.samples is None:
            return math.sqrt(self.c0**2 + 0.5 * sum(x * x for x in self.c))
        z = np.linspace(0.0, 1.0, 4001)
        return float(np.sqrt(trapezoid(self(z) ** 2, z)))

    def sup_norm(self) -> float:
        if self.samples is None:
            return abs(self.c0) + sum(abs(x) for x in self.c)
        return float(np.abs(self.samples).max())

    def mean(self) -> float:
        if self.samples is None:
            return self.c0
        z = np.linspace(0.0, 1.0, 4001)
        return float(trapezoid(self(z), z))

    def l2_distance(self, other: "SymmetricPotential") -> float:
        if self.samples is None and other.samples is None:
            n = max(len(self.c), len(other.c))
            d = self.padded(n) - other.padded(n)
            return math.sqrt(d[0] ** 2 + 0.5 * float(np.sum(d[1:] ** 2)))
        z = np.linspace(0.0, 1.0, 4001)
        return float(np.sqrt(trapezoid((self(z) - other(z)) ** 2, z)))

    def to_json(self) -> dict:
        return {"c0": self.c0, "c": list(self.c)}

    def __repr__(self) -> str:
        if self.samples is not None:
            return f"SymmetricPotential(samples[{self.samples.size}])"
        return f"SymmetricPotential(c0={self.c0!r}, c={self.c!r})"


class EdgeCharData(NamedTuple):
    lam: float
    S1: float
    dS1: float
    C1: float
    dC1: float


def steps_for(lam: float) -> int:
    """RK4 step count: at least 2048, growing like sqrt(lam)."""
    return max(MIN_STEPS, STEPS_PER_ROOT_LAMBDA * math.ceil(math.sqrt(max(lam, 1.0))))


def shoot_many(q: SymmetricPotential, lams) -> np.ndarray:
    """Rows ``(S(1), S'(1), C(1), C'(1))`` for each lambda."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    out = np.empty((lams.size, 4))
    if lams.size == 0:
        return out
    steps = np.array([steps_for(x) for x in lams])
    for n in np.unique(steps):
        sel = np.nonzero(steps == n)[0]
        out[sel] = _backend.shoot_batch(q.nodes(int(n)), np.ascontiguousarray(lams[sel]))
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite values in shooting integration")
    return out


def shoot(q: SymmetricPotential, lam: float) -> EdgeCharData:
    row = shoot_many(q, [lam])[0]
    return EdgeCharData(float(lam), *map(float, row))


def char_psi(q: SymmetricPotential, lam):
    """``psi(1, lam) = S(1, lam)``; vectorised over ``lam``."""
    if np.ndim(lam) == 0:
        return float(shoot_many(q, [lam])[0, 0])
    return shoot_many(q, lam)[:, 0]


def psi_and_weyl(q: SymmetricPotential, lams) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``psi(1, lam)`` and ``psi'(1, lam)/psi(1, lam)``; no guard."""
    rows = shoot_many(q, lams)
    with np.errstate(divide="ignore", invalid="ignore"):
        return rows[:, 0], rows[:, 1] / rows[:, 0]


def weyl(q: SymmetricPotential, lam: float) -> float:
    S1, dS1, _, _ = shoot_many(q, [lam])[0]
    if abs(S1) <= EPS_DEN:
        raise NearEigenvalueError(f"|psi(1, {lam})| = {abs(S1):.3g} below {EPS_DEN}")
    return float(dS1 / S1)


def free_psi(lam):
    """``sin(sqrt(lam))/sqrt(lam)`` continued to lam <= 0."""
    lam = np.asarray(lam, dtype=np.float64)
    out = np.ones_like(lam)
    pos = lam > 1e-14
    neg = lam < -1e-14
    r = np.sqrt(np.abs(lam))
    out = np.where(pos, np.sin(r) / np.where(pos, r, 1.0), out)
    out = np.where(neg, np.sinh(r) / np.where(neg, r, 1.0), out)
    return out if out.ndim else float(out)


def free_dpsi(lam):
    """``cos(sqrt(lam))`` continued to lam <= 0."""
    lam = np.asarray(lam, dtype=np.float64)
    r = np.sqrt(np.abs(lam))
    out = np.where(lam >= 0, np.cos(r), np.cosh(r))
    return out if out.ndim else float(out)


def _refine(q, a, b, fa, fb):
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    return brentq(lambda x: char_psi(q, x), a, b, xtol=TAU_ROOT, rtol=4 * np.finfo(float).eps)


def dirichlet_eigenvalues(
    q: SymmetricPotential, count: int, guess: Sequence[float] | None = None
) -> np.ndarray:
    """First ``count`` Dirichlet eigenvalues of ``-d^2/dz^2 + q`` on (0, 1).

    Roots of ``char_psi`` bracketed on a uniform scan of step pi^2/4 and
    refined with Brent's method.  ``guess`` (ascending, length ``count``)
    enables local brackets around previous values, falling back to the full
    scan when any local bracket fails.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if guess is not None and len(guess) >= count:
        roots = _local_roots(q, np.asarray(guess[:count], dtype=float))
        if roots is not None:
            return roots
    lo = min(-q.sup_norm(), 0.0) - 1.0
    hi = ((count + 2) * np.pi) ** 2 + q.mean() + q.l2_norm()
    grid = np.arange(lo, hi + np.pi**2 / 4, np.pi**2 / 4)
    vals = char_psi(q, grid)
    roots: list[float] = []
    for j in range(grid.size - 1):
        fa, fb = vals[j], vals[j + 1]
        if fa == 0.0 and j > 0:
            continue  # counted as right end of the previous bracket
        if fa * fb <= 0.0:
            roots.append(_refine(q, grid[j], grid[j + 1], fa, fb))
            if len(roots) == count:
                return np.array(roots)
    raise WindowExhaustedError(
        f"found {len(roots)} of {count} eigenvalues in [{lo:.3g}, {hi:.3g}]", found=np.array(roots)
    )


def _local_roots(q, guess):
    gaps = np.diff(np.concatenate([[guess[0] - 2 * np.pi**2], guess, [guess[-1] + 2 * np.pi**2]]))
    roots = []
    for j, g in enumerate(guess):
        w = min(5.0, 0.3 * gaps[j], 0.3 * gaps[j + 1])
        a, b = g - w, g + w
        fa, fb = char_psi(q, np.array([a, b]))
        if fa * fb > 0.0:
            return None
        roots.append(_refine(q, a, b, fa, fb))
    roots = np.array(roots)
    if np.any(np.diff(roots) <= 0):
        return None
    return roots
