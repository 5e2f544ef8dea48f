"""Edge and vertex Dirichlet-to-Neumann maps.

``Lambda_V`` is assembled from the reduced vertex Laplacian; ``Lambda_E`` comes
from the continuous edge problem (every edge solved through its fundamental
pair S, C with Dirichlet, continuity and Kirchhoff conditions).  The two are
linked by ``Lambda_V = -cos(sqrt(lam)) I + sin(sqrt(lam))/sqrt(lam) Lambda_E``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .edge_ode import EPS_DEN, SymmetricPotential, dirichlet_eigenvalues, free_dpsi, free_psi, shoot_many
from .errors import IllConditionedError, InadmissibleLambdaError
from .lattice import Region, edge_between
from .vertex_system import KAPPA_MAX, assemble_coeffs, coeffs_from_tables, edge_tables, interior_system

__all__ = [
    "DELTA_T",
    "DNMatrix",
    "ExceptionalSet",
    "assemble_lambda_V",
    "lambda_V_many",
    "lambda_E_from_V",
    "lambda_V_from_E",
    "continuous_oracle_lambda_E",
    "continuous_oracle_many",
    "sample_edge_maps",
    "kirchhoff_residual",
    "admissible",
    "distance_to_T0",
    "DNOracle",
    "CallableOracle",
]

DELTA_T = 0.05


@dataclass
class DNMatrix:
    """One D-N matrix in boundary order (T, B, L, R; m ascending)."""

    lam: float
    entries: np.ndarray

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _entries(x):
    return x.entries if isinstance(x, DNMatrix) else np.asarray(x, dtype=np.float64)


def assemble_lambda_V(region: Region, potentials: dict, lam: float) -> DNMatrix:
    """Column ``j`` is ``-u`` at the interior neighbours for the ``j``-th unit datum."""
    ok, reason = admissible(region, potentials, lam)
    if not ok:
        raise InadmissibleLambdaError(f"lambda={lam} not admissible: {reason}", reason=reason)
    coeffs = assemble_coeffs(region, potentials, lam)
    A, B = interior_system(region, coeffs)
    U = np.linalg.solve(A, -B)
    rows = [region.interior_index(region.interior_neighbor(b)) for b in region.boundary]
    return DNMatrix(float(lam), -U[rows, :])


def lambda_V_many(region: Region, potentials: dict, lams, return_cond: bool = False):
    """Stack ``(K, M, M)`` of vertex D-N maps without admissibility checks."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    psi, wey = edge_tables(region, potentials, lams)
    c = coeffs_from_tables(region, lams, psi, wey)
    n, M = len(region.interior), region.M
    A = np.zeros((lams.size, n, n))
    B = np.zeros((lams.size, n, M))

    for i, v in enumerate(region.interior):
        A[:, i, i] = -4.0 * c.qv[v]
        for w in region.neighbors(v):
            inv = 1.0 / c.psi[edge_between(v, w)]
            if region.is_interior(w):
                A[:, i, region.interior_index(w)] += inv
            else:
                B[:, i, region.boundary_index(w)] += inv
    U = np.linalg.solve(A, -B)
    rows = [region.interior_index(region.interior_neighbor(b)) for b in region.boundary]
    out = -U[:, rows, :]
    if return_cond:
        return out, np.linalg.cond(A)
    return out


def _sin_ratio_guard(lam):
    s = free_psi(lam)
    if np.any(np.abs(s) < EPS_DEN):
        raise InadmissibleLambdaError("sin(sqrt(lam)) vanishes; lambda in T0", reason="T0")
    return s


def lambda_V_from_E(lam_e, lam=None):
    """``Lambda_V = -cos(sqrt(lam)) I + sin(sqrt(lam))/sqrt(lam) Lambda_E``.

    Accepts a :class:`DNMatrix` or an array (stack) with ``lam`` given.
    """
    if isinstance(lam_e, DNMatrix):
        lam = lam_e.lam
    X = _entries(lam_e)
    lam_arr = np.asarray(lam, dtype=np.float64)
    s = np.asarray(_sin_ratio_guard(lam_arr))[..., None, None]
    c = np.asarray(free_dpsi(lam_arr))[..., None, None]
    out = -c * np.eye(X.shape[-1]) + s * X
    return DNMatrix(float(lam), out) if isinstance(lam_e, DNMatrix) else out


def lambda_E_from_V(lam_v, lam=None):
    """Inverse of :func:`lambda_V_from_E`."""
    if isinstance(lam_v, DNMatrix):
        lam = lam_v.lam
    X = _entries(lam_v)
    lam_arr = np.asarray(lam, dtype=np.float64)
    s = np.asarray(_sin_ratio_guard(lam_arr))[..., None, None]
    c = np.asarray(free_dpsi(lam_arr))[..., None, None]
    out = (X + c * np.eye(X.shape[-1])) / s
    return DNMatrix(float(lam), out) if isinstance(lam_v, DNMatrix) else out


def _continuous_system(region: Region, potentials: dict, lams):
    """System matrix for unknowns (a_e, b_e), ``u_e = a_e S_e + b_e C_e``.

    Returns ``(K, 2E, 2E)`` matrices, the row index of each boundary
    Dirichlet equation, and per-edge endpoint data ``(K, E, 4)``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    edges = region.edges
    eidx = {e: j for j, e in enumerate(edges)}
    zero = SymmetricPotential.zero()
    cache: dict[int, np.ndarray] = {}
    data = np.empty((lams.size, len(edges), 4))
    for j, e in enumerate(edges):
        q = potentials.get(e, zero)
        key = 0 if q.is_zero() else id(q)
        if key not in cache:
            cache[key] = shoot_many(q, lams)
        data[:, j, :] = cache[key]
    S1, dS1, C1, dC1 = (data[:, :, i] for i in range(4))
    K, n = lams.size, 2 * len(edges)
    A = np.zeros((K, n, n))
    row = 0
    bc_rows = []

    def value_at(e, v):
        # coefficients of (a_e, b_e) in u_e evaluated at vertex v
        j = eidx[e]
        if v == e.tail:
            return [(2 * j + 1, np.ones(K))]
        return [(2 * j, S1[:, j]), (2 * j + 1, C1[:, j])]

    def deriv_at(e, v):
        # coefficients of the derivative along e towards v
        j = eidx[e]
        if v == e.tail:
            return [(2 * j, -np.ones(K))]
        return [(2 * j, dS1[:, j]), (2 * j + 1, dC1[:, j])]

    for b in region.boundary:
        (e,) = region.incident_edges(b)
        for col, coef in value_at(e, b):
            A[:, row, col] += coef
        bc_rows.append(row)
        row += 1
    for v in region.interior:
        es = region.incident_edges(v)
        for e in es[1:]:
            for col, coef in value_at(es[0], v):
                A[:, row, col] += coef
            for col, coef in value_at(e, v):
                A[:, row, col] -= coef
            row += 1
        for e in es:
            for col, coef in deriv_at(e, v):
                A[:, row, col] += coef
        row += 1
    assert row == n
    return A, bc_rows, data, deriv_at


def continuous_oracle_many(region: Region, potentials: dict, lams, return_cond: bool = False):
    """Stack ``(K, M, M)`` of edge D-N maps from the continuous edge problem."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    A, bc_rows, _, deriv_at = _continuous_system(region, potentials, lams)
    K, n = A.shape[0], A.shape[1]
    M = region.M
    rhs = np.zeros((n, M))
    rhs[bc_rows, np.arange(M)] = 1.0
    X = np.linalg.solve(A, np.broadcast_to(rhs, (K, n, M)))
    out = np.zeros((K, M, M))
    for i, b in enumerate(region.boundary):
        (e,) = region.incident_edges(b)
        for col, coef in deriv_at(e, b):
            out[:, i, :] += coef[:, None] * X[:, col, :]
    if return_cond:
        return out, np.linalg.cond(A)
    return out


def sample_edge_maps(region: Region, potentials: dict, lams, chunk: int = 128, workers: int = 1):
    """Edge D-N maps and condition numbers over ``lams``, split in chunks.

    Chunks go to a thread pool when ``workers > 1``; the output does not
    depend on the pool size.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    parts = [lams[i : i + chunk] for i in range(0, lams.size, chunk)]

    def run(part):
        return continuous_oracle_many(region, potentials, part, True)

    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, parts))
    else:
        results = [run(p) for p in parts]
    if not results:
        return np.zeros((0, region.M, region.M)), np.zeros(0)
    return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])


def continuous_oracle_lambda_E(region: Region, potentials: dict, lam: float) -> DNMatrix:
    """Edge D-N map at one lambda, independent of the vertex reduction."""
    out, cond = continuous_oracle_many(region, potentials, [lam], return_cond=True)
    if not cond[0] < KAPPA_MAX:
        raise IllConditionedError(
            f"continuous edge problem singular at lambda={lam}: lambda is (near) an eigenvalue "
            "of the Dirichlet-Kirchhoff operator on the region",
            cond=float(cond[0]),
        )
    return DNMatrix(float(lam), out[0])


def kirchhoff_residual(region: Region, potentials: dict, lam: float, f) -> float:
    """Largest violation of Dirichlet, continuity and Kirchhoff conditions."""
    A, bc_rows, _, _ = _continuous_system(region, potentials, [lam])
    rhs = np.zeros(A.shape[1])
    rhs[bc_rows] = np.asarray(f, dtype=np.float64)
    x = np.linalg.solve(A[0], rhs)
    return float(np.max(np.abs(A[0] @ x - rhs)))


def distance_to_T0(lam):
    """Distance from ``lam`` to ``{lam : cos(sqrt(lam)) in {0, 1, -1}}``."""
    lam = np.asarray(lam, dtype=np.float64)
    r = np.sqrt(np.maximum(lam, 0.0))
    j = np.floor(2.0 * r / np.pi)
    lo = (j * np.pi / 2) ** 2
    hi = ((j + 1) * np.pi / 2) ** 2
    d = np.minimum(np.abs(lam - lo), np.abs(hi - lam))
    d = np.where(lam < 0, np.abs(lam), d)
    return d if d.ndim else float(d)


@dataclass
class ExceptionalSet:
    """``T0`` (by its generating rule) plus per-edge Dirichlet spectra."""

    upper: float
    spectra: dict = field(default_factory=dict)
    delta: float = DELTA_T

    @classmethod
    def build(cls, potentials: dict, upper: float, delta: float = DELTA_T) -> "ExceptionalSet":
        spectra = {}
        for e, q in potentials.items():
            count = max(1, int(math.sqrt(max(upper - q.mean() + q.sup_norm(), 0.0)) / math.pi) + 1)
            eigs = dirichlet_eigenvalues(q, count)
            spectra[e] = eigs[eigs <= upper + q.sup_norm()]
        return cls(upper, spectra, delta)

    def distance(self, lam) -> np.ndarray:
        d = np.asarray(distance_to_T0(lam), dtype=float)
        for eigs in self.spectra.values():
            if len(eigs):
                d = np.minimum(d, np.min(np.abs(np.subtract.outer(np.asarray(lam), eigs)), axis=-1))
        return d

    def contains(self, lam) -> np.ndarray:
        return self.distance(lam) <= self.delta


def admissible(region: Region, potentials: dict, lam: float, delta_t: float = DELTA_T) -> tuple[bool, str]:
    """Check ``lam`` against ``T0``, edge spectra and the vertex system."""
    if distance_to_T0(lam) <= delta_t:
        return False, "T0"
    psi, wey = edge_tables(region, potentials, [lam])
    for e in region.edges:
        if not abs(psi[e][0]) > EPS_DEN:
            return False, f"edge-eigenvalue:{e}"
    coeffs = coeffs_from_tables(region, lam, psi, wey, 0)
    A, _ = interior_system(region, coeffs)
    if not np.linalg.cond(A) < KAPPA_MAX:
        return False, "vertex-system-singular"
    return True, "ok"


class DNOracle:
    """Edge D-N map as a function of lambda.

    Subclasses implement :meth:`many`.  ``exact`` tells whether off-node
    evaluations are exact (callable) or interpolated (sampled file).
    """

    exact = True
    region: Region

    def many(self, lams) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, lam: float) -> DNMatrix:
        return DNMatrix(float(lam), self.many([lam])[0])

    def sample(self, lams) -> tuple[np.ndarray, np.ndarray]:
        """Maps at ``lams`` and a mask of trustworthy entries."""
        out = self.many(lams)
        return out, np.all(np.isfinite(out), axis=(1, 2))

    def nodes(self, lo: float, hi: float) -> np.ndarray | None:
        """Stored sample nodes in ``[lo, hi]``; None when any lambda may be queried."""
        return None


class CallableOracle(DNOracle):
    """In-process forward computation from known edge potentials."""

    exact = True

    def __init__(self, region: Region, potentials: dict, chunk: int = 128, workers: int = 1):
        self.region = region
        self.potentials = dict(potentials)
        self.chunk = chunk
        self.workers = workers
        self.calls = 0

    def many(self, lams) -> np.ndarray:
        return self.sample(lams)[0]

    def sample(self, lams) -> tuple[np.ndarray, np.ndarray]:
        lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
        self.calls += lams.size
        M = self.region.M
        if lams.size == 0:
            return np.zeros((0, M, M)), np.zeros(0, dtype=bool)
        mats, cond = sample_edge_maps(self.region, self.potentials, lams, self.chunk, self.workers)
        return mats, np.isfinite(cond) & (cond < KAPPA_MAX)
