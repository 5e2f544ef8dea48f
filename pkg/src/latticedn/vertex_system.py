"""Reduced vertex Laplacian on the lattice region.

At an interior vertex ``v`` the vertex equation reads::

    sum_{w ~ v} u(w) / psi_e  =  4 q_v u(v),      4 q_v = sum_{e at v} psi'_e / psi_e

(the common factor 1/4 of the Laplacian and the multiplication operator is
dropped).  Fields are plain dicts ``{Vertex: value}``; values may be floats or
numpy arrays over a lambda grid, so every routine that only applies the
equation pointwise is automatically vectorised over lambda.

Boundary data are vectors in region boundary order (T, B, L, R; m
ascending).  Neumann data on the left side follow the ``Lambda_V``
convention: ``g(l_m) = -u(0, m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edge_ode import EPS_DEN, SymmetricPotential, shoot_many
from .errors import (
    IllConditionedError,
    InadmissibleLambdaError,
    IncompleteFrontierError,
    UninformativeError,
)
from .lattice import Edge, Region, Vertex, diagonal_vertices, edge_between

__all__ = [
    "KAPPA_MAX",
    "VertexCoeffs",
    "edge_tables",
    "assemble_coeffs",
    "coeffs_from_tables",
    "vertex_residual",
    "interior_system",
    "solve_dirichlet",
    "propagate",
    "complete_boundary",
    "special_solution_data",
    "special_solution",
    "sweep_down",
    "corner_relation",
]

KAPPA_MAX = 1e12


@dataclass
class VertexCoeffs:
    """Per-edge ``psi(1, lam)`` and ``psi'/psi`` plus per-vertex ``q_v``.

    Missing dict entries mean "unknown"; routines that need them raise
    :class:`IncompleteFrontierError`.
    """

    lam: float | np.ndarray
    psi: dict = field(default_factory=dict)
    weyl: dict = field(default_factory=dict)
    qv: dict = field(default_factory=dict)

    def fill_qv(self, region: Region) -> None:
        """Compute ``q_v`` wherever all incident Weyl values are known."""
        for v in region.interior:
            es = region.incident_edges(v)
            if v not in self.qv and all(e in self.weyl for e in es):
                self.qv[v] = 0.25 * sum(self.weyl[e] for e in es)

    def psi_of(self, e: Edge):
        try:
            return self.psi[e]
        except KeyError:
            raise IncompleteFrontierError(f"psi unknown on edge {e}") from None

    def qv_of(self, v: Vertex):
        try:
            return self.qv[v]
        except KeyError:
            raise IncompleteFrontierError(f"q_v unknown at vertex {tuple(v)}") from None


def edge_tables(region: Region, potentials: dict, lams) -> tuple[dict, dict]:
    """``psi`` and ``psi'/psi`` arrays over ``lams`` for every edge of the region.

    Edges absent from ``potentials`` carry the zero potential.  Shooting is
    shared between edges holding the same potential object.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    cache: dict[int, np.ndarray] = {}
    zero = SymmetricPotential.zero()
    psi, wey = {}, {}
    for e in region.edges:
        q = potentials.get(e, zero)
        key = id(q) if not q.is_zero() else 0
        if key not in cache:
            cache[key] = shoot_many(q, lams)
        rows = cache[key]
        psi[e] = rows[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            wey[e] = rows[:, 1] / rows[:, 0]
    return psi, wey


def coeffs_from_tables(region: Region, lam, psi: dict, wey: dict, j=None) -> VertexCoeffs:
    """Slice edge tables at index ``j`` (or keep arrays when ``j`` is None)."""
    if j is None:
        c = VertexCoeffs(lam, dict(psi), dict(wey))
    else:
        c = VertexCoeffs(lam, {e: float(v[j]) for e, v in psi.items()}, {e: float(v[j]) for e, v in wey.items()})
    c.fill_qv(region)
    return c


def assemble_coeffs(region: Region, potentials: dict, lam: float) -> VertexCoeffs:
    """Vertex coefficients at one lambda; refuses edges with ``|psi| <= EPS_DEN``."""
    psi, wey = edge_tables(region, potentials, [lam])
    for e in region.edges:
        if not abs(psi[e][0]) > EPS_DEN:
            raise InadmissibleLambdaError(
                f"lambda={lam} is within EPS_DEN of a Dirichlet eigenvalue of edge {e}",
                reason="edge-eigenvalue",
                edge=e,
            )
    return coeffs_from_tables(region, lam, psi, wey, 0)


def interior_system(region: Region, coeffs: VertexCoeffs):
    """Matrix ``A`` (interior x interior) and ``B`` (interior x boundary).

    The vertex equations read ``A u_int + B f = 0``.
    """
    n, M = len(region.interior), region.M
    A = np.zeros((n, n))
    B = np.zeros((n, M))
    for i, v in enumerate(region.interior):
        A[i, i] = -4.0 * coeffs.qv_of(v)
        for w in region.neighbors(v):
            c = 1.0 / coeffs.psi_of(edge_between(v, w))
            if region.is_interior(w):
                A[i, region.interior_index(w)] += c
            else:
                B[i, region.boundary_index(w)] += c
    return A, B


def _solve_interior(region, coeffs, F):
    A, B = interior_system(region, coeffs)
    cond = np.linalg.cond(A)
    if not cond < KAPPA_MAX:
        raise IllConditionedError(
            f"interior vertex system singular at lambda={coeffs.lam} (cond={cond:.3g}); change lambda",
            cond=cond,
        )
    return np.linalg.solve(A, -B @ F)


def solve_dirichlet(region: Region, coeffs: VertexCoeffs, f) -> dict:
    """Solve the vertex equation in the interior with ``u = f`` on the boundary."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (region.M,):
        raise ValueError(f"boundary data must have shape ({region.M},)")
    ui = _solve_interior(region, coeffs, f)
    u = {v: float(x) for v, x in zip(region.interior, ui)}
    u.update({b: float(x) for b, x in zip(region.boundary, f)})
    return u


def vertex_residual(region: Region, coeffs: VertexCoeffs, u: dict) -> dict:
    """Pointwise residual of the vertex equation at every interior vertex."""
    out = {}
    for v in region.interior:
        s = -4.0 * coeffs.qv_of(v) * u[v]
        for w in region.neighbors(v):
            s = s + u[w] / coeffs.psi_of(edge_between(v, w))
        out[v] = s
    return out


def _nonzero(x) -> bool:
    return bool(np.any(x != 0))


def _solve_step(region, coeffs, u, v, target, structural=True):
    """Value at ``target`` from the vertex equation centred at ``v``.

    Terms with identically vanishing ``u`` are skipped, so their coefficients
    may be unknown.
    """
    acc = 0.0
    if _nonzero(u[v]):
        acc = 4.0 * coeffs.qv_of(v) * u[v]
    for w in region.neighbors(v):
        if w == target:
            continue
        if _nonzero(u[w]):
            acc = acc - u[w] / coeffs.psi_of(edge_between(v, w))
    if structural and not _nonzero(acc):
        return acc * 0.0
    return coeffs.psi_of(edge_between(v, target)) * acc


def propagate(region: Region, coeffs: VertexCoeffs, f, g) -> dict:
    """Column-by-column solve from Dirichlet data off the right side and
    Neumann data on the left side.

    ``f`` is a boundary vector (its R entries are ignored), ``g`` has length
    ``N + 1``.  Entries may carry a trailing lambda axis.  Returns the field
    on all of the region; its R values are the ones implied by the equation.
    """
    N = region.N
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    u: dict = {}
    for side in ("T", "B", "L"):
        for m in range(N + 1):
            b = region.boundary_vertex(side, m)
            u[b] = f[region.boundary_index(b)]
    for m in range(N + 1):
        u[Vertex(0, m)] = -g[m]
    for x in range(N + 1):
        for m in range(N + 1):
            v = Vertex(x, m)
            u[v + (1, 0)] = _solve_step(region, coeffs, u, v, v + (1, 0))
    return u


def complete_boundary(region: Region, lam_v, f1, g, return_cond: bool = False):
    """Fill the right side of ``f`` so that ``(Lambda_V f)|_L = g``.

    ``lam_v`` may be a single ``(M, M)`` matrix or a stack ``(K, M, M)``; then
    ``f1`` and ``g`` may be stacked too.  With ``return_cond`` the condition
    numbers of ``Lambda_V(L; R)`` are returned instead of raising.
    """
    lam_v = np.asarray(lam_v, dtype=np.float64)
    L = region.side_indices("L")
    R = region.side_indices("R")
    off = region.side_indices("T", "B", "L")
    f1 = np.broadcast_to(np.asarray(f1, dtype=np.float64), lam_v.shape[:-1]).copy()
    g = np.broadcast_to(np.asarray(g, dtype=np.float64), lam_v.shape[:-2] + (len(L),))
    sub = lam_v[..., L, :][..., :, R]
    cond = np.linalg.cond(sub)
    if not return_cond and np.any(~(cond < KAPPA_MAX)):
        raise IllConditionedError(
            f"Lambda_V(L;R) ill-conditioned (cond={np.max(cond):.3g}); retry with a different lambda",
            cond=float(np.max(cond)),
        )
    rhs = g - np.einsum("...ij,...j->...i", lam_v[..., L, :][..., :, off], f1[..., off])
    ok = cond < KAPPA_MAX
    safe = np.where(ok[..., None, None], sub, np.eye(len(R))) if sub.ndim > 2 else sub
    fR = np.linalg.solve(safe, rhs[..., None])[..., 0]
    f = f1
    f[..., R] = fR
    if return_cond:
        return f, cond
    return f


def special_solution_data(region: Region, k: int) -> np.ndarray:
    """Dirichlet data ``1`` at ``alpha_{k,0}`` and ``0`` elsewhere off the right side."""
    f1 = np.zeros(region.M)
    f1[region.boundary_index(diagonal_vertices(region, k)[0])] = 1.0
    return f1


def special_solution(region: Region, coeffs: VertexCoeffs, lam_v, k: int) -> dict:
    """Solution vanishing below the line ``n1 + n2 = k``.

    Boundary data are completed through ``lam_v`` and the field is then
    propagated column by column, so coefficients are only touched where the
    field is non-zero.
    """
    f = complete_boundary(region, lam_v, special_solution_data(region, k), np.zeros(region.N + 1))
    u = propagate(region, coeffs, f, np.zeros(region.N + 1))
    for b, x in zip(region.boundary, f):
        u[b] = float(x)
    return u


def sweep_down(region: Region, coeffs: VertexCoeffs, f, neumann, k: int) -> dict:
    """Field on all vertices with ``n1 + n2 >= k`` from boundary data alone.

    ``f`` is the full boundary vector and ``neumann = Lambda_V f``; the top row
    and right column are read from ``neumann``, deeper rows follow from the
    vertex equation applied at vertices of level ``>= k + 1``.  Only edges with
    both end points at level ``>= k`` are used.  Trailing lambda axes allowed.
    """
    N = region.N
    f = np.asarray(f, dtype=np.float64)
    neumann = np.asarray(neumann, dtype=np.float64)
    u: dict = {}
    for j, b in enumerate(region.boundary):
        u[b] = f[..., j]
    for m in range(N + 1):
        t = region.boundary_vertex("T", m)
        u[region.interior_neighbor(t)] = -neumann[..., region.boundary_index(t)]
        r = region.boundary_vertex("R", m)
        u[region.interior_neighbor(r)] = -neumann[..., region.boundary_index(r)]
    for row in range(N, 0, -1):
        for x in range(max(0, k + 1 - row), N + 1):
            v = Vertex(x, row)
            below = v - (0, 1)
            if below.level < k:
                continue
            val = _solve_step(region, coeffs, u, v, below, structural=False)
            if below.n1 == N:
                continue  # right column already read from the D-N map
            u[below] = val
    return {v: x for v, x in u.items() if v.level >= k}


def corner_relation(u: dict, coeffs: VertexCoeffs, a, solve_for: str | None = None, eps: float = EPS_DEN):
    """Two-term relation at a vertex ``a`` where ``u(a) = u(a-1) = u(a-i) = 0``::

        u(a+i) / psi(a, a+i) + u(a+1) / psi(a, a+1) = 0

    With ``solve_for`` in ``{"up", "right"}`` the corresponding ``psi`` is
    returned from the other three quantities; otherwise the residual.
    """
    a = Vertex(*a)
    up, right = a + (0, 1), a + (1, 0)
    uu, ur = u[up], u[right]
    if np.all(np.abs(uu) < eps) and np.all(np.abs(ur) < eps):
        raise UninformativeError(f"u vanishes at both {tuple(up)} and {tuple(right)}")
    e_up, e_right = edge_between(a, up), edge_between(a, right)
    if solve_for is None:
        return uu / coeffs.psi_of(e_up) + ur / coeffs.psi_of(e_right)
    if solve_for == "right":
        return -ur * coeffs.psi_of(e_up) / uu
    if solve_for == "up":
        return -uu * coeffs.psi_of(e_right) / ur
    raise ValueError(f"solve_for must be 'up' or 'right', got {solve_for!r}")
