"""Edge potentials from the edge D-N map by a diagonal sweep.

For ``k = 2N, ..., N+1`` a field vanishing below the line ``n1 + n2 = k`` is
built from the D-N map; on the first non-zero diagonal the vertex equation
collapses to two-term relations.  These yield the characteristic function of
one unknown edge as a ratio of field values times a known characteristic
function (whose zeros give the Dirichlet spectrum), and the Weyl function of
another unknown edge by subtracting known Weyl functions from the vertex
coefficient.  Each diagonal is walked from both ends; the two estimates of
every edge are averaged.  The lower triangle is recovered by running the same
sweep on the D-N map of the region rotated by pi.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dn_maps import DELTA_T, DNOracle, ExceptionalSet, distance_to_T0, lambda_V_from_E
from .edge_ode import SymmetricPotential, free_dpsi, free_psi, shoot_many
from .errors import NumericalError, ReconstructionError, UninformativeError
from .isp1d import (
    eigenvalues_from_psi_samples,
    local_polynomial,
    recover_from_spectrum,
    recover_from_weyl,
    sign_change_brackets,
    WeylTarget,
)
from .lattice import (
    Edge,
    Region,
    Vertex,
    boundary_permutation_pi,
    diagonal_vertices,
    edge_between,
    rotate_edge,
)
from .vertex_system import VertexCoeffs, complete_boundary, special_solution_data, sweep_down

__all__ = [
    "ReconOptions",
    "ReconState",
    "ReconResult",
    "recovered_psi_ratio",
    "isolate_weyl",
    "reconstruct",
    "reconstruct_all",
]

log = logging.getLogger(__name__)


@dataclass
class ReconOptions:
    """Tuning knobs of the sweep.

    ``lam_max`` defaults to ``((basis_dim + 4) pi)^2 + q_bound`` so that the
    ``basis_dim + 3`` eigenvalues used per edge lie well inside the window.
    """

    basis_dim: int = 2
    q_bound: float = 10.0
    lam_min: float = 0.3
    lam_max: float | None = None
    grid_size: int = 400
    delta: float = DELTA_T
    cond_max: float = 1e10
    lv_cap: float = 1e8
    u_rel_eps: float = 1e-6
    m_cap: float = 50.0
    weyl_samples: int = 64
    refine_halfwidth: float = 1.5
    refine_nodes: int = 24
    refine_degree: int = 12

    def window(self) -> tuple[float, float]:
        hi = self.lam_max
        if hi is None:
            hi = ((self.basis_dim + 4) * math.pi) ** 2 + self.q_bound
        return self.lam_min, hi

    @property
    def n_eigs(self) -> int:
        return self.basis_dim + 3


@dataclass
class ReconState:
    """Frontier snapshot: what is known after the last completed diagonal."""

    frame: str
    k: int
    recovered: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "frame": self.frame,
            "k": self.k,
            "recovered": {str(e): q.to_json() for e, q in sorted(self.recovered.items())},
            "failures": list(self.failures),
        }


@dataclass
class ReconResult:
    potentials: dict
    diagnostics: list
    discrepancy: dict
    grid: dict
    options: ReconOptions

    def to_json(self) -> dict:
        return {
            "potentials": {str(e): q.to_json() for e, q in sorted(self.potentials.items())},
            "chain_discrepancy": {str(e): d for e, d in sorted(self.discrepancy.items())},
            "grid": self.grid,
            "steps": self.diagnostics,
            "options": asdict(self.options),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def recovered_psi_ratio(u_num, u_den, psi_partner, scale=None, eps: float = 1e-6):
    """``-u_num / u_den * psi_partner`` and a mask where ``|u_den|`` is not tiny.

    ``scale`` (default ``|u_num|``) sets the yardstick for "tiny".
    """
    u_num, u_den = np.asarray(u_num, dtype=float), np.asarray(u_den, dtype=float)
    if scale is None:
        scale = np.abs(u_num)
    ok = np.abs(u_den) > eps * np.asarray(scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(ok, -u_num * np.asarray(psi_partner) / np.where(ok, u_den, 1.0), np.nan)
    if not np.any(ok):
        raise UninformativeError("denominator vanishes at every sample")
    return val, ok


def isolate_weyl(fourq, *known):
    """Weyl function of the one unknown edge at a vertex: ``4 q_v`` minus the rest."""
    out = np.asarray(fourq, dtype=float)
    for w in known:
        out = out - w
    return out


class _Frame:
    """The region seen directly or after rotation by pi."""

    def __init__(self, name: str, region: Region, oracle: DNOracle, perm=None):
        self.name = name
        self.region = region
        self.oracle = oracle
        self.perm = None if perm is None else np.asarray(perm)

    def sample(self, lams):
        mats, ok = self.oracle.sample(lams)
        if self.perm is not None:
            p = self.perm
            mats = mats[:, p][:, :, p]
        return mats, ok

    def to_original(self, e: Edge) -> Edge:
        return e if self.perm is None else rotate_edge(self.region, e)


class _Fields:
    def __init__(self, lams, u, valid, scale, psi, wey):
        self.lams, self.u, self.valid, self.scale, self.psi, self.wey = lams, u, valid, scale, psi, wey


class _Sweep:
    """One diagonal sweep ``k = 2N .. N+1`` in one frame."""

    def __init__(self, frame: _Frame, opts: ReconOptions, grid: np.ndarray, diagnostics: list):
        self.frame = frame
        self.region = frame.region
        self.opts = opts
        self.diag = diagnostics
        self.known: dict = {}  # frame edge -> potential (interior edges only)
        self.spectra = ExceptionalSet(opts.window()[1] + opts.q_bound, {}, opts.delta)
        self.grid = grid
        self.grid_E, self.grid_ok = frame.sample(grid)
        self._tables: dict = {}  # frame edge -> (psi, weyl) on the grid
        self.discrepancy: dict = {}
        self.failures: list = []

    # -- tables -------------------------------------------------------------
    def _shoot(self, q: SymmetricPotential, lams):
        if q.is_zero():
            s, c = free_psi(lams), free_dpsi(lams)
        else:
            rows = shoot_many(q, lams)
            s, c = rows[:, 0], rows[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(s), np.asarray(c) / np.asarray(s)

    def _pot(self, e: Edge, extra=None) -> SymmetricPotential:
        if extra is not None and e in extra:
            return extra[e]
        if not self.region.is_interior_edge(e):
            return SymmetricPotential.zero()
        return self.known[e]

    def _edge_table(self, e: Edge, lams, on_grid: bool, extra=None):
        if on_grid and (extra is None or e not in extra):
            if e not in self._tables:
                self._tables[e] = self._shoot(self._pot(e), lams)
            return self._tables[e]
        return self._shoot(self._pot(e, extra), lams)

    def _known_edges(self):
        return [e for e in self.region.edges if e in self.known or not self.region.is_interior_edge(e)]

    # -- fields -------------------------------------------------------------
    def _fields(self, k: int, lams, LE, ok, on_grid: bool) -> _Fields:
        opts, region = self.opts, self.region
        lams = np.asarray(lams, dtype=float)
        valid = np.asarray(ok, dtype=bool) & (self.spectra.distance(lams) > opts.delta)
        valid &= distance_to_T0(lams) > opts.delta
        LE = np.where(valid[:, None, None], LE, 0.0)
        # invalid rows are discarded; shift them off T0 so the conversion guard stays quiet
        LV = lambda_V_from_E(LE, np.where(valid, lams, lams + 0.5 * opts.delta))
        valid &= np.all(np.isfinite(LV), axis=(1, 2)) & (np.max(np.abs(LV), axis=(1, 2)) < opts.lv_cap)
        LV = np.where(valid[:, None, None], LV, np.eye(region.M))
        psi, wey = {}, {}
        for e in self._known_edges():
            psi[e], wey[e] = self._edge_table(e, lams, on_grid)
        f, cond = complete_boundary(region, LV, special_solution_data(region, k), np.zeros(region.N + 1), True)
        valid &= cond < opts.cond_max
        neu = np.einsum("kij,kj->ki", LV, f)
        coeffs = VertexCoeffs(lams, psi, wey)
        coeffs.fill_qv(region)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = sweep_down(region, coeffs, f, neu, k)
        stack = np.array([np.abs(x) for v, x in u.items() if v.level <= k + 1])
        scale = np.max(stack, axis=0)
        valid &= np.isfinite(scale) & (scale > 0)
        return _Fields(lams, u, valid, scale, psi, wey)

    def _fields_at(self, k: int, lams) -> _Fields:
        LE, ok = self.frame.sample(lams)
        return self._fields(k, lams, LE, ok, on_grid=False)

    # -- single-edge recoveries ---------------------------------------------
    def _derived_psi(self, F: _Fields, num: Vertex, den: Vertex, partner: Edge, extra, on_grid):
        ps, _ = self._edge_table(partner, F.lams, on_grid, extra)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val, ok = recovered_psi_ratio(F.u[num], F.u[den], ps, F.scale, self.opts.u_rel_eps)
        ok = ok & F.valid & np.isfinite(val)
        return val, ok

    def _refine_nodes(self, a: float, b: float) -> np.ndarray:
        h = self.opts.refine_halfwidth
        lo, hi = a - h, b + h
        stored = self.frame.oracle.nodes(lo, hi)
        if stored is not None:
            return np.asarray(stored, dtype=float)
        n = self.opts.refine_nodes
        x = np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x

    def _recover_by_spectrum(self, k, F, target, num, den, partner, extra):
        opts = self.opts
        val, ok = self._derived_psi(F, num, den, partner, extra, True)
        lams_ok, vals_ok = F.lams[ok], val[ok]
        brackets = sign_change_brackets(lams_ok, vals_ok)[: opts.n_eigs]
        if len(brackets) < opts.n_eigs:
            raise ReconstructionError(
                f"edge {self.frame.to_original(target)}: {len(brackets)} zeros in the window, need {opts.n_eigs}; "
                "q_bound may be too small",
                k=k,
            )
        spans = [(lams_ok[i], lams_ok[j]) for i, j in brackets]
        node_sets = [self._refine_nodes(a, b) for a, b in spans]
        allnodes = np.concatenate(node_sets)
        G = self._fields_at(k, allnodes)
        gval, gok = self._derived_psi(G, num, den, partner, extra, False)
        polys, start = [], 0
        for (a, b), ns in zip(spans, node_sets):
            sl = slice(start, start + ns.size)
            start += ns.size
            m = gok[sl]
            polys.append((a, b, local_polynomial(ns[m], gval[sl][m], opts.refine_degree)))

        def evaluator(x):
            for a, b, p in polys:
                if a <= x <= b:
                    return p(x)
            raise ValueError(f"{x} outside every bracket")

        i_last = brackets[-1][1]
        eigs = eigenvalues_from_psi_samples(lams_ok[: i_last + 1], vals_ok[: i_last + 1], evaluator, opts.n_eigs)
        q, info = recover_from_spectrum(eigs[: opts.n_eigs], opts.basis_dim, full_output=True)
        self._log(k, target, "spectrum", info, eigs=[float(x) for x in eigs[: opts.n_eigs]])
        return q

    def _recover_by_weyl(self, k, F, target, alpha: Vertex, extra):
        opts, region = self.opts, self.region
        up, right = alpha + (0, 1), alpha + (1, 0)
        e_up, e_right = edge_between(alpha, up), edge_between(alpha, right)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ok = F.valid & (np.abs(F.u[alpha]) > opts.u_rel_eps * F.scale)
            fourq = (F.u[up] / F.psi[e_up] + F.u[right] / F.psi[e_right]) / np.where(ok, F.u[alpha], 1.0)
            others = [e for e in region.incident_edges(alpha) if e != target]
            ws = [self._edge_table(e, F.lams, True, extra)[1] for e in others]
            W = isolate_weyl(fourq, *ws)
        for x in [fourq, W, *ws]:
            ok &= np.isfinite(x) & (np.abs(x) <= opts.m_cap)
        idx = np.nonzero(ok)[0]
        if idx.size > opts.weyl_samples:
            idx = idx[np.round(np.linspace(0, idx.size - 1, opts.weyl_samples)).astype(int)]
        q, info = recover_from_weyl(
            WeylTarget(F.lams[idx], W[idx]),
            opts.basis_dim,
            m_cap=opts.m_cap,
            q_bound=opts.q_bound,
            full_output=True,
        )
        self._log(k, target, "weyl", info)
        return q

    def _log(self, k, target, route, info, **extra):
        rec = {
            "frame": self.frame.name,
            "k": k,
            "edge": str(self.frame.to_original(target)),
            "route": route,
            "residual": info.residual,
            "iterations": info.iterations,
            "n_data": info.n_data,
        }
        rec.update(extra)
        self.diag.append(rec)
        log.debug("recovered %s via %s (residual %.3g)", rec["edge"], route, info.residual)

    # -- one diagonal -------------------------------------------------------
    def _chain(self, k, F, alphas, direction: str) -> dict:
        m = len(alphas) - 1
        est: dict = {}

        def left(l):
            return edge_between(alphas[l] - (1, 0), alphas[l])

        def down(l):
            return edge_between(alphas[l] - (0, 1), alphas[l])

        try:
            if direction == "left":
                for l in range(1, m):
                    est[left(l)] = self._recover_by_spectrum(k, F, left(l), alphas[l], alphas[l - 1], down(l - 1), est)
                    est[down(l)] = self._recover_by_weyl(k, F, down(l), alphas[l], est)
            else:
                for l in range(m - 1, 0, -1):
                    est[down(l)] = self._recover_by_spectrum(k, F, down(l), alphas[l], alphas[l + 1], left(l + 1), est)
                    est[left(l)] = self._recover_by_weyl(k, F, left(l), alphas[l], est)
        except (NumericalError, ValueError) as exc:
            self.failures.append(f"{direction} chain: {exc}")
            self.diag.append({"frame": self.frame.name, "k": k, "chain": direction, "failed": str(exc)})
            log.info("%s chain at k=%d stopped: %s", direction, k, exc)
        return est

    def step_k(self, k: int) -> dict:
        F = self._fields(k, self.grid, self.grid_E, self.grid_ok, on_grid=True)
        if not np.any(F.valid):
            raise ReconstructionError(f"no admissible samples at k={k}", k=k)
        alphas = diagonal_vertices(self.region, k)
        a = self._chain(k, F, alphas, "left")
        b = self._chain(k, F, alphas, "right")
        out = {}
        for e in sorted(set(a) | set(b)):
            if e in a and e in b:
                n = self.opts.basis_dim
                ca, cb = a[e].padded(n), b[e].padded(n)
                out[e] = SymmetricPotential.from_coefficients(0.5 * (ca + cb))
                self.discrepancy[self.frame.to_original(e)] = float(np.max(np.abs(ca - cb)))
            else:
                out[e] = a.get(e, b.get(e))
        expected = set()
        for l in range(1, len(alphas) - 1):
            expected.add(edge_between(alphas[l] - (1, 0), alphas[l]))
            expected.add(edge_between(alphas[l] - (0, 1), alphas[l]))
        missing = expected - set(out)
        if missing:
            names = sorted(str(self.frame.to_original(e)) for e in missing)
            raise ReconstructionError(f"k={k}: no estimate for {names}; " + "; ".join(self.failures), k=k)
        for e, q in out.items():
            self.known[e] = q
        upper = self.spectra.upper
        self.spectra.spectra.update(ExceptionalSet.build(out, upper, self.opts.delta).spectra)
        return out

    def run(self) -> dict:
        N = self.region.N
        for k in range(2 * N, N, -1):
            try:
                self.step_k(k)
            except ReconstructionError as exc:
                state = ReconState(
                    self.frame.name,
                    k,
                    {self.frame.to_original(e): q for e, q in self.known.items()},
                    list(self.failures),
                )
                raise ReconstructionError(str(exc), k=k, state=state) from exc
        return {self.frame.to_original(e): q for e, q in self.known.items()}


def _working_grid(oracle: DNOracle, opts: ReconOptions) -> np.ndarray:
    lo, hi = opts.window()
    stored = oracle.nodes(lo, hi)
    if stored is not None:
        nodes = np.asarray(stored, dtype=float)
        nodes = nodes[distance_to_T0(nodes) > opts.delta]
        if nodes.size < opts.grid_size:
            raise ReconstructionError(f"only {nodes.size} admissible stored samples in [{lo:.4g}, {hi:.4g}]")
        pick = np.round(np.linspace(0, nodes.size - 1, opts.grid_size)).astype(int)
        return nodes[np.unique(pick)]
    n = opts.grid_size
    while True:
        grid = np.linspace(lo, hi, n)
        grid = grid[distance_to_T0(grid) > opts.delta]
        if grid.size >= opts.grid_size:
            return grid
        n += opts.grid_size // 10 + 1


def reconstruct(region: Region, oracle: DNOracle, opts: ReconOptions | None = None) -> ReconResult:
    """Recover every interior edge potential from the edge D-N map."""
    opts = opts or ReconOptions()
    grid = _working_grid(oracle, opts)
    diagnostics: list = []
    potentials: dict = {}
    discrepancy: dict = {}
    frames = [_Frame("direct", region, oracle), _Frame("rotated", region, oracle, boundary_permutation_pi(region))]
    dropped = 0
    for frame in frames:
        sweep = _Sweep(frame, opts, grid, diagnostics)
        dropped = int((~sweep.grid_ok).sum())
        potentials.update(sweep.run())
        discrepancy.update(sweep.discrepancy)
    missing = [e for e in region.interior_edges if e not in potentials]
    if missing:
        raise ReconstructionError(f"edges not covered by either sweep: {missing}")
    info = {"window": list(opts.window()), "size": int(grid.size), "singular_dropped": dropped}
    return ReconResult(potentials, diagnostics, discrepancy, info, opts)


def reconstruct_all(region: Region, oracle: DNOracle, opts: ReconOptions | None = None) -> dict:
    """Map interior edge -> recovered :class:`SymmetricPotential`."""
    return reconstruct(region, oracle, opts).potentials
