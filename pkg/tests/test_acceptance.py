"""Acceptance criteria, each at its stated tolerance.

Every test appends one ``criterion N: PASS|FAIL`` line to ACCEPTANCE_RESULTS;
the conftest prints them in the terminal summary.  Running this file as a
script prints the same lines.
"""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from conftest import random_potentials
from latticedn.dn_maps import (
    CallableOracle,
    admissible,
    assemble_lambda_V,
    continuous_oracle_lambda_E,
)
from latticedn.dnfile import SampledOracle, write_dn_file
from latticedn.edge_ode import SymmetricPotential, char_psi, dirichlet_eigenvalues, weyl
from latticedn.isp1d import recover_from_spectrum, recover_from_weyl, weyl_samples
from latticedn.lattice import build_region, diagonal_vertices, rotate_edge, upper_triangle_edges
from latticedn.reconstruct import ReconOptions, _working_grid, reconstruct
from latticedn.vertex_system import (
    assemble_coeffs,
    complete_boundary,
    corner_relation,
    propagate,
    solve_dirichlet,
    special_solution_data,
)

ACCEPTANCE_RESULTS = []


def record(n, ok, measured, tol, note=""):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  measured={measured:.3e}  tol={tol:.0e}"
    if note:
        line += f"  ({note})"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    assert ok, line


def admissible_lams(region, pots, rng, count, lo=0.5, hi=120.0):
    out = []
    while len(out) < count:
        lam = float(rng.uniform(lo, hi))
        if admissible(region, pots, lam)[0]:
            out.append(lam)
    return out


PLANT = SymmetricPotential.from_coefficients([1.0, 0.5, -0.3])


def test_criterion_1_relation_identity():
    rng = np.random.default_rng(1)
    worst = 0.0
    for N in (0, 1, 2):
        region = build_region(N)
        for _ in range(5):
            pots = random_potentials(region, rng)
            for lam in admissible_lams(region, pots, rng, 10):
                LV = assemble_lambda_V(region, pots, lam).entries
                LE = continuous_oracle_lambda_E(region, pots, lam).entries
                r = math.sqrt(lam)
                diff = LV + math.cos(r) * np.eye(region.M) - math.sin(r) / r * LE
                worst = max(worst, float(np.max(np.abs(diff))))
    record(1, worst <= 1e-8, worst, 1e-8, "N in {0,1,2}, 5 assignments x 10 lambdas")


def test_criterion_2_closed_form():
    region = build_region(0)
    LV = assemble_lambda_V(region, {}, 2.0).entries
    expected = -np.ones((4, 4)) / (4.0 * math.cos(math.sqrt(2.0)))
    err = float(np.max(np.abs(LV - expected)))
    record(2, err <= 1e-12, err, 1e-12)


def _fundamental_pair(q, lam):
    """S(1), C(1) by an adaptive high-order integrator, independent of the RK4 kernel."""

    def rhs(z, y):
        return [y[1], (q(z) - lam) * y[0], y[3], (q(z) - lam) * y[2]]

    sol = solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0, 1.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[0, -1], sol.y[2, -1]


def test_criterion_3_star_reduction():
    """Kirchhoff star: u_e = u0 C_e + a_e S_e with sum a_e = 0 satisfies the vertex equation."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        qs = [SymmetricPotential.from_coefficients(rng.uniform(-2, 2, 3)) for _ in range(4)]
        lam = float(rng.uniform(0.5, 80.0))
        while min(abs(char_psi(q, lam)) for q in qs) < 1e-3:
            lam = float(rng.uniform(0.5, 80.0))
        a = rng.normal(size=4)
        a -= a.mean()
        u0 = 1.0
        leaves = []
        for q, ae in zip(qs, a):
            S1, C1 = _fundamental_pair(q, lam)
            leaves.append(u0 * C1 + ae * S1)
        psi = [char_psi(q, lam) for q in qs]
        fourq = sum(weyl(q, lam) for q in qs)
        lhs = sum(w / p for w, p in zip(leaves, psi))
        res = abs(lhs - fourq * u0) / max(1.0, abs(fourq))
        worst = max(worst, res)
    record(3, worst <= 1e-8, worst, 1e-8, "20 random (q, lambda)")


def test_criterion_4_special_solution_support():
    rng = np.random.default_rng(4)
    region = build_region(3)
    pots = random_potentials(region, rng)
    opts = ReconOptions(basis_dim=0)
    grid = _working_grid(CallableOracle(region, pots), opts)
    worst, used = 0.0, 0
    for k in (4, 5, 6):
        f1 = special_solution_data(region, k)
        for lam in grid:
            if not admissible(region, pots, lam)[0]:
                continue
            LV = assemble_lambda_V(region, pots, lam).entries
            f, cond = complete_boundary(region, LV, f1, np.zeros(region.N + 1), return_cond=True)
            if not cond < opts.cond_max:
                continue
            u = solve_dirichlet(region, assemble_coeffs(region, pots, lam), f)
            scale = max(abs(x) for x in u.values())
            below = max(abs(x) for v, x in u.items() if v.level < k)
            worst = max(worst, below / scale)
            used += 1
    record(4, worst <= 1e-10, worst, 1e-10, f"N=3, k=4..6, {used} grid solves")


def test_criterion_5_corner_relation():
    rng = np.random.default_rng(5)
    worst, count = 0.0, 0
    for N in (1, 2, 3):
        region = build_region(N)
        pots = random_potentials(region, rng)
        for lam in admissible_lams(region, pots, rng, 4):
            coeffs = assemble_coeffs(region, pots, lam)
            LV = assemble_lambda_V(region, pots, lam).entries
            for k in range(N + 1, 2 * N + 1):
                f = complete_boundary(region, LV, special_solution_data(region, k), np.zeros(N + 1))
                u = solve_dirichlet(region, coeffs, f)
                scale = max(abs(x) for x in u.values())
                for alpha in diagonal_vertices(region, k)[1:]:
                    a = alpha - (1, 0)
                    if not region.is_interior(a):
                        continue
                    res = abs(corner_relation(u, coeffs, a)) / scale
                    worst = max(worst, float(res))
                    count += 1
    record(5, worst <= 1e-9, worst, 1e-9, f"{count} corner vertices, N <= 3")


def test_criterion_6_inverse_1d():
    eigs = dirichlet_eigenvalues(PLANT, 8)
    q1 = recover_from_spectrum(eigs, 2)
    lams = np.linspace(0.5, 30.0, 12)
    lams = lams[[min(abs(lam - e) for e in eigs) > 0.5 for lam in lams]]
    q2 = recover_from_weyl(weyl_samples(PLANT, lams), 2)
    err = max(float(np.max(np.abs(q.padded(2) - PLANT.padded(2)))) for q in (q1, q2))
    record(6, err <= 1e-4, err, 1e-4, "8 eigenvalues and 12 Weyl samples")


def _constant_plants(region):
    """Distinct constants {1.0, -0.5, 2.0, 0.7, ...} on the upper triangle, then the rotated set."""
    head = [1.0, -0.5, 2.0, 0.7]
    upper = sorted(upper_triangle_edges(region))
    values = head + [round(-1.5 + 0.23 * j, 2) for j in range(2 * len(upper) - len(head))]
    pots = {}
    for j, e in enumerate(upper):
        pots[e] = SymmetricPotential.constant(values[j])
        pots[rotate_edge(region, e)] = SymmetricPotential.constant(values[len(upper) + j])
    assert len(pots) == len(region.interior_edges)
    return pots


def _rel_errors(region, planted, recovered):
    return {e: planted[e].l2_distance(recovered[e]) / max(planted[e].l2_norm(), 1e-300) for e in region.interior_edges}


@pytest.mark.slow
def test_criterion_7_roundtrip():
    region = build_region(3)
    plants = _constant_plants(region)
    res = reconstruct(region, CallableOracle(region, plants), ReconOptions(basis_dim=0))
    rel = max(_rel_errors(region, plants, res.potentials).values())

    region2 = build_region(2)
    rng = np.random.default_rng(7)
    plants2 = {
        e: SymmetricPotential.from_coefficients([rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(-1, 1)])
        for e in region2.interior_edges
    }
    res2 = reconstruct(region2, CallableOracle(region2, plants2), ReconOptions(basis_dim=2))
    coef = max(float(np.max(np.abs(plants2[e].padded(2) - res2.potentials[e].padded(2)))) for e in plants2)
    ok = rel <= 1e-3 and coef <= 5e-3
    record(7, ok, max(rel, coef), 1e-3, f"N=3 constants rel L2 {rel:.2e} <= 1e-3; N=2 two-mode coef {coef:.2e} <= 5e-3")


@pytest.mark.slow
def test_criterion_8_zero_fixed_point():
    region = build_region(2)
    zero = {e: SymmetricPotential.zero() for e in region.interior_edges}
    res = reconstruct(region, CallableOracle(region, zero), ReconOptions(basis_dim=2))
    worst = max(float(np.max(np.abs(q.coefficients))) for q in res.potentials.values())
    record(8, worst <= 1e-5, worst, 1e-5, "N=2, basis_dim=2")


def _numerov_eigs(q, n_points=2000, count=5):
    """Generalised eigenproblem of the Numerov discretisation on n_points interior nodes."""
    h = 1.0 / (n_points + 1)
    z = np.arange(1, n_points + 1) * h
    main, off = np.full(n_points, 2.0), np.full(n_points - 1, -1.0)
    D = (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h**2
    B = (np.diag(np.full(n_points, 10.0)) + np.diag(np.ones(n_points - 1), 1) + np.diag(np.ones(n_points - 1), -1)) / 12
    A = D + B @ np.diag(q(z))
    return eigh(A, B, subset_by_index=[0, count - 1], eigvals_only=True)


def test_criterion_9_oracle_equivalence():
    rng = np.random.default_rng(9)
    worst_prop = 0.0
    for trial in range(50):
        N = int(trial % 4) + 1
        region = build_region(N)
        pots = random_potentials(region, rng)
        lam = admissible_lams(region, pots, rng, 1, hi=60.0)[0]
        coeffs = assemble_coeffs(region, pots, lam)
        LV = assemble_lambda_V(region, pots, lam).entries
        f = rng.normal(size=region.M)
        u_ref = solve_dirichlet(region, coeffs, f)
        g = (LV @ f)[region.side_indices("L")]
        u = propagate(region, coeffs, f, g)
        scale = max(abs(x) for x in u_ref.values())
        worst_prop = max(worst_prop, max(abs(u[v] - u_ref[v]) for v in region.interior) / scale)
    worst_eig = 0.0
    for _ in range(5):
        q = SymmetricPotential.from_coefficients(rng.uniform(-2, 2, 3))
        ours = dirichlet_eigenvalues(q, 5)
        dense = _numerov_eigs(q)
        worst_eig = max(worst_eig, float(np.max(np.abs(ours - dense) / np.abs(dense))))
    ok = worst_prop <= 1e-9 and worst_eig <= 1e-6
    record(
        9, ok, max(worst_prop, worst_eig), 1e-6,
        f"propagate vs dense {worst_prop:.2e} <= 1e-9; eigenvalues vs Numerov(2000) {worst_eig:.2e} <= 1e-6",
    )  # fmt: skip


@pytest.mark.slow
def test_criterion_10_file_mode(tmp_path):
    region = build_region(3)
    plants = _constant_plants(region)
    opts = ReconOptions(basis_dim=0)
    path = tmp_path / "dn.bin"
    write_dn_file(path, region, plants, window=opts.window(), encoding="binary")
    res_file = reconstruct(region, SampledOracle.from_file(path), opts)
    rel = max(_rel_errors(region, plants, res_file.potentials).values())
    res_call = reconstruct(region, CallableOracle(region, plants), opts)
    modes = max(res_file.potentials[e].l2_distance(res_call.potentials[e]) for e in region.interior_edges)
    record(10, rel <= 1e-3, rel, 1e-3, f"file vs callable discrepancy {modes:.2e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
