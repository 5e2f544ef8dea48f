import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_potentials
from latticedn.dn_maps import admissible, assemble_lambda_V
from latticedn.edge_ode import SymmetricPotential
from latticedn.errors import IllConditionedError, IncompleteFrontierError, UninformativeError
from latticedn.lattice import Vertex, build_region, diagonal_vertices, edge_between
from latticedn.vertex_system import (
    VertexCoeffs,
    assemble_coeffs,
    complete_boundary,
    corner_relation,
    propagate,
    solve_dirichlet,
    special_solution,
    special_solution_data,
    sweep_down,
    vertex_residual,
)


def _setup(N, seed, lam_range=(0.5, 60.0)):
    rng = np.random.default_rng(seed)
    region = build_region(N)
    pots = random_potentials(region, rng)
    while True:
        lam = float(rng.uniform(*lam_range))
        if admissible(region, pots, lam)[0]:
            return region, pots, lam, rng


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6))
def test_propagate_matches_dense_solve(N, seed):
    region, pots, lam, rng = _setup(N, seed)
    coeffs = assemble_coeffs(region, pots, lam)
    f = rng.normal(size=region.M)
    u_ref = solve_dirichlet(region, coeffs, f)
    LV = assemble_lambda_V(region, pots, lam).entries
    u = propagate(region, coeffs, f, (LV @ f)[region.side_indices("L")])
    scale = max(abs(x) for x in u_ref.values())
    for v in region.interior:
        assert abs(u[v] - u_ref[v]) <= 1e-9 * scale
    # implied right-side values reproduce the Dirichlet data
    for j in region.side_indices("R"):
        assert abs(u[region.boundary[j]] - f[j]) <= 1e-8 * scale


def test_dirichlet_solution_satisfies_vertex_equation():
    region, pots, lam, rng = _setup(3, 11)
    coeffs = assemble_coeffs(region, pots, lam)
    u = solve_dirichlet(region, coeffs, rng.normal(size=region.M))
    res = vertex_residual(region, coeffs, u)
    assert max(abs(x) for x in res.values()) < 1e-10 * max(abs(x) for x in u.values()) * 10


@pytest.mark.parametrize("k", [4, 5, 6])
def test_special_solution_support_and_sweep(k):
    region, pots, lam, _ = _setup(3, 100 + k)
    coeffs = assemble_coeffs(region, pots, lam)
    LV = assemble_lambda_V(region, pots, lam).entries
    f = complete_boundary(region, LV, special_solution_data(region, k), np.zeros(4))
    dense = solve_dirichlet(region, coeffs, f)
    scale = max(abs(x) for x in dense.values())
    assert max(abs(x) for v, x in dense.items() if v.level < k) <= 1e-10 * scale
    # the propagated special solution agrees with the dense one
    u = special_solution(region, coeffs, LV, k)
    assert max(abs(u[v] - dense[v]) for v in region.interior) <= 1e-9 * scale
    # sweeping down only needs edges above the diagonal
    known = VertexCoeffs(lam)
    for e in region.edges:
        if min(e.tail.level, e.head.level) >= k or not region.is_interior_edge(e):
            known.psi[e] = coeffs.psi[e]
            known.weyl[e] = coeffs.weyl[e]
    known.fill_qv(region)
    swept = sweep_down(region, known, f, LV @ f, k)
    for v, x in swept.items():
        assert abs(x - dense[v]) <= 1e-9 * scale


def test_corner_relation_recovers_psi():
    region, pots, lam, _ = _setup(3, 7)
    coeffs = assemble_coeffs(region, pots, lam)
    LV = assemble_lambda_V(region, pots, lam).entries
    k = 5
    f = complete_boundary(region, LV, special_solution_data(region, k), np.zeros(4))
    u = solve_dirichlet(region, coeffs, f)
    alpha = diagonal_vertices(region, k)[2]
    a = alpha - (1, 0)
    e_right = edge_between(a, a + (1, 0))
    assert corner_relation(u, coeffs, a, solve_for="right") == pytest.approx(coeffs.psi[e_right], rel=1e-8)
    e_up = edge_between(a, a + (0, 1))
    assert corner_relation(u, coeffs, a, solve_for="up") == pytest.approx(coeffs.psi[e_up], rel=1e-8)
    with pytest.raises(UninformativeError):
        corner_relation({a + (0, 1): 0.0, a + (1, 0): 0.0}, coeffs, a)


def test_missing_coefficients_are_reported():
    region = build_region(1)
    c = VertexCoeffs(2.0)
    with pytest.raises(IncompleteFrontierError):
        c.psi_of(region.interior_edges[0])
    with pytest.raises(IncompleteFrontierError):
        c.qv_of(Vertex(0, 0))


def test_complete_boundary_refuses_singular_block():
    region = build_region(1)
    with pytest.raises(IllConditionedError):
        complete_boundary(region, np.zeros((region.M, region.M)), np.zeros(region.M), np.zeros(2))


def test_zero_potential_coefficients():
    region = build_region(1)
    lam = 3.0
    c = assemble_coeffs(region, {}, lam)
    r = np.sqrt(lam)
    for v in region.interior:
        assert c.qv[v] == pytest.approx(np.cos(r) / np.sin(r) * r)
    assert c.psi[region.edges[0]] == pytest.approx(np.sin(r) / r)
    assert isinstance(SymmetricPotential.zero().is_zero(), bool)
