import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticedn.edge_ode import SymmetricPotential, char_psi, dirichlet_eigenvalues, free_psi
from latticedn.errors import FitError, UninformativeError
from latticedn.isp1d import (
    CoverageWarning,
    SpectrumTarget,
    WeylTarget,
    eigenvalues_from_psi_samples,
    recover_from_spectrum,
    recover_from_weyl,
    weyl_samples,
)

PLANT = SymmetricPotential.from_coefficients([1.0, 0.5, -0.3])


def test_spectrum_of_zero_gives_zero():
    eigs = [(n * math.pi) ** 2 for n in range(1, 7)]
    q = recover_from_spectrum(eigs, 2)
    assert np.max(np.abs(q.coefficients)) <= 1e-8


def test_spectrum_shift_gives_constant():
    eigs = [(n * math.pi) ** 2 + 1.5 for n in range(1, 5)]
    q = recover_from_spectrum(eigs, 1)
    assert q.padded(1) == pytest.approx([1.5, 0.0], abs=1e-6)


def test_spectrum_roundtrip_planted():
    q, info = recover_from_spectrum(dirichlet_eigenvalues(PLANT, 8), 2, full_output=True)
    assert np.max(np.abs(q.padded(2) - PLANT.padded(2))) <= 1e-4
    assert info.converged and info.residual <= 1e-10


def test_spectrum_fit_is_deterministic():
    eigs = dirichlet_eigenvalues(PLANT, 5)
    a = recover_from_spectrum(eigs, 2)
    b = recover_from_spectrum(eigs, 2)
    assert np.array_equal(a.coefficients, b.coefficients)


def test_inconsistent_spectrum_reports_best_iterate():
    # no constant potential has these gaps
    with pytest.raises(FitError) as exc:
        recover_from_spectrum([10.0, 20.0, 90.0, 91.0], 0)
    assert exc.value.best is not None and exc.value.residual > 1e-10


def test_spectrum_target_validation():
    with pytest.raises(ValueError):
        SpectrumTarget([3.0, 2.0])
    with pytest.raises(ValueError):
        recover_from_spectrum([10.0, 40.0], 2)


def test_weyl_examples():
    q0 = recover_from_weyl(weyl_samples(SymmetricPotential.zero(), [1, 2, 3, 5, 6]), 0)
    assert abs(q0.c0) <= 1e-7
    qc = recover_from_weyl(weyl_samples(SymmetricPotential.constant(-2.2), np.linspace(0.5, 30, 9)), 0)
    assert qc.c0 == pytest.approx(-2.2, abs=1e-6)
    eigs = dirichlet_eigenvalues(PLANT, 3)
    lams = [x for x in np.linspace(0.5, 30, 13) if min(abs(x - eigs)) > 0.5][:12]
    q = recover_from_weyl(weyl_samples(PLANT, lams), 2)
    assert np.max(np.abs(q.padded(2) - PLANT.padded(2))) <= 1e-4


def test_weyl_rejects_near_pole_samples():
    lams = np.array([1.0, 2.0, math.pi**2 + 1e-9, 3.0])
    w = weyl_samples(SymmetricPotential.zero(), lams)
    q = recover_from_weyl(w, 0, m_cap=1e3)
    assert abs(q.c0) < 1e-7
    with pytest.raises(UninformativeError):
        recover_from_weyl(WeylTarget([1.0, 2.0], [0.1, 0.2]), 1)
    with pytest.raises(ValueError):
        WeylTarget([1.0, 1.0], [0.0, 0.0])


def test_zeros_of_sampled_sinc():
    lam = np.arange(0.5, 100.0 + 1e-9, 0.5)
    roots = eigenvalues_from_psi_samples(lam, free_psi(lam), refine=lambda x: float(free_psi(x)))
    assert np.allclose(roots, [math.pi**2, 4 * math.pi**2, 9 * math.pi**2], atol=1e-8)
    # without an evaluator, linear interpolation is only approximate
    rough = eigenvalues_from_psi_samples(lam, free_psi(lam))
    assert np.allclose(rough, roots, atol=0.05)


def test_zeros_of_shifted_psi():
    q = SymmetricPotential.constant(3.0)
    lam = np.arange(0.5, 100.0, 0.5)
    roots = eigenvalues_from_psi_samples(lam, char_psi(q, lam), refine=lambda x: char_psi(q, x))
    assert np.allclose(roots, [math.pi**2 + 3, 4 * math.pi**2 + 3, 9 * math.pi**2 + 3], atol=1e-8)


def test_coverage_warning():
    lam = np.arange(0.5, 50.0, 0.5)
    with pytest.warns(CoverageWarning):
        eigenvalues_from_psi_samples(lam, free_psi(lam), expected=3)
    # a tangential zero is invisible
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert eigenvalues_from_psi_samples(lam, (lam - 10.3) ** 2).size == 0


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=4))
def test_forward_inverse_consistency(coeffs):
    q = SymmetricPotential.from_coefficients(coeffs)
    b = q.basis_dim
    r = recover_from_spectrum(dirichlet_eigenvalues(q, b + 3), b)
    assert np.max(np.abs(r.padded(b) - q.padded(b))) <= 1e-4


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=4))
def test_initial_guess_sanity_bound(coeffs):
    q = SymmetricPotential.from_coefficients(coeffs)
    lam1 = dirichlet_eigenvalues(q, 1)[0]
    dev = math.sqrt(0.5 * sum(c * c for c in coeffs[1:]))
    assert abs(lam1 - math.pi**2 - q.c0) <= dev + 1e-9
