import math

import numpy as np
import pytest

from utils.errors import ParameterDomainError
from utils.subtractor import (PurityDomainError, RootNotBracketedError, SubtractorInput, coherent_density_matrix,
                              coherent_efficiency, coherent_efficiency_oracle, coherent_stats, fock_density_matrix,
                              fock_efficiency, fock_purity, fock_purity_vs_phase, large_alpha_purity, optimize_rate,
                              purity_vs_phase, tradeoff_curve, trapezoid_weights)
from utils.timedomain import PulseShape

PULSE = PulseShape(dt=1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("t", [0.2, 0.6, 0.9])
def test_fock_quadrature_matches_closed_form(n, t):
    rho = fock_density_matrix(SubtractorInput.fock(n, t, PULSE))
    assert rho.trace() == pytest.approx(1.0 - t ** (2 * n), abs=1e-4)
    assert rho.purity() == pytest.approx(fock_purity(n, t), abs=1e-6)


def test_single_photon_is_pure():
    assert fock_purity(1, 0.4) == pytest.approx(1.0)


def test_fock_matrix_hermitian_and_positive():
    rho = fock_density_matrix(SubtractorInput.fock(2, 0.5 + 0.3j, PULSE))
    assert rho.hermiticity_error() == 0.0
    assert rho.min_eigenvalue() > -1e-10


def test_fock_complex_phase_goes_through_quadrature():
    t = 0.6 * complex(math.cos(1.0), math.sin(1.0))
    assert fock_purity(2, t) < fock_purity(2, 0.6)


@pytest.mark.parametrize("alpha2", [2.0, 10.0])
@pytest.mark.parametrize("t", [0.6, 0.5 - 0.4j])
def test_coherent_efficiency_matches_poisson_mixture(alpha2, t):
    assert coherent_efficiency(alpha2, t) == pytest.approx(coherent_efficiency_oracle(alpha2, t), abs=1e-10)


@pytest.mark.parametrize("t", [0.7, 0.6 + 0.3j])
def test_coherent_closed_form_matches_quadrature(t):
    rho = coherent_density_matrix(SubtractorInput.coherent(5.0, t, PULSE))
    eta, purity = coherent_stats(5.0, t)
    assert rho.trace() == pytest.approx(eta, abs=1e-4)
    assert rho.purity() == pytest.approx(purity, abs=1e-5)


def test_tradeoff_endpoints_two_photons():
    curve = tradeoff_curve([1e-4, 1.0 - 1e-4], n=2)
    low, high = curve.iloc[0], curve.iloc[1]
    assert low["eta"] == pytest.approx(0.0, abs=1e-3)
    assert low["purity"] == pytest.approx(1.0, abs=1e-3)
    assert high["eta"] == pytest.approx(1.0, abs=1e-3)
    assert high["purity"] == pytest.approx(2.0 / 3.0, abs=0.01)


@pytest.mark.parametrize("alpha2", [0.5, 3.0])
def test_full_reflection_limits(alpha2):
    assert coherent_efficiency_oracle(alpha2, 0.0) == pytest.approx(-math.expm1(-alpha2), abs=1e-12)
    assert fock_purity(2, 0.0) == pytest.approx(2.0 / 3.0, abs=1e-12)
    rho = fock_density_matrix(SubtractorInput.fock(2, 0.0, PULSE))
    assert rho.trace() == pytest.approx(1.0, abs=1e-4)
    assert rho.purity() == pytest.approx(2.0 / 3.0, abs=1e-6)


def test_efficiency_grows_with_flip_rate():
    curve = tradeoff_curve(np.linspace(0.05, 0.95, 10), alpha2=5.0)
    assert np.all(np.diff(curve["eta"]) > 0)
    assert list(curve.columns) == ["R2", "eta", "purity"]


def test_optimizer_balances_efficiency_and_purity():
    alphas = [2.0, 5.0, 10.0, 50.0, 100.0]
    found = [optimize_rate(a) for a in alphas]
    for a, (r2, value) in zip(alphas, found):
        eta, purity = coherent_stats(a, math.sqrt(1.0 - r2))
        assert abs(eta - purity) < 1e-8
        assert value == pytest.approx(eta)
    values = [v for _, v in found]
    rates = [r for r, _ in found]
    assert np.all(np.diff(values) > 0)
    assert np.all(np.diff(rates) < 0)
    assert values[alphas.index(50.0)] > 0.9


def test_optimizer_without_bracket():
    with pytest.raises(RootNotBracketedError):
        optimize_rate(1.0)


def test_purity_falls_with_phase():
    r2, _ = optimize_rate(100.0)
    frame = purity_vs_phase(100.0, r2, np.linspace(0.0, math.pi, 31))
    assert np.all(np.diff(frame["purity"]) < 0)


def test_purity_approaches_large_alpha_form_once_eta_saturates():
    # at |α|² = 100 the optimum still has η² ≈ 0.98, so the limit is checked where η → 1
    alpha2 = 1e4
    r2, eta = optimize_rate(alpha2)
    assert 1.0 - eta < 1e-3
    frame = purity_vs_phase(alpha2, r2, np.linspace(0.0, math.pi, 31))
    np.testing.assert_allclose(frame["purity"], frame["purity_large_alpha"], rtol=2e-3)


def test_large_alpha_limit_at_zero_phase():
    assert large_alpha_purity(0.5, 0.0) == pytest.approx(0.75)


@pytest.mark.parametrize("n", [2, 3])
def test_fock_opposite_phase_purity(n):
    frame = fock_purity_vs_phase(n, 1.0 - 0.99 ** 2, [math.pi])
    assert frame["purity"].iloc[0] == pytest.approx(1.0 / (2 * n - 1), rel=0.1)


def test_purity_undefined_without_extraction():
    with pytest.raises(PurityDomainError):
        fock_purity(2, 1.0)
    assert fock_efficiency(2, 1.0) == 0.0


def test_input_validation():
    with pytest.raises(ParameterDomainError):
        SubtractorInput.fock(2, 0.9, PULSE, r_coeff=0.9)
    with pytest.raises(ParameterDomainError):
        SubtractorInput.coherent(0.0, 0.5, PULSE)


def test_trapezoid_weights_integrate_constant():
    x = np.linspace(-2.0, 3.0, 11)
    assert trapezoid_weights(x).sum() == pytest.approx(5.0)
