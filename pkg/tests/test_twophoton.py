import math

import numpy as np
import pytest

from conftest import make_params
from utils.errors import ParameterDomainError
from utils.params import derive
from utils.scatter1d import coeffs_from_phi
from utils.subtractor import fock_purity
from utils.twophoton import (GridMemoryError, GridSpec, analytic_reference, evolve_two_photon, n_eff_of,
                             phase_matched_params, pulse_for_density, real_phase, reduce_density_matrix)


@pytest.mark.parametrize("r2", [0.1, 0.5, 0.9])
def test_phase_matching_gives_real_positive_t(matched_params, r2):
    p = phase_matched_params(matched_params, r2)
    assert real_phase(p) == pytest.approx(math.pi / 2, rel=1e-8)
    t = coeffs_from_phi(real_phase(p), p.omega_up, p.omega_down).t_coeff
    assert t.real == pytest.approx(math.sqrt(1.0 - r2), abs=1e-8)
    assert abs(t.imag) < 1e-8
    assert p.omega_up < p.omega_down


@pytest.mark.parametrize("r2", [0.1, 0.5, 0.9])
def test_phase_matching_at_opposite_phase(matched_params, r2):
    p = phase_matched_params(matched_params, r2, theta=math.pi)
    assert real_phase(p) == pytest.approx(math.pi / 2, rel=1e-8)
    t = coeffs_from_phi(real_phase(p), p.omega_up, p.omega_down).t_coeff
    assert t.real == pytest.approx(-math.sqrt(1.0 - r2), abs=1e-8)
    assert abs(t.imag) < 1e-8
    assert p.omega_up > p.omega_down


@pytest.mark.parametrize("r2,theta", [(0.0, 0.0), (1.2, 0.0), (0.5, 1.0)])
def test_phase_matching_rejects_bad_targets(matched_params, r2, theta):
    with pytest.raises(ParameterDomainError):
        phase_matched_params(matched_params, r2, theta)


def test_pulse_for_density(matched_params):
    pulse = pulse_for_density(matched_params, 0.1)
    assert n_eff_of(matched_params, pulse) == pytest.approx(0.1)


def test_analytic_reference(matched_params):
    eta, purity = analytic_reference(phase_matched_params(matched_params, 0.5))
    assert eta == pytest.approx(0.75, abs=1e-7)
    assert purity == pytest.approx(fock_purity(2, math.sqrt(0.5)), abs=1e-6)
    eta, purity = analytic_reference(phase_matched_params(matched_params, 0.5, theta=math.pi))
    assert eta == pytest.approx(0.75, abs=1e-7)
    assert purity == pytest.approx(fock_purity(2, -math.sqrt(0.5)), abs=1e-6)
    assert purity < fock_purity(2, math.sqrt(0.5))


def test_grid_limits(matched_params):
    with pytest.raises(ParameterDomainError):
        GridSpec(cells=100)
    with pytest.raises(GridMemoryError):
        evolve_two_photon(matched_params, pulse_for_density(matched_params, 0.1), GridSpec(max_bytes=1e3))
    assert GridSpec().footprint() < 2e9


@pytest.fixture(scope="module")
def runs():
    """Grid runs shared by the slow tests, keyed by (r2, n_eff, theta)."""
    base = make_params()
    done = {}

    def get(r2, n_eff=0.1, theta=0.0):
        key = (r2, n_eff, theta)
        if key not in done:
            p = phase_matched_params(base, r2, theta)
            state = evolve_two_photon(p, pulse_for_density(p, n_eff))
            done[key] = (state, reduce_density_matrix(state), *analytic_reference(p))
        return done[key]

    return get


@pytest.mark.slow
def test_no_interaction_gives_delayed_product_state():
    p = make_params(xi=0.0)
    pulse = pulse_for_density(p, 0.1)
    state = evolve_two_photon(p, pulse)
    assert state.p_up == 0.0
    assert state.norm_error < 1e-4
    assert state.p_dd == pytest.approx(1.0, abs=2e-3)
    phi_dd = state.dd_symmetric()
    np.testing.assert_allclose(phi_dd, phi_dd.T)
    delayed = math.sqrt(state.bin_width) * pulse.amplitude(state.bins - p.length_L / derive(p).v_down)
    delayed = delayed / np.linalg.norm(delayed)
    product = np.outer(delayed, delayed)
    fidelity = abs(np.vdot(product, phi_dd)) ** 2 / state.p_dd
    assert fidelity > 0.999


@pytest.mark.slow
@pytest.mark.parametrize("r2", [0.1, 0.5, 0.9])
def test_oracle_matches_analytic_at_low_density(runs, r2):
    state, rho, eta_a, pur_a = runs(r2)
    assert state.norm_error < 1e-4
    assert state.p_up + state.p_dd <= 1.0 + 1e-4
    assert rho.trace() == pytest.approx(eta_a, abs=0.05)
    assert rho.purity() == pytest.approx(pur_a, abs=0.05)
    assert rho.hermiticity_error() < 1e-12


@pytest.mark.slow
def test_binned_trace_matches_exit_flux(runs):
    # diagonal bins blur the two exits at larger |R|², so the comparison is made at weak flipping
    state, rho, _, _ = runs(0.1)
    assert rho.trace() == pytest.approx(state.flux_up, abs=1e-3)


@pytest.mark.slow
def test_oracle_at_opposite_phase(runs):
    state, rho, eta_a, pur_a = runs(0.5, theta=math.pi)
    assert state.norm_error < 1e-4
    assert pur_a == pytest.approx(fock_purity(2, -math.sqrt(0.5)), abs=1e-6)
    assert rho.trace() == pytest.approx(eta_a, abs=0.05)
    assert rho.purity() == pytest.approx(pur_a, abs=0.05)


@pytest.mark.slow
def test_denser_pulse_departs_further(runs):
    _, rho_lo, _, pur_a = runs(0.5)
    _, rho_hi, _, _ = runs(0.5, n_eff=0.5)
    assert abs(rho_hi.purity() - pur_a) > abs(rho_lo.purity() - pur_a)


@pytest.mark.slow
def test_full_flip_leaves_two_thirds_purity(runs):
    state, rho, eta_a, pur_a = runs(1.0)
    assert (eta_a, pur_a) == (pytest.approx(1.0), pytest.approx(2.0 / 3.0))
    assert rho.trace() == pytest.approx(1.0, abs=0.05)
    assert rho.purity() == pytest.approx(2.0 / 3.0, abs=0.05)
