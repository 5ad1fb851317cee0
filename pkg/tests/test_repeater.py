import math

import pytest

from utils.repeater import (RepeaterInvariantError, RepeaterState, Spin, all_patterns, atoms, beam_splitter,
                            bell_state, classify, collide, elementary_state, herald, inject, run_protocol, swap)
from utils.scatter1d import ScatterCoeffs

S = 1.0 / math.sqrt(2.0)
BALANCED = ScatterCoeffs(complex(S), complex(S))


def test_collide_identity_without_exchange():
    branches = collide(Spin.UP, Spin.DOWN, ScatterCoeffs(1 + 0j, 0j))
    assert (Spin.UP, Spin.DOWN, 1 + 0j) in branches
    assert all(photon is not None for _, photon, _ in branches)


def test_collide_lost_weight():
    branches = collide(Spin.UP, Spin.DOWN, ScatterCoeffs(0.6 + 0j, 0.6j))
    lost = [amp for _, photon, amp in branches if photon is None]
    assert abs(lost[0]) ** 2 == pytest.approx(0.28)


def test_collide_rejects_gain():
    with pytest.raises(RepeaterInvariantError):
        collide(Spin.UP, Spin.DOWN, ScatterCoeffs(0.9 + 0j, 0.9 + 0j))


def test_beam_splitter_vacuum_and_single_photon():
    vac = atoms(Spin.UP)
    assert beam_splitter(vac, 0.4).terms == vac.terms
    out = beam_splitter(inject(vac, "a"), 0.4)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    assert sorted(abs(c) ** 2 for c in out.terms.values()) == pytest.approx([0.5, 0.5])


def test_hong_ou_mandel_cancellation():
    st = beam_splitter(inject(inject(atoms(Spin.UP), "a"), "b"), 1.1)
    words = [w for (w, _, _) in st.terms]
    assert ("a_dn", "b_dn") not in words
    assert st.norm() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("phi", [0.0, math.pi / 3, 1.7])
def test_balanced_herald_gives_bell_state(phi):
    st = elementary_state(BALANCED, phi)
    res = herald(st, {1, 2})
    assert res.bell == "phi+"
    assert res.probability == pytest.approx(1.0 / 8.0, abs=1e-12)
    assert res.fidelity == pytest.approx(1.0, abs=1e-10)
    minus = herald(st, {2, 3})
    assert minus.bell == "phi-"
    assert minus.fidelity == pytest.approx(1.0, abs=1e-10)


def test_same_spin_coincidences_vanish():
    st = elementary_state(BALANCED)
    assert herald(st, {1, 3}).probability == 0.0
    assert herald(st, {2, 4}).probability == 0.0
    assert classify(frozenset({1, 3})) == "discard"
    assert classify(frozenset()) == "none"


def test_pattern_probabilities_sum_to_one_with_loss():
    st = elementary_state(ScatterCoeffs(0.6 + 0j, 0.6j))
    results = all_patterns(st, 0.8)
    assert sum(r.probability for r in results) == pytest.approx(1.0, abs=1e-10)
    assert len(results) == 16


def test_total_herald_probability_balanced():
    report = run_protocol(BALANCED)
    assert report.success_phi_plus + report.success_phi_minus == pytest.approx(0.5, abs=1e-12)
    assert report.fidelity == pytest.approx(1.0, abs=1e-10)


def test_detector_efficiency_thinning():
    st = elementary_state(BALANCED)
    full = herald(st, {1, 2}).probability
    assert herald(st, {1, 2}, efficiency=0.5).probability == pytest.approx(0.25 * full, abs=1e-12)
    assert herald(st, {1, 2}, efficiency=0.0).probability == 0.0
    assert herald(st, set(), efficiency=0.0).probability == pytest.approx(1.0)


@pytest.mark.parametrize("t,r,expected", [(1.0, 0.0, 0.5), (S, S, 0.75), (0.0, 1.0, 1.0)])
def test_swap_success_probability(t, r, expected):
    out, prob = swap(bell_state(+1), ScatterCoeffs(complex(t), complex(r)))
    assert prob == pytest.approx(expected, abs=1e-12)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    assert out.n_atoms == 1


def test_connection_step_heralds_bell_pair():
    coeffs = ScatterCoeffs(complex(0.6), complex(0.8j))
    for phi in (0.0, 1.7):
        report = run_protocol(coeffs, phi=phi)
        assert report.swap_probability == pytest.approx((1 + 0.64) / 2)
        assert report.connection_fidelity == pytest.approx(1.0, abs=1e-10)
        assert 0.0 < report.connection_success < 1.0
    d = report.as_dict()
    assert set(d) == {"elementary", "swap_probability", "connection"}


def test_norm_check_flags_excess():
    st = RepeaterState({((), (Spin.UP,), (False,)): 1.5 + 0j})
    with pytest.raises(RepeaterInvariantError):
        st.check()
