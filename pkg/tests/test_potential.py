import math

import numpy as np
import pytest

from conftest import make_params
from utils.errors import ParameterDomainError
from utils.params import PotentialKind, derive
from utils.potential import (PotentialProfile, effective_from_u, effective_potential, line_integral,
                             profile_for, u_at)


def test_dressed_soft_core():
    prof = PotentialProfile(PotentialKind.DRESSED, u0=2.0, scale=12.0, r_perp=0.0)
    assert u_at(prof, 0.0) == pytest.approx(2.0)
    assert u_at(prof, 12.0) == pytest.approx(1.0)


def test_vdw_at_one_distance():
    prof = PotentialProfile(PotentialKind.VDW, u0=1.0, scale=25.0, r_perp=0.0)
    assert u_at(prof, 25.0) == pytest.approx(1.0 / 8.0)
    assert u_at(prof, 0.0) == pytest.approx(1.0)


def test_infinite_line_integrals():
    dressed = PotentialProfile(PotentialKind.DRESSED, u0=1.0, scale=12.0, r_perp=0.0)
    vdw = PotentialProfile(PotentialKind.VDW, u0=1.0, scale=25.0, r_perp=0.0)
    assert line_integral(dressed) == pytest.approx(2 * math.pi / 3 * 12.0, rel=1e-8)
    assert line_integral(vdw) == pytest.approx(3 * math.pi / 8 * 25.0, rel=1e-8)


def test_finite_medium_integral_below_line():
    prof = PotentialProfile(PotentialKind.DRESSED, u0=1.0, scale=12.0, r_perp=0.0)
    finite = line_integral(prof, length=48.0)
    assert finite < line_integral(prof)
    assert finite == pytest.approx(line_integral(prof), rel=1e-2)


def test_dressed_plateau_insensitive_to_offset():
    base = PotentialProfile(PotentialKind.DRESSED, u0=1.0, scale=12.0, r_perp=0.0)
    for dr in (-1.0, 1.0):
        shifted = PotentialProfile(PotentialKind.DRESSED, u0=1.0, scale=12.0, r_perp=abs(dr))
        assert abs(u_at(shifted, 0.0) - u_at(base, 0.0)) < 0.01


def test_vdw_sensitive_to_offset():
    near = PotentialProfile(PotentialKind.VDW, u0=1.0, scale=25.0, r_perp=-1.0)
    far = PotentialProfile(PotentialKind.VDW, u0=1.0, scale=25.0, r_perp=1.0)
    assert u_at(near, 0.0) / u_at(far, 0.0) > 1.5


def test_array_broadcast():
    prof = PotentialProfile(PotentialKind.DRESSED, u0=1.0, scale=12.0, r_perp=0.0)
    z = np.linspace(-24, 24, 9)
    out = u_at(prof, z)
    assert out.shape == z.shape
    np.testing.assert_allclose(out, out[::-1])


def test_effective_potential_small_u_is_real(matched_params):
    d = derive(matched_params)
    v = effective_potential(matched_params, 0.0, d)
    assert v.real == pytest.approx(d.u0, rel=1e-3)
    assert abs(v.imag) < 0.02 * d.u0


def test_effective_potential_saturates(matched_params):
    d = derive(matched_params)
    big = effective_from_u(matched_params, 1e9)
    assert big.imag == pytest.approx(-d.gamma_eit / 2.0, rel=1e-6)


def test_profile_for_override(matched_params):
    prof = profile_for(matched_params, r_perp=3.0, u0=0.0)
    assert prof.u0 == 0.0 and prof.r_perp == 3.0
    assert line_integral(prof, 48.0) == 0.0


def test_negative_u0_rejected():
    with pytest.raises(ParameterDomainError):
        PotentialProfile(PotentialKind.DRESSED, u0=-1.0, scale=12.0, r_perp=0.0)
