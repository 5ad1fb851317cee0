import os, sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from utils.params import DressingParams, SystemParams, PotentialKind, mhz  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: two-photon grid runs (minutes)")


def make_params(omega_up=8.0, omega_down=8.0, gamma=3.0, od_c=35.0, xi=0.01, rc=12.0,
                length_over_scale=4.0, r_perp=0.0, waist=2.0, kind="dressed", d_perp=None, **kw):
    """SystemParams from MHz / μm numbers, dressing given through ξ."""
    kind = PotentialKind(kind)
    scale = d_perp if kind is PotentialKind.VDW else rc
    return SystemParams(
        omega_up=mhz(omega_up), omega_down=mhz(omega_down), gamma=mhz(gamma), od_c=od_c,
        dressing=DressingParams(xi_override=xi, rc=rc),
        length_L=length_over_scale * scale, r_perp=r_perp, waist_w=waist,
        potential_kind=kind, d_perp=d_perp, **kw)


@pytest.fixture
def matched_params():
    return make_params()


@pytest.fixture
def mismatched_params():
    return make_params(omega_down=16.0)
