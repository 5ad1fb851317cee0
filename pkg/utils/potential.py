# utils/potential.py: dressed / off-diagonal vdW potentials and the effective potential
from __future__ import annotations
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from utils.errors import NumericalError, ParameterDomainError
from utils.logging_setup import get_logger, fields
from utils.params import SystemParams, Derived, PotentialKind, derive

logger = get_logger("potential")

POINTS_PER_SCALE = 40
INFINITE_SPAN = 200.0     # half-width of the "infinite" line, in units of the scale
MAX_REFINEMENTS = 8


class QuadratureError(NumericalError):
    pass


@dataclass(frozen=True)
class PotentialProfile:
    kind: PotentialKind
    u0: float
    scale: float      # R_c (dressed) or d⊥ (vdW)
    r_perp: float     # dressed: distance from the axis; vdW: deviation Δr⊥ from d⊥

    def __post_init__(self):
        if self.u0 < 0:
            raise ParameterDomainError("u0", "must be non-negative", self.u0)
        if not self.scale > 0:
            raise ParameterDomainError("scale", "must be strictly positive", self.scale)
        if self.kind is PotentialKind.VDW and self.scale + self.r_perp <= 0:
            raise ParameterDomainError("r_perp", "places the beam on the control atom", self.r_perp)


def profile_for(params: SystemParams, derived: Optional[Derived] = None,
                r_perp: Optional[float] = None, u0: Optional[float] = None) -> PotentialProfile:
    d = derived or derive(params)
    return PotentialProfile(
        kind=params.potential_kind,
        u0=d.u0 if u0 is None else float(u0),
        scale=d.scale,
        r_perp=params.r_perp if r_perp is None else float(r_perp),
    )


def u_values(kind: PotentialKind, u0: float, scale: float, r_perp, z):
    """Broadcasting core of `u_at`; r_perp and z may both be arrays."""
    z = np.asarray(z, dtype=float)
    r_perp = np.asarray(r_perp, dtype=float)
    if kind is PotentialKind.VDW:
        dist2 = (z ** 2 + (scale + r_perp) ** 2) / scale ** 2
        return u0 / dist2 ** 3
    dist2 = (z ** 2 + r_perp ** 2) / scale ** 2
    return u0 / (1.0 + dist2 ** 3)


def u_at(profile: PotentialProfile, z):
    """U(z) along the beam, z measured from the point of closest approach to the atom."""
    out = u_values(profile.kind, profile.u0, profile.scale, profile.r_perp, z)
    return out if out.ndim else float(out)


def _composite_simpson(fn, lo: float, hi: float, scale: float, rel_tol: float):
    """Simpson on a uniform grid, doubled until two successive levels agree (Richardson check)."""
    n = max(int(np.ceil((hi - lo) / scale * POINTS_PER_SCALE)), 8)
    n += n % 2
    prev = None
    for _ in range(MAX_REFINEMENTS):
        z = np.linspace(lo, hi, n + 1)
        val = simpson(fn(z), x=z)
        if prev is not None:
            err = abs(val - prev) / 15.0
            if err <= rel_tol * max(abs(val), 1e-300) or val == 0:
                return val + (val - prev) / 15.0, err
        prev = val
        n *= 2
    raise QuadratureError(f"composite Simpson did not converge on [{lo:.6g}, {hi:.6g}]")


def line_integral(profile: PotentialProfile, length: Optional[float] = None, rel_tol: float = 1e-10) -> float:
    """∫U dz over the medium [-L/2, L/2] (length given) or over the whole line (length None)."""
    if profile.u0 == 0:
        return 0.0
    half = INFINITE_SPAN * profile.scale if length is None else 0.5 * float(length)
    val, err = _composite_simpson(lambda z: u_at(profile, z), -half, half, profile.scale, rel_tol)
    logger.debug("potential.line_integral " + fields(kind=profile.kind.value, value=val, err=err))
    return float(val)


def effective_from_u(params: SystemParams, u):
    """𝒱 = U / [1 + iγU(Ω↓²+Ω↑²)/(Ω↓²Ω↑²)]."""
    up2, dn2 = params.omega_up ** 2, params.omega_down ** 2
    u = np.asarray(u, dtype=float)
    out = u / (1.0 + 1j * params.gamma * u * (up2 + dn2) / (up2 * dn2))
    return out if out.ndim else complex(out)


def effective_potential(params: SystemParams, z, derived: Optional[Derived] = None,
                        r_perp: Optional[float] = None):
    prof = profile_for(params, derived, r_perp)
    return effective_from_u(params, u_at(prof, z))
