# utils/params.py: physical inputs, derived quantities, feasibility checks
"""
Units used everywhere inside rydex:
    time μs, length μm, angular frequency rad/μs, c = 2.998e8 μm/μs.
Config files quote rates as ν = ω/2π in MHz; `mhz()` converts.

Usage:
    from utils.params import SystemParams, DressingParams, derive
    p = SystemParams(omega_up=mhz(8), omega_down=mhz(8), gamma=mhz(3), od_c=35,
                     dressing=DressingParams(xi_override=0.01, rc=12.0), length_L=48.0)
    d = derive(p)
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field, asdict, replace
from enum import Enum
from typing import Optional

from utils.errors import ParameterDomainError, require_positive, require_non_negative

C_LIGHT = 2.998e8  # μm/μs
TWO_PI = 2.0 * math.pi


def mhz(nu: float) -> float:
    """ν/2π in MHz -> rad/μs."""
    return TWO_PI * float(nu)


def to_mhz(omega: float) -> float:
    return float(omega) / TWO_PI


class PotentialKind(str, Enum):
    DRESSED = "dressed"
    VDW = "vdw"


@dataclass(frozen=True)
class DressingParams:
    omega_dress: Optional[float] = None   # rad/μs
    delta_dress: Optional[float] = None   # rad/μs
    c6: Optional[float] = None            # rad/μs · μm^6
    xi_override: Optional[float] = None
    rc: Optional[float] = None            # μm, required with xi_override
    delta_ratio: float = 10.0             # Δ/Ω, only read for n_max under xi_override

    def __post_init__(self):
        if self.xi_override is not None:
            require_non_negative("dressing.xi_override", self.xi_override)
            if self.rc is None:
                raise ParameterDomainError("dressing.rc", "required when xi_override is set")
            require_positive("dressing.rc", self.rc)
            require_positive("dressing.delta_ratio", self.delta_ratio)
            return
        for name in ("omega_dress", "delta_dress", "c6"):
            value = getattr(self, name)
            if value is None:
                raise ParameterDomainError(f"dressing.{name}", "required unless xi_override is set")
            require_positive(f"dressing.{name}", value)
        if not self.omega_dress < self.delta_dress:
            raise ParameterDomainError("dressing.omega_dress", "must be smaller than delta_dress", self.omega_dress)


@dataclass(frozen=True)
class SystemParams:
    omega_up: float
    omega_down: float
    gamma: float
    od_c: float
    dressing: DressingParams
    length_L: float
    r_perp: float = 0.0
    waist_w: float = 2.0
    lambda0: float = 0.78
    potential_kind: PotentialKind = PotentialKind.DRESSED
    d_perp: Optional[float] = None        # μm, vdW scheme only
    enforce_length: bool = True

    def __post_init__(self):
        for name in ("omega_up", "omega_down", "gamma", "od_c", "length_L", "waist_w", "lambda0"):
            require_positive(name, getattr(self, name))
        require_non_negative("r_perp", self.r_perp)
        kind = PotentialKind(self.potential_kind)
        object.__setattr__(self, "potential_kind", kind)
        if kind is PotentialKind.VDW:
            if self.d_perp is None:
                raise ParameterDomainError("d_perp", "required for the vdW potential")
            require_positive("d_perp", self.d_perp)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["potential_kind"] = self.potential_kind.value
        return out


@dataclass(frozen=True)
class Derived:
    u0: float
    rc: float
    scale: float          # R_c (dressed) or d⊥ (vdW)
    gp2: float
    v_up: float
    v_down: float
    gamma_eit: float
    xi: float
    od: float
    tau: float
    tau_prime: float
    mixing_up: float
    mixing_down: float
    eit_bandwidth: float
    n_max: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FeasibilityReport:
    cond_geometry: bool
    cond_spinwave: float
    cond_control: float
    n_max: float
    rayleigh_range: float = field(default=0.0)

    def as_dict(self) -> dict:
        return asdict(self)


def gamma_eit(omega_up: float, omega_down: float, gamma: float) -> float:
    up2, dn2 = omega_up ** 2, omega_down ** 2
    return 2.0 * up2 * dn2 / ((up2 + dn2) * gamma)


def derive(params: SystemParams) -> Derived:
    d = params.dressing
    g_eit = gamma_eit(params.omega_up, params.omega_down, params.gamma)

    if d.xi_override is not None:
        rc = float(d.rc)
        n_max = d.delta_ratio ** 2
    else:
        rc = (d.c6 / d.delta_dress) ** (1.0 / 6.0)
        n_max = (d.delta_dress / d.omega_dress) ** 2

    if params.potential_kind is PotentialKind.VDW:
        scale = float(params.d_perp)
        u0_free = None if d.c6 is None else d.c6 / scale ** 6
    else:
        scale = rc
        u0_free = None if d.omega_dress is None else d.omega_dress ** 2 / d.delta_dress

    u0 = d.xi_override * g_eit if d.xi_override is not None else u0_free

    if params.enforce_length and params.length_L < 4.0 * scale * (1.0 - 1e-12):
        raise ParameterDomainError("length_L", f"must be at least 4x the potential range {scale:.6g} um",
                                   params.length_L)

    gp2 = params.od_c * params.gamma * C_LIGHT / scale
    v_up = C_LIGHT * params.omega_up ** 2 / gp2
    v_down = C_LIGHT * params.omega_down ** 2 / gp2
    for name, v in (("omega_up", v_up), ("omega_down", v_down)):
        if v > C_LIGHT:
            raise ParameterDomainError(name, "group velocity would exceed c; raise od_c", v)
    od = params.length_L / scale * params.od_c
    gp = math.sqrt(gp2)
    return Derived(
        u0=float(u0),
        rc=rc,
        scale=scale,
        gp2=gp2,
        v_up=v_up,
        v_down=v_down,
        gamma_eit=g_eit,
        xi=float(u0) / g_eit,
        od=od,
        tau=params.length_L / v_up,
        tau_prime=params.length_L / v_down,
        mixing_up=gp / params.omega_up,
        mixing_down=gp / params.omega_down,
        eit_bandwidth=params.omega_up ** 2 / (params.gamma * math.sqrt(od)),
        n_max=float(n_max),
    )


def feasibility(params: SystemParams, gamma_s: float, gamma_c: float, pulse_dt: float) -> FeasibilityReport:
    """Decay and geometry conditions for neglecting Rydberg decay and using the 1D model."""
    require_non_negative("gamma_s", gamma_s)
    require_non_negative("gamma_c", gamma_c)
    require_non_negative("pulse_dt", pulse_dt)
    d = derive(params)
    transit = 4.0 * d.rc / d.v_down
    rayleigh = math.pi * params.waist_w ** 2 / params.lambda0
    return FeasibilityReport(
        cond_geometry=bool(params.waist_w < d.rc < rayleigh),
        cond_spinwave=gamma_s * transit,
        cond_control=gamma_c * (pulse_dt + transit),
        n_max=d.n_max,
        rayleigh_range=rayleigh,
    )
