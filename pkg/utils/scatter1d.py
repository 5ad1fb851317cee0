# utils/scatter1d.py: single-photon spin-exchange scattering through the double-EIT medium
"""
Frequency-domain transport  i∂z (E↓↑, E↑↓)ᵀ = M(z, ω) (E↓↑, E↑↓)ᵀ  obtained by eliminating
the four atomic amplitudes (P↓↑, S↓↑, P↑↓, S↑↓) point by point.

Conventions:
  - fields vary as e^{+iωt};
  - the control atom sits at the centre of the medium, z ∈ [-L/2, L/2];
  - T and R are reported in the co-moving frame: the exact free EIT propagation factor of
    each channel is divided out, so U ≡ 0 gives T = 1, R = 0.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from utils.errors import NumericalError, ParameterDomainError
from utils.logging_setup import get_logger, fields
from utils.params import C_LIGHT, SystemParams, Derived, PotentialKind, derive
from utils.potential import (
    effective_from_u, u_values, profile_for, _composite_simpson,
)

logger = get_logger("scatter1d")

CHUNK = 64


class SingularityError(NumericalError):
    def __init__(self, z: float, omega: float):
        self.z, self.omega = z, omega
        super().__init__(f"singular atomic elimination at z={z:.6g} um, omega={omega:.6g} rad/us")


class IntegrationError(NumericalError):
    pass


class BandCoverageError(NumericalError):
    """Input weight sits outside the frequency band the solver is trusted on."""


@dataclass(frozen=True)
class ScatterCoeffs:
    t_coeff: complex
    r_coeff: complex

    @property
    def loss(self) -> float:
        return 1.0 - abs(self.t_coeff) ** 2 - abs(self.r_coeff) ** 2

    @property
    def t2(self) -> float:
        return abs(self.t_coeff) ** 2

    @property
    def r2(self) -> float:
        return abs(self.r_coeff) ** 2

    @property
    def survival(self) -> float:
        return self.t2 + self.r2

    def row(self) -> dict:
        return {
            "T_re": self.t_coeff.real, "T_im": self.t_coeff.imag,
            "R_re": self.r_coeff.real, "R_im": self.r_coeff.imag,
            "loss": self.loss, "|T|2": self.t2, "|R|2": self.r2,
        }


@dataclass(frozen=True)
class Spectrum:
    omega_grid: np.ndarray
    coeffs: List[ScatterCoeffs]

    @property
    def t(self) -> np.ndarray:
        return np.array([c.t_coeff for c in self.coeffs])

    @property
    def r(self) -> np.ndarray:
        return np.array([c.r_coeff for c in self.coeffs])


@dataclass(frozen=True)
class SusceptibilityBlock:
    chi_down: complex
    chi_up: complex
    kappa: complex


@dataclass(frozen=True)
class PhiResult:
    exact: complex
    approx: complex


@dataclass(frozen=True)
class ScatterSettings:
    dz_over_scale: float = 1.0 / 200.0
    self_check: bool = False
    self_check_tol: float = 1e-8
    band_fraction: float = 0.9
    min_dz_over_scale: float = 1e-7

    def __post_init__(self):
        if not self.dz_over_scale > 0:
            raise ParameterDomainError("dz_over_scale", "must be strictly positive", self.dz_over_scale)


def band_limit(params: SystemParams, derived: Optional[Derived] = None, fraction: float = 0.9) -> float:
    """fraction × the narrower EIT transparency half-width Ω_min²/(γ√OD)."""
    d = derived or derive(params)
    omega_min = min(params.omega_up, params.omega_down)
    return fraction * omega_min ** 2 / (params.gamma * math.sqrt(d.od))


def free_wavenumbers(params: SystemParams, derived: Derived, omega):
    """Exact U=0 wavenumbers k_μ(ω) with i∂z E_μ = k_μ E_μ."""
    omega = np.asarray(omega, dtype=complex)
    out = []
    for om in (params.omega_down, params.omega_up):
        det = (omega - 1j * params.gamma) * omega - om ** 2
        out.append(omega / C_LIGHT - derived.gp2 / C_LIGHT * omega / det)
    return out[0], out[1]


def _lab_matrices(params: SystemParams, derived: Derived, u: np.ndarray, omega: float,
                  z: np.ndarray, fast: bool = False) -> np.ndarray:
    """M(z, ω) for every entry of u (any shape) -> array u.shape + (2, 2)."""
    m = np.empty(u.shape + (2, 2), dtype=complex)
    if fast and omega == 0.0:
        v = effective_from_u(params, u)
        m[..., 0, 0] = v / derived.v_down
        m[..., 1, 1] = v / derived.v_up
        m[..., 0, 1] = m[..., 1, 0] = v / math.sqrt(derived.v_up * derived.v_down)
        return m

    a = np.zeros(u.shape + (4, 4), dtype=complex)
    diag_p = -1j * params.gamma + omega
    a[..., 0, 0] = diag_p
    a[..., 0, 1] = a[..., 1, 0] = params.omega_down
    a[..., 1, 1] = u + omega
    a[..., 1, 3] = a[..., 3, 1] = u
    a[..., 2, 2] = diag_p
    a[..., 2, 3] = a[..., 3, 2] = params.omega_up
    a[..., 3, 3] = u + omega
    rhs = np.zeros(u.shape + (4, 2), dtype=complex)
    rhs[..., 0, 0] = 1.0
    rhs[..., 2, 1] = 1.0
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        det = np.abs(np.linalg.det(a)).reshape(-1)
        idx = int(np.argmin(det))
        zz = np.broadcast_to(z, u.shape).reshape(-1)[idx]
        raise SingularityError(float(zz), float(omega)) from None
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x[..., 0, 0]).reshape(-1))
        zz = np.broadcast_to(z, u.shape).reshape(-1)[int(bad[0, 0])]
        raise SingularityError(float(zz), float(omega))
    g = x[..., [0, 2], :]
    m[...] = -derived.gp2 / C_LIGHT * g
    m[..., 0, 0] += omega / C_LIGHT
    m[..., 1, 1] += omega / C_LIGHT
    return m


def susceptibility(params: SystemParams, z: float, omega: float, derived: Optional[Derived] = None,
                   r_perp: Optional[float] = None) -> SusceptibilityBlock:
    d = derived or derive(params)
    prof = profile_for(params, d, r_perp)
    u = np.asarray(u_values(prof.kind, prof.u0, prof.scale, prof.r_perp, z), dtype=float)
    m = _lab_matrices(params, d, u.reshape(1), float(omega), np.asarray([z]))[0]
    return SusceptibilityBlock(chi_down=complex(m[0, 0]), chi_up=complex(m[1, 1]), kappa=complex(m[0, 1]))


def _half_grid(params: SystemParams, derived: Derived, settings: ScatterSettings):
    dz_target = settings.dz_over_scale * derived.scale
    if dz_target < settings.min_dz_over_scale * derived.scale:
        raise IntegrationError(f"step size {dz_target:.3g} um underflows the integrator")
    n = max(int(math.ceil(params.length_L / dz_target)), 4)
    dz = params.length_L / n
    z_half = -0.5 * params.length_L + 0.5 * dz * np.arange(2 * n + 1)
    return n, dz, z_half


def _rk4(m_half: np.ndarray, dz: float) -> np.ndarray:
    """Integrate dy/dz = -i M y from y=(1,0); m_half holds M on the half-step grid, shape (B, 2n+1, 2, 2)."""
    batch, nh = m_half.shape[:2]
    y = np.zeros((batch, 2), dtype=complex)
    y[:, 0] = 1.0

    def f(mat, vec):
        return -1j * np.einsum("bij,bj->bi", mat, vec)

    for k in range(0, nh - 1, 2):
        m0, m1, m2 = m_half[:, k], m_half[:, k + 1], m_half[:, k + 2]
        k1 = f(m0, y)
        k2 = f(m1, y + 0.5 * dz * k1)
        k3 = f(m1, y + 0.5 * dz * k2)
        k4 = f(m2, y + dz * k3)
        y = y + dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _comoving(params: SystemParams, derived: Derived, m: np.ndarray, z_half: np.ndarray, omega: float) -> np.ndarray:
    k_dn, k_up = free_wavenumbers(params, derived, omega)
    s = z_half - z_half[0]
    phase = np.exp(1j * (k_dn - k_up) * s)
    out = m.copy()
    out[..., 0, 0] -= k_dn
    out[..., 1, 1] -= k_up
    out[..., 0, 1] *= phase
    out[..., 1, 0] /= phase
    return out


def _transverse_offsets(params: SystemParams, r_perp) -> np.ndarray:
    return np.atleast_1d(np.asarray(params.r_perp if r_perp is None else r_perp, dtype=float))


def _solve_batch(params: SystemParams, derived: Derived, omegas: Sequence[float], r_perps: Sequence[float],
                 settings: ScatterSettings, fast: bool = False, dz_scale: float = 1.0):
    """T, R for paired (ω_i, r⊥_i); the z grid is shared, points are processed in chunks."""
    omegas = np.asarray(omegas, dtype=float)
    r_perps = np.asarray(r_perps, dtype=float)
    n, dz, z_half = _half_grid(params, derived, _scaled(settings, dz_scale))
    t_out = np.empty(omegas.size, dtype=complex)
    r_out = np.empty(omegas.size, dtype=complex)
    kind, scale = params.potential_kind, derived.scale
    for start in range(0, omegas.size, CHUNK):
        sl = slice(start, start + CHUNK)
        om_chunk, rp_chunk = omegas[sl], r_perps[sl]
        u = u_values(kind, derived.u0, scale, rp_chunk[:, None], z_half[None, :])
        if np.all(om_chunk == om_chunk[0]):
            m = _lab_matrices(params, derived, u, float(om_chunk[0]), z_half, fast=fast)
            m = _comoving(params, derived, m, z_half, float(om_chunk[0]))
        else:
            m = np.empty(u.shape + (2, 2), dtype=complex)
            for i, om in enumerate(om_chunk):
                mi = _lab_matrices(params, derived, u[i], float(om), z_half, fast=fast)
                m[i] = _comoving(params, derived, mi, z_half, float(om))
        y = _rk4(m, dz)
        t_out[sl], r_out[sl] = y[:, 0], y[:, 1]
    if not (np.all(np.isfinite(t_out)) and np.all(np.isfinite(r_out))):
        raise IntegrationError("non-finite amplitude after integration")
    return t_out, r_out


def _scaled(settings: ScatterSettings, factor: float) -> ScatterSettings:
    if factor == 1.0:
        return settings
    return ScatterSettings(dz_over_scale=settings.dz_over_scale * factor, self_check=False,
                           band_fraction=settings.band_fraction,
                           min_dz_over_scale=settings.min_dz_over_scale)


def _guard(params: SystemParams, derived: Derived, omegas, settings: ScatterSettings) -> np.ndarray:
    limit = band_limit(params, derived, settings.band_fraction)
    inside = np.abs(np.asarray(omegas, dtype=float)) <= limit
    if not np.all(inside):
        logger.warning("scatter.band_guard " + fields(outside=int(np.sum(~inside)), limit=limit))
    return inside


def _self_check(params, derived, omegas, r_perps, settings, t, r, fast=False):
    t2, r2 = _solve_batch(params, derived, omegas, r_perps, settings, fast=fast, dz_scale=0.5)
    dev = float(max(np.max(np.abs(t2 - t)), np.max(np.abs(r2 - r))))
    logger.info("scatter.self_check " + fields(max_change=dev))
    if dev > settings.self_check_tol:
        raise IntegrationError(f"halving dz changed the coefficients by {dev:.3g}")


def _passivity(t: np.ndarray, r: np.ndarray):
    excess = np.abs(t) ** 2 + np.abs(r) ** 2 - 1.0
    if np.any(excess > 1e-9):
        logger.warning("scatter.passivity " + fields(max_excess=float(np.max(excess))))


def solve_scattering(params: SystemParams, omega: float = 0.0, r_perp: Optional[float] = None,
                     settings: Optional[ScatterSettings] = None, derived: Optional[Derived] = None) -> ScatterCoeffs:
    settings = settings or ScatterSettings()
    d = derived or derive(params)
    om = np.array([float(omega)])
    rp = _transverse_offsets(params, r_perp)
    _guard(params, d, om, settings)
    t, r = _solve_batch(params, d, om, rp, settings)
    if settings.self_check:
        _self_check(params, d, om, rp, settings, t, r)
    _passivity(t, r)
    return ScatterCoeffs(complex(t[0]), complex(r[0]))


def solve_many(params: SystemParams, omegas, r_perp: Optional[float] = None,
               settings: Optional[ScatterSettings] = None, derived: Optional[Derived] = None):
    """Vectorized solve over an ω array at one transverse offset; returns (T, R) arrays."""
    settings = settings or ScatterSettings()
    d = derived or derive(params)
    omegas = np.asarray(omegas, dtype=float)
    rp = np.full(omegas.size, float(_transverse_offsets(params, r_perp)[0]))
    t, r = _solve_batch(params, d, omegas, rp, settings)
    if settings.self_check:
        _self_check(params, d, omegas, rp, settings, t, r)
    _passivity(t, r)
    return t, r


def closed_form_phi(params: SystemParams, derived: Optional[Derived] = None) -> complex:
    d = derived or derive(params)
    if params.potential_kind is PotentialKind.VDW:
        return (3.0 * math.pi / 8.0) * d.xi * (1.0 - 1j * (21.0 / 32.0) * d.xi) * params.od_c
    return (2.0 * math.pi / 3.0) * d.xi * (1.0 - 1j * (5.0 / 3.0) * d.xi) * params.od_c


def phi_integral(params: SystemParams, r_perp: Optional[float] = None, derived: Optional[Derived] = None,
                 rel_tol: float = 1e-10) -> PhiResult:
    """φ = (v↑+v↓)∫𝒱dz / (2v↑v↓) over the medium, with the closed-form approximation alongside."""
    d = derived or derive(params)
    prof = profile_for(params, d, r_perp)
    pref = (d.v_up + d.v_down) / (2.0 * d.v_up * d.v_down)
    if prof.u0 == 0:
        exact = 0j
    else:
        def integrand(z):
            return effective_from_u(params, u_values(prof.kind, prof.u0, prof.scale, prof.r_perp, z))

        half = 0.5 * params.length_L
        val, _ = _composite_simpson(integrand, -half, half, prof.scale, rel_tol)
        exact = complex(pref * val)
    return PhiResult(exact=exact, approx=complex(closed_form_phi(params, d)))


def coeffs_from_phi(phi: complex, omega_up: float, omega_down: float) -> ScatterCoeffs:
    up2, dn2 = omega_up ** 2, omega_down ** 2
    e = np.exp(-2j * phi)
    t = (up2 * e + dn2) / (dn2 + up2)
    r = omega_up * omega_down * (e - 1.0) / (dn2 + up2)
    return ScatterCoeffs(complex(t), complex(r))


def analytic_coeffs(params: SystemParams, r_perp: Optional[float] = None,
                    derived: Optional[Derived] = None) -> ScatterCoeffs:
    phi = phi_integral(params, r_perp, derived).exact
    return coeffs_from_phi(phi, params.omega_up, params.omega_down)


def spectrum(params: SystemParams, omega_grid, r_perp: Optional[float] = None,
             settings: Optional[ScatterSettings] = None, derived: Optional[Derived] = None) -> Spectrum:
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ParameterDomainError("omega_grid", "must be a strictly increasing 1D grid")
    settings = settings or ScatterSettings()
    d = derived or derive(params)
    _guard(params, d, grid, settings)
    t, r = solve_many(params, grid, r_perp, settings, d)
    return Spectrum(omega_grid=grid, coeffs=[ScatterCoeffs(complex(a), complex(b)) for a, b in zip(t, r)])


def free_transmission(params: SystemParams, omega_grid, derived: Optional[Derived] = None):
    """Non-interacting EIT transmission |exp(-i k_μ L)|² for (↓, ↑)."""
    d = derived or derive(params)
    k_dn, k_up = free_wavenumbers(params, d, np.asarray(omega_grid, dtype=float))
    return (np.abs(np.exp(-1j * k_dn * params.length_L)) ** 2,
            np.abs(np.exp(-1j * k_up * params.length_L)) ** 2)


@dataclass(frozen=True)
class BeamQuadrature:
    rings: int = 64
    angles: int = 32
    extent: float = 5.3     # ρ_max in units of sqrt(w); |u|² = e^{-28} there


def _beam_points(params: SystemParams, derived: Derived, quad: BeamQuadrature):
    """Polar nodes centred on the beam axis -> (offset passed to the potential, weight)."""
    rho_max = quad.extent * math.sqrt(params.waist_w)
    d_rho = rho_max / quad.rings
    rho = (np.arange(quad.rings) + 0.5) * d_rho
    theta = 2.0 * math.pi * (np.arange(quad.angles) + 0.5) / quad.angles
    rr, tt = np.meshgrid(rho, theta, indexing="ij")
    weight = rr * np.exp(-rr ** 2 / params.waist_w)
    if params.potential_kind is PotentialKind.VDW:
        centre = derived.scale + params.r_perp
    else:
        centre = params.r_perp
    dist = np.sqrt((centre + rr * np.cos(tt)) ** 2 + (rr * np.sin(tt)) ** 2)
    offset = dist - derived.scale if params.potential_kind is PotentialKind.VDW else dist
    return offset.reshape(-1), weight.reshape(-1)


def beam_average(params: SystemParams, omega: float = 0.0, settings: Optional[ScatterSettings] = None,
                 derived: Optional[Derived] = None, quad: Optional[BeamQuadrature] = None) -> ScatterCoeffs:
    """Overlap-weighted T, R of a Gaussian beam, each transverse point scattering independently."""
    settings = settings or ScatterSettings()
    quad = quad or BeamQuadrature()
    d = derived or derive(params)
    offsets, weights = _beam_points(params, d, quad)
    om = np.full(offsets.size, float(omega))
    _guard(params, d, om[:1], settings)
    t, r = _solve_batch(params, d, om, offsets, settings, fast=True)
    if not np.all(np.isfinite(weights)) or weights.sum() <= 0:
        raise NumericalError("transverse quadrature weights degenerate")
    norm = weights.sum()
    return ScatterCoeffs(complex(np.dot(weights, t) / norm), complex(np.dot(weights, r) / norm))
