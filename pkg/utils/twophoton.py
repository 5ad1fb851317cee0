# utils/twophoton.py: brute-force two-photon DSP dynamics and the extracted photon's density matrix
"""
Two ↓ photons in the same pulse meet a control atom prepared in ↑. The state space holds
    a = Ψ↑↓↓(z1, z2)   photon at z1 flipped, atom ↓
    b = Ψ↓↑↓(z1, z2)   photon at z2 flipped, atom ↓
    c = Ψ↓↓↑(z1, z2)   nothing flipped, atom ↑
on the interior grid [0, L]², with norm ½∫∫(|a|²+|b|²+|c|²). Two up-photons never appear.

Photons outside the grid are handled with boundaries only:
  - while one photon is inside and the other still waiting, the inside one follows a
    single-photon run, and the waiting one enters through the z=0 faces;
  - once one photon has left, the other continues in a per-exit-time-bin field
    (free ↓ propagation if the atom is ↓, the two-channel DSP line otherwise);
  - a photon that crossed the whole medium before its partner arrived feeds the same
    per-bin fields through their entrance.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from utils.errors import ConfigError, ParameterDomainError, require_positive
from utils.logging_setup import get_logger, fields, context
from utils.params import DressingParams, SystemParams, Derived, derive
from utils.potential import line_integral, profile_for
from utils.scatter1d import coeffs_from_phi
from utils.subtractor import PhotonDensityMatrix, fock_efficiency, fock_purity
from utils.timedomain import (
    DSPLine, PulseShape, check_cfl, exchange, medium_cells, rotation_factor, upwind,
)

logger = get_logger("twophoton")

MIN_CELLS = 200
MAX_BYTES = 2e9


class GridMemoryError(ConfigError):
    pass


@dataclass(frozen=True)
class GridSpec:
    cells: int = MIN_CELLS
    bins: int = 160
    cfl: float = 0.9
    window: float = 4.5            # pulse widths simulated before and after the centre
    literal_s32: bool = False      # drop the z1 advection of Ψ↓↑↓ (literal form)
    max_bytes: float = MAX_BYTES

    def __post_init__(self):
        if self.cells < MIN_CELLS:
            raise ParameterDomainError("cells", f"two-photon grid needs at least {MIN_CELLS} cells", self.cells)
        if self.bins < 2:
            raise ParameterDomainError("bins", "need at least 2 exit-time bins", self.bins)
        check_cfl(self.cfl)

    def footprint(self) -> float:
        n, b = self.cells, self.bins
        return 16.0 * (3 * n * n + 6 * b * n + 4 * b * b)


@dataclass
class TwoPhotonState:
    z: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    bins: np.ndarray               # exit-time bin centres, μs
    bin_width: float
    e_up: np.ndarray               # [↑ exit bin, ↓ exit bin], |e|² = probability
    e_dd: np.ndarray               # symmetric ↓↓ amplitude on bins, |e|² = probability
    flux_up: float                 # spin-up output counted at the moment the ↑ photon leaves
    norm_error: float              # worst miss of in-medium + emitted = injected over the run
    n_eff: float
    spec: GridSpec = field(default_factory=GridSpec)

    @property
    def p_up(self) -> float:
        return float(np.sum(np.abs(self.e_up) ** 2))

    @property
    def p_dd(self) -> float:
        return float(np.sum(np.abs(self.e_dd) ** 2))

    def dd_symmetric(self) -> np.ndarray:
        """Symmetric ↓↓ wavefunction on bins, Σ|Φ|² = p_dd."""
        return self.e_dd

    def interior_norm(self) -> float:
        dz = self.z[1] - self.z[0]
        return float(0.5 * np.sum(np.abs(self.a) ** 2 + np.abs(self.b) ** 2 + np.abs(self.c) ** 2) * dz * dz)


def n_eff_of(params: SystemParams, pulse: PulseShape, derived: Optional[Derived] = None, photons: int = 2) -> float:
    d = derived or derive(params)
    return photons * d.scale / (d.v_down * pulse.dt)


def pulse_for_density(params: SystemParams, n_eff: float = 0.1, derived: Optional[Derived] = None,
                      photons: int = 2) -> PulseShape:
    """Pulse with n R_c / (v↓ Δt) = n_eff."""
    require_positive("n_eff", n_eff)
    d = derived or derive(params)
    return PulseShape(dt=photons * d.scale / (d.v_down * n_eff))


def phase_matched_params(base: SystemParams, r2: float, theta: float = 0.0) -> SystemParams:
    """Rates and a real exchange phase of π/2 that give |R|² = r2 with real T.

    theta=0: Ω↑²/Ω↓² = (1-T)/(1+T), T = +√(1-r2), the ↑ polariton slower.
    theta=π: Ω↑²/Ω↓² = (1+|T|)/(1-|T|), T = -√(1-r2), the ↑ polariton faster.
    """
    if not 0.0 < r2 <= 1.0:
        raise ParameterDomainError("r2", "target |R|^2 must lie in (0, 1]", r2)
    if theta == 0.0:
        sign = 1.0
    elif abs(theta - math.pi) < 1e-12:
        sign = -1.0
    else:
        raise ParameterDomainError("theta", "phase of T must be 0 or π", theta)
    t = math.sqrt(1.0 - r2)
    ratio = (1.0 - sign * t) / (1.0 + sign * t)
    rc = derive(base).rc
    trial = base.with_(omega_up=base.omega_down * math.sqrt(ratio),
                       dressing=DressingParams(xi_override=1.0, rc=rc, delta_ratio=base.dressing.delta_ratio))
    d = derive(trial)
    unit = line_integral(profile_for(trial, d, u0=1.0), trial.length_L)
    pref = (d.v_up + d.v_down) / (2.0 * d.v_up * d.v_down)
    u0 = 0.5 * math.pi / (pref * unit)
    xi = u0 / d.gamma_eit
    logger.info("twophoton.phase_match " + fields(r2=r2, theta=theta, ratio=ratio, xi=xi))
    return trial.with_(dressing=DressingParams(xi_override=xi, rc=rc, delta_ratio=base.dressing.delta_ratio))


def evolve_two_photon(params: SystemParams, pulse: PulseShape, spec: Optional[GridSpec] = None,
                      derived: Optional[Derived] = None) -> TwoPhotonState:
    spec = spec or GridSpec()
    if spec.footprint() > spec.max_bytes:
        raise GridMemoryError(f"grid needs {spec.footprint() / 1e9:.2f} GB, cap is {spec.max_bytes / 1e9:.2f} GB")
    d = derived or derive(params)
    z, dz, u = medium_cells(params, d, spec.cells)
    v_dn, v_up = d.v_down, d.v_up
    dt = spec.cfl * dz / max(v_dn, v_up)
    c_dn, c_up = v_dn * dt / dz, v_up * dt / dz
    g = rotation_factor(u, dt)
    g1, g2 = g[:, None], g[None, :]

    # every bin spans the same whole number of steps
    t_start = pulse.t0 - spec.window * pulse.dt
    t_stop = pulse.t0 + spec.window * pulse.dt + params.length_L / v_up + params.length_L / v_dn
    nb, n = spec.bins, spec.cells
    per_bin = int(math.ceil((t_stop - t_start) / (dt * nb)))
    n_steps = per_bin * nb
    width = per_bin * dt
    s = dt / math.sqrt(width)
    root2 = math.sqrt(2.0)
    sv_dn, sv_up = math.sqrt(v_dn), math.sqrt(v_up)
    sv = np.array([sv_dn, sv_up])
    half = 0.5 * dz * dt

    a = np.zeros((n, n), dtype=complex)
    b = np.zeros_like(a)
    c = np.zeros_like(a)
    line = DSPLine(u, dz, v_dn, v_up, dt)
    first_1d = np.zeros((2, nb), dtype=complex)      # photon crossed alone: (↓ atom ↑, ↑ atom ↓)
    f_a = np.zeros((nb, n), dtype=complex)           # ↑ left first, remaining ↓ with atom ↓
    f_b = np.zeros_like(f_a)
    g_z1 = np.zeros((nb, 2, n), dtype=complex)       # ↓ left through z1, remaining photon with the DSP line
    g_z2 = np.zeros_like(g_z1)
    e_a = np.zeros((nb, nb), dtype=complex)
    e_b = np.zeros_like(e_a)
    r_z1 = np.zeros_like(e_a)
    r_z2 = np.zeros_like(e_a)
    flux_a = flux_b = alone_up = 0.0
    line_in = line_out = inner_in = inner_out = 0.0
    worst = 0.0

    logger.info("twophoton.grid " + fields(cells=n, bins=nb, steps=n_steps, per_bin=per_bin, cfl_down=c_dn,
                                          cfl_up=c_up, literal_s32=spec.literal_s32))
    report_every = max(n_steps // 10, 1)
    check_every = max(n_steps // 400, 1)
    with context(logger, "twophoton.evolve", steps=n_steps):
        for step in range(n_steps):
            t = t_start + step * dt
            k, m = divmod(step, per_bin)
            hi = k + 1                                    # later bins are still empty
            h = float(pulse.amplitude(t))
            amp = root2 * h / sv_dn
            psi0, psi1 = line.psi[0].copy(), line.psi[1].copy()
            ghost_f = amp * first_1d[1, :hi]
            ghost_g = amp * first_1d[0, :hi]

            in0, in1 = amp * psi0, amp * psi1
            a_z1 = upwind(a, 0.0, c_up, axis=0) * sv_up
            b_z1 = upwind(b, in1, c_dn, axis=0) * sv_dn if not spec.literal_s32 else np.zeros(n, dtype=complex)
            c_z1 = upwind(c, in0, c_dn, axis=0) * sv_dn
            a_z2 = upwind(a, in1, c_dn, axis=1) * sv_dn
            b_z2 = upwind(b, 0.0, c_up, axis=1) * sv_up
            c_z2 = upwind(c, in0, c_dn, axis=1) * sv_dn
            exchange(a, c, g1)
            exchange(b, c, g2)
            feeds = (1.0 if spec.literal_s32 else 2.0) * np.sum(np.abs(in1) ** 2) + 2.0 * np.sum(np.abs(in0) ** 2)
            inner_in += half * v_dn * float(feeds)
            inner_out += half * float(sum(np.sum(np.abs(x) ** 2) for x in (a_z1, b_z1, c_z1, a_z2, b_z2, c_z2)))

            one_d = line.step(h / sv_dn) * sv
            line_in += h * h * dt
            line_out += float(np.sum(np.abs(one_d) ** 2)) * dt
            alone_up += 2.0 * abs(one_d[1]) ** 2 * (1.0 - float(pulse.cumulative(t))) * dt

            f_out_a = upwind(f_a[:hi], ghost_f, c_dn) * sv_dn
            f_out_b = upwind(f_b[:hi], ghost_f, c_dn) * sv_dn
            g_out = []
            for g_arr in (g_z1, g_z2):
                out_dn = upwind(g_arr[:hi, 0, :], ghost_g, c_dn) * sv_dn
                out_up = upwind(g_arr[:hi, 1, :], 0.0, c_up) * sv_up
                exchange(g_arr[:hi, 0, :], g_arr[:hi, 1, :], g[None, :])
                g_out.append((out_dn, out_up))
            (g1_dn, g1_up), (g2_dn, g2_up) = g_out

            f_a[k] += a_z1 * s
            f_b[k] += b_z2 * s
            g_z1[k, 1] += b_z1 * s
            g_z1[k, 0] += c_z1 * s
            g_z2[k, 1] += a_z2 * s
            g_z2[k, 0] += c_z2 * s
            first_1d[:, k] += one_d * s

            e_a[:hi, k] += f_out_a * s
            e_b[:hi, k] += f_out_b * s
            e_a[k, :hi] += g2_up * s
            e_b[k, :hi] += g1_up * s
            r_z1[:hi, k] += g1_dn * s
            r_z2[:hi, k] += g2_dn * s

            # the open bin holds m of its per_bin first exits coherently; rescale its flux to the incoherent sum
            ramp = np.ones(hi)
            ramp[k] = per_bin / m if m else 0.0
            flux_a += (float(np.sum(np.abs(a_z1) ** 2)) * dz + float(np.sum(ramp * np.abs(g2_up) ** 2))) * dt
            flux_b += (float(np.sum(np.abs(b_z2) ** 2)) * dz + float(np.sum(ramp * np.abs(g1_up) ** 2))) * dt

            if step % check_every == 0 or step == n_steps - 1:
                inner = 0.5 * float(np.sum(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2)) * dz * dz
                miss = abs(inner + inner_out - inner_in) + abs(line.norm() + line_out - line_in)
                worst = max(worst, miss)
                if step % report_every == 0:
                    logger.debug("twophoton.step " + fields(step=step, t=t, interior=inner, ledger=miss))

    e_up = 0.5 * (e_a + e_b)
    # labelled ↓↓ amplitude over (z1 exit, z2 exit); the two orderings share the diagonal bins
    w_dd = r_z1 + r_z2.T
    e_dd = (w_dd + w_dd.T) / (2.0 * root2)
    flux_up = 0.5 * (flux_a + flux_b) + alone_up
    p_up = float(np.sum(np.abs(e_up) ** 2))
    p_dd = float(np.sum(np.abs(e_dd) ** 2))
    bins = t_start + width * (np.arange(nb) + 0.5)
    logger.info("twophoton.done " + fields(p_up=p_up, p_dd=p_dd, flux_up=flux_up, norm_error=worst,
                                          binning_loss=1.0 - p_up - p_dd))
    return TwoPhotonState(z=z + 0.5 * params.length_L, a=a, b=b, c=c, bins=bins, bin_width=width,
                          e_up=e_up, e_dd=e_dd, flux_up=flux_up, norm_error=worst,
                          n_eff=n_eff_of(params, pulse, d), spec=spec)


def reduce_density_matrix(state: TwoPhotonState) -> PhotonDensityMatrix:
    """ρ(x, y) = Σ_z E(x, z) E*(y, z) over the ↓ photon's exit time z."""
    rho = state.e_up @ state.e_up.conj().T / state.bin_width
    rho = 0.5 * (rho + rho.conj().T)
    weights = np.full(state.bins.size, state.bin_width)
    return PhotonDensityMatrix(state.bins, weights, rho)


def real_phase(params: SystemParams, derived: Optional[Derived] = None) -> float:
    """(v↑+v↓)∫U dz / (2v↑v↓), the exchange phase of the lossless DSP model."""
    d = derived or derive(params)
    unit = line_integral(profile_for(params, d), params.length_L)
    return (d.v_up + d.v_down) * unit / (2.0 * d.v_up * d.v_down)


def analytic_reference(params: SystemParams, derived: Optional[Derived] = None):
    """(η, 𝒫) for n = 2 from the steady-state T of the same lossless model."""
    t = coeffs_from_phi(real_phase(params, derived), params.omega_up, params.omega_down).t_coeff
    if abs(t.imag) < 1e-9:
        t = complex(t.real, 0.0)
    return fock_efficiency(2, t), fock_purity(2, t)
