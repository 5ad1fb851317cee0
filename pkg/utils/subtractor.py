# utils/subtractor.py: extracted-photon density matrices, efficiency, purity and the η = 𝒫 trade-off
"""
One control atom scatters an n-photon pulse (Fock) or a coherent pulse |α⟩. The spin-flipped
photon is the extracted one; each remaining photon picks up T if it passes after the flip.

    from utils.subtractor import SubtractorInput, fock_density_matrix
    rho = fock_density_matrix(SubtractorInput.fock(2, t_coeff=0.6, pulse=PulseShape(dt=1.0)))
    rho.trace(), rho.purity()
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import bisect
from scipy.stats import poisson

from utils.errors import NumericalError, ParameterDomainError, require_positive
from utils.logging_setup import get_logger, fields
from utils.scatter1d import ScatterCoeffs
from utils.timedomain import PulseShape, PulseNormalizationError

logger = get_logger("subtractor")

GRID_POINTS = 2001
GRID_HALF_WIDTH = 6.0       # in units of Δt
NORM_TOL = 1e-6


class PurityDomainError(NumericalError):
    pass


class RootNotBracketedError(NumericalError):
    pass


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x, dtype=float)
    dx = np.diff(x)
    w[0], w[-1] = 0.5 * dx[0], 0.5 * dx[-1]
    w[1:-1] = 0.5 * (dx[:-1] + dx[1:])
    return w


@dataclass
class PhotonDensityMatrix:
    x: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    richardson: bool = False   # uniform odd grid: combine with the every-other-point grid

    def _trace_on(self, idx, weights) -> float:
        return float(np.real(np.sum(weights * np.diag(self.rho)[idx])))

    def _square_on(self, idx, weights) -> float:
        sub = self.rho[np.ix_(idx, idx)]
        return float(np.einsum("i,ij,j->", weights, np.abs(sub) ** 2, weights))

    def _extrapolate(self, fn) -> float:
        fine_idx = np.arange(self.x.size)
        fine = fn(fine_idx, self.weights)
        if not self.richardson or self.x.size < 5 or self.x.size % 2 == 0:
            return fine
        coarse_idx = fine_idx[::2]
        coarse = fn(coarse_idx, trapezoid_weights(self.x[coarse_idx]))
        return (4.0 * fine - coarse) / 3.0

    def trace(self) -> float:
        return self._extrapolate(self._trace_on)

    def trace_square(self) -> float:
        return self._extrapolate(self._square_on)

    def purity(self) -> float:
        tr = self.trace()
        if tr <= 0:
            raise PurityDomainError("empty density matrix: purity undefined")
        return self.trace_square() / tr ** 2

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the quadrature-weighted operator W^½ ρ W^½."""
        s = np.sqrt(self.weights)
        op = s[:, None] * self.rho * s[None, :]
        return float(np.linalg.eigvalsh(0.5 * (op + op.conj().T))[0])

    def normalized(self) -> np.ndarray:
        """|ρ(x,y)|/η for display."""
        tr = self.trace()
        return np.abs(self.rho) / tr if tr > 0 else np.zeros_like(self.rho, dtype=float)

    def frame(self) -> pd.DataFrame:
        xx, yy = np.meshgrid(self.x, self.x, indexing="ij")
        return pd.DataFrame({
            "x_us": xx.ravel(), "y_us": yy.ravel(),
            "rho_re": self.rho.real.ravel(), "rho_im": self.rho.imag.ravel(),
        })


@dataclass(frozen=True)
class SubtractorInput:
    statistics: str             # "fock" | "coherent"
    t_coeff: complex
    r_coeff: complex
    pulse: PulseShape
    n: int = 1
    alpha2: float = 0.0
    grid_points: int = GRID_POINTS
    half_width: float = GRID_HALF_WIDTH

    def __post_init__(self):
        if self.statistics not in ("fock", "coherent"):
            raise ParameterDomainError("statistics", f"unknown photon statistics {self.statistics!r}")
        if abs(self.t_coeff) ** 2 + abs(self.r_coeff) ** 2 > 1.0 + 1e-12:
            raise ParameterDomainError("t_coeff", "|T|^2 + |R|^2 exceeds 1", abs(self.t_coeff))
        if self.statistics == "fock" and int(self.n) < 1:
            raise ParameterDomainError("n", "photon number must be at least 1", self.n)
        if self.statistics == "coherent":
            require_positive("alpha2", self.alpha2)
        if self.half_width < 5.0:
            raise ParameterDomainError("half_width", "grid must cover at least 5 pulse widths", self.half_width)

    @classmethod
    def fock(cls, n: int, t_coeff: complex, pulse: PulseShape, r_coeff: Optional[complex] = None, **kw):
        r = math.sqrt(max(1.0 - abs(t_coeff) ** 2, 0.0)) if r_coeff is None else r_coeff
        return cls("fock", complex(t_coeff), complex(r), pulse, n=int(n), **kw)

    @classmethod
    def coherent(cls, alpha2: float, t_coeff: complex, pulse: PulseShape, r_coeff: Optional[complex] = None, **kw):
        r = math.sqrt(max(1.0 - abs(t_coeff) ** 2, 0.0)) if r_coeff is None else r_coeff
        return cls("coherent", complex(t_coeff), complex(r), pulse, alpha2=float(alpha2), **kw)

    @classmethod
    def from_coeffs(cls, coeffs: ScatterCoeffs, pulse: PulseShape, n: Optional[int] = None,
                    alpha2: Optional[float] = None, **kw):
        if (n is None) == (alpha2 is None):
            raise ParameterDomainError("statistics", "give exactly one of n or alpha2")
        if n is not None:
            return cls("fock", coeffs.t_coeff, coeffs.r_coeff, pulse, n=int(n), **kw)
        return cls("coherent", coeffs.t_coeff, coeffs.r_coeff, pulse, alpha2=float(alpha2), **kw)


def _grid(inp: SubtractorInput):
    p = inp.pulse
    n = max(int(inp.grid_points), GRID_POINTS)
    n += (n + 1) % 2
    x = np.linspace(p.t0 - inp.half_width * p.dt, p.t0 + inp.half_width * p.dt, n)
    w = trapezoid_weights(x)
    h = p.amplitude(x)
    norm = float(np.sum(w * h ** 2))
    if abs(norm - 1.0) > NORM_TOL:
        raise PulseNormalizationError(f"pulse norm {norm:.8f} on the quadrature grid")
    return x, w, h, p.cumulative(x)


def _hermitize(lower: np.ndarray) -> np.ndarray:
    """Keep x ≥ y, fill x < y with ρ(x,y) = ρ*(y,x)."""
    upper = np.triu_indices(lower.shape[0], k=1)
    out = lower.copy()
    out[upper] = lower.T.conj()[upper]
    return out


def fock_density_matrix(inp: SubtractorInput) -> PhotonDensityMatrix:
    if inp.statistics != "fock":
        raise ParameterDomainError("statistics", "fock_density_matrix needs Fock input")
    x, w, h, f = _grid(inp)
    t = inp.t_coeff
    fx, fy = f[:, None], f[None, :]
    fmax, fmin = np.maximum(fx, fy), np.minimum(fx, fy)
    base = abs(t) ** 2 * fmin + t * (fmax - fmin) + 1.0 - fmax
    rho = inp.n * abs(inp.r_coeff) ** 2 * np.outer(h, h) * base ** (inp.n - 1)
    return PhotonDensityMatrix(x, w, _hermitize(rho), richardson=True)


def coherent_density_matrix(inp: SubtractorInput) -> PhotonDensityMatrix:
    if inp.statistics != "coherent":
        raise ParameterDomainError("statistics", "coherent_density_matrix needs coherent input")
    x, w, h, f = _grid(inp)
    a2, r2 = inp.alpha2, abs(inp.r_coeff) ** 2
    fx, fy = f[:, None], f[None, :]
    expo = -a2 * r2 * fy - a2 * (1.0 - inp.t_coeff) * (fx - fy)
    rho = a2 * r2 * np.outer(h, h) * np.exp(expo)
    return PhotonDensityMatrix(x, w, _hermitize(rho), richardson=True)


def fock_efficiency(n: int, t_coeff: complex) -> float:
    return 1.0 - abs(t_coeff) ** (2 * int(n))


def fock_purity(n: int, t_coeff: complex, pulse: Optional[PulseShape] = None) -> float:
    """Closed form for real T, tr[ρ²]/tr[ρ]² quadrature otherwise."""
    n = int(n)
    if n < 1:
        raise ParameterDomainError("n", "photon number must be at least 1", n)
    t = complex(t_coeff)
    if abs(t) >= 1.0:
        raise PurityDomainError("|T| = 1: nothing is extracted, purity undefined")
    if abs(t.imag) > 0.0:
        inp = SubtractorInput.fock(n, t, pulse or PulseShape(dt=1.0))
        return fock_density_matrix(inp).purity()
    tr = t.real
    return n * (1.0 + tr) * (1.0 - tr ** (2 * n - 1)) / ((2 * n - 1) * (1.0 - tr ** (2 * n)))


def coherent_efficiency(alpha2: float, t_coeff: complex) -> float:
    return float(-math.expm1(-alpha2 * (1.0 - abs(t_coeff) ** 2)))


def _f(a: float, big_a: float) -> float:
    return -math.expm1(-big_a * a) / a


def _f_prime(a: float, big_a: float) -> float:
    e = math.exp(-big_a * a)
    return (big_a * a * e + math.expm1(-big_a * a)) / a ** 2


def coherent_stats(alpha2: float, t_coeff: complex):
    """(η, 𝒫) of the photon extracted from |α⟩, taking |R|² = 1 - |T|²."""
    require_positive("alpha2", alpha2)
    t = complex(t_coeff)
    eta = coherent_efficiency(alpha2, t)
    if eta <= 0.0:
        raise PurityDomainError("η = 0: purity undefined")
    a = 1.0 - t.real
    b = 1.0 - abs(t) ** 2
    big_a = 2.0 * alpha2
    if a <= 0.0:
        raise PurityDomainError("|T| = 1: purity undefined")
    if abs(b - a) <= 1e-9 * max(a, b):
        ratio = -_f_prime(a, big_a)
    else:
        ratio = (_f(a, big_a) - _f(b, big_a)) / (b - a)
    purity = b ** 2 / (2.0 * eta ** 2) * ratio
    return eta, purity


def coherent_efficiency_oracle(alpha2: float, t_coeff: complex, n_max: Optional[int] = None) -> float:
    """Σ_n Poisson(n; |α|²)(1 - |T|^{2n}), summed until the tail is negligible."""
    n_max = n_max or int(alpha2 + 40.0 * math.sqrt(alpha2) + 60)
    n = np.arange(n_max + 1)
    weights = poisson.pmf(n, alpha2)
    return float(np.sum(weights * (1.0 - abs(t_coeff) ** (2 * n))))


def large_alpha_purity(t_abs: float, theta: float) -> float:
    return (1.0 - t_abs ** 2) / (2.0 * (1.0 - t_abs * math.cos(theta)))


def _t_from(r2: float, theta: float) -> complex:
    return math.sqrt(max(1.0 - r2, 0.0)) * complex(math.cos(theta), math.sin(theta))


def optimize_rate(alpha2: float, theta: float = 0.0, eps: float = 1e-6, xtol: float = 1e-10):
    """|R_opt|² with η = 𝒫; returns (r_opt2, common value)."""
    require_positive("alpha2", alpha2)

    def gap(r2: float) -> float:
        eta, pur = coherent_stats(alpha2, _t_from(r2, theta))
        return eta - pur

    lo, hi = eps, 1.0 - eps
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        raise RootNotBracketedError(
            f"η - P keeps sign {np.sign(g_lo):+.0f} on [{lo:g}, {hi:g}] for alpha2={alpha2:g}")
    r_opt2 = bisect(gap, lo, hi, xtol=xtol, maxiter=200)
    eta, _ = coherent_stats(alpha2, _t_from(r_opt2, theta))
    logger.info("subtract.optimize " + fields(alpha2=alpha2, theta=theta, r_opt2=r_opt2, value=eta))
    return float(r_opt2), float(eta)


def tradeoff_curve(r2_grid: Sequence[float], n: Optional[int] = None, alpha2: Optional[float] = None,
                   theta: float = 0.0) -> pd.DataFrame:
    rows = []
    for r2 in r2_grid:
        t = _t_from(float(r2), theta)
        if n is not None:
            rows.append({"R2": float(r2), "eta": fock_efficiency(n, t), "purity": fock_purity(n, t)})
        else:
            eta, pur = coherent_stats(alpha2, t)
            rows.append({"R2": float(r2), "eta": eta, "purity": pur})
    return pd.DataFrame(rows)


def purity_vs_phase(alpha2: float, r_opt2: float, theta_grid: Sequence[float]) -> pd.DataFrame:
    t_abs = math.sqrt(1.0 - r_opt2)
    rows = []
    for theta in theta_grid:
        _, pur = coherent_stats(alpha2, _t_from(r_opt2, float(theta)))
        rows.append({"theta": float(theta), "purity": pur,
                     "purity_large_alpha": large_alpha_purity(t_abs, float(theta))})
    return pd.DataFrame(rows)


def fock_purity_vs_phase(n: int, r2: float, theta_grid: Sequence[float],
                         pulse: Optional[PulseShape] = None) -> pd.DataFrame:
    pulse = pulse or PulseShape(dt=1.0)
    rows = []
    for theta in theta_grid:
        t = _t_from(r2, float(theta))
        if abs(math.sin(float(theta))) < 1e-15:
            t = complex(t.real, 0.0)
        rows.append({"theta": float(theta), "purity": fock_purity(n, t, pulse)})
    return pd.DataFrame(rows)
