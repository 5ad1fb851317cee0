# utils/repeater.py: elementary entanglement, swapping and one connection step, by exact enumeration
"""
States are finite sums over branches keyed by
    (photon creation-operator word, atomic spins, per-atom loss flags).
A word is a sorted tuple of mode names "<arm>_<spin>"; arms "a" and "b" are the two
beam-splitter inputs. Amplitudes multiply the bare product of creation operators, so a
branch with n_m photons in mode m has Fock norm |c|² Π n_m!.

Detectors D1..D4 register b↓, b↑, a↓, a↑.
"""
from __future__ import annotations
import cmath
import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from utils.errors import NumericalError, ParameterDomainError
from utils.logging_setup import get_logger, fields
from utils.scatter1d import ScatterCoeffs

logger = get_logger("repeater")

PRUNE = 1e-15


class Spin(str, Enum):
    UP = "up"
    DOWN = "dn"


DETECTORS = {1: "b_dn", 2: "b_up", 3: "a_dn", 4: "a_up"}
PHI_PLUS_PATTERNS = (frozenset({1, 2}), frozenset({3, 4}))
PHI_MINUS_PATTERNS = (frozenset({1, 4}), frozenset({2, 3}))

Key = Tuple[Tuple[str, ...], Tuple[Spin, ...], Tuple[bool, ...]]


class RepeaterInvariantError(NumericalError):
    pass


def mode(arm: str, spin: Spin) -> str:
    return f"{arm}_{Spin(spin).value}"


def _split(mode_name: str) -> Tuple[str, Spin]:
    arm, spin = mode_name.split("_")
    return arm, Spin(spin)


def _fock_weight(word: Tuple[str, ...]) -> float:
    return float(np.prod([math.factorial(k) for k in Counter(word).values()])) if word else 1.0


@dataclass
class RepeaterState:
    terms: Dict[Key, complex] = field(default_factory=dict)

    def add(self, key: Key, amp: complex):
        word, spins, lost = key
        key = (tuple(sorted(word)), tuple(spins), tuple(lost))
        self.terms[key] = self.terms.get(key, 0j) + amp

    def pruned(self) -> "RepeaterState":
        return RepeaterState({k: v for k, v in self.terms.items() if abs(v) > PRUNE})

    def norm(self) -> float:
        return float(sum(abs(c) ** 2 * _fock_weight(k[0]) for k, c in self.terms.items()))

    @property
    def n_atoms(self) -> int:
        return len(next(iter(self.terms))[1]) if self.terms else 0

    def check(self, tol: float = 1e-10):
        n = self.norm()
        if n > 1.0 + tol:
            raise RepeaterInvariantError(f"state norm {n:.12f} exceeds 1")
        for word, _, _ in self.terms:
            if len(word) > 2:
                raise RepeaterInvariantError(f"{len(word)} photons in one branch")
        return self


def atoms(*spins: Spin) -> RepeaterState:
    s = tuple(Spin(x) for x in spins)
    return RepeaterState({((), s, (False,) * len(s)): 1.0 + 0j})


def bell_state(sign: int = +1) -> RepeaterState:
    """|Φ±⟩ = (|↑↓⟩ ± |↓↑⟩)/√2."""
    st = RepeaterState()
    st.add(((), (Spin.UP, Spin.DOWN), (False, False)), 1 / math.sqrt(2))
    st.add(((), (Spin.DOWN, Spin.UP), (False, False)), sign / math.sqrt(2))
    return st


def tensor(left: RepeaterState, right: RepeaterState) -> RepeaterState:
    out = RepeaterState()
    for (w1, s1, l1), c1 in left.terms.items():
        for (w2, s2, l2), c2 in right.terms.items():
            out.add((w1 + w2, s1 + s2, l1 + l2), c1 * c2)
    return out


def inject(state: RepeaterState, arm: str, spin: Spin = Spin.DOWN) -> RepeaterState:
    out = RepeaterState()
    for (word, spins, lost), c in state.terms.items():
        out.add((word + (mode(arm, spin),), spins, lost), c)
    return out


def collide(atom_spin: Spin, photon_spin: Spin, coeffs: ScatterCoeffs):
    """Branches [(atom spin, photon spin or None when lost, amplitude)] of one collision."""
    p = coeffs.survival
    if p > 1.0 + 1e-12:
        raise RepeaterInvariantError(f"|T|^2 + |R|^2 = {p:.12f} exceeds 1")
    if Spin(atom_spin) is Spin.UP and Spin(photon_spin) is Spin.DOWN:
        out = [(Spin.UP, Spin.DOWN, coeffs.t_coeff), (Spin.DOWN, Spin.UP, coeffs.r_coeff)]
        if p < 1.0:
            out.append((Spin.UP, None, complex(math.sqrt(1.0 - p))))
        return out
    # the reverse process uses the same amplitudes
    if Spin(atom_spin) is Spin.DOWN and Spin(photon_spin) is Spin.UP:
        out = [(Spin.DOWN, Spin.UP, coeffs.t_coeff), (Spin.UP, Spin.DOWN, coeffs.r_coeff)]
        if p < 1.0:
            out.append((Spin.DOWN, None, complex(math.sqrt(1.0 - p))))
        return out
    return [(Spin(atom_spin), Spin(photon_spin), 1.0 + 0j)]


def collide_state(state: RepeaterState, arm: str, atom: int, coeffs: ScatterCoeffs) -> RepeaterState:
    """Let the photon in `arm` (at most one) scatter off atom number `atom`."""
    out = RepeaterState()
    for (word, spins, lost), c in state.terms.items():
        hits = [m for m in word if _split(m)[0] == arm]
        if len(hits) > 1:
            raise RepeaterInvariantError(f"more than one photon in arm {arm!r}")
        if not hits:
            out.add((word, spins, lost), c)
            continue
        rest = list(word)
        rest.remove(hits[0])
        for atom_new, photon_new, amp in collide(spins[atom], _split(hits[0])[1], coeffs):
            new_spins = spins[:atom] + (atom_new,) + spins[atom + 1:]
            if photon_new is None:
                new_lost = lost[:atom] + (True,) + lost[atom + 1:]
                out.add((tuple(rest), new_spins, new_lost), c * amp)
            else:
                out.add((tuple(rest) + (mode(arm, photon_new),), new_spins, lost), c * amp)
    return out.pruned()


def beam_splitter(state: RepeaterState, phi: float = 0.0) -> RepeaterState:
    """a† → (a† + e^{iφ} b†)/√2, b† → (b† - e^{-iφ} a†)/√2 for both spins."""
    s = 1.0 / math.sqrt(2.0)
    e_plus, e_minus = cmath.exp(1j * phi), cmath.exp(-1j * phi)

    def image(m: str):
        arm, spin = _split(m)
        if arm == "a":
            return [(mode("a", spin), s), (mode("b", spin), s * e_plus)]
        return [(mode("b", spin), s), (mode("a", spin), -s * e_minus)]

    out = RepeaterState()
    for (word, spins, lost), c in state.terms.items():
        for combo in itertools.product(*(image(m) for m in word)):
            amp = c
            for _, f in combo:
                amp *= f
            out.add((tuple(m for m, _ in combo), spins, lost), amp)
    return out.pruned()


def measure_atom(state: RepeaterState, index: int, spin: Spin) -> Tuple[RepeaterState, float]:
    """Project atom `index` on `spin`, drop it from the register and renormalize."""
    kept = RepeaterState()
    for (word, spins, lost), c in state.terms.items():
        if spins[index] is Spin(spin):
            kept.add((word, spins[:index] + spins[index + 1:], lost[:index] + lost[index + 1:]), c)
    prob = kept.norm()
    if prob <= 0.0:
        return RepeaterState(), 0.0
    scale = 1.0 / math.sqrt(prob)
    return RepeaterState({k: v * scale for k, v in kept.terms.items()}), prob


@dataclass
class HeraldResult:
    pattern: FrozenSet[int]
    probability: float
    rho: Optional[np.ndarray]       # conditional atomic density matrix, None if the pattern never occurs
    bell: str                       # "phi+", "phi-", "discard", "none"
    fidelity: Optional[float] = None

    @property
    def label(self) -> str:
        return "+".join(f"D{d}" for d in sorted(self.pattern)) or "none"

    def row(self) -> dict:
        return {"pattern": self.label, "probability": self.probability, "bell": self.bell,
                "fidelity": self.fidelity}


def _basis_index(spins: Tuple[Spin, ...]) -> int:
    idx = 0
    for s in spins:
        idx = 2 * idx + (1 if s is Spin.DOWN else 0)
    return idx


def bell_vector(sign: int) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[_basis_index((Spin.UP, Spin.DOWN))] = 1 / math.sqrt(2)
    v[_basis_index((Spin.DOWN, Spin.UP))] = sign / math.sqrt(2)
    return v


def classify(pattern: FrozenSet[int]) -> str:
    if pattern in PHI_PLUS_PATTERNS:
        return "phi+"
    if pattern in PHI_MINUS_PATTERNS:
        return "phi-"
    return "discard" if pattern else "none"


def _pattern_likelihood(word: Tuple[str, ...], pattern: FrozenSet[int], efficiency: float) -> float:
    counts = Counter(word)
    like = 1.0
    for det, m in DETECTORS.items():
        miss = (1.0 - efficiency) ** counts.get(m, 0)
        like *= (1.0 - miss) if det in pattern else miss
    return like


def herald(state: RepeaterState, pattern, efficiency: float = 1.0) -> HeraldResult:
    """Probability of `pattern` and the atoms' conditional state; photons, loss flags traced out."""
    if not 0.0 <= efficiency <= 1.0:
        raise ParameterDomainError("detector_efficiency", "must lie in [0, 1]", efficiency)
    pattern = frozenset(pattern)
    dim = 2 ** state.n_atoms
    by_word: Dict[Tuple, Dict] = defaultdict(lambda: defaultdict(lambda: np.zeros(dim, dtype=complex)))
    for (word, spins, lost), c in state.terms.items():
        by_word[word][lost][_basis_index(spins)] += c * math.sqrt(_fock_weight(word))
    rho = np.zeros((dim, dim), dtype=complex)
    for word, branches in by_word.items():
        like = _pattern_likelihood(word, pattern, efficiency)
        if like == 0.0:
            continue
        for vec in branches.values():
            rho += like * np.outer(vec, vec.conj())
    prob = float(np.real(np.trace(rho)))
    bell = classify(pattern)
    if prob <= PRUNE:
        return HeraldResult(pattern, 0.0, None, bell)
    rho /= prob
    fidelity = None
    if bell in ("phi+", "phi-") and dim == 4:
        v = bell_vector(+1 if bell == "phi+" else -1)
        fidelity = float(np.real(v.conj() @ rho @ v))
    return HeraldResult(pattern, prob, rho, bell, fidelity)


def all_patterns(state: RepeaterState, efficiency: float = 1.0) -> List[HeraldResult]:
    results = []
    for size in range(len(DETECTORS) + 1):
        for combo in itertools.combinations(sorted(DETECTORS), size):
            results.append(herald(state, combo, efficiency))
    total = sum(r.probability for r in results)
    if abs(total - state.norm()) > 1e-10:
        raise RepeaterInvariantError(f"pattern probabilities sum to {total:.12f}")
    return results


def elementary_state(coeffs: ScatterCoeffs, phi: float = 0.0) -> RepeaterState:
    """Both nodes scatter a ↓ photon off an ↑ atom; outputs meet on the beam splitter."""
    st = atoms(Spin.UP, Spin.UP)
    st = inject(inject(st, "a"), "b")
    st = collide_state(st, "a", 0, coeffs)
    st = collide_state(st, "b", 1, coeffs)
    return beam_splitter(st, phi).check()


def swap(bell_pair: RepeaterState, coeffs: ScatterCoeffs, arm: str = "b", atom: int = 1):
    """Scatter a ↓ photon off `atom` and keep the ↓ outcome: atom-photon pair and its probability."""
    st = collide_state(inject(bell_pair, arm), arm, atom, coeffs)
    out, prob = measure_atom(st, atom, Spin.DOWN)
    logger.debug("repeater.swap " + fields(probability=prob))
    return out, prob


def connection_state(coeffs: ScatterCoeffs, phi: float = 0.0):
    """Pairs (A,B) and (C,D) in Φ+; swaps at B and C send photons to the beam splitter."""
    st = tensor(bell_state(+1), bell_state(+1))
    st = collide_state(inject(st, "a"), "a", 1, coeffs)
    st, p_b = measure_atom(st, 1, Spin.DOWN)
    st = collide_state(inject(st, "b"), "b", 1, coeffs)   # atom C is now at index 1
    st, p_c = measure_atom(st, 1, Spin.DOWN)
    return beam_splitter(st, phi).check(), p_b, p_c


@dataclass
class ProtocolReport:
    patterns: List[HeraldResult]
    success_phi_plus: float
    success_phi_minus: float
    fidelity: Optional[float]
    swap_probability: float
    connection_patterns: List[HeraldResult]
    connection_success: float
    connection_fidelity: Optional[float]

    def as_dict(self) -> dict:
        return {
            "elementary": {
                "patterns": [r.row() for r in self.patterns],
                "success_phi_plus": self.success_phi_plus,
                "success_phi_minus": self.success_phi_minus,
                "success_total": self.success_phi_plus + self.success_phi_minus,
                "fidelity": self.fidelity,
            },
            "swap_probability": self.swap_probability,
            "connection": {
                "patterns": [r.row() for r in self.connection_patterns],
                "success": self.connection_success,
                "fidelity": self.connection_fidelity,
            },
        }


def _heralded(results: List[HeraldResult]):
    plus = sum(r.probability for r in results if r.bell == "phi+")
    minus = sum(r.probability for r in results if r.bell == "phi-")
    good = [r for r in results if r.fidelity is not None and r.probability > 0]
    weight = sum(r.probability for r in good)
    fid = sum(r.probability * r.fidelity for r in good) / weight if weight > 0 else None
    return plus, minus, fid


def run_protocol(coeffs: ScatterCoeffs, detector_efficiency: float = 1.0, phi: float = 0.0) -> ProtocolReport:
    elem = all_patterns(elementary_state(coeffs, phi), detector_efficiency)
    plus, minus, fid = _heralded(elem)

    _, p_swap = swap(bell_state(+1), coeffs)
    conn_state, p_b, p_c = connection_state(coeffs, phi)
    conn = all_patterns(conn_state, detector_efficiency)
    c_plus, c_minus, c_fid = _heralded(conn)
    conn_success = p_b * p_c * (c_plus + c_minus)
    logger.info("repeater.protocol " + fields(herald=plus + minus, fidelity=fid if fid is not None else "n/a",
                                              swap=p_swap, connection=conn_success))
    return ProtocolReport(elem, plus, minus, fid, p_swap, conn, conn_success, c_fid)
