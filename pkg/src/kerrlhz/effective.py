"""Hamiltonian builders and perturbative effective coefficients.

Frequencies are ordinary frequencies in GHz (the angular frequency divided
by 2 pi). Hamiltonians returned here are in the same units; the dynamics
module multiplies by 2 pi when it integrates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .operators import CompositeSpace, ModeSpace, Operator, ladder_matrix

__all__ = [
    "DispersiveWarning",
    "QutritResonatorParams",
    "EffectiveKerrParams",
    "ThreeModeParams",
    "ThreeBodyCoeffs",
    "REFERENCE_QUTRIT",
    "dispersive_coefficients",
    "two_photon_amplitude",
    "effective_kerr_params",
    "kerr_hamiltonian_rotating",
    "qutrit_resonator_space",
    "qutrit_resonator_terms",
    "full_qutrit_resonator_hamiltonian",
    "three_mode_coefficients",
    "three_mode_space",
    "three_mode_effective_hamiltonian",
    "three_mode_full_terms",
    "three_mode_full_hamiltonian",
    "pump_for_displacement",
]


class DispersiveWarning(UserWarning):
    """A detuning-to-coupling ratio is below the dispersive threshold."""


DISPERSIVE_THRESHOLD = 5.0


@dataclass(frozen=True)
class QutritResonatorParams:
    """Qutrit coupled to one resonator and driven on the g-f transition.

    ``omega_p=None`` means the drive sits at twice the dressed resonator
    frequency, computed from the full fourth-order shift.
    """

    omega_c: float
    eps_e: float
    eps_f: float
    g_ge: float
    g_ef: float
    g_gf: float = 0.0
    Omega_p: float = 0.0
    omega_p: float | None = None
    Omega_ge: float = 0.0
    Omega_ef: float = 0.0

    def dispersive_ratios(self) -> dict[str, float]:
        """Detuning over coupling for each transition, and drive detuning over drive amplitude."""
        ratios = {}
        pairs = {"ge": (0.0, self.eps_e, self.g_ge), "ef": (self.eps_e, self.eps_f, self.g_ef),
                 "gf": (0.0, self.eps_f, self.g_gf)}
        for name, (lo, hi, g) in pairs.items():
            if g != 0:
                ratios[name] = abs(abs(hi - lo) - self.omega_c) / abs(g)
        if self.Omega_p != 0:
            ratios["drive"] = abs(self.eps_f - self.drive_frequency()) / abs(self.Omega_p)
        return ratios

    def check_dispersive(self) -> None:
        for name, r in self.dispersive_ratios().items():
            if r < DISPERSIVE_THRESHOLD:
                warnings.warn(f"dispersive ratio for {name} is {r:.3g} (< {DISPERSIVE_THRESHOLD})",
                              DispersiveWarning, stacklevel=2)

    def drive_frequency(self) -> float:
        if self.omega_p is not None:
            return self.omega_p
        S, _ = dispersive_coefficients(self, "full")
        return 2.0 * (self.omega_c + S)


@dataclass(frozen=True)
class EffectiveKerrParams:
    S: float
    K: float
    P: float
    omega_c_tilde: float

    @property
    def alpha(self) -> float:
        """Cat amplitude sqrt(P/K) for P/K >= 0."""
        return math.sqrt(self.P / self.K) if self.K != 0 and self.P / self.K >= 0 else float("nan")


def _inv(x: float) -> float:
    if x == 0:
        raise ZeroDivisionError("exact resonance: a perturbative denominator vanishes")
    return 1.0 / x


def dispersive_coefficients(p: QutritResonatorParams, order: str = "full", symmetrized: bool = False):
    """Stark shift ``S`` and self-Kerr ``K`` (GHz) from fourth-order perturbation theory.

    ``order="reduced"`` keeps only the g-e and e-f pathways, with signed
    detunings ``eps_e - omega_c`` and ``(eps_f - eps_e) - omega_c``.
    ``order="full"`` adds every g-f pathway term by term. The g-f/e-f path
    has an intermediate energy denominator of ``-eps_e``; ``symmetrized``
    swaps it for ``omega_c - eps_e`` as a sensitivity probe.
    """
    wc, we, wf = p.omega_c, p.eps_e, p.eps_f
    gge, gef, ggf = p.g_ge, p.g_ef, p.g_gf
    if order == "reduced":
        d_ge = we - wc
        d_ef = (wf - we) - wc
        S = -gge**2 * _inv(d_ge) + gge**4 * _inv(d_ge) ** 3
        K = -gge**2 * gef**2 * _inv(d_ge) ** 2 * _inv(d_ge + d_ef) + gge**4 * _inv(d_ge) ** 3
        return S, K
    if order != "full":
        raise ValueError(f"order must be 'reduced' or 'full', got {order!r}")
    mid_e = (wc - we) if symmetrized else -we
    gf_ef = ggf**2 * gef**2 * _inv(wc - wf) ** 2 * _inv(mid_e)
    cross1 = ggf**2 * gge**2 * _inv(wc - we) ** 2 * _inv(wc - wf)
    cross2 = ggf**2 * gge**2 * _inv(wc - we) * _inv(wc - wf) ** 2
    quart = gge**4 * _inv(we - wc) ** 3 + ggf**4 * _inv(wf - wc) ** 3
    S = (-gge**2 * _inv(we - wc) - ggf**2 * _inv(wf - wc) + quart + gf_ef - cross1 - cross2)
    K = (quart + gge**2 * gef**2 * _inv(wc - we) ** 2 * _inv(2 * wc - wf) + gf_ef - cross1 - cross2)
    return S, K


def two_photon_amplitude(p: QutritResonatorParams, Omega_p: float | None = None) -> float:
    """Two-photon drive amplitude ``P`` (GHz) induced by the g-f drive.

    The drive frequency defaults to twice the dressed resonator frequency
    (one pass, no iteration).
    """
    Om = p.Omega_p if Omega_p is None else Omega_p
    d_ge = p.eps_e - p.omega_c
    return -p.g_ge * p.g_ef * Om * _inv(d_ge) * _inv(p.eps_f - p.drive_frequency())


def effective_kerr_params(p: QutritResonatorParams, order: str = "full") -> EffectiveKerrParams:
    p.check_dispersive()
    S, K = dispersive_coefficients(p, order)
    return EffectiveKerrParams(S=S, K=K, P=two_photon_amplitude(p), omega_c_tilde=p.omega_c + S)


def kerr_hamiltonian_rotating(K: float, P: float, dim: int) -> Operator:
    """``K a^dag^2 a^2 - P (a^dag^2 + a^2)`` on a truncated Fock space."""
    a = ladder_matrix(dim)
    ad = a.conj().T
    a2 = a @ a
    H = K * (ad @ ad @ a2) - P * (ad @ ad + a2)
    return Operator(ModeSpace.fock(dim), H)


# ---------------------------------------------------------------------------
# qutrit-resonator model, qutrit in slot 0, resonator in slot 1

def qutrit_resonator_space(dim: int) -> CompositeSpace:
    return CompositeSpace.of(ModeSpace.qutrit(), ModeSpace.fock(dim))


def _tr(j, k):
    m = np.zeros((3, 3), dtype=np.complex128)
    m[j, k] = 1.0
    return m


def qutrit_resonator_terms(p: QutritResonatorParams, dim: int):
    """Static part and the three drive transition operators (each without its phase).

    Returns ``(H_static, drives)`` where ``drives`` is a list of
    ``(amplitude, X)`` with ``X = |hi><lo|`` carrying ``exp(-i omega_p t)``;
    the Hermitian conjugate carries ``exp(+i omega_p t)``.
    """
    I = np.eye(dim)
    a = ladder_matrix(dim)
    ad = a.conj().T
    H = p.omega_c * np.kron(np.eye(3), ad @ a) + np.kron(np.diag([0.0, p.eps_e, p.eps_f]), I)
    coupling = (p.g_ge * np.kron(_tr(0, 1), ad) + p.g_ef * np.kron(_tr(1, 2), ad)
                + p.g_gf * np.kron(_tr(0, 2), ad))
    H = H + coupling + coupling.conj().T
    drives = [(p.Omega_ge, np.kron(_tr(1, 0), I)), (p.Omega_ef, np.kron(_tr(2, 1), I)),
              (p.Omega_p, np.kron(_tr(2, 0), I))]
    return H, drives


def full_qutrit_resonator_hamiltonian(p: QutritResonatorParams, t: float, drive_scale: float = 1.0,
                                      dim: int = 30) -> Operator:
    """Lab-frame qutrit-resonator Hamiltonian at time ``t`` (ns), GHz units."""
    H, drives = qutrit_resonator_terms(p, dim)
    active = [(amp, X) for amp, X in drives if amp and drive_scale]
    if active:
        phase = np.exp(-2j * np.pi * p.drive_frequency() * t)
        for amp, X in active:
            H = H + drive_scale * amp * (phase * X + np.conj(phase) * X.conj().T)
    return Operator(qutrit_resonator_space(dim), H)


REFERENCE_QUTRIT = QutritResonatorParams(
    omega_c=5.25, eps_e=6.25, eps_f=10.0, g_ge=0.094, g_ef=0.136, g_gf=0.140, Omega_p=0.035,
)


# ---------------------------------------------------------------------------
# three resonators plus a pumped qubit mode

@dataclass(frozen=True)
class ThreeModeParams:
    omega_q: float
    omegas: tuple[float, float, float]
    E_J: float
    phi_q: float
    phis: tuple[float, float, float]
    eps_p: float
    omega_d: float

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "phis", tuple(float(x) for x in self.phis))
        if len(self.omegas) != 3 or len(self.phis) != 3:
            raise ValueError("three resonator frequencies and phases are required")

    @property
    def xi_p(self) -> float:
        if self.omega_d == self.omega_q:
            raise ZeroDivisionError("pump on resonance with the qubit mode")
        return self.eps_p / (self.omega_d - self.omega_q)

    def small_phase_ok(self, n_max: int) -> bool:
        """False when any zero-point phase times sqrt(n_max) exceeds 0.5."""
        return all(abs(x) * math.sqrt(n_max) <= 0.5 for x in (self.phi_q, *self.phis))


@dataclass(frozen=True)
class ThreeBodyCoeffs:
    J_123: float
    K_q: float
    K_j: tuple[float, float, float]
    K_jk: dict = field(default_factory=dict)  # (j, k) with j < k, zero-based
    K_qj: tuple[float, float, float] = (0.0, 0.0, 0.0)
    xi_p: float = 0.0

    @property
    def stark_qubit(self) -> float:
        return 2 * self.K_q * abs(self.xi_p) ** 2

    @property
    def stark_resonators(self) -> tuple[float, float, float]:
        return tuple(k * abs(self.xi_p) ** 2 for k in self.K_qj)


def three_mode_coefficients(p: ThreeModeParams, xi_p: float | None = None) -> ThreeBodyCoeffs:
    """Normal-ordered quartic coefficients in the pump-displaced frame.

    ``xi_p`` overrides the displacement ``eps_p / (omega_d - omega_q)``.
    """
    xi = p.xi_p if xi_p is None else xi_p
    EJ, pq, ph = p.E_J, p.phi_q, p.phis
    return ThreeBodyCoeffs(
        J_123=-EJ * ph[0] * ph[1] * ph[2] * pq * xi,
        K_q=-EJ * pq**4 / 4,
        K_j=tuple(-EJ * x**4 / 4 for x in ph),
        K_jk={(j, k): -EJ * ph[j] ** 2 * ph[k] ** 2 for j, k in combinations(range(3), 2)},
        K_qj=tuple(-EJ * pq**2 * x**2 for x in ph),
        xi_p=xi,
    )


def three_mode_space(dims: Sequence[int]) -> CompositeSpace:
    return CompositeSpace(tuple(ModeSpace.fock(int(d)) for d in dims))


def _embed_all(dims):
    out = []
    for k, d in enumerate(dims):
        left = math.prod(dims[:k])
        right = math.prod(dims[k + 1:])
        out.append(np.kron(np.kron(np.eye(left), ladder_matrix(d)), np.eye(right)))
    return out


def three_mode_effective_hamiltonian(c: ThreeBodyCoeffs, frequencies=None, mode: str = "resonant",
                                     t: float = 0.0, include_kerr: bool = False, dim: int = 4) -> Operator:
    """Effective three-resonator Hamiltonian (GHz).

    ``mode="resonant"`` is the interaction-picture exchange term
    ``J (a1^dag a2^dag a3 + h.c.)``. ``mode="lab"`` adds the resonator
    frequencies ``frequencies = (w1, w2, w3, w_d)`` and puts
    ``exp(-i w_d t)`` on the exchange term. ``include_kerr`` adds the
    self- and cross-Kerr terms, one cross term per unordered pair.
    """
    dims = [dim] * 3 if np.isscalar(dim) else list(dim)
    a = _embed_all(dims)
    ad = [x.conj().T for x in a]
    hop = ad[0] @ ad[1] @ a[2]
    if mode == "resonant":
        H = c.J_123 * (hop + hop.conj().T)
    elif mode == "lab":
        if frequencies is None:
            raise ValueError("lab mode needs (w1, w2, w3, w_d)")
        w1, w2, w3, wd = frequencies
        ph = np.exp(-2j * np.pi * wd * t)
        H = sum(w * (ad[j] @ a[j]) for j, w in enumerate((w1, w2, w3)))
        H = H + c.J_123 * (ph * hop + np.conj(ph) * hop.conj().T)
    else:
        raise ValueError(f"mode must be 'resonant' or 'lab', got {mode!r}")
    if include_kerr:
        for j in range(3):
            H = H + c.K_j[j] * (ad[j] @ ad[j] @ a[j] @ a[j])
        for (j, k), Kjk in c.K_jk.items():
            H = H + Kjk * (ad[j] @ a[j] @ ad[k] @ a[k])
    return Operator(three_mode_space(dims), H)


def three_mode_full_terms(p: ThreeModeParams, dims: Sequence[int], cosine_order: str = "quartic"):
    """Static Hamiltonian and the pump coupling operator of the three-resonator + qubit circuit.

    Slots 0-2 are the resonators and slot 3 the qubit mode. The full
    Hamiltonian is ``H_static + 2 eps_p cos(w_d t) X_q``; this returns
    ``(H_static, X_q)`` as dense arrays in GHz.
    """
    dims = list(dims)
    if len(dims) != 4:
        raise ValueError("dims must list three resonators and the qubit mode")
    a = _embed_all(dims)
    X = [x + x.conj().T for x in a]
    freqs = (*p.omegas, p.omega_q)
    zpf = (*p.phis, p.phi_q)
    H = sum(w * (x.conj().T @ x) for w, x in zip(freqs, a))
    phi = sum(z * x for z, x in zip(zpf, X))
    if cosine_order == "quartic":
        phi2 = phi @ phi
        H = H - p.E_J / 24 * (phi2 @ phi2)
    elif cosine_order == "cosine-exact":
        lam, V = np.linalg.eigh(phi)
        pot = np.cos(lam) - 1.0 + lam**2 / 2
        H = H - p.E_J * (V * pot) @ V.conj().T
    else:
        raise ValueError(f"cosine_order must be 'quartic' or 'cosine-exact', got {cosine_order!r}")
    return H, X[3]


def three_mode_full_hamiltonian(p: ThreeModeParams, t: float, dims: Sequence[int] = (4, 4, 4, 12),
                                cosine_order: str = "quartic") -> Operator:
    H, Xq = three_mode_full_terms(p, dims, cosine_order)
    H = H + 2 * p.eps_p * math.cos(2 * math.pi * p.omega_d * t) * Xq
    return Operator(three_mode_space(dims), H)


def pump_for_displacement(xi: float, omega_d: float, omega_q: float) -> float:
    """Pump amplitude giving a qubit-mode displacement ``xi`` at the pump frequency.

    Includes the counter-rotating response of a linear oscillator: the
    ``exp(-i w_d t)`` component of ``<a + a^dag>`` is
    ``2 eps w_q / (w_d^2 - w_q^2)``.
    """
    return xi * (omega_d**2 - omega_q**2) / (2 * omega_q)
