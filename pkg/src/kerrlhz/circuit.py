"""Capacitively shunted flux qubit coupled to an LC resonator.

The two junction phases are represented in the charge basis
``|n1, n2>`` with ``|n_i| <= charge_cutoff``. Energies are returned as
ordinary frequencies in GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants, linalg, optimize

__all__ = [
    "FluxQubitCircuit",
    "QubitSpectrumResult",
    "ConvergenceError",
    "charging_energy",
    "flux_qubit_hamiltonian",
    "flux_qubit_levels",
    "qubit_resonator_couplings",
    "resonator_frequency",
    "calibrate_resonator",
    "flux_sweep",
    "REFERENCE_CIRCUIT",
]


class ConvergenceError(RuntimeError):
    """Charge-basis result moved by more than the tolerance when the cutoff was raised."""


@dataclass(frozen=True)
class FluxQubitCircuit:
    """Circuit parameters. Capacitances in fF, energies in GHz, inductance in nH.

    ``E_r`` is the resonator energy scale entering the coupling prefactor.
    ``C_r`` sets ``gamma = C_c / C_r``; ``L_r`` is only needed for
    :func:`resonator_frequency`.
    """

    C_J: float
    E_J: float
    alpha: float
    C_sh: float
    C_c: float
    E_r: float
    C_r: float
    f: float = 0.5
    L_r: float | None = None
    charge_cutoff: int = 12

    def __post_init__(self):
        for name in ("C_J", "E_J", "alpha", "C_sh", "E_r", "C_r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.C_c < 0:
            raise ValueError("C_c must be non-negative")
        if self.L_r is not None and not self.L_r > 0:
            raise ValueError("L_r must be positive")
        if not 0.0 <= self.f <= 1.0:
            raise ValueError("reduced flux f must lie in [0, 1]")
        if int(self.charge_cutoff) != self.charge_cutoff or self.charge_cutoff < 5:
            raise ValueError("charge_cutoff must be an integer >= 5")

    @property
    def alpha_eff(self) -> float:
        return self.alpha + self.C_sh / self.C_J

    @property
    def beta(self) -> float:
        return self.C_c / self.C_J

    @property
    def gamma(self) -> float:
        return self.C_c / self.C_r

    @property
    def E_c(self) -> float:
        return charging_energy(self.C_J)

    @property
    def _den(self) -> float:
        a, b, g = self.alpha_eff, self.beta, self.gamma
        return (1 + 2 * a) * (1 + g) + 2 * b


def charging_energy(C_J_fF: float) -> float:
    """``e^2 / (2 C_J h)`` in GHz."""
    return constants.e**2 / (2 * C_J_fF * 1e-15 * constants.h) / 1e9


def _charge_ops(cutoff: int):
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    d = n.size
    N = np.diag(n)
    up = np.eye(d, k=-1)  # |n> -> |n+1>, i.e. exp(i phi)
    return N, up, np.eye(d)


def flux_qubit_hamiltonian(circuit: FluxQubitCircuit) -> np.ndarray:
    """Charge-basis qubit Hamiltonian: kinetic terms minus the junction potential."""
    c = circuit
    N, up, I = _charge_ops(c.charge_cutoff)
    a, b, g = c.alpha_eff, c.beta, c.gamma
    den = c._den
    diag_coef = 4 * c.E_c * ((1 + a) * (1 + g) + b) / den
    cross_coef = 8 * c.E_c * (a * (1 + g) + b) / den
    H = diag_coef * (np.kron(N @ N, I) + np.kron(I, N @ N)) + cross_coef * np.kron(N, N)
    H = H.astype(np.complex128)
    cos1 = 0.5 * np.kron(up + up.T, I)
    cos2 = 0.5 * np.kron(I, up + up.T)
    hop = np.exp(2j * np.pi * c.f) * np.kron(up, up.T)  # exp(i(phi1 - phi2 + 2 pi f))
    cos12 = 0.5 * (hop + hop.conj().T)
    H -= c.E_J * (cos1 + cos2) + c.alpha * c.E_J * cos12
    return H


def _coupling_prefactor(c: FluxQubitCircuit) -> float:
    a, b, g = c.alpha_eff, c.beta, c.gamma
    return 2.0 / (1 + 2 * a + 2 * b) ** 0.25 * math.sqrt(b * g / c._den**1.5) * math.sqrt(c.E_r * c.E_c)


def _diagonalize(c: FluxQubitCircuit, n_levels: int):
    dim = (2 * c.charge_cutoff + 1) ** 2
    if not 1 <= n_levels <= dim:
        raise ValueError(f"n_levels must lie in [1, {dim}]")
    E, V = linalg.eigh(flux_qubit_hamiltonian(c), subset_by_index=(0, n_levels - 1))
    return E, V


def _levels_and_couplings(c: FluxQubitCircuit, n_levels: int):
    E, V = _diagonalize(c, n_levels)
    N, _, I = _charge_ops(c.charge_cutoff)
    dn = np.kron(N, I) - np.kron(I, N)
    g = _coupling_prefactor(c) * np.abs(V.conj().T @ (dn @ V))
    return E - E[0], g


def _converged(c: FluxQubitCircuit, n_levels: int, tol: float):
    E, g = _levels_and_couplings(c, n_levels)
    E2, g2 = _levels_and_couplings(replace(c, charge_cutoff=c.charge_cutoff + 3), n_levels)
    scale = max(1.0, float(np.max(np.abs(E2))))
    drift = max(float(np.max(np.abs(E - E2))) / scale,
                float(np.max(np.abs(g - g2))) / max(float(np.max(g2)), 1e-300))
    if drift > tol:
        raise ConvergenceError(
            f"charge cutoff {c.charge_cutoff} not converged: relative drift {drift:.2e} > {tol:.1e}"
        )
    return E, g


def flux_qubit_levels(circuit: FluxQubitCircuit, n_levels: int = 3, check_tol: float | None = None) -> np.ndarray:
    """Lowest ``n_levels`` energies (GHz) measured from the ground state.

    With ``check_tol`` the calculation is repeated at ``charge_cutoff + 3``
    and :class:`ConvergenceError` is raised if anything moves by more than
    ``check_tol`` (relative).
    """
    if check_tol is not None:
        return _converged(circuit, n_levels, check_tol)[0]
    E, _ = _diagonalize(circuit, n_levels)
    return E - E[0]


def qubit_resonator_couplings(
    circuit: FluxQubitCircuit,
    pairs=((0, 1), (1, 2), (0, 2)),
    check_tol: float | None = None,
) -> dict[tuple[int, int], float]:
    """Coupling strengths ``g_ij`` (GHz) between qubit eigenstates ``i`` and ``j``.

    ``g_ij`` is the magnitude of the charge-difference matrix element times
    the interaction prefactor; the resonator factor contributes a single
    photon matrix element of one.
    """
    n_levels = max(max(p) for p in pairs) + 1
    if check_tol is not None:
        _, g = _converged(circuit, n_levels, check_tol)
    else:
        _, g = _levels_and_couplings(circuit, n_levels)
    return {tuple(p): float(g[p[0], p[1]]) for p in pairs}


def resonator_frequency(circuit: FluxQubitCircuit) -> float:
    """Loaded resonator frequency (GHz) from ``L_r`` and ``C_r``."""
    c = circuit
    if c.L_r is None:
        raise ValueError("L_r is required for the resonator frequency")
    a, b = c.alpha_eff, c.beta
    bare = 1.0 / math.sqrt(c.L_r * 1e-9 * c.C_r * 1e-15)
    return bare * math.sqrt((1 + 2 * a + 2 * b) / c._den) / (2 * math.pi) / 1e9


def calibrate_resonator(
    circuit: FluxQubitCircuit,
    g_ge_target: float,
    omega_c_target: float,
    flux: float | None = None,
    bracket=(20.0, 2000.0),
) -> FluxQubitCircuit:
    """Pick ``C_r`` so that ``g_ge`` hits the target at ``flux``, then ``L_r`` so the resonator sits at ``omega_c_target``.

    The resonator capacitance is not fixed by the other circuit data, and
    ``g_ge`` falls monotonically with ``C_r``, so a bracketing root search
    closes the system.
    """
    base = replace(circuit, f=circuit.f if flux is None else flux)

    def resid(C_r):
        return qubit_resonator_couplings(replace(base, C_r=C_r), [(0, 1)])[(0, 1)] - g_ge_target

    C_r = optimize.brentq(resid, *bracket, xtol=1e-10, rtol=1e-12)
    tuned = replace(circuit, C_r=C_r, L_r=1.0)
    scale = resonator_frequency(tuned)  # frequency at L_r = 1 nH; f scales as L^-1/2
    return replace(tuned, L_r=(scale / omega_c_target) ** 2)


@dataclass(frozen=True)
class QubitSpectrumResult:
    fluxes: np.ndarray
    energies: np.ndarray  # (n_flux, n_levels), relative to ground
    couplings: dict  # (i, j) -> array over flux


def flux_sweep(circuit: FluxQubitCircuit, fluxes, n_levels: int = 3, pairs=((0, 1), (1, 2), (0, 2))) -> QubitSpectrumResult:
    fluxes = np.asarray(fluxes, dtype=float)
    energies = np.empty((fluxes.size, n_levels))
    couplings = {tuple(p): np.empty(fluxes.size) for p in pairs}
    n_need = max(n_levels, max(max(p) for p in pairs) + 1)
    for i, f in enumerate(fluxes):
        E, g = _levels_and_couplings(replace(circuit, f=float(f)), n_need)
        energies[i] = E[:n_levels]
        for p in pairs:
            couplings[tuple(p)][i] = g[p[0], p[1]]
    return QubitSpectrumResult(fluxes, energies, couplings)


# Published component values; C_r is a placeholder until calibrate_resonator runs.
REFERENCE_CIRCUIT = FluxQubitCircuit(
    C_J=10.76, E_J=135.0, alpha=0.6, C_sh=22.06, C_c=5.92, E_r=5.25, C_r=100.0, f=0.4916,
)
