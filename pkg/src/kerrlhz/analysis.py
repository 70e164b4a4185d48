"""Phase-space and readout observables for resonator states."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .operators import (
    DensityMatrix,
    ModeKind,
    StateVector,
    cat_state,
    coherent_state,
    product_state,
    reduced_density_matrix,
)

__all__ = [
    "WignerGrid",
    "ReadoutResult",
    "AmbiguousReadoutError",
    "wigner",
    "wigner_displaced_parity",
    "cat_fidelity",
    "state_fidelity",
    "spin_readout",
    "photon_parity",
]

WIGNER_CONVENTION = "x=(a+a^dag)/sqrt2, p=(a-a^dag)/(i sqrt2), W=(1/pi) Tr[rho D(b) P D(b)^dag], b=(x+ip)/sqrt2"


@dataclass(frozen=True)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    W: np.ndarray  # W[i, j] at (x[j], p[i])
    convention: str = WIGNER_CONVENTION

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.W, self.x, axis=1), self.p))


def _single_mode_rho(state) -> np.ndarray:
    if isinstance(state, StateVector):
        v = state.amplitudes
        space = state.space
        rho = np.outer(v, v.conj())
    elif isinstance(state, DensityMatrix):
        space = state.space
        rho = np.asarray(state.matrix)
    else:
        rho = np.asarray(state, dtype=np.complex128)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        return rho
    if len(space) != 1:
        raise ValueError("expected a single-mode state; take a partial trace first")
    return rho


def wigner(state, x_grid, p_grid) -> WignerGrid:
    """Wigner function from the closed-form Fock-basis expansion.

    Each ``|m><n|`` contributes an associated-Laguerre term, so no
    displacement operators are built and truncation never enters.
    """
    rho = _single_mode_rho(state)
    x = np.asarray(x_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    X, P = np.meshgrid(x, p)
    beta = (X + 1j * P) / math.sqrt(2)
    r2 = 4 * np.abs(beta) ** 2
    gauss = np.exp(-r2 / 2)
    dim = rho.shape[0]
    W = np.zeros(beta.shape, dtype=np.complex128)
    for m in range(dim):
        for n in range(m + 1):
            coef_mn = rho[m, n]
            coef_nm = rho[n, m]
            if coef_mn == 0 and coef_nm == 0:
                continue
            k = m - n
            pref = (-1) ** n * math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
            term = pref * (2 * np.conj(beta)) ** k * gauss * eval_genlaguerre(n, k, r2)
            if k == 0:
                W += coef_mn * term
            else:
                W += coef_mn * term + coef_nm * np.conj(term)
    # x-p measure: dx dp = 2 d^2 beta
    return WignerGrid(x, p, np.real(W) / math.pi)


def wigner_displaced_parity(state, x_grid, p_grid, pad: int = 40) -> WignerGrid:
    """Wigner function from displaced parity on an enlarged Fock space (slow reference route)."""
    from scipy.linalg import expm

    rho = _single_mode_rho(state)
    d = rho.shape[0]
    n = d + pad
    big = np.zeros((n, n), dtype=np.complex128)
    big[:d, :d] = rho
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)
    parity = np.diag((-1.0) ** np.arange(n))
    x = np.asarray(x_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    W = np.empty((p.size, x.size))
    for i, pv in enumerate(p):
        for j, xv in enumerate(x):
            b = (xv + 1j * pv) / math.sqrt(2)
            D = expm(b * a.conj().T - np.conj(b) * a)
            W[i, j] = np.real(np.trace(big @ D @ parity @ D.conj().T)) / math.pi
    return WignerGrid(x, p, W)


def photon_parity(state) -> float:
    rho = _single_mode_rho(state)
    return float(np.real(np.sum(np.diag(rho) * (-1.0) ** np.arange(rho.shape[0]))))


def state_fidelity(rho, target: np.ndarray) -> float:
    """``sqrt(<t|rho|t>)`` for a density matrix, ``|<t|psi>|`` for a pure vector."""
    t = np.asarray(target, dtype=np.complex128)
    r = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else
                   rho.amplitudes if isinstance(rho, StateVector) else rho)
    if r.ndim == 1:
        return float(abs(np.vdot(t, r)))
    return float(math.sqrt(max(np.real(np.vdot(t, r @ t)), 0.0)))


def cat_fidelity(rho_r, alpha: float) -> float:
    """Square root of the overlap of a single-mode state with the even cat at ``alpha``."""
    rho = _single_mode_rho(rho_r)
    if alpha == 0:
        target = np.zeros(rho.shape[0], dtype=np.complex128)
        target[0] = 1.0
    else:
        target = cat_state(alpha, "even", rho.shape[0]).amplitudes
    return float(math.sqrt(max(np.real(np.vdot(target, rho @ target)), 0.0)))


class AmbiguousReadoutError(ValueError):
    pass


@dataclass(frozen=True)
class ReadoutResult:
    signs: tuple[int, ...]
    confidence: tuple[float, ...]
    span_weight: tuple[float, ...]
    fidelity: float
    low_confidence: bool


def spin_readout(state, alpha: float, min_confidence: float = 1e-3, min_span_weight: float = 0.9) -> ReadoutResult:
    """Decode each resonator's sign from its overlap with ``|+alpha>`` and ``|-alpha>``.

    The encoding fidelity is ``|<s1 alpha, ..., sn alpha|psi>|`` for a pure
    state and ``sqrt(<target|rho|target>)`` for a density matrix.
    """
    space = state.space
    for m in space.modes:
        if m.kind is not ModeKind.FOCK:
            raise ValueError("spin readout needs resonator (Fock) modes only")
    signs, conf, weights, coh = [], [], [], []
    for slot, mode in enumerate(space.modes):
        if isinstance(state, StateVector):
            rho = reduced_density_matrix(state, [slot]).matrix
        else:
            from .operators import partial_trace

            rho = partial_trace(state, [slot]).matrix
        plus = coherent_state(alpha, mode.dimension).amplitudes
        minus = coherent_state(-alpha, mode.dimension).amplitudes
        pp = float(np.real(np.vdot(plus, rho @ plus)))
        pm = float(np.real(np.vdot(minus, rho @ minus)))
        ce = cat_state(alpha, "even", mode.dimension).amplitudes
        co = cat_state(alpha, "odd", mode.dimension).amplitudes
        w = float(np.real(np.vdot(ce, rho @ ce) + np.vdot(co, rho @ co)))
        c = abs(pp - pm)
        if c < min_confidence:
            raise AmbiguousReadoutError(f"resonator {slot}: overlaps with +alpha and -alpha differ by {c:.2e}")
        s = 1 if pp >= pm else -1
        signs.append(s)
        conf.append(c)
        weights.append(w)
        coh.append(plus if s > 0 else minus)
    target = product_state([StateVector(m, v) for m, v in zip(space.modes, coh)]).amplitudes
    fid = state_fidelity(state, target)
    low = any(w < min_span_weight for w in weights)
    if low:
        warnings.warn("a resonator has less than the required weight in the cat subspace", stacklevel=2)
    return ReadoutResult(tuple(signs), tuple(conf), tuple(weights), fid, low)
