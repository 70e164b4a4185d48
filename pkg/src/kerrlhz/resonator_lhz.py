"""Parity-embedded Ising annealer built from two-photon-driven Kerr resonators.

Every physical spin of the three-body parity lattice becomes a resonator
whose two coherent ground states ``|+alpha>`` and ``|-alpha>`` encode
``sigma^z = +1`` and ``-1``. Fields enter as single-photon drives and each
three-spin constraint as a coupling ``J (a_i^dag a_j^dag a_k + h.c.)``.

In the frame rotating with the instantaneous single-photon drive the
annealing Hamiltonian is ``(1 - s) H_I + s H_P`` with

* ``H_I = sum_j delta_j n_j + K_j a_j^dag^2 a_j^2`` (vacuum ground state),
* ``H_P = sum_j K_j a_j^dag^2 a_j^2 + eps_p_j (a_j^dag^2 + a_j^2) + eps_d_j (a_j + a_j^dag)``
  ``+ sum_c J_c (a_i^dag a_j^dag a_k + h.c.)``.

Energies and times are in units of the Ising scale (``hbar = 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .analysis import ReadoutResult, spin_readout
from .dynamics import EvolutionResult, Term, TimeDependentHamiltonian, evolve_schrodinger
from .lhz import IsingInstance, LhzEmbedding, lhz_decompose3, lhz_embed4
from .operators import CompositeSpace, ModeSpace, Operator, StateVector, coherent_amplitudes

__all__ = [
    "ResonatorLhzParams",
    "CatIsingProjection",
    "LhzAnnealOutput",
    "resonator_space",
    "resonator_lhz_terms",
    "resonator_lhz_hamiltonian",
    "lab_frame_hamiltonian",
    "frame_phases",
    "rotating_anneal_hamiltonian",
    "to_rotating_frame",
    "project_to_cat_ising",
    "resonator_lhz_anneal",
    "mode_observables",
]


@dataclass(frozen=True)
class ResonatorLhzParams:
    """Per-resonator ``delta, K, eps_p, eps_d`` and constraint triples ``((i, j, k), J)``.

    A triple couples ``a_i^dag a_j^dag a_k + h.c.``. ``omega`` holds the
    resonator frequencies used only by the lab-frame Hamiltonian.
    """

    delta: tuple[float, ...]
    K: tuple[float, ...]
    eps_p: tuple[float, ...]
    eps_d: tuple[float, ...]
    triples: tuple[tuple[tuple[int, int, int], float], ...]
    T: float = 50.0
    omega: tuple[float, ...] | None = None
    labels: tuple = ()

    def __post_init__(self):
        n = len(self.delta)
        for name in ("K", "eps_p", "eps_d"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} needs {n} entries")
        if self.omega is not None and len(self.omega) != n:
            raise ValueError(f"omega needs {n} entries")
        for (i, j, k), _ in self.triples:
            if len({i, j, k}) != 3 or not all(0 <= x < n for x in (i, j, k)):
                raise ValueError(f"bad constraint triple {(i, j, k)}")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def n_resonators(self) -> int:
        return len(self.delta)

    def alphas(self) -> np.ndarray:
        K = np.asarray(self.K, dtype=float)
        if np.any(K == 0):
            raise ValueError("Kerr coefficient must be nonzero")
        return np.sqrt(np.abs(np.asarray(self.eps_p, dtype=float)) / np.abs(K))

    @classmethod
    def from_embedding(cls, emb: LhzEmbedding, delta: float = 4.5, K: float = 10.0, eps_p: float = -20.0,
                       T: float = 50.0, omega: Sequence[float] | None = None) -> "ResonatorLhzParams":
        """Fields become ``eps_d = h / (2 alpha)``, constraints ``J = -C / (2 alpha^3)``.

        With those choices the cat-subspace energy is ``sum h s - C sum s s s``.
        """
        if any(len(c) != 3 for c in emb.constraints):
            raise ValueError("resonator encoding needs three-body constraints only")
        n = emb.n_physical
        alpha = math.sqrt(abs(eps_p) / K)
        triples = tuple((tuple(c), -emb.C / (2 * alpha**3)) for c in emb.constraints)
        return cls((delta,) * n, (K,) * n, (eps_p,) * n, tuple(float(h) / (2 * alpha) for h in emb.fields),
                   triples, T, None if omega is None else tuple(omega), emb.labels)

    @classmethod
    def from_ising(cls, inst: IsingInstance, C: float, **kw) -> "ResonatorLhzParams":
        emb = lhz_embed4(inst, C)
        if any(len(c) == 4 for c in emb.constraints):
            emb = lhz_decompose3(emb)
        return cls.from_embedding(emb, **kw)


def resonator_space(n: int, dim: int) -> CompositeSpace:
    return CompositeSpace(tuple(ModeSpace.fock(dim) for _ in range(n)))


def _ladders(n: int, dim: int) -> list[sparse.csr_matrix]:
    a = sparse.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr")
    eye = sparse.identity(dim, format="csr")
    out = []
    for k in range(n):
        m = sparse.identity(1, format="csr")
        for j in range(n):
            m = sparse.kron(m, a if j == k else eye, format="csr")
        out.append(m.astype(np.complex128))
    return out


def resonator_lhz_terms(p: ResonatorLhzParams, dim: int):
    """Sparse pieces in the rotating frame.

    Returns a dict with ``detuning`` (``sum delta n``), ``kerr``, and per
    resonator lists ``squeeze`` (``a^dag^2``), ``drive`` (``a^dag``) plus
    ``couplings`` (``a_i^dag a_j^dag a_k`` per triple). Only the raising
    halves are stored; callers add the Hermitian conjugate.
    """
    n = p.n_resonators
    A = _ladders(n, dim)
    Ad = [x.T.conj().tocsr() for x in A]
    num = [Ad[k] @ A[k] for k in range(n)]
    kerr = sum(p.K[k] * (Ad[k] @ Ad[k] @ A[k] @ A[k]) for k in range(n))
    det = sum(p.delta[k] * num[k] for k in range(n))
    return {
        "a": A,
        "number": num,
        "detuning": det.tocsr(),
        "kerr": kerr.tocsr(),
        "squeeze": [(Ad[k] @ Ad[k]).tocsr() for k in range(n)],
        "drive": [Ad[k] for k in range(n)],
        "couplings": [(Ad[i] @ Ad[j] @ A[k]).tocsr() for (i, j, k), _ in p.triples],
    }


def _problem_parts(p: ResonatorLhzParams, dim: int):
    t = resonator_lhz_terms(p, dim)
    HI = (t["detuning"] + t["kerr"]).tocsr()
    HP = t["kerr"].copy()
    for k in range(p.n_resonators):
        HP = HP + p.eps_p[k] * (t["squeeze"][k] + t["squeeze"][k].conj().T)
        HP = HP + p.eps_d[k] * (t["drive"][k] + t["drive"][k].conj().T)
    for ((_, J), M) in zip(p.triples, t["couplings"]):
        HP = HP + J * (M + M.conj().T)
    return HI, HP.tocsr(), t


def resonator_lhz_hamiltonian(p: ResonatorLhzParams, s: float, dim: int = 12, frame: str = "rotating",
                              t: float | None = None) -> Operator:
    """``H`` at anneal fraction ``s`` (rotating frame) or at time ``t`` (lab frame)."""
    space = resonator_space(p.n_resonators, dim)
    if frame == "rotating":
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        HI, HP, _ = _problem_parts(p, dim)
        return Operator(space, ((1 - s) * HI + s * HP).toarray())
    if frame == "lab":
        if t is None:
            t = s * p.T
        return lab_frame_hamiltonian(p, dim)(t)
    raise ValueError(f"frame must be 'rotating' or 'lab', got {frame!r}")


def frame_phases(p: ResonatorLhzParams, t: float) -> np.ndarray:
    """Accumulated drive phases ``theta_j(t) = omega_d_j(t) t`` with ``omega_d_j(t) = omega_j - delta_j (1 - t/(2T))``."""
    if p.omega is None:
        raise ValueError("lab-frame quantities need resonator frequencies 'omega'")
    w = np.asarray(p.omega, dtype=float)
    d = np.asarray(p.delta, dtype=float)
    return (w - d * (1 - t / (2 * p.T))) * t


def lab_frame_hamiltonian(p: ResonatorLhzParams, dim: int) -> TimeDependentHamiltonian:
    """Lab-frame Hamiltonian with chirped two-photon and single-photon drives and a pumped triple coupling.

    Pump and coupling amplitudes ramp as ``t/T``; the two-photon drive sits
    at twice the single-photon drive frequency and each coupling pump at
    ``omega_d_i + omega_d_j - omega_d_k``.
    """
    _, _, t = _problem_parts(p, dim)
    n = p.n_resonators
    T = p.T
    static = sum(p.omega[k] * t["number"][k] for k in range(n)) + t["kerr"]
    terms = [Term(static.tocsr())]

    def chirp(coef):
        def up(tt, c=coef):
            return (tt / T) * np.exp(-1j * (c @ frame_phases(p, tt)))

        def down(tt, c=coef):
            return (tt / T) * np.exp(1j * (c @ frame_phases(p, tt)))

        return up, down

    for k in range(n):
        c2 = np.zeros(n)
        c2[k] = 2.0
        up, down = chirp(c2)
        S = p.eps_p[k] * t["squeeze"][k]
        terms += [Term(S, 0.0, up), Term(S.conj().T.tocsr(), 0.0, down)]
        c1 = np.zeros(n)
        c1[k] = 1.0
        up, down = chirp(c1)
        D = p.eps_d[k] * t["drive"][k]
        terms += [Term(D, 0.0, up), Term(D.conj().T.tocsr(), 0.0, down)]
    for ((i, j, k), J), M in zip(p.triples, t["couplings"]):
        c = np.zeros(n)
        c[i] += 1.0
        c[j] += 1.0
        c[k] -= 1.0
        up, down = chirp(c)
        terms += [Term(J * M, 0.0, up), Term((J * M).conj().T.tocsr(), 0.0, down)]
    return TimeDependentHamiltonian(resonator_space(n, dim), terms)


def rotating_anneal_hamiltonian(p: ResonatorLhzParams, dim: int) -> TimeDependentHamiltonian:
    HI, HP, _ = _problem_parts(p, dim)
    T = p.T
    return TimeDependentHamiltonian(resonator_space(p.n_resonators, dim),
                                    [Term(HI), Term((HP - HI).tocsr(), 0.0, lambda tt: tt / T)])


def to_rotating_frame(p: ResonatorLhzParams, psi_lab: np.ndarray, t: float, dim: int) -> np.ndarray:
    """``exp(+i sum theta_j(t) n_j) psi``: the lab state seen in the drive frame."""
    theta = frame_phases(p, t)
    phase = np.zeros([dim] * p.n_resonators)
    for k in range(p.n_resonators):
        shape = [1] * p.n_resonators
        shape[k] = dim
        phase = phase + theta[k] * np.arange(dim).reshape(shape)
    return np.exp(1j * phase).ravel() * psi_lab


@dataclass(frozen=True)
class CatIsingProjection:
    """Ising model seen inside the cat subspace: ``sum h_j s_j + sum C_c s_i s_j s_k``."""

    h: tuple[float, ...]
    C: tuple[tuple[tuple[int, int, int], float], ...]
    alpha: float
    overlap_scale: float
    valid: bool


def project_to_cat_ising(p: ResonatorLhzParams, validity_ratio: float = 0.2) -> CatIsingProjection:
    """``h_j = 2 eps_d_j alpha`` and ``C_c = 2 J_c alpha^3``.

    ``overlap_scale = exp(-2 alpha^2)`` sizes the neglected corrections.
    ``valid`` is false when a drive or coupling reaches ``validity_ratio``
    of the cat gap ``K alpha^2``.
    """
    al = p.alphas()
    if not np.allclose(al, al[0], rtol=1e-12):
        raise ValueError("cat amplitudes differ between resonators")
    alpha = float(al[0])
    h = tuple(2 * e * alpha for e in p.eps_d)
    C = tuple((c, 2 * J * alpha**3) for c, J in p.triples)
    gap = min(abs(k) for k in p.K) * alpha**2
    worst = max([abs(e) for e in p.eps_d] + [abs(J) * alpha for _, J in p.triples] + [0.0])
    return CatIsingProjection(h, C, alpha, math.exp(-2 * alpha**2), worst < validity_ratio * gap)


def mode_observables(n: int, dim: int) -> dict:
    """``Re<a_j>``, ``Im<a_j>``, ``<n_j>`` for every resonator, keyed ``re_a_<j>`` etc. (1-based)."""
    sq = np.sqrt(np.arange(1, dim, dtype=float))
    nn = np.arange(dim, dtype=float)
    obs = {}

    def moved(v, k):
        return np.moveaxis(v.reshape([dim] * n), k, 0).reshape(dim, -1)

    def a_mean(v, k):
        M = moved(v, k)
        return complex(np.sum(M[:-1].conj() * (sq[:, None] * M[1:])))

    for k in range(n):
        obs[f"re_a_{k + 1}"] = lambda v, k=k: a_mean(v, k).real
        obs[f"im_a_{k + 1}"] = lambda v, k=k: a_mean(v, k).imag
        obs[f"n_avg_{k + 1}"] = lambda v, k=k: float(np.sum(np.abs(moved(v, k)) ** 2 * nn[:, None]))
    return obs


@dataclass
class LhzAnnealOutput:
    result: EvolutionResult
    readout: ReadoutResult
    ground_state_fidelity: float
    alpha: float
    meta: dict = field(default_factory=dict)


def resonator_lhz_anneal(p: ResonatorLhzParams, dim: int = 12, n_snapshots: int = 101, rel_tol: float = 1e-8,
                         abs_tol: float = 1e-10, ground_state: bool = True) -> LhzAnnealOutput:
    """Anneal from the global vacuum over ``[0, T]`` in the rotating frame and read out the cats.

    ``ground_state_fidelity`` is the encoding fidelity of the exact ground
    state of ``H_P`` (what a perfectly adiabatic run would reach).
    """
    n = p.n_resonators
    space = resonator_space(n, dim)
    H = rotating_anneal_hamiltonian(p, dim)
    psi0 = np.zeros(space.dimension, dtype=np.complex128)
    psi0[0] = 1.0
    res = evolve_schrodinger(H, StateVector(space, psi0), np.linspace(0.0, p.T, n_snapshots), rel_tol=rel_tol,
                             abs_tol=abs_tol, observables=mode_observables(n, dim), store_states=False)
    alpha = float(p.alphas()[0])
    readout = spin_readout(StateVector(space, res.states[-1]), alpha)
    gs_fid = float("nan")
    if ground_state:
        _, HP, _ = _problem_parts(p, dim)
        # Lanczos from a fixed start vector keeps the result reproducible
        _, V = eigsh(HP.tocsr(), k=1, which="SA", v0=np.ones(HP.shape[0], dtype=np.complex128), tol=1e-12)
        target = coherent_amplitudes(readout.signs[0] * alpha, dim)
        for s in readout.signs[1:]:
            target = np.kron(target, coherent_amplitudes(s * alpha, dim))
        target = target / np.linalg.norm(target)
        gs_fid = float(abs(np.vdot(target, V[:, 0])))
    return LhzAnnealOutput(res, readout, gs_fid, alpha, {"dim": dim, "T": p.T})
