"""Time evolution: Schrödinger and Lindblad integration, frames, Floquet propagators.

Hamiltonians are held as a sum of constant matrices times scalar
coefficients ``envelope(t) * exp(i * freq * t)``. Keeping the coefficients
structured lets a number-operator rotating frame be applied exactly: each
matrix is split into blocks by how much it changes the frame generator and
the blocks pick up the matching phase.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import linalg, sparse
import scipy.sparse.linalg  # noqa: F401  (registers sparse.linalg)
from scipy.integrate import solve_ivp

from .operators import CompositeSpace, DensityMatrix, Operator, StateVector, _as_space

__all__ = [
    "IntegrationError",
    "Term",
    "TimeDependentHamiltonian",
    "DriveSchedule",
    "DissipationSpec",
    "EvolutionResult",
    "evolve_schrodinger",
    "evolve_lindblad",
    "rotating_frame",
    "magnus4_period_propagator",
    "REFERENCE_DISSIPATION",
]


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Term:
    """``envelope(t) * exp(1j * freq * t) * matrix``; ``envelope=None`` means 1."""

    matrix: np.ndarray
    freq: float = 0.0
    envelope: Callable[[float], complex] | None = None

    def coefficient(self, t: float) -> complex:
        c = complex(math.cos(self.freq * t), math.sin(self.freq * t)) if self.freq else 1.0
        return c * self.envelope(t) if self.envelope is not None else c


class TimeDependentHamiltonian:
    """``H(t) = sum_k c_k(t) M_k`` on a fixed composite space."""

    def __init__(self, space, terms: Sequence[Term]):
        self.space = _as_space(space)
        n = self.space.dimension
        self.sparse = any(sparse.issparse(t.matrix) for t in terms)
        merged: dict = {}
        for term in terms:
            if self.sparse:
                m = sparse.csr_matrix(term.matrix, dtype=np.complex128)
            else:
                m = np.asarray(term.matrix, dtype=np.complex128)
            if m.shape != (n, n):
                raise ValueError(f"term shape {m.shape} does not match dimension {n}")
            key = (round(float(term.freq), 12), id(term.envelope) if term.envelope is not None else None)
            if key in merged:
                merged[key] = (merged[key][0] + m, term.envelope, term.freq)
            else:
                merged[key] = (m.copy(), term.envelope, term.freq)
        kept = [(m, env, f) for m, env, f in merged.values() if (m.count_nonzero() if self.sparse else np.any(m))]
        self.terms = tuple(Term(m, f, env) for m, env, f in kept)
        if not self.terms:
            zero = sparse.csr_matrix((n, n), dtype=np.complex128) if self.sparse else np.zeros((n, n), np.complex128)
            self.terms = (Term(zero),)
        if self.sparse:
            self._stack = sparse.vstack([t.matrix for t in self.terms], format="csr")
        else:
            self._stack = np.vstack([t.matrix for t in self.terms])

    @classmethod
    def constant(cls, op: Operator | np.ndarray, space=None) -> "TimeDependentHamiltonian":
        if isinstance(op, Operator):
            return cls(op.space, [Term(op.matrix)])
        return cls(space, [Term(np.asarray(op))])

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def coefficients(self, t: float) -> np.ndarray:
        return np.array([term.coefficient(t) for term in self.terms], dtype=np.complex128)

    def matrix_at(self, t: float) -> np.ndarray:
        """Dense ``H(t)``."""
        c = self.coefficients(t)
        if self.sparse:
            return sum((ck * term.matrix for ck, term in zip(c, self.terms)), sparse.csr_matrix(
                (self.dimension, self.dimension), dtype=np.complex128)).toarray()
        return np.tensordot(c, self._stack.reshape(len(self.terms), self.dimension, self.dimension), 1)

    def __call__(self, t: float) -> Operator:
        return Operator(self.space, self.matrix_at(t))

    def apply(self, t: float, y: np.ndarray) -> np.ndarray:
        """``H(t) @ y`` using one stacked matrix product."""
        z = self._stack @ y
        c = self.coefficients(t)
        if y.ndim == 1:
            return c @ z.reshape(len(self.terms), -1)
        return np.tensordot(c, z.reshape(len(self.terms), self.dimension, -1), 1)

    def scaled(self, factor: float) -> "TimeDependentHamiltonian":
        return TimeDependentHamiltonian(self.space, [Term(t.matrix * factor, t.freq, t.envelope) for t in self.terms])

    def __add__(self, other: "TimeDependentHamiltonian") -> "TimeDependentHamiltonian":
        if other.space != self.space:
            raise ValueError("Hamiltonians act on different spaces")
        return TimeDependentHamiltonian(self.space, list(self.terms) + list(other.terms))

    def in_rotating_frame(self, generator, omega: float) -> "TimeDependentHamiltonian":
        """Exact transform to the frame ``psi' = exp(+i omega t G) psi`` for diagonal ``G``.

        Entry ``(i, j)`` of every term gains ``exp(i omega (g_i - g_j) t)`` and
        ``-omega G`` is added. Works in whatever units the terms carry;
        ``omega`` must be in the same (angular) units.
        """
        if self.sparse:
            raise ValueError("rotating-frame splitting needs dense terms")
        g = _diagonal(generator, self.dimension)
        diff = g[:, None] - g[None, :]
        levels = np.unique(np.round(diff, 9))
        new_terms = [Term(-omega * np.diag(g).astype(np.complex128))]
        for term in self.terms:
            for lv in levels:
                block = np.where(np.abs(diff - lv) < 1e-9, term.matrix, 0.0)
                if np.any(block):
                    new_terms.append(Term(block, term.freq + omega * lv, term.envelope))
        return TimeDependentHamiltonian(self.space, new_terms)

    def hermiticity_error(self, t: float) -> float:
        if self.sparse:
            c = self.coefficients(t)
            m = sum((ck * term.matrix for ck, term in zip(c, self.terms)), sparse.csr_matrix(
                (self.dimension, self.dimension), dtype=np.complex128))
            return float(sparse.linalg.norm(m - m.conj().T)) / max(1.0, float(sparse.linalg.norm(m)))
        m = self.matrix_at(t)
        return float(np.linalg.norm(m - m.conj().T)) / max(1.0, float(np.linalg.norm(m)))


def _diagonal(generator, n: int) -> np.ndarray:
    if isinstance(generator, Operator):
        m = generator.matrix
        if np.any(np.abs(m - np.diag(np.diag(m))) > 0):
            raise ValueError("frame generator must be diagonal")
        g = np.real(np.diag(m))
    else:
        g = np.asarray(generator)
        if g.ndim == 2:
            g = np.real(np.diag(g))
        g = np.real(g)
    if g.shape != (n,):
        raise ValueError(f"generator has {g.shape[0]} entries, expected {n}")
    return g.astype(float)


def rotating_frame(value, omega_frame: float, t: float, generator, inverse: bool = False):
    """Apply ``U = exp(+i omega t G)``: states map to ``U psi``, operators and density matrices to ``U X U^dag``.

    ``omega_frame`` is an angular frequency; ``inverse=True`` applies ``U^dag``.
    """
    space = value.space
    g = _diagonal(generator, space.dimension)
    sign = -1.0 if inverse else 1.0
    u = np.exp(sign * 1j * omega_frame * t * g)
    if isinstance(value, StateVector):
        return StateVector(space, u * value.amplitudes)
    if isinstance(value, DensityMatrix):
        return DensityMatrix(space, u[:, None] * value.matrix * u.conj()[None, :], validate=False)
    if isinstance(value, Operator):
        return Operator(space, u[:, None] * value.matrix * u.conj()[None, :])
    raise TypeError(f"cannot transform {type(value).__name__}")


@dataclass(frozen=True)
class DriveSchedule:
    """Quartic-exponential ramp ``amplitude * (1 - exp(-(t/tau)^4))`` on ``[0, T]`` (ns)."""

    amplitude: float
    tau: float
    T: float

    def __post_init__(self):
        if self.tau <= 0 or self.T <= 0:
            raise ValueError("tau and T must be positive")

    def envelope(self, t: float) -> float:
        return 1.0 - math.exp(-((t / self.tau) ** 4))

    def value(self, t: float) -> float:
        return self.amplitude * self.envelope(t)


@dataclass(frozen=True)
class DissipationSpec:
    """Decay rates in inverse microseconds."""

    kappa: float = 0.0
    gamma_ge: float = 0.0
    gamma_ef: float = 0.0
    gamma_gf: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "gamma_ge", "gamma_ef", "gamma_gf"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def per_ns(self) -> dict[str, float]:
        return {k: getattr(self, k) / 1000.0 for k in ("kappa", "gamma_ge", "gamma_ef", "gamma_gf")}

    def collapse_operators(self, dim: int) -> list[tuple[float, np.ndarray]]:
        """``(rate per ns, O)`` pairs on qutrit (slot 0) x resonator (slot 1)."""
        r = self.per_ns()
        I3, I = np.eye(3), np.eye(dim)
        a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)

        def tr(j, k):
            m = np.zeros((3, 3))
            m[j, k] = 1.0
            return np.kron(m, I)

        ops = [(r["kappa"], np.kron(I3, a)), (r["gamma_ge"], tr(0, 1)),
               (r["gamma_ef"], tr(1, 2)), (r["gamma_gf"], tr(0, 2))]
        return [(rate, op.astype(np.complex128)) for rate, op in ops if rate > 0]


REFERENCE_DISSIPATION = DissipationSpec(kappa=1 / 500, gamma_ge=1 / 1.5, gamma_ef=1 / 1.0, gamma_gf=1 / 1.5)


@dataclass
class EvolutionResult:
    times: np.ndarray
    observables: dict[str, np.ndarray]
    states: np.ndarray | None
    space: CompositeSpace
    info: dict = field(default_factory=dict)

    def final_state(self):
        if self.states is None:
            raise ValueError("states were not stored")
        last = self.states[-1]
        if last.ndim == 1:
            return StateVector(self.space, last)
        return DensityMatrix(self.space, (last + last.conj().T) / 2, validate=False)


def _as_tdh(H, space) -> TimeDependentHamiltonian:
    if isinstance(H, TimeDependentHamiltonian):
        return H
    if isinstance(H, Operator):
        return TimeDependentHamiltonian.constant(H)
    if callable(H):
        raise TypeError("pass a TimeDependentHamiltonian; plain callables cannot be split into terms")
    return TimeDependentHamiltonian.constant(np.asarray(H), space)


def _observe(observables, value, out, k):
    for name, fn in observables.items():
        out[name][k] = fn(value)


def evolve_schrodinger(
    H,
    psi0: StateVector,
    times: Sequence[float],
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-12,
    angular_factor: float = 1.0,
    observables: Mapping[str, Callable[[np.ndarray], float]] | None = None,
    store_states: bool = True,
    norm_tol: float = 1e-6,
) -> EvolutionResult:
    """Integrate ``i dpsi/dt = angular_factor * H(t) psi`` with an adaptive 8th-order Runge-Kutta method.

    ``times`` are the snapshot times; the first is the initial time.
    Observables receive the raw amplitude vector at each snapshot.
    """
    H = _as_tdh(H, psi0.space)
    if H.space != psi0.space:
        raise ValueError("Hamiltonian and initial state act on different spaces")
    times = np.asarray(times, dtype=float)
    for t in (times[0], times[len(times) // 2], times[-1]):
        if H.hermiticity_error(t) > 1e-10:
            raise ValueError(f"Hamiltonian is not Hermitian at t={t}")
    Hs = H.scaled(angular_factor)

    def rhs(t, y):
        return -1j * Hs.apply(t, y)

    t0 = time.perf_counter()
    sol = solve_ivp(rhs, (times[0], times[-1]), psi0.amplitudes.copy(), method="DOP853",
                    t_eval=times, rtol=rel_tol, atol=abs_tol)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    Y = sol.y.T
    drift = float(np.max(np.abs(np.linalg.norm(Y, axis=1) - 1.0)))
    if drift > norm_tol:
        raise IntegrationError(f"norm drift {drift:.2e} exceeds {norm_tol:.1e}")
    observables = dict(observables or {})
    obs = {name: np.empty(len(times)) for name in observables}
    for k in range(len(times)):
        _observe(observables, Y[k], obs, k)
    info = {"nfev": int(sol.nfev), "norm_drift": drift, "wall_s": time.perf_counter() - t0,
            "rel_tol": rel_tol, "abs_tol": abs_tol}
    return EvolutionResult(times, obs, Y if store_states else Y[-1:], psi0.space, info)


def evolve_lindblad(
    H,
    rho0: DensityMatrix,
    collapse: Sequence[tuple[float, np.ndarray]],
    times: Sequence[float],
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-12,
    angular_factor: float = 1.0,
    observables: Mapping[str, Callable[[np.ndarray], float]] | None = None,
    store_states: bool = True,
    trace_tol: float = 1e-8,
) -> EvolutionResult:
    """Integrate ``drho/dt = -i[H, rho] + sum_k rate_k D[O_k] rho``.

    ``collapse`` holds ``(rate, O)`` pairs with rates in the time unit of
    ``times``. The derivative is made Hermitian at every evaluation.
    """
    H = _as_tdh(H, rho0.space)
    if H.space != rho0.space:
        raise ValueError("Hamiltonian and initial state act on different spaces")
    n = rho0.space.dimension
    times = np.asarray(times, dtype=float)
    Hs = H.scaled(angular_factor)
    ops = [(float(r), np.asarray(O, dtype=np.complex128)) for r, O in collapse]
    for r, _ in ops:
        if r < 0:
            raise ValueError("collapse rates must be non-negative")
    # anti-Hermitian part folded into an effective non-Hermitian generator
    damp = sum((r * O.conj().T @ O for r, O in ops), np.zeros((n, n), dtype=np.complex128)) / 2
    jumps = [(r, O, O.conj().T) for r, O in ops]

    def rhs(t, y):
        rho = y.reshape(n, n)
        # rounding seeds an anti-Hermitian part that the folded generator would amplify
        rho = (rho + rho.conj().T) / 2
        A = -1j * Hs.matrix_at(t) - damp
        d = A @ rho
        d = d + d.conj().T
        for r, O, Od in jumps:
            d = d + r * (O @ rho @ Od)
        return d.ravel()

    t0 = time.perf_counter()
    sol = solve_ivp(rhs, (times[0], times[-1]), np.array(rho0.matrix).ravel(), method="DOP853",
                    t_eval=times, rtol=rel_tol, atol=abs_tol)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    R = sol.y.T.reshape(len(times), n, n)
    R = (R + R.conj().transpose(0, 2, 1)) / 2
    traces = np.real(np.trace(R, axis1=1, axis2=2))
    drift = float(np.max(np.abs(traces - 1.0)))
    if drift > trace_tol:
        raise IntegrationError(f"trace drift {drift:.2e} exceeds {trace_tol:.1e}")
    min_eig = min(float(np.linalg.eigvalsh(r)[0]) for r in R)
    if min_eig < -1e-6:
        raise IntegrationError(f"density matrix lost positivity (eigenvalue {min_eig:.2e})")
    observables = dict(observables or {})
    obs = {name: np.empty(len(times)) for name in observables}
    for k in range(len(times)):
        _observe(observables, R[k], obs, k)
    info = {"nfev": int(sol.nfev), "trace_drift": drift, "min_eigenvalue": min_eig,
            "wall_s": time.perf_counter() - t0, "rel_tol": rel_tol, "abs_tol": abs_tol}
    return EvolutionResult(times, obs, R if store_states else R[-1:], rho0.space, info)


_GAUSS2 = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def magnus4_period_propagator(H_static: np.ndarray, drive: np.ndarray, omega: float, n_steps: int,
                              t_start: float = 0.0, n_apply: int | None = None,
                              envelope: Callable[[float], float] | None = None) -> np.ndarray:
    """Propagator over one period ``2 pi / omega`` of ``H_static + env(t) cos(omega t) drive``.

    Fourth-order Magnus scheme with two Gauss points per step. ``omega`` is
    angular and the matrices are in the matching angular units. ``n_apply``
    stops after that many steps, which gives propagators to fractions of the
    period. ``envelope`` defaults to 1.
    """
    period = 2 * math.pi / omega
    h = period / n_steps
    U = np.eye(H_static.shape[0], dtype=np.complex128)
    c = math.sqrt(3) / 12 * h**2
    for k in range(n_steps if n_apply is None else n_apply):
        t1 = t_start + (k + _GAUSS2[0]) * h
        t2 = t_start + (k + _GAUSS2[1]) * h
        f1 = math.cos(omega * t1) * (envelope(t1) if envelope else 1.0)
        f2 = math.cos(omega * t2) * (envelope(t2) if envelope else 1.0)
        A1 = H_static + f1 * drive
        A2 = H_static + f2 * drive
        Om = -0.5j * h * (A1 + A2) + c * (A1 @ A2 - A2 @ A1)
        U = linalg.expm(Om) @ U
    return U
