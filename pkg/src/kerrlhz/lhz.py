"""Spin-level parity (LHZ) embedding of all-to-all Ising problems and annealing spectra.

Logical spins are ``1..N`` plus a ghost spin ``0`` fixed to +1. Physical
spins are the unordered pairs ``(i, j)`` with ``0 <= i < j <= N``; a pair
holds the parity ``s_i s_j``. Ghost pairs ``(0, j)`` therefore carry the
logical spin ``s_j`` and its field ``h_j``; other pairs carry ``J_ij``.

Constraints live on a triangular lattice. The base row closes with
three-spin plaquettes ``{(i, i+1), (i, i+2), (i+1, i+2)}``; interior
plaquettes are four-spin ``{(i, j), (i, j+1), (i+1, j+1), (i+1, j)}``.
The three-body scheme splits every four-spin plaquette into two triples
sharing a fresh ancilla.

Basis convention: spin ``k`` of an ``n``-spin register is bit ``n-1-k`` of
the basis index, bit 0 is up (``sigma^z = +1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .operators import CompositeSpace, ModeSpace, Operator

__all__ = [
    "PRNG_ALGORITHM",
    "IsingInstance",
    "LhzEmbedding",
    "AnnealProblem",
    "SpectrumTrace",
    "GapRecord",
    "random_instance",
    "ising_hamiltonian",
    "ising_energies",
    "brute_force_ground_states",
    "lhz_embed4",
    "lhz_decompose3",
    "direct_problem",
    "transverse_field",
    "anneal_hamiltonian",
    "spectrum_trace",
    "minimum_gap",
    "gap_statistics",
]

PRNG_ALGORITHM = "Philox-4x64-10 counter-based generator (numpy.random.Philox), uniform doubles"


@dataclass(frozen=True, eq=False)
class IsingInstance:
    """``sum_j h_j s_j + sum_{j<k} J_jk s_j s_k`` in units of ``scale``."""

    h: np.ndarray
    J: np.ndarray
    scale: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        J = np.array(self.J, dtype=float)
        N = h.size
        if N < 1 or J.shape != (N, N):
            raise ValueError(f"J must be {N}x{N}")
        if np.any(np.diag(J) != 0):
            raise ValueError("J must have a zero diagonal")
        if not np.allclose(J, J.T, rtol=0, atol=0):
            raise ValueError("J must be symmetric")
        h.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)

    @property
    def N(self) -> int:
        return self.h.size

    def energy(self, spins: Sequence[int]) -> float:
        s = np.asarray(spins, dtype=float)
        return float(self.h @ s + s @ np.triu(self.J, 1) @ s)


def random_instance(N: int, J_scale: float = 1.0, seed: int = 0) -> IsingInstance:
    """Fields then couplings (lexicographic ``j < k``), i.i.d. uniform on ``[-J_scale, J_scale]``."""
    if N < 2:
        raise ValueError("need at least two logical spins")
    rng = np.random.Generator(np.random.Philox(seed))
    h = rng.uniform(-J_scale, J_scale, N)
    J = np.zeros((N, N))
    iu = np.triu_indices(N, 1)
    J[iu] = rng.uniform(-J_scale, J_scale, len(iu[0]))
    return IsingInstance(h, J + J.T, J_scale, seed)


def _z_diagonals(n: int) -> np.ndarray:
    """Row ``k`` holds the sigma^z eigenvalue of spin ``k`` on every basis state."""
    idx = np.arange(2**n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    return 1.0 - 2.0 * bits


def spin_space(n: int) -> CompositeSpace:
    return CompositeSpace(tuple(ModeSpace.spin_half() for _ in range(n)))


def ising_energies(inst: IsingInstance) -> np.ndarray:
    Z = _z_diagonals(inst.N)
    e = inst.h @ Z
    for j in range(inst.N):
        for k in range(j + 1, inst.N):
            e = e + inst.J[j, k] * Z[j] * Z[k]
    return e


def ising_hamiltonian(inst: IsingInstance) -> Operator:
    return Operator(spin_space(inst.N), np.diag(ising_energies(inst)))


def brute_force_ground_states(inst: IsingInstance, tol: float = 1e-12):
    """Ground energy and all minimizing configurations by enumeration."""
    best, configs = math.inf, []
    for s in product((1, -1), repeat=inst.N):
        e = inst.energy(s)
        if e < best - tol:
            best, configs = e, [s]
        elif abs(e - best) <= tol:
            configs.append(s)
    return best, configs


@dataclass(frozen=True, eq=False)
class LhzEmbedding:
    """Physical spins, their fields, and parity constraints (spin-index tuples)."""

    N: int
    labels: tuple
    fields: np.ndarray
    constraints: tuple[tuple[int, ...], ...]
    C: float
    scheme: str

    @property
    def n_physical(self) -> int:
        return len(self.labels)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def field_diagonal(self) -> np.ndarray:
        return self.fields @ _z_diagonals(self.n_physical)

    def constraint_diagonal(self) -> np.ndarray:
        """``-sum_c prod_{k in c} sigma^z_k`` (without the strength ``C``)."""
        Z = _z_diagonals(self.n_physical)
        out = np.zeros(2**self.n_physical)
        for c in self.constraints:
            out -= np.prod(Z[list(c)], axis=0)
        return out

    def operator(self) -> Operator:
        d = self.field_diagonal() + self.C * self.constraint_diagonal()
        return Operator(spin_space(self.n_physical), np.diag(d))

    def mapping_table(self) -> list[dict]:
        rows = []
        for k, lab in enumerate(self.labels):
            kind = "ancilla" if lab[0] == "ancilla" else ("field" if lab[0] == 0 else "coupling")
            rows.append({"index": k, "label": list(lab), "role": kind, "field": float(self.fields[k])})
        return rows

    def decode(self, physical_spins: Sequence[int]) -> tuple[int, ...]:
        """Logical configuration read off the ghost pairs ``(0, j)``."""
        pos = {lab: k for k, lab in enumerate(self.labels)}
        return tuple(int(physical_spins[pos[(0, j)]]) for j in range(1, self.N + 1))

    def encode(self, logical: Sequence[int]) -> tuple[int, ...]:
        s = (1, *logical)
        out = []
        for lab in self.labels:
            out.append(s[lab[0]] * s[lab[1]] if lab[0] != "ancilla" else 1)
        return tuple(out)


def _lattice(N: int):
    L = N + 1
    pairs = [(i, j) for i in range(L) for j in range(i + 1, L)]
    idx = {p: k for k, p in enumerate(pairs)}
    base = [(idx[(i, i + 1)], idx[(i, i + 2)], idx[(i + 1, i + 2)]) for i in range(L - 2)]
    quads = [(idx[(i, j)], idx[(i, j + 1)], idx[(i + 1, j + 1)], idx[(i + 1, j)])
             for i in range(L) for j in range(i + 2, L - 1)]
    return pairs, base, quads


def lhz_embed4(inst: IsingInstance, C: float) -> LhzEmbedding:
    """Parity embedding with base-row triangles and four-spin interior plaquettes."""
    N = inst.N
    if N < 2:
        raise ValueError("need at least two logical spins")
    pairs, base, quads = _lattice(N)
    fields = np.array([inst.h[j - 1] if i == 0 else inst.J[i - 1, j - 1] for i, j in pairs])
    return LhzEmbedding(N, tuple(pairs), fields, tuple(base + quads), float(C), "lhz4")


def lhz_decompose3(emb: LhzEmbedding) -> LhzEmbedding:
    """Replace each four-spin plaquette ``(n, w, s, e)`` by ``(n, w, a)`` and ``(a, s, e)`` with a new ancilla ``a``."""
    if emb.scheme != "lhz4":
        raise ValueError("expected a four-body embedding")
    labels = list(emb.labels)
    fields = list(emb.fields)
    cons = []
    for c in emb.constraints:
        if len(c) == 3:
            cons.append(c)
            continue
        n, w, s, e = c
        a = len(labels)
        labels.append(("ancilla", a))
        fields.append(0.0)
        cons.extend([(n, w, a), (a, s, e)])
    return LhzEmbedding(emb.N, tuple(labels), np.array(fields), tuple(cons), emb.C, "lhz3")


@dataclass(frozen=True, eq=False)
class AnnealProblem:
    """Diagonal problem pieces on ``n_spins`` spins: fields and unit-strength constraint energy."""

    n_spins: int
    field_diag: np.ndarray
    constraint_diag: np.ndarray
    offset: float = 0.0  # constant removed when comparing schemes: -C * n_constraints
    name: str = ""

    @classmethod
    def from_embedding(cls, emb: LhzEmbedding) -> "AnnealProblem":
        return cls(emb.n_physical, emb.field_diagonal(), emb.C * emb.constraint_diagonal(),
                   -emb.C * emb.n_constraints, emb.scheme)

    def final_diagonal(self) -> np.ndarray:
        return self.field_diag + self.constraint_diag


def direct_problem(inst: IsingInstance) -> AnnealProblem:
    return AnnealProblem(inst.N, ising_energies(inst), np.zeros(2**inst.N), 0.0, "direct")


_X_CACHE: dict[int, np.ndarray] = {}


def transverse_field(n: int) -> np.ndarray:
    """``sum_k sigma^x_k`` as a dense real matrix."""
    if n not in _X_CACHE:
        d = 2**n
        X = np.zeros((d, d))
        idx = np.arange(d)
        for k in range(n):
            X[idx, idx ^ (1 << (n - 1 - k))] += 1.0
        _X_CACHE[n] = X
    return _X_CACHE[n]


def anneal_hamiltonian(problem: AnnealProblem, s: float, protocol: str = "ramp", driver: float = 1.0) -> np.ndarray:
    """``(1-s) b sum sigma^x + s H_fields + c(s) H_constraints`` with ``c = s`` (ramp) or 1 (always-on)."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if protocol not in ("ramp", "always-on"):
        raise ValueError(f"protocol must be 'ramp' or 'always-on', got {protocol!r}")
    c = s if protocol == "ramp" else 1.0
    H = (1.0 - s) * driver * transverse_field(problem.n_spins)
    H[np.diag_indices_from(H)] += s * problem.field_diag + c * problem.constraint_diag
    return H


@dataclass
class SpectrumTrace:
    s: np.ndarray
    energies: np.ndarray  # (len(s), k)
    gap_min: float
    s_at_gap: float
    meta: dict = field(default_factory=dict)


def _gap(problem, protocol, driver, s):
    e = np.linalg.eigvalsh(anneal_hamiltonian(problem, s, protocol, driver))
    return e[1] - e[0]


def minimum_gap(problem: AnnealProblem, protocol: str = "ramp", driver: float = 1.0, n_grid: int = 41,
                degeneracy_tol: float = 1e-9) -> tuple[float, float]:
    """Smallest ``E1 - E0`` along the anneal and where it occurs.

    A coarse grid brackets the minimum and a bounded scalar search refines
    it. ``s = 1`` is left out when the final spectrum is degenerate.
    """
    grid = np.linspace(0.0, 1.0, n_grid)
    gaps = np.array([_gap(problem, protocol, driver, s) for s in grid])
    interior = np.arange(1, n_grid - 1)
    candidates = list(interior)
    if gaps[-1] > degeneracy_tol:
        candidates.append(n_grid - 1)
    i = min(candidates, key=lambda k: gaps[k])
    best_s, best = grid[i], gaps[i]
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    r = minimize_scalar(lambda s: _gap(problem, protocol, driver, s), bounds=(lo, hi), method="bounded",
                        options={"xatol": 1e-7})
    if r.fun < best and (r.x < 1.0 or gaps[-1] > degeneracy_tol):
        best_s, best = float(r.x), float(r.fun)
    return float(best), float(best_s)


def spectrum_trace(problem: AnnealProblem, s_grid: Sequence[float], k: int, protocol: str = "ramp",
                   driver: float = 1.0) -> SpectrumTrace:
    s_grid = np.asarray(s_grid, dtype=float)
    dim = 2**problem.n_spins
    if k > dim:
        raise ValueError(f"k={k} exceeds dimension {dim}")
    E = np.array([np.linalg.eigvalsh(anneal_hamiltonian(problem, s, protocol, driver))[:k] for s in s_grid])
    gaps = E[:, 1] - E[:, 0] if k > 1 else np.full(len(s_grid), np.nan)
    inner = (s_grid > 0) & (s_grid < 1)
    if k > 1 and s_grid[-1] == 1.0 and gaps[-1] > 1e-9:
        inner = inner | (s_grid == 1.0)
    if k > 1 and np.any(inner):
        j = np.flatnonzero(inner)[np.argmin(gaps[inner])]
        gmin, smin = float(gaps[j]), float(s_grid[j])
    else:
        gmin, smin = float("nan"), float("nan")
    return SpectrumTrace(s_grid, E, gmin, smin, {"protocol": protocol, "scheme": problem.name})


@dataclass(frozen=True)
class GapRecord:
    seed: int
    C_over_J: float
    scheme: str
    protocol: str
    gap_min: float


def gap_statistics(n_instances: int, N: int, C_values: Sequence[float],
                   combos: Sequence[tuple[str, str]] = (("lhz3", "ramp"), ("lhz4", "ramp"), ("lhz4", "always-on")),
                   seed: int = 0, J_scale: float = 1.0) -> list[GapRecord]:
    """Minimum gaps for instances seeded ``seed, seed+1, ...``; ordered by (seed, C, combo)."""
    out = []
    for i in range(n_instances):
        inst_seed = seed + i
        inst = random_instance(N, J_scale, inst_seed)
        for C in C_values:
            e4 = lhz_embed4(inst, C * J_scale)
            probs = {"lhz4": AnnealProblem.from_embedding(e4),
                     "lhz3": AnnealProblem.from_embedding(lhz_decompose3(e4)),
                     "direct": direct_problem(inst)}
            for scheme, protocol in combos:
                g, _ = minimum_gap(probs[scheme], protocol, driver=J_scale)
                out.append(GapRecord(inst_seed, float(C), scheme, protocol, g / J_scale))
    return out
