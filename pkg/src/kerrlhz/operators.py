"""Hilbert-space bookkeeping and dense operator algebra.

Every Hamiltonian, collapse operator and observable in the package is an
:class:`Operator`: a dense complex matrix tagged with the composite space it
acts on. Values are immutable once built (the underlying arrays are marked
read-only), so they can be shared freely between threads.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

__all__ = [
    "ModeKind",
    "ModeSpace",
    "CompositeSpace",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "ModeOperators",
    "TruncationError",
    "mode_operators",
    "tensor_embed",
    "coherent_amplitudes",
    "coherent_tail_mass",
    "coherent_state",
    "cat_state",
    "fock_state",
    "product_state",
    "hermitian_eigensystem",
    "partial_trace",
    "reduced_density_matrix",
]

HERMITIAN_TOL = 1e-8


class TruncationError(ValueError):
    """Raised when a Fock truncation cannot hold the requested state."""


class ModeKind(str, enum.Enum):
    FOCK = "fock"
    QUTRIT = "qutrit"
    SPIN_HALF = "spin-half"


@dataclass(frozen=True)
class ModeSpace:
    """A single tensor factor: a truncated oscillator, a qutrit or a spin-1/2."""

    kind: ModeKind
    dimension: int

    def __post_init__(self):
        kind = ModeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError(f"mode dimension must be an integer >= 2, got {self.dimension}")
        if kind is ModeKind.QUTRIT and self.dimension != 3:
            raise ValueError("a qutrit mode has dimension 3")
        if kind is ModeKind.SPIN_HALF and self.dimension != 2:
            raise ValueError("a spin-half mode has dimension 2")

    @classmethod
    def fock(cls, dimension: int) -> "ModeSpace":
        return cls(ModeKind.FOCK, dimension)

    @classmethod
    def qutrit(cls) -> "ModeSpace":
        return cls(ModeKind.QUTRIT, 3)

    @classmethod
    def spin_half(cls) -> "ModeSpace":
        return cls(ModeKind.SPIN_HALF, 2)


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of modes. Slot ``i`` is ``modes[i]``."""

    modes: tuple[ModeSpace, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValueError("a composite space needs at least one mode")
        for m in modes:
            if not isinstance(m, ModeSpace):
                raise TypeError(f"expected ModeSpace, got {type(m).__name__}")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def of(cls, *modes: ModeSpace) -> "CompositeSpace":
        return cls(tuple(modes))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.dimension for m in self.modes)

    @property
    def dimension(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.modes)


def _as_space(space) -> CompositeSpace:
    if isinstance(space, CompositeSpace):
        return space
    if isinstance(space, ModeSpace):
        return CompositeSpace((space,))
    raise TypeError(f"expected a ModeSpace or CompositeSpace, got {type(space).__name__}")


def _frozen(arr, ndim: int) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    if out.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on a composite space."""

    space: CompositeSpace
    matrix: np.ndarray

    def __post_init__(self):
        space = _as_space(self.space)
        object.__setattr__(self, "space", space)
        mat = _frozen(self.matrix, 2)
        n = space.dimension
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match space dimension {n}")
        object.__setattr__(self, "matrix", mat)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.matrix, 2))

    def hermiticity_error(self) -> float:
        """``||A - A^dag|| / max(1, ||A||)`` in Frobenius norm."""
        scale = max(1.0, float(np.linalg.norm(self.matrix)))
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T)) / scale

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermiticity_error() <= tol

    def expect(self, state: "StateVector | DensityMatrix") -> complex:
        if isinstance(state, StateVector):
            v = state.amplitudes
            return complex(v.conj() @ (self.matrix @ v))
        return complex(np.trace(self.matrix @ state.matrix))

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise ValueError("operators act on different spaces")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            return Operator(self.space, self.matrix * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            if other.space != self.space:
                raise ValueError("operator and state act on different spaces")
            return StateVector(self.space, self.matrix @ other.amplitudes, normalize=True)
        return NotImplemented

    @classmethod
    def zeros(cls, space) -> "Operator":
        space = _as_space(space)
        return cls(space, np.zeros((space.dimension,) * 2))

    @classmethod
    def identity(cls, space) -> "Operator":
        space = _as_space(space)
        return cls(space, np.eye(space.dimension))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state. Construction rescales to unit norm unless ``normalize=False``."""

    space: CompositeSpace
    amplitudes: np.ndarray
    normalize: bool = field(default=True, repr=False)

    def __post_init__(self):
        space = _as_space(self.space)
        object.__setattr__(self, "space", space)
        v = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if v.shape != (space.dimension,):
            raise ValueError(f"amplitude shape {v.shape} does not match dimension {space.dimension}")
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            raise ValueError("the zero vector is not a state")
        if self.normalize:
            v = v / nrm
        elif abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state norm {nrm} differs from 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.space, np.outer(v, v.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix (checked at construction)."""

    space: CompositeSpace
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        space = _as_space(self.space)
        object.__setattr__(self, "space", space)
        mat = _frozen(self.matrix, 2)
        n = space.dimension
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match space dimension {n}")
        object.__setattr__(self, "matrix", mat)
        if self.validate:
            herm = float(np.max(np.abs(mat - mat.conj().T))) if n else 0.0
            if herm > 1e-10:
                raise ValueError(f"density matrix is not Hermitian (max deviation {herm:.3g})")
            tr = complex(np.trace(mat))
            if abs(tr - 1.0) > 1e-10:
                raise ValueError(f"density matrix trace is {tr}, expected 1")
            lo = float(np.linalg.eigvalsh(mat)[0])
            if lo < -1e-8:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


@dataclass(frozen=True)
class ModeOperators:
    annihilation: Operator
    creation: Operator
    number: Operator
    identity: Operator
    projectors: dict | None = None

    def projector(self, j: int, k: int) -> Operator:
        """``|j><k|``; only defined for qutrit and spin-half modes."""
        if self.projectors is None:
            raise ValueError("transition projectors are only built for qutrit and spin-half modes")
        return self.projectors[(j, k)]


def ladder_matrix(dim: int) -> np.ndarray:
    """Truncated annihilation matrix with ``a|n> = sqrt(n)|n-1>``."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(np.complex128)


def mode_operators(space: ModeSpace) -> ModeOperators:
    """Ladder, number and identity operators of one mode.

    For qutrit and spin-half modes the full set of transition operators
    ``|j><k|`` is included as ``projectors[(j, k)]``.
    """
    cs = CompositeSpace((space,))
    d = space.dimension
    a = ladder_matrix(d)
    ops = dict(
        annihilation=Operator(cs, a),
        creation=Operator(cs, a.conj().T),
        number=Operator(cs, np.diag(np.arange(d, dtype=float))),
        identity=Operator(cs, np.eye(d)),
    )
    if space.kind is not ModeKind.FOCK:
        proj = {}
        for j in range(d):
            for k in range(d):
                m = np.zeros((d, d))
                m[j, k] = 1.0
                proj[(j, k)] = Operator(cs, m)
        ops["projectors"] = proj
    return ModeOperators(**ops)


def tensor_embed(op: Operator, space: CompositeSpace, slot: int) -> Operator:
    """Place a single-mode operator in ``slot`` with identities everywhere else."""
    space = _as_space(space)
    if not 0 <= slot < len(space):
        raise IndexError(f"slot {slot} out of range for a {len(space)}-mode space")
    mat = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=np.complex128)
    if isinstance(op, Operator) and op.space.modes != (space.modes[slot],):
        raise ValueError(f"operator mode {op.space.modes} does not match slot {slot} ({space.modes[slot]})")
    if mat.shape != (space.dims[slot],) * 2:
        raise ValueError(f"operator shape {mat.shape} does not match slot dimension {space.dims[slot]}")
    left = math.prod(space.dims[:slot])
    right = math.prod(space.dims[slot + 1:])
    full = np.kron(np.kron(np.eye(left), mat), np.eye(right))
    return Operator(space, full)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Untruncated-normalization Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for ``n < dim``."""
    alpha = complex(alpha)
    c = np.empty(dim, dtype=np.complex128)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def coherent_tail_mass(alpha: complex, dim: int) -> float:
    """Probability weight of ``|alpha>`` on Fock levels ``n >= dim``."""
    from scipy.stats import poisson

    return float(poisson.sf(dim - 1, abs(alpha) ** 2))


def _check_truncation(alpha, dim, tail_tol):
    if abs(alpha) ** 2 > dim / 4:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds dim/4 = {dim / 4:.3g}; truncation may be visible",
            stacklevel=3,
        )
    if tail_tol is not None:
        tail = coherent_tail_mass(alpha, dim)
        if tail > tail_tol:
            raise TruncationError(f"tail mass {tail:.3e} beyond dim {dim} exceeds tolerance {tail_tol:.1e}")


def coherent_state(alpha: complex, dim: int, tail_tol: float | None = None) -> StateVector:
    """Coherent state on a truncated Fock space, renormalized on the kept levels."""
    _check_truncation(alpha, dim, tail_tol)
    return StateVector(ModeSpace.fock(dim), coherent_amplitudes(alpha, dim))


def cat_state(alpha: complex, parity: str, dim: int, tail_tol: float | None = None) -> StateVector:
    """Unit-norm cat state proportional to ``|alpha> + |-alpha>`` (even) or ``|alpha> - |-alpha>`` (odd)."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if parity == "odd" and alpha == 0:
        raise ValueError("the odd cat state at alpha = 0 is the zero vector")
    _check_truncation(alpha, dim, tail_tol)
    c = coherent_amplitudes(alpha, dim)
    keep = (np.arange(dim) % 2 == 0) if parity == "even" else (np.arange(dim) % 2 == 1)
    return StateVector(ModeSpace.fock(dim), np.where(keep, c, 0.0))


def fock_state(n: int, dim: int) -> StateVector:
    v = np.zeros(dim, dtype=np.complex128)
    v[n] = 1.0
    return StateVector(ModeSpace.fock(dim), v)


def product_state(states: Sequence[StateVector]) -> StateVector:
    """Tensor product of single-space states, in the order given."""
    modes: list[ModeSpace] = []
    v = np.ones(1, dtype=np.complex128)
    for s in states:
        modes.extend(s.space.modes)
        v = np.kron(v, s.amplitudes)
    return StateVector(CompositeSpace(tuple(modes)), v)


def hermitian_eigensystem(op, k: int | None = None, check: bool = True):
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian operator.

    If ``k`` is given only the ``k`` lowest pairs are computed.
    """
    mat = op.matrix if isinstance(op, Operator) else np.asarray(op)
    if check:
        scale = max(1.0, float(np.linalg.norm(mat)))
        err = float(np.linalg.norm(mat - mat.conj().T)) / scale
        if err > HERMITIAN_TOL:
            raise ValueError(f"operator is not Hermitian (relative deviation {err:.3g})")
    mat = (mat + mat.conj().T) / 2
    if k is None or k >= mat.shape[0]:
        return linalg.eigh(mat)
    if k < 1:
        raise ValueError("k must be positive")
    return linalg.eigh(mat, subset_by_index=(0, k - 1))


def _keep_slots(space: CompositeSpace, keep: Iterable[int]) -> list[int]:
    keep = sorted(set(int(s) for s in keep))
    if not keep:
        raise ValueError("keep must name at least one slot")
    for s in keep:
        if not 0 <= s < len(space):
            raise IndexError(f"slot {s} out of range for a {len(space)}-mode space")
    return keep


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every slot not listed in ``keep``; kept slots retain their order."""
    space = rho.space
    keep = _keep_slots(space, keep)
    dims = space.dims
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    # Traced slots share a letter between row and column, so einsum sums the diagonal.
    rows = list(range(n))
    cols = [n + i if i in keep else i for i in range(n)]
    out = keep + [n + i for i in keep]
    red = np.einsum(t, rows + cols, out)
    kd = math.prod(dims[i] for i in keep)
    sub = CompositeSpace(tuple(space.modes[i] for i in keep))
    mat = red.reshape(kd, kd)
    return DensityMatrix(sub, (mat + mat.conj().T) / 2, validate=False)


def reduced_density_matrix(state: StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state of a pure state without forming the full density matrix."""
    space = state.space
    keep = _keep_slots(space, keep)
    dims = space.dims
    rest = [s for s in range(len(dims)) if s not in keep]
    psi = state.amplitudes.reshape(dims).transpose(keep + rest)
    kd = math.prod(dims[i] for i in keep)
    m = psi.reshape(kd, -1)
    sub = CompositeSpace(tuple(space.modes[i] for i in keep))
    return DensityMatrix(sub, m @ m.conj().T, validate=False)
