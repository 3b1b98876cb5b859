"""State vectors, density operators and the linear algebra that acts on them.

Every Hilbert space here is tiny (at most 16 dimensions), so states are dense
numpy arrays. A state carries an ordered list of named subsystems; amplitude
index order is row-major over that list (the first subsystem varies slowest),
which is the same order ``numpy.kron`` produces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

NORM_TOL = 1e-12
OPERATOR_TOL = 1e-10


class QuantumError(ValueError):
    """Invalid input to a state or operator routine."""


class NotUnitaryError(QuantumError):
    def __init__(self, max_deviation: float):
        self.max_deviation = max_deviation
        super().__init__(f"matrix is not unitary: max |U^dag U - I| = {max_deviation:.3e}")


@dataclass(frozen=True)
class Subsystem:
    """A named subsystem with an ordered set of basis labels."""

    name: str
    labels: tuple[str, ...] = ("0", "1")

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 1:
            raise QuantumError(f"subsystem {self.name!r} has no basis labels")
        if len(set(self.labels)) != len(self.labels):
            raise QuantumError(f"subsystem {self.name!r} has duplicate labels {self.labels}")

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise QuantumError(f"{label!r} is not a label of subsystem {self.name!r}") from None


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


def _check_finite(array: np.ndarray, what: str):
    if not np.all(np.isfinite(array)):
        raise QuantumError(f"{what} contains NaN or Inf entries")


def _check_names(subsystems: Sequence[Subsystem]):
    names = [s.name for s in subsystems]
    if len(set(names)) != len(names):
        raise QuantumError(f"subsystem names collide: {names}")


class _Layout:
    subsystems: tuple[Subsystem, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.subsystems)

    def basis_labels(self) -> list[tuple[str, ...]]:
        """Joint basis labels in amplitude order."""
        return list(itertools.product(*(s.labels for s in self.subsystems)))

    def subsystem_index(self, key: Union[int, str]) -> int:
        if isinstance(key, str):
            try:
                return self.names.index(key)
            except ValueError:
                raise QuantumError(f"no subsystem named {key!r}; have {self.names}") from None
        if not 0 <= key < len(self.subsystems):
            raise QuantumError(f"subsystem index {key} out of range for {len(self.subsystems)} subsystems")
        return int(key)


@dataclass(frozen=True, eq=False)
class PureState(_Layout):
    """Normalized amplitude vector over the joint basis of ``subsystems``."""

    subsystems: tuple[Subsystem, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        subsystems = tuple(self.subsystems)
        object.__setattr__(self, "subsystems", subsystems)
        _check_names(subsystems)
        amps = _frozen(np.ravel(self.amplitudes))
        object.__setattr__(self, "amplitudes", amps)
        size = math.prod(s.dim for s in subsystems)
        if amps.shape != (size,):
            raise QuantumError(f"expected {size} amplitudes for dims {self.dims}, got {amps.size}")
        _check_finite(amps, "amplitude vector")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise QuantumError(f"state is not normalized (norm = {norm!r})")

    @classmethod
    def from_amplitudes(cls, subsystems: Iterable[Subsystem], amplitudes, normalize: bool = False) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0 or not np.isfinite(norm):
                raise QuantumError("cannot normalize a zero or non-finite vector")
            amps = amps / norm
        return cls(tuple(subsystems), amps)

    @classmethod
    def basis(cls, subsystems: Iterable[Subsystem], *labels: str) -> "PureState":
        """Product basis state picking one label per subsystem."""
        subsystems = tuple(subsystems)
        if len(labels) != len(subsystems):
            raise QuantumError(f"need one label per subsystem, got {labels} for {len(subsystems)}")
        index = np.ravel_multi_index([s.index(lab) for s, lab in zip(subsystems, labels)],
                                     [s.dim for s in subsystems])
        amps = np.zeros(math.prod(s.dim for s in subsystems), dtype=complex)
        amps[index] = 1.0
        return cls(subsystems, amps)

    def amplitude(self, *labels: str) -> complex:
        index = np.ravel_multi_index([s.index(lab) for s, lab in zip(self.subsystems, labels)], self.dims)
        return complex(self.amplitudes[index])

    def density(self) -> "DensityOperator":
        return DensityOperator(self.subsystems, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"PureState({list(self.names)}, {np.array2string(self.amplitudes, precision=4)})"


@dataclass(frozen=True, eq=False)
class DensityOperator(_Layout):
    """Hermitian, positive semidefinite, unit-trace operator."""

    subsystems: tuple[Subsystem, ...]
    matrix: np.ndarray

    def __post_init__(self):
        subsystems = tuple(self.subsystems)
        object.__setattr__(self, "subsystems", subsystems)
        _check_names(subsystems)
        m = _frozen(self.matrix)
        object.__setattr__(self, "matrix", m)
        size = math.prod(s.dim for s in subsystems)
        if m.shape != (size, size):
            raise QuantumError(f"expected a {size}x{size} matrix for dims {self.dims}, got {m.shape}")
        _check_finite(m, "density matrix")
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > OPERATOR_TOL:
            raise QuantumError(f"density matrix is not Hermitian (max deviation {herm:.3e})")
        trace = np.trace(m)
        if abs(trace - 1.0) > OPERATOR_TOL:
            raise QuantumError(f"density matrix trace is {trace}, not 1")
        lowest = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
        if lowest < -OPERATOR_TOL:
            raise QuantumError(f"density matrix has negative eigenvalue {lowest:.3e}")

    def __repr__(self):
        return f"DensityOperator({list(self.names)}, {np.array2string(self.matrix, precision=4)})"


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = 6.6e-34  # J s, two significant figures


DEFAULT_CONSTANTS = PhysicalConstants()


def photon_energy(frequency: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Energy in joules of one quantum at ``frequency`` Hz."""
    f = float(frequency)
    if not math.isfinite(f) or f < 0:
        raise QuantumError(f"frequency must be finite and non-negative, got {frequency!r}")
    return constants.h * f


def tensor(a: PureState, b: PureState) -> PureState:
    return PureState(a.subsystems + b.subsystems, np.kron(a.amplitudes, b.amplitudes))


def unitarity_deviation(u) -> float:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise QuantumError(f"expected a square matrix, got shape {u.shape}")
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u, tol: float = OPERATOR_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    dev = unitarity_deviation(u)
    if not dev < tol:
        raise NotUnitaryError(dev)
    return u


def apply_unitary(state: PureState, u, targets: Sequence[Union[int, str]]) -> PureState:
    """Apply ``u`` to the listed subsystems (in that order) and identity elsewhere."""
    u = check_unitary(u)
    idx = [state.subsystem_index(t) for t in targets]
    if len(set(idx)) != len(idx):
        raise QuantumError(f"repeated target subsystems {targets}")
    dims = state.dims
    tdim = math.prod(dims[i] for i in idx)
    if u.shape != (tdim, tdim):
        raise QuantumError(f"unitary of shape {u.shape} does not match target dimension {tdim}")
    psi = state.amplitudes.reshape(dims)
    psi = np.moveaxis(psi, idx, range(len(idx)))
    moved_shape = psi.shape
    psi = (u @ psi.reshape(tdim, -1)).reshape(moved_shape)
    psi = np.moveaxis(psi, range(len(idx)), idx)
    return PureState(state.subsystems, psi.reshape(-1))


def born_probabilities(state: PureState) -> dict[tuple[str, ...], float]:
    """Joint outcome probabilities |amplitude|^2 keyed by basis-label tuples."""
    probs = np.abs(state.amplitudes) ** 2
    return dict(zip(state.basis_labels(), probs.tolist()))


def marginal_probabilities(state: PureState, subsystem: Union[int, str]) -> dict[str, float]:
    """Outcome probabilities of one subsystem, summed over all the others."""
    k = state.subsystem_index(subsystem)
    probs = (np.abs(state.amplitudes) ** 2).reshape(state.dims)
    other = tuple(i for i in range(len(state.dims)) if i != k)
    p = probs.sum(axis=other) if other else probs
    return dict(zip(state.subsystems[k].labels, p.tolist()))


def partial_trace(rho: Union[DensityOperator, PureState], keep: Sequence[Union[int, str]]) -> DensityOperator:
    """Reduced operator on ``keep`` (result subsystems follow the given order)."""
    keep_idx = [rho.subsystem_index(k) for k in keep]
    if not keep_idx:
        raise QuantumError("partial trace needs at least one subsystem to keep")
    if len(set(keep_idx)) != len(keep_idx):
        raise QuantumError(f"repeated subsystems in keep {keep}")
    dims = rho.dims
    traced = [i for i in range(len(dims)) if i not in keep_idx]
    dk = math.prod(dims[i] for i in keep_idx)
    dt = math.prod(dims[i] for i in traced)
    order = keep_idx + traced
    if isinstance(rho, PureState):
        m = np.transpose(rho.amplitudes.reshape(dims), order).reshape(dk, dt)
        reduced = m @ m.conj().T
    else:
        n = len(dims)
        t = rho.matrix.reshape(dims + dims)
        t = np.transpose(t, order + [n + i for i in order]).reshape(dk, dt, dk, dt)
        reduced = np.einsum("ajbj->ab", t)
    return DensityOperator(tuple(rho.subsystems[i] for i in keep_idx), reduced)


def purity(rho: DensityOperator) -> float:
    """tr(rho^2)."""
    m = rho.matrix
    return float(np.real(np.sum(m * m.T)))
