"""Dense complex state vectors over labeled composite registers.

Composite indices are big-endian: the first register in a layout varies
slowest, so a ``(2, 3)`` layout orders its basis as ``|0,0>, |0,1>, |0,2>,
|1,0>, ...``. This matches ``np.ravel_multi_index`` in C order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TOL_NORM = 1e-10
TOL_EXACT = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Register:
    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"register {self.name!r} needs dim >= 1, got {self.dim}")


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered registers whose local dimensions multiply to the total."""

    registers: tuple[Register, ...]

    def __post_init__(self):
        names = [r.name for r in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"register names must be unique, got {names}")
        if not self.registers:
            raise ValueError("layout needs at least one register")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(Register(name, dim) for name, dim in pairs))

    @classmethod
    def flat(cls, dim: int, name: str = "sys") -> "RegisterLayout":
        return cls((Register(name, dim),))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(r.dim for r in self.registers)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.registers)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown register {name!r}; layout has {self.names}") from None

    def index(self, *values: int) -> int:
        """Composite (big-endian) index of a tuple of per-register values."""
        return int(np.ravel_multi_index(values, self.dims))

    def values(self, index: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(index, self.dims))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        # Clashing names get a numeric suffix so products of default layouts stay valid.
        taken = set(self.names)
        regs = list(self.registers)
        for reg in other.registers:
            name, k = reg.name, 1
            while name in taken:
                name = f"{reg.name}_{k}"
                k += 1
            taken.add(name)
            regs.append(Register(name, reg.dim))
        return RegisterLayout(tuple(regs))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a register layout.

    ``normalized=False`` marks intermediate sums that are not physical states;
    every other vector is checked for unit norm on construction.
    """

    amplitudes: np.ndarray
    layout: RegisterLayout = None
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        object.__setattr__(self, "amplitudes", amps)
        if self.layout is None:
            object.__setattr__(self, "layout", RegisterLayout.flat(amps.size))
        if self.layout.dim != amps.size:
            raise ValueError(
                f"layout dims {self.layout.dims} multiply to {self.layout.dim}, "
                f"but there are {amps.size} amplitudes"
            )
        if self.normalized:
            norm = np.linalg.norm(amps)
            if abs(norm - 1.0) > TOL_NORM:
                raise ValueError(f"state has norm {norm:.3e}; pass normalized=False for raw vectors")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per register."""
        return self.amplitudes.reshape(self.layout.dims)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_dims(self, other)
        return StateVector(self.amplitudes + other.amplitudes, self.layout, normalized=False)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_dims(self, other)
        return StateVector(self.amplitudes - other.amplitudes, self.layout, normalized=False)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.amplitudes * scalar, self.layout, normalized=False)

    __rmul__ = __mul__

    def normalize(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / norm, self.layout)

    def __repr__(self):
        return f"StateVector(dim={self.dim}, layout={self.layout.dims}, normalized={self.normalized})"


def basis_state(layout: RegisterLayout | int, *values: int) -> StateVector:
    """``|values>`` in the given layout; an int layout means a flat register."""
    if isinstance(layout, int):
        layout = RegisterLayout.flat(layout)
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[layout.index(*values)] = 1.0
    return StateVector(amps, layout)


def superpose(coeffs: Sequence[complex], states: Sequence[StateVector], normalized: bool = True) -> StateVector:
    """``sum_k coeffs[k] * states[k]`` on the layout of the first state."""
    if len(coeffs) != len(states) or not states:
        raise ValueError("need one coefficient per state and at least one state")
    amps = sum(c * s.amplitudes for c, s in zip(coeffs, states))
    return StateVector(amps, states[0].layout, normalized=normalized)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    amps = np.kron(a.amplitudes, b.amplitudes)
    return StateVector(amps, a.layout.concat(b.layout), normalized=a.normalized and b.normalized)


def _check_dims(a: StateVector, b: StateVector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _check_dims(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def is_orthogonal(a: StateVector, b: StateVector, tol: float = TOL_NORM) -> bool:
    return abs(inner_product(a, b)) < tol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    layout: RegisterLayout = None

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        object.__setattr__(self, "entries", rho)
        if self.layout is None:
            object.__setattr__(self, "layout", RegisterLayout.flat(rho.shape[0]))
        if self.layout.dim != rho.shape[0]:
            raise ValueError("layout does not match matrix size")
        if np.max(np.abs(rho - rho.conj().T)) > TOL_NORM:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > TOL_NORM:
            raise ValueError(f"density matrix has trace {np.trace(rho).real:.6g}")
        if np.linalg.eigvalsh(rho).min() < -TOL_NORM:
            raise ValueError("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()


def pure_density(psi: StateVector) -> DensityMatrix:
    if not psi.normalized or abs(psi.norm() - 1.0) > TOL_NORM:
        raise ValueError("pure_density needs a normalized state")
    return DensityMatrix(np.outer(psi.amplitudes, psi.amplitudes.conj()), psi.layout)


def mixture(weights: Sequence[float], states: Sequence[StateVector]) -> DensityMatrix:
    """Classical mixture ``sum_k w_k |s_k><s_k|``."""
    rho = sum(w * np.outer(s.amplitudes, s.amplitudes.conj()) for w, s in zip(weights, states))
    return DensityMatrix(rho, states[0].layout)


def _phase_roots(k: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(k) / k)


def phase_average(alpha: Sequence[complex], k: int, mode: str = "factored") -> DensityMatrix:
    """Average ``|psi(phi)><psi(phi)|`` over independent branch phases.

    Each ``phi_j`` runs over the ``k`` roots of unity. ``mode="brute"``
    enumerates all ``k**len(alpha)`` phase tuples; ``mode="factored"`` uses
    that the average of ``exp(i(phi_j - phi_j'))`` factorizes per pair.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    if k < 2:
        raise ValueError(f"need at least 2 phase values for off-diagonals to cancel, got k={k}")
    if abs(np.linalg.norm(alpha) - 1.0) > TOL_NORM:
        raise ValueError("branch coefficients must be normalized")
    n = alpha.size
    outer = np.outer(alpha, alpha.conj())
    if mode == "factored":
        mean_root = _phase_roots(k).mean()
        pair = np.full((n, n), mean_root * np.conj(mean_root))
        np.fill_diagonal(pair, 1.0)
        rho = outer * pair
    elif mode == "brute":
        roots = _phase_roots(k)
        rho = np.zeros((n, n), dtype=np.complex128)
        for choice in itertools.product(range(k), repeat=n):
            psi = roots[list(choice)] * alpha
            rho += np.outer(psi, psi.conj())
        rho /= k**n
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return DensityMatrix(rho)


def embed_density(rho: DensityMatrix, branches: Sequence[StateVector]) -> DensityMatrix:
    """Map a density matrix written in branch coordinates into the branches' space."""
    basis = np.column_stack([b.amplitudes for b in branches])
    if basis.shape[1] != rho.dim:
        raise ValueError(f"{basis.shape[1]} branches for a {rho.dim}-dim density matrix")
    return DensityMatrix(basis @ rho.entries @ basis.conj().T, branches[0].layout)


def column_matrix(states: Iterable[StateVector]) -> np.ndarray:
    return np.column_stack([s.amplitudes for s in states])
