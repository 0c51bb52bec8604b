"""Unitary operators: validation, completion from partial maps, sampling, and
a smooth generator chart used by the violation search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .statespace import TOL_NORM, RegisterLayout, StateVector, _frozen, column_matrix

TAYLOR_ORDER = 18


def unitarity_error(m: np.ndarray) -> float:
    """``max |(M^dagger M - I)_ij|``."""
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    matrix: np.ndarray
    layout: RegisterLayout | None = None

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"unitary must be square, got shape {m.shape}")
        err = unitarity_error(m)
        if err >= TOL_NORM:
            raise ValueError(f"matrix is not unitary: max|U^dag U - I| = {err:.3e}")
        object.__setattr__(self, "matrix", m)
        if self.layout is not None and self.layout.dim != m.shape[0]:
            raise ValueError("layout does not match operator size")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int, layout: RegisterLayout | None = None) -> "UnitaryOperator":
        return cls(np.eye(dim), layout)

    def dagger(self) -> "UnitaryOperator":
        return UnitaryOperator(self.matrix.conj().T, self.layout)

    def __matmul__(self, other: "UnitaryOperator") -> "UnitaryOperator":
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return UnitaryOperator(self.matrix @ other.matrix, self.layout or other.layout)


def apply(u: UnitaryOperator, psi: StateVector) -> StateVector:
    if u.dim != psi.dim:
        raise ValueError(f"operator dim {u.dim} does not match state dim {psi.dim}")
    return StateVector(u.matrix @ psi.amplitudes, psi.layout, normalized=psi.normalized)


@dataclass(frozen=True, eq=False)
class PartialIsometrySpec:
    """Required action ``U @ input_k == output_k`` on a subspace.

    Both sides must be orthonormal families, otherwise no unitary extension
    exists; the offending pair is named in the error.
    """

    pairs: tuple[tuple[StateVector, StateVector], ...]

    def __post_init__(self):
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            raise ValueError("need at least one (input, output) pair")
        dim = pairs[0][0].dim
        for a, b in pairs:
            if a.dim != dim or b.dim != dim:
                raise ValueError("all inputs and outputs must share one dimension")
        _check_orthonormal(self.inputs(), "inputs")
        _check_orthonormal(self.outputs(), "outputs")

    @property
    def dim(self) -> int:
        return self.pairs[0][0].dim

    def inputs(self) -> np.ndarray:
        return column_matrix(a for a, _ in self.pairs)

    def outputs(self) -> np.ndarray:
        return column_matrix(b for _, b in self.pairs)


def _check_orthonormal(cols: np.ndarray, what: str) -> None:
    gram = cols.conj().T @ cols
    dev = np.abs(gram - np.eye(gram.shape[0]))
    if dev.max() >= TOL_NORM:
        i, j = np.unravel_index(np.argmax(dev), dev.shape)
        if i == j:
            raise ValueError(f"{what}[{i}] has norm^2 {gram[i, i].real:.6g}, expected 1")
        raise ValueError(f"{what}[{i}] and {what}[{j}] overlap with |<a|b>| = {abs(gram[i, j]):.6g}")


def orthonormal_complement(cols: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal basis of the complement of span(cols), from a seeded Gaussian draw."""
    dim, m = cols.shape
    if m == dim:
        return np.zeros((dim, 0), dtype=np.complex128)
    g = rng.standard_normal((dim, dim - m)) + 1j * rng.standard_normal((dim, dim - m))
    # Project twice; one pass of classical Gram-Schmidt loses orthogonality at ~eps*cond.
    for _ in range(2):
        g = g - cols @ (cols.conj().T @ g)
    q, _ = np.linalg.qr(g)
    return q


def complete_columns(cols: np.ndarray, seed: int = 0) -> np.ndarray:
    """Unitary whose leading columns are exactly ``cols`` (orthonormal)."""
    comp = orthonormal_complement(cols, np.random.default_rng(seed))
    return np.hstack([cols, comp])


def complete_to_unitary(partial: PartialIsometrySpec, seed: int = 0) -> UnitaryOperator:
    """Extend the partial map in ``partial`` to a full unitary.

    The unspecified complements of the input and output spans are each given
    a seeded orthonormal basis and the k-th input complement vector is sent to
    the k-th output complement vector. Specified pairs are honored with their
    phases as given.
    """
    a = partial.inputs()
    b = partial.outputs()
    rng = np.random.default_rng(seed)
    a_full = np.hstack([a, orthonormal_complement(a, rng)])
    b_full = np.hstack([b, orthonormal_complement(b, rng)])
    layout = partial.pairs[0][0].layout
    return UnitaryOperator(b_full @ a_full.conj().T, layout)


def haar_random(dim: int, seed: int | np.random.Generator = 0) -> UnitaryOperator:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    diagonal of R fixed to be positive."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return UnitaryOperator(q * (d / np.abs(d)))


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series.

    The argument is scaled so its 1-norm is at most 1/2; the order-18 remainder
    is then below 1e-22 before squaring. Accepts a stack of matrices
    ``(..., d, d)``; the whole stack shares one scaling.
    """
    a = np.asarray(a, dtype=np.complex128)
    norm = np.max(np.sum(np.abs(a), axis=-2), initial=0.0)
    squarings = int(np.ceil(np.log2(norm / 0.5))) if norm > 0.5 else 0
    a = a / 2.0**squarings
    eye = np.broadcast_to(np.eye(a.shape[-1], dtype=np.complex128), a.shape)
    result = eye.copy()
    term = eye
    for k in range(1, TAYLOR_ORDER + 1):
        term = term @ a / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def n_generator_params(dim: int) -> int:
    return dim * dim


def hermitian_from_params(params: Sequence[float], dim: int | None = None) -> np.ndarray:
    """Hermitian ``K`` from ``dim**2`` reals (or a stack ``(..., dim**2)``).

    Layout: the ``dim`` diagonal entries, then for each upper-triangle pair
    ``(j, k)`` in row-major order the real and imaginary parts of ``K[j, k]``.
    """
    params = np.asarray(params, dtype=float)
    if dim is None:
        dim = int(round(np.sqrt(params.shape[-1])))
    if params.shape[-1] != dim * dim:
        raise ValueError(f"need {dim * dim} parameters for dim {dim}, got {params.shape[-1]}")
    k = np.zeros(params.shape[:-1] + (dim, dim), dtype=np.complex128)
    diag = np.arange(dim)
    k[..., diag, diag] = params[..., :dim]
    iu = np.triu_indices(dim, 1)
    vals = params[..., dim::2] + 1j * params[..., dim + 1 :: 2]
    k[..., iu[0], iu[1]] = vals
    k[..., iu[1], iu[0]] = vals.conj()
    return k


def from_generator(params: Sequence[float], dim: int | None = None) -> UnitaryOperator:
    """``exp(-i K)`` for the Hermitian ``K`` encoded by ``params``.

    ``-iK`` is the skew-Hermitian generator; zero parameters give the identity.
    """
    k = hermitian_from_params(params, dim)
    return UnitaryOperator(expm(-1j * k))
