"""Numerical checks of the no-go results for superposition tests.

A candidate test is a unitary ``U`` acting on orthonormal branch states
``|i>``, together with a belief partition of the output space into "No"
vectors and "Yes" vectors (optionally grouped per branch). Linearity forces

* branch images inside span(No)  =>  the superposition image has no Yes mass;
* branch-i Yes amplitudes ``eta_ij = alpha_i * gamma_ij``, so a superposition
  never makes any branch's Yes outcomes more likely.

This module computes those quantities, searches the unitary group for
violations, and checks overlap preservation and the phase-average identity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import born_distribution, trial_rng
from .statespace import (
    TOL_NORM,
    DensityMatrix,
    StateVector,
    basis_state,
    column_matrix,
    embed_density,
    inner_product,
    mixture,
    phase_average,
)
from .unitary import (
    PartialIsometrySpec,
    UnitaryOperator,
    _check_orthonormal,
    apply,
    complete_columns,
    complete_to_unitary,
    expm,
    haar_random,
    hermitian_from_params,
)

RELATION_TOL = 1e-10
INEQUALITY_SLACK = 1e-12
SCORE_TOL = 1e-9
# Squared constraint residual below which a candidate counts as feasible.
FEASIBILITY_TOL = 1e-20
PENALTY = 1e3

KINDS = ("definitive", "partially_definitive", "branch_discriminating")


@dataclass(frozen=True, eq=False)
class BeliefPartition:
    """Orthonormal No vectors and Yes vectors, stored as matrix columns.

    ``yes_groups[i]`` lists the Yes columns that belong to branch ``i``; it is
    only needed for branch-discriminating tests.
    """

    no_basis: np.ndarray
    yes_basis: np.ndarray
    yes_groups: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        no = np.asarray(self.no_basis, dtype=np.complex128)
        yes = np.asarray(self.yes_basis, dtype=np.complex128)
        if no.ndim != 2 or yes.ndim != 2 or no.shape[0] != yes.shape[0]:
            raise ValueError("no_basis and yes_basis must be column matrices of one dimension")
        object.__setattr__(self, "no_basis", no)
        object.__setattr__(self, "yes_basis", yes)
        both = np.hstack([no, yes])
        if both.shape[1]:
            _check_orthonormal(both, "partition vectors")
        if self.yes_groups is not None:
            groups = tuple(tuple(int(k) for k in g) for g in self.yes_groups)
            flat = sorted(k for g in groups for k in g)
            if flat != list(range(yes.shape[1])):
                raise ValueError("yes_groups must assign every Yes column to exactly one branch")
            object.__setattr__(self, "yes_groups", groups)

    @classmethod
    def from_states(cls, no: Sequence[StateVector], yes: Sequence[StateVector], yes_groups=None):
        dim = (list(no) + list(yes))[0].dim
        empty = np.zeros((dim, 0), dtype=np.complex128)
        return cls(column_matrix(no) if no else empty, column_matrix(yes) if yes else empty, yes_groups)

    @classmethod
    def from_indices(cls, dim: int, no: Sequence[int], yes: Sequence[int], yes_groups=None, frame=None):
        """Partition made of columns of ``frame`` (identity by default)."""
        frame = np.eye(dim, dtype=np.complex128) if frame is None else np.asarray(frame)
        return cls(frame[:, list(no)], frame[:, list(yes)], yes_groups)

    @property
    def dim(self) -> int:
        return self.no_basis.shape[0]

    def group_basis(self, i: int) -> np.ndarray:
        return self.yes_basis[:, list(self.yes_groups[i])]


@dataclass(frozen=True, eq=False)
class TestDecomposition:
    """Coefficients of a candidate test against a belief partition.

    ``beta[i, a]`` and ``gamma[i, k]`` are the No/Yes amplitudes of ``U|i>``;
    ``zeta`` and ``eta`` those of ``U sum_i alpha_i |i>``. Residuals are the
    norms of the parts lying outside span(partition).
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    yes_groups: tuple[tuple[int, ...], ...] | None
    branch_residual: np.ndarray
    superposition_residual: float

    __test__ = False  # not a pytest class

    def row_norms(self) -> np.ndarray:
        """``sum_j |beta_ij|^2 + |gamma_ij|^2`` per branch; 1 when the residual vanishes."""
        return (np.abs(self.beta) ** 2).sum(axis=1) + (np.abs(self.gamma) ** 2).sum(axis=1)


def _branch_matrix(branches: Sequence[StateVector] | np.ndarray) -> np.ndarray:
    if isinstance(branches, np.ndarray):
        return branches.astype(np.complex128)
    return column_matrix(branches)


def _check_alpha(alpha, n: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.size != n:
        raise ValueError(f"{alpha.size} coefficients for {n} branches")
    if abs(np.linalg.norm(alpha) - 1.0) > TOL_NORM:
        raise ValueError("branch coefficients must be normalized")
    return alpha


def decompose(
    u: UnitaryOperator,
    branches: Sequence[StateVector],
    alpha: Sequence[complex],
    partition: BeliefPartition,
) -> TestDecomposition:
    b = _branch_matrix(branches)
    if b.shape[0] != u.dim or partition.dim != u.dim:
        raise ValueError(f"dimension mismatch: U {u.dim}, branches {b.shape[0]}, partition {partition.dim}")
    _check_orthonormal(b, "branches")
    alpha = _check_alpha(alpha, b.shape[1])
    images = u.matrix @ b
    psi = images @ alpha
    no, yes = partition.no_basis, partition.yes_basis
    beta = (no.conj().T @ images).T
    gamma = (yes.conj().T @ images).T
    zeta = no.conj().T @ psi
    eta = yes.conj().T @ psi
    inside = no @ beta.T + yes @ gamma.T
    branch_res = np.linalg.norm(images - inside, axis=0)
    sup_res = float(np.linalg.norm(psi - no @ zeta - yes @ eta))
    return TestDecomposition(alpha, beta, gamma, zeta, eta, partition.yes_groups, branch_res, sup_res)


@dataclass
class LinearityReport:
    general_error: float
    branch_error: float | None
    cross_branch_leakage: float | None
    yes_mass_margin: np.ndarray | None
    passed: bool

    def summary(self) -> str:
        parts = [f"max|eta - sum_i alpha_i gamma_i| = {self.general_error:.3e}"]
        if self.branch_error is not None:
            parts.append(f"max|eta_ij - alpha_i gamma_ij| = {self.branch_error:.3e}")
            parts.append(f"min_i(sum|gamma_ij|^2 - sum|eta_ij|^2) = {self.yes_mass_margin.min():.3e}")
        return "; ".join(parts)


def check_linearity_relation(d: TestDecomposition) -> LinearityReport:
    """Check ``eta = sum_i alpha_i gamma_i`` and, for branch-grouped Yes
    states, ``eta_ij = alpha_i gamma_ij`` with its norm consequence
    ``sum_j |eta_ij|^2 <= sum_j |gamma_ij|^2``.

    The per-branch relation only applies when branch ``i`` puts no amplitude
    on other branches' Yes states; that leakage is reported and, when it is
    above tolerance, the per-branch checks are skipped.
    """
    n = d.alpha.size
    general = float(np.max(np.abs(d.eta - d.alpha @ d.gamma), initial=0.0))
    groups = d.yes_groups
    if groups is None and n == 1:
        groups = (tuple(range(d.eta.size)),)
    if groups is None:
        return LinearityReport(general, None, None, None, general < RELATION_TOL)
    if len(groups) != n:
        raise ValueError(f"{len(groups)} Yes groups for {n} branches")
    branch_err, leak = 0.0, 0.0
    margin = np.zeros(n)
    for i, g in enumerate(groups):
        g = list(g)
        eta_i = d.eta[g]
        gamma_i = d.gamma[i, g]
        branch_err = max(branch_err, float(np.max(np.abs(eta_i - d.alpha[i] * gamma_i), initial=0.0)))
        others = [r for r in range(n) if r != i]
        leak = max(leak, float(np.max(np.abs(d.gamma[np.ix_(others, g)]), initial=0.0)))
        margin[i] = np.sum(np.abs(gamma_i) ** 2) - np.sum(np.abs(eta_i) ** 2)
    passed = general < RELATION_TOL
    if leak < RELATION_TOL:
        passed = passed and branch_err < RELATION_TOL and bool(np.all(margin >= -INEQUALITY_SLACK))
    return LinearityReport(general, branch_err, leak, margin, passed)


# --- violation scores -----------------------------------------------------


def _yes_mass(v: np.ndarray, yes: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(yes.conj().T @ v) ** 2, axis=-2)


def _outside(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Squared norms of the columns of ``v`` outside span(basis)."""
    rest = v - basis @ (basis.conj().T @ v)
    return np.sum(np.abs(rest) ** 2, axis=-2)


def _components(kind: str, images: np.ndarray, alpha: np.ndarray, partition: BeliefPartition):
    """Batched scores: ``images`` is ``(..., d, n)`` and ``alpha`` ``(..., n)``."""
    psi = images @ alpha[..., None]
    no, yes = partition.no_basis, partition.yes_basis
    if kind in ("definitive", "partially_definitive"):
        residual = np.sum(_outside(images, no), axis=-1)
        raw = _yes_mass(psi, yes)[..., 0]
        if kind == "definitive":
            raw = raw - np.sum(_yes_mass(images, yes), axis=-1)
        return raw, residual
    if kind == "branch_discriminating":
        n = images.shape[-1]
        if partition.yes_groups is None or len(partition.yes_groups) != n:
            raise ValueError("branch-discriminating scores need one Yes group per branch")
        residual = 0.0
        gaps = []
        for i in range(n):
            yi = partition.group_basis(i)
            allowed = np.hstack([no, yi])
            residual = residual + _outside(images[..., i : i + 1], allowed)[..., 0]
            gaps.append(_yes_mass(psi, yi)[..., 0] - _yes_mass(images[..., i : i + 1], yi)[..., 0])
        return np.max(gaps, axis=0), residual
    raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")


def violation_components(kind: str, images: np.ndarray, alpha: np.ndarray, partition: BeliefPartition):
    """(raw score, squared constraint residual) for branch images given as columns.

    definitive: yes-mass of the superposition image minus the branches' yes-mass.
    partially_definitive: yes-mass of the superposition image.
    Both require every branch image inside span(No).
    branch_discriminating: ``max_i sum_j |eta_ij|^2 - |gamma_ij|^2``, requiring
    each branch image inside span(No) + span(Yes of that branch).
    """
    raw, residual = _components(kind, np.asarray(images), np.asarray(alpha, dtype=np.complex128), partition)
    return float(raw), float(residual)


def _penalized(kind, u, branches, alpha, partition, penalty):
    b = _branch_matrix(branches)
    alpha = _check_alpha(alpha, b.shape[1])
    raw, residual = violation_components(kind, u.matrix @ b, alpha, partition)
    return raw - penalty * residual


def definitive_violation(u, branches, alpha, partition, penalty: float = PENALTY) -> float:
    """Signed definitive-test score, penalized for branch images leaving span(No)."""
    return _penalized("definitive", u, branches, alpha, partition, penalty)


def partially_definitive_violation(u, branches, alpha, partition, penalty: float = PENALTY) -> float:
    return _penalized("partially_definitive", u, branches, alpha, partition, penalty)


def branch_discriminating_violation(u, branches, alpha, partition, penalty: float = PENALTY) -> float:
    return _penalized("branch_discriminating", u, branches, alpha, partition, penalty)


# --- projection onto the feasible set ---------------------------------------


def _polar(m: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(m, full_matrices=False)
    return w @ vh


def _confine_no(images: np.ndarray, partition: BeliefPartition) -> np.ndarray:
    no = partition.no_basis
    if no.shape[1] < images.shape[1]:
        raise ValueError("span(No) is too small to hold every branch image")
    return no @ _polar(no.conj().T @ images)


def _confine_branchwise(images: np.ndarray, partition: BeliefPartition) -> np.ndarray:
    no = partition.no_basis
    n = images.shape[1]
    c_no = no.conj().T @ images
    if 0 < no.shape[1] < n:
        raise ValueError("span(No) must be empty or hold one direction per branch")
    # No-parts of different branches must be orthogonal; Yes-parts already are.
    q = _polar(c_no) * np.linalg.norm(c_no, axis=0) if no.shape[1] else c_no
    out = np.empty_like(images)
    for i in range(n):
        yi = partition.group_basis(i)
        v = no @ q[:, i] + yi @ (yi.conj().T @ images[:, i])
        norm = np.linalg.norm(v)
        out[:, i] = v / norm if norm > 0 else yi[:, 0]
    return out


def _confine(kind: str, images: np.ndarray, partition: BeliefPartition) -> np.ndarray:
    if kind == "branch_discriminating":
        return _confine_branchwise(images, partition)
    return _confine_no(images, partition)


def confine_to_no_subspace(
    u: UnitaryOperator, branches: Sequence[StateVector], partition: BeliefPartition, seed: int = 0
) -> UnitaryOperator:
    """Nearest-in-spirit unitary whose branch images lie in span(No).

    Each image is projected onto span(No), the projections are replaced by
    their closest orthonormal family (polar factor), and the map is completed
    to a unitary.
    """
    images = _confine_no(u.matrix @ _branch_matrix(branches), partition)
    pairs = [(b, StateVector(images[:, i], b.layout)) for i, b in enumerate(branches)]
    return complete_to_unitary(PartialIsometrySpec(tuple(pairs)), seed=seed)


# --- random instances -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Instance:
    u: UnitaryOperator
    branches: tuple[StateVector, ...]
    alpha: np.ndarray
    partition: BeliefPartition


def random_alpha(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return a / np.linalg.norm(a)


def random_instance(dim: int, rng: np.random.Generator, alpha=None, aligned: bool = False) -> Instance:
    """Random candidate of branch-discriminating form.

    ``U`` is Haar random and the partition is made of columns of a Haar frame
    (or the standard basis when ``aligned``). Each branch owns a private block
    of No columns (possibly empty) and at least one Yes column; the branch
    states are chosen as ``U^dagger v_i`` with ``v_i`` a random unit vector in
    that block, so ``U|i>`` has exactly the required shape.
    """
    n = len(alpha) if alpha is not None else int(rng.integers(1, dim + 1))
    if not 1 <= n <= dim:
        raise ValueError(f"cannot fit {n} branches in dimension {dim}")
    alpha = random_alpha(n, rng) if alpha is None else _check_alpha(alpha, n)
    u = haar_random(dim, rng)
    frame = np.eye(dim, dtype=np.complex128) if aligned else haar_random(dim, rng).matrix
    perm = rng.permutation(dim)
    yes_cols = [[int(perm[i])] for i in range(n)]
    no_cols = [[] for _ in range(n)]
    for col in perm[n:]:
        slot = int(rng.integers(0, 2 * n + 1))
        if slot < n:
            yes_cols[slot].append(int(col))
        elif slot < 2 * n:
            no_cols[slot - n].append(int(col))
    no_idx = [c for cols in no_cols for c in cols]
    yes_idx, groups = [], []
    for cols in yes_cols:
        groups.append(tuple(range(len(yes_idx), len(yes_idx) + len(cols))))
        yes_idx.extend(cols)
    partition = BeliefPartition.from_indices(dim, no_idx, yes_idx, tuple(groups), frame=frame)
    images = np.empty((dim, n), dtype=np.complex128)
    for i in range(n):
        block = frame[:, no_cols[i] + yes_cols[i]]
        images[:, i] = block @ random_alpha(block.shape[1], rng)
    inputs = u.matrix.conj().T @ images
    branches = tuple(StateVector(inputs[:, i]) for i in range(n))
    return Instance(u, branches, alpha, partition)


def confined_instance(dim: int, rng: np.random.Generator) -> Instance:
    """Random candidate whose branch images were projected into span(No).

    Partition vectors come from a Haar frame, branches are random orthonormal
    states, and the Haar-random ``U`` is replaced by
    :func:`confine_to_no_subspace`.
    """
    n, no_idx, yes_idx, _ = draw_partition("partially_definitive", dim, rng)
    partition = BeliefPartition.from_indices(dim, no_idx, yes_idx, frame=haar_random(dim, rng).matrix)
    inputs = haar_random(dim, rng).matrix[:, :n]
    branches = tuple(StateVector(inputs[:, i]) for i in range(n))
    u = confine_to_no_subspace(haar_random(dim, rng), branches, partition, seed=int(rng.integers(2**31)))
    return Instance(u, branches, random_alpha(n, rng), partition)


def superposition_yes_mass(inst: Instance) -> float:
    """``||P_yes U sum_i alpha_i |i>||^2``."""
    psi = inst.u.matrix @ (column_matrix(inst.branches) @ inst.alpha)
    return float(_yes_mass(psi[:, None], inst.partition.yes_basis)[0])


# --- violation search -----------------------------------------------------


@dataclass
class RestartResult:
    restart: int
    n_branches: int
    no_indices: tuple[int, ...]
    yes_indices: tuple[int, ...]
    yes_groups: tuple[tuple[int, ...], ...] | None
    penalized_score: float
    residual: float
    feasible_score: float | None
    alpha: np.ndarray = field(repr=False)
    params: np.ndarray = field(repr=False)


@dataclass
class SearchReport:
    kind: str
    dim: int
    seed: int
    results: list[RestartResult]
    tolerance: float = SCORE_TOL

    @property
    def restarts(self) -> int:
        return len(self.results)

    @property
    def feasible(self) -> list[RestartResult]:
        return [r for r in self.results if r.feasible_score is not None]

    @property
    def best_feasible_score(self) -> float | None:
        scores = [r.feasible_score for r in self.feasible]
        return max(scores) if scores else None

    @property
    def best_penalized_score(self) -> float:
        return max(r.penalized_score for r in self.results)

    @property
    def argmax(self) -> RestartResult | None:
        feas = self.feasible
        return max(feas, key=lambda r: r.feasible_score) if feas else None

    @property
    def definition_satisfied(self) -> bool:
        """Whether any feasible candidate met the test's definition."""
        target = 1.0 - self.tolerance if self.kind == "definitive" else self.tolerance
        return any(r.feasible_score > target for r in self.feasible)

    @property
    def passed(self) -> bool:
        best = self.best_feasible_score
        return (best is None or best <= self.tolerance) and not self.definition_satisfied

    def summary(self) -> str:
        best = self.best_feasible_score
        scores = np.array([r.penalized_score for r in self.results])
        lines = [
            f"kind={self.kind} dim={self.dim} restarts={self.restarts} seed={self.seed}",
            f"best feasible score: {'none feasible' if best is None else f'{best:.3e}'} (tolerance {self.tolerance:.0e})",
            f"feasible restarts: {len(self.feasible)}/{self.restarts}",
            f"penalized score over restarts: max {scores.max():.3e} median {np.median(scores):.3e} min {scores.min():.3e}",
        ]
        if self.argmax is not None:
            a = self.argmax
            lines.append(f"argmax: restart {a.restart}, {a.n_branches} branches, |alpha|^2 = {np.round(np.abs(a.alpha) ** 2, 4).tolist()}")
        if not self.definition_satisfied:
            lines.append("no candidate satisfies the definition (infeasible)")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def draw_partition(kind: str, dim: int, rng: np.random.Generator, n: int | None = None):
    """Random basis-aligned partition for ``kind``; returns (n, no, yes, groups)."""
    perm = [int(p) for p in rng.permutation(dim)]
    if kind in ("definitive", "partially_definitive"):
        if n is None:
            n = int(rng.integers(min(2, dim - 1), dim))
        if not 1 <= n <= dim - 1:
            raise ValueError(f"{n} branches need room for No and Yes in dimension {dim}")
        a = int(rng.integers(n, dim))
        b = int(rng.integers(1, dim - a + 1))
        return n, perm[:a], perm[a : a + b], None
    if kind == "branch_discriminating":
        if n is None:
            n = int(rng.integers(2, max(2, dim // 2) + 1))
        if not 1 <= n <= dim:
            raise ValueError(f"cannot fit {n} branches in dimension {dim}")
        rest = perm[n:]
        a = 0
        if len(rest) >= n and rng.random() < 2 / 3:
            a = int(rng.integers(n, len(rest) + 1))
        no = rest[:a]
        yes_cols = [[perm[i]] for i in range(n)]
        for col in rest[a:]:
            slot = int(rng.integers(0, n + 1))
            if slot < n:
                yes_cols[slot].append(col)
        yes, groups = [], []
        for cols in yes_cols:
            groups.append(tuple(range(len(yes), len(yes) + len(cols))))
            yes.extend(cols)
        return n, no, yes, tuple(groups)
    raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")


def _run_restart(kind, dim, seed, restart, steps, alpha, penalty) -> RestartResult:
    rng = trial_rng(seed, restart)
    n_fixed = None if alpha is None else len(alpha)
    n, no_idx, yes_idx, groups = draw_partition(kind, dim, rng, n_fixed)
    partition = BeliefPartition.from_indices(dim, no_idx, yes_idx, groups)
    u0 = haar_random(dim, rng).matrix
    n_gen = dim * dim
    search_alpha = alpha is None
    z = np.zeros(n_gen + (2 * n if search_alpha else 0))
    if search_alpha:
        z[n_gen:] = rng.standard_normal(2 * n)
    fixed_alpha = None if search_alpha else np.asarray(alpha, dtype=np.complex128)

    def unpack(z):
        u = expm(-1j * hermitian_from_params(z[..., :n_gen], dim)) @ u0
        if search_alpha:
            a = z[..., n_gen::2] + 1j * z[..., n_gen + 1 :: 2]
            a = a / np.linalg.norm(a, axis=-1, keepdims=True)
        else:
            a = np.broadcast_to(fixed_alpha, z.shape[:-1] + (n,))
        return u, a

    best_feasible = None

    def objective(zs):
        """Penalized scores for a stack of parameter vectors."""
        nonlocal best_feasible
        u, a = unpack(zs)
        raw, residual = _components(kind, u[..., :n], a, partition)
        ok = residual <= FEASIBILITY_TOL
        if np.any(ok):
            top = float(np.max(raw[ok]))
            best_feasible = top if best_feasible is None else max(best_feasible, top)
        return raw - penalty * residual, residual

    # Normalized forward-difference ascent with a geometric step schedule;
    # a step is kept only if it improves the penalized score.
    h = 1e-7
    f, residual = (float(x[0]) for x in objective(z[None, :]))
    for t in range(steps):
        scores, _ = objective(z + h * np.eye(z.size))
        grad = (scores - f) / h
        gnorm = np.linalg.norm(grad)
        if not np.isfinite(gnorm) or gnorm == 0.0:
            break
        cand = z + (0.5 * 0.8**t) * grad / gnorm
        fc, rc = (float(x[0]) for x in objective(cand[None, :]))
        if fc > f:
            z, f, residual = cand, fc, rc

    # Project the final candidate onto the feasible set and score it there.
    u, a = unpack(z)
    a = np.array(a)
    try:
        images = _confine(kind, u[:, :n], partition)
    except ValueError:
        images = None
    if images is not None:
        u_feasible = complete_columns(images, seed=restart)
        raw, res = violation_components(kind, u_feasible[:, :n], a, partition)
        if res <= FEASIBILITY_TOL:
            best_feasible = raw if best_feasible is None else max(best_feasible, raw)

    return RestartResult(
        restart, n, tuple(no_idx), tuple(yes_idx), groups, f, residual, best_feasible, a, z
    )


def violation_search(
    kind: str,
    dim: int,
    restarts: int,
    seed: int = 0,
    steps: int = 30,
    alpha: Sequence[complex] | None = None,
    penalty: float = PENALTY,
    workers: int = 1,
) -> SearchReport:
    """Random-restart search for a unitary test that violates the ``kind`` no-go result.

    Each restart draws a basis-aligned belief partition and a Haar-random
    starting unitary, then climbs the penalized score over a local
    ``exp(-iK) U0`` chart (and over ``alpha`` unless it is fixed). Only
    candidates meeting the constraints to ``FEASIBILITY_TOL`` contribute a
    feasible score; the ascent's end point is additionally projected onto the
    feasible set and scored.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if dim < 2 or restarts < 1:
        raise ValueError("need dim >= 2 and restarts >= 1")
    if alpha is not None:
        alpha = _check_alpha(alpha, len(alpha))

    def one(r):
        return _run_restart(kind, dim, seed, r, steps, alpha, penalty)

    if workers <= 1:
        results = [one(r) for r in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(restarts)))
    return SearchReport(kind, dim, seed, results)


# --- overlap preservation -------------------------------------------------


@dataclass
class Lemma1Report:
    overlaps: np.ndarray
    max_deviation: float
    passed: bool

    @property
    def min_achievable_overlap(self) -> np.ndarray:
        """No unitary brings a pair's overlap below its current value."""
        return self.overlaps

    def distinguishable(self, tol: float = TOL_NORM) -> np.ndarray:
        return self.overlaps < tol

    def summary(self) -> str:
        return f"{self.overlaps.size} pairs, max ||<Ua|Ub>| - |<a|b>|| = {self.max_deviation:.3e}"


def check_lemma1(
    pairs: Sequence[tuple[StateVector, StateVector]], unitaries: Sequence[UnitaryOperator]
) -> Lemma1Report:
    overlaps = np.array([abs(inner_product(a, b)) for a, b in pairs])
    dev = 0.0
    for u in unitaries:
        for (a, b), ov in zip(pairs, overlaps):
            dev = max(dev, abs(abs(inner_product(apply(u, a), apply(u, b))) - ov))
    return Lemma1Report(overlaps, dev, dev < RELATION_TOL)


# --- phase averaging versus mixtures --------------------------------------


@dataclass
class MixtureReport:
    phase_averaged: np.ndarray
    mixture: np.ndarray
    max_discrepancy: float
    density_discrepancy: float
    passed: bool

    def summary(self) -> str:
        return (
            f"outcome distribution discrepancy {self.max_discrepancy:.3e}, "
            f"density discrepancy {self.density_discrepancy:.3e}"
        )


def mixture_indistinguishability(
    alpha: Sequence[complex],
    protocol_unitaries: Sequence[UnitaryOperator],
    register: str,
    k: int,
    branches: Sequence[StateVector] | None = None,
    mode: str = "factored",
) -> MixtureReport:
    """Compare a phase-unknown superposition with the classical mixture of its
    branches under an arbitrary unitary-then-measure protocol.

    ``branches`` embed the branch index ``j`` into the protocol's space; by
    default branch ``j`` is the basis state ``|j>`` of a flat register.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    if branches is None:
        branches = [basis_state(alpha.size, j) for j in range(alpha.size)]
    rho_avg = embed_density(phase_average(alpha, k, mode=mode), branches)
    rho_mix = mixture(np.abs(alpha) ** 2, branches)
    a, b = rho_avg.entries, rho_mix.entries
    for u in protocol_unitaries:
        a = u.matrix @ a @ u.matrix.conj().T
        b = u.matrix @ b @ u.matrix.conj().T
    layout = branches[0].layout
    pa = born_distribution(DensityMatrix(a, layout), register)
    pb = born_distribution(DensityMatrix(b, layout), register)
    disc = float(np.max(np.abs(pa - pb)))
    return MixtureReport(pa, pb, disc, float(np.max(np.abs(a - b))), disc < RELATION_TOL)
