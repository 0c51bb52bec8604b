"""Rival evolution models: purely unitary evolution versus objective collapse
at measurement interactions, with Born-rule sampling."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .statespace import DensityMatrix, StateVector
from .unitary import UnitaryOperator, apply

# Squared amplitudes this small are round-off from exact cancellations
# (amplitudes near machine epsilon) and are treated as impossible outcomes.
ZERO_PROBABILITY = 1e-20


class ModelKind(enum.Enum):
    UNITARY_ONLY = "rsi"
    OBJECTIVE_COLLAPSE = "collapse"


@dataclass(frozen=True)
class EvolutionModel:
    kind: ModelKind
    collapse_registers: tuple[str, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "collapse_registers", tuple(self.collapse_registers))
        if self.kind is ModelKind.UNITARY_ONLY and self.collapse_registers:
            raise ValueError("unitary-only evolution has no collapse registers")

    @classmethod
    def unitary_only(cls, rng_seed: int = 0) -> "EvolutionModel":
        return cls(ModelKind.UNITARY_ONLY, (), rng_seed)

    @classmethod
    def collapse(cls, registers: Sequence[str] = (), rng_seed: int = 0) -> "EvolutionModel":
        return cls(ModelKind.OBJECTIVE_COLLAPSE, tuple(registers), rng_seed)

    @property
    def collapses(self) -> bool:
        return self.kind is ModelKind.OBJECTIVE_COLLAPSE


@dataclass(frozen=True, eq=False)
class ProtocolStep:
    """A unitary, optionally flagged as a measurement interaction on ``measured`` registers."""

    unitary: UnitaryOperator
    measured: tuple[str, ...] = ()
    label: str = ""

    @property
    def is_measurement(self) -> bool:
        return bool(self.measured)


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    register: str
    value: int
    probability: float
    post_state: StateVector


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def born_distribution(state: StateVector | DensityMatrix, register: str) -> np.ndarray:
    """Outcome probabilities for a projective measurement of one register."""
    layout = state.layout
    axis = layout.axis(register)
    if isinstance(state, DensityMatrix):
        weights = state.diagonal().reshape(layout.dims)
    else:
        weights = np.abs(state.tensor()) ** 2
    other = tuple(i for i in range(len(layout.dims)) if i != axis)
    probs = weights.sum(axis=other) if other else weights
    return probs / probs.sum()


def project(psi: StateVector, register: str, value: int) -> StateVector:
    """Unnormalized projection of ``psi`` onto ``register == value``."""
    axis = psi.layout.axis(register)
    t = np.zeros(psi.layout.dims, dtype=np.complex128)
    sel = [slice(None)] * t.ndim
    sel[axis] = value
    t[tuple(sel)] = psi.tensor()[tuple(sel)]
    return StateVector(t.ravel(), psi.layout, normalized=False)


def measure_register(psi: StateVector, register: str, rng: np.random.Generator) -> MeasurementOutcome:
    probs = born_distribution(psi, register)
    support = np.flatnonzero(probs > ZERO_PROBABILITY)
    p = probs[support] / probs[support].sum()
    pick = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    value = int(support[min(pick, p.size - 1)])
    post = project(psi, register, value).normalize()
    return MeasurementOutcome(register, value, float(probs[value]), post)


def evolve(
    model: EvolutionModel,
    psi: StateVector,
    step: ProtocolStep,
    rng: np.random.Generator | None = None,
) -> StateVector | MeasurementOutcome:
    """Apply one protocol step under ``model``.

    Unitary-only evolution treats a measurement interaction as the entangling
    unitary it is and never touches ``rng``. Objective collapse applies the
    same unitary and then collapses the model's registers (or the step's
    measured registers if the model names none) one after another; the
    outcome for the last collapsed register is returned, its post-state
    reflecting every collapse.
    """
    out = apply(step.unitary, psi)
    if not (model.collapses and step.is_measurement):
        return out
    if rng is None:
        rng = np.random.default_rng(model.rng_seed)
    outcome = None
    for reg in model.collapse_registers or step.measured:
        outcome = measure_register(out, reg, rng)
        out = outcome.post_state
    return outcome
