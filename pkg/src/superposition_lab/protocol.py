"""The interference test an experimenter can run on themselves.

An electron is prepared in ``(|up> + e^{i phi}|down>)/sqrt(2)``, the
experimenter measures it, and a sealed machine then maps both
(electron, memory) branches onto one wiped memory state times a paper record
``(+-|N> + |Y>)/sqrt(2)``. Under unitary-only evolution the branches interfere
and the record always reads Yes (for a correctly phased machine); under
objective collapse only one branch survives and the record is a fair coin.

Register layout (big-endian): ``spin`` (up, down), ``experimenter``
(ready, saw-up, saw-down), ``paper`` (blank, No, Yes).
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    ZERO_PROBABILITY,
    EvolutionModel,
    MeasurementOutcome,
    ProtocolStep,
    born_distribution,
    evolve,
    measure_register,
    project,
    trial_rng,
)
from .statespace import RegisterLayout, StateVector, basis_state, superpose
from .unitary import PartialIsometrySpec, UnitaryOperator, apply, complete_to_unitary

UP, DOWN = 0, 1
READY, SAW_UP, SAW_DOWN = 0, 1, 2
BLANK, NO, YES = 0, 1, 2

LAYOUT = RegisterLayout.of(("spin", 2), ("experimenter", 3), ("paper", 3))
TWO_PI = 2 * math.pi


class Outcome(str, enum.Enum):
    YES = "Yes"
    NO = "No"


@dataclass(frozen=True)
class ExperimentConfig:
    phase_actual: float = 0.0
    phase_assumed: float = 0.0
    trials: int = 1
    model: EvolutionModel = EvolutionModel.unitary_only()
    seed: int = 0
    spin_up_weight: float = 0.5

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for name in ("phase_actual", "phase_assumed"):
            phase = getattr(self, name)
            if not 0.0 <= phase < TWO_PI:
                raise ValueError(f"{name} must lie in [0, 2*pi), got {phase}")
        if not 0.0 <= self.spin_up_weight <= 1.0:
            raise ValueError("spin_up_weight must lie in [0, 1]")


@dataclass(frozen=True)
class TrialRecord:
    index: int
    outcome: Outcome
    outcome_probability_rsi: float
    outcome_probability_collapse: float


@dataclass(frozen=True)
class EvidenceLedger:
    """Outcome counts and the natural-log Bayes factor of RSI over collapse.

    An outcome impossible under one hypothesis sets its ``*_rejected`` flag
    and leaves ``log_bayes_factor`` as ``None`` instead of an infinity.
    """

    yes_count: int
    no_count: int
    log_bayes_factor: float | None
    rsi_rejected: bool = False
    collapse_rejected: bool = False

    @property
    def trials(self) -> int:
        return self.yes_count + self.no_count


def prepare_initial(cfg: ExperimentConfig) -> StateVector:
    up = basis_state(LAYOUT, UP, READY, BLANK)
    down = basis_state(LAYOUT, DOWN, READY, BLANK)
    a = math.sqrt(cfg.spin_up_weight)
    b = math.sqrt(1.0 - cfg.spin_up_weight) * np.exp(1j * cfg.phase_actual)
    return superpose([a, b], [up, down])


@functools.lru_cache(maxsize=None)
def entangling_step() -> ProtocolStep:
    """The experimenter looks at the spin: ``|s, ready> -> |s, saw-s>``.

    A permutation of basis states, swapping ready <-> saw-s for each spin s.
    """
    perm = np.arange(LAYOUT.dim)
    for spin, seen in ((UP, SAW_UP), (DOWN, SAW_DOWN)):
        for paper in range(3):
            i = LAYOUT.index(spin, READY, paper)
            j = LAYOUT.index(spin, seen, paper)
            perm[i], perm[j] = j, i
    m = np.zeros((LAYOUT.dim, LAYOUT.dim))
    m[perm, np.arange(LAYOUT.dim)] = 1.0
    return ProtocolStep(UnitaryOperator(m, LAYOUT), measured=("spin",), label="experimenter measures spin")


def reset_state() -> tuple[int, int]:
    """(spin, experimenter) values every branch is wiped to."""
    return UP, READY


@functools.lru_cache(maxsize=64)
def _machine_transform(phase_assumed: float, completion_seed: int) -> UnitaryOperator:
    s, e = reset_state()
    no = basis_state(LAYOUT, s, e, NO)
    yes = basis_state(LAYOUT, s, e, YES)
    r = 1 / math.sqrt(2)
    partial = PartialIsometrySpec(
        (
            (basis_state(LAYOUT, UP, SAW_UP, BLANK), superpose([r, r], [no, yes])),
            (
                basis_state(LAYOUT, DOWN, SAW_DOWN, BLANK),
                superpose([-r, r], [no, yes]) * np.exp(-1j * phase_assumed),
            ),
        )
    )
    return complete_to_unitary(partial, seed=completion_seed)


def build_machine_transform(cfg: ExperimentConfig, completion_seed: int = 0) -> UnitaryOperator:
    """Unitary sending ``|up, saw-up, blank>`` to ``|reset>(|N>+|Y>)/sqrt2`` and
    ``|down, saw-down, blank>`` to ``e^{-i phase_assumed}|reset>(-|N>+|Y>)/sqrt2``.

    The rest of the space is completed reproducibly from ``completion_seed``.
    """
    return _machine_transform(cfg.phase_assumed, completion_seed)


def machine_step(cfg: ExperimentConfig, completion_seed: int = 0) -> ProtocolStep:
    return ProtocolStep(build_machine_transform(cfg, completion_seed), label="machine transform")


def _snap(probs: np.ndarray) -> np.ndarray:
    probs = np.where(probs > ZERO_PROBABILITY, probs, 0.0)
    return probs / probs.sum()


@functools.lru_cache(maxsize=256)
def _predicted(phase_actual, phase_assumed, weight, completion_seed):
    cfg = ExperimentConfig(phase_actual, phase_assumed, spin_up_weight=weight)
    machine = build_machine_transform(cfg, completion_seed)
    entangled = apply(entangling_step().unitary, prepare_initial(cfg))
    rsi = born_distribution(apply(machine, entangled), "paper")
    collapse = np.zeros(3)
    for value, p in enumerate(born_distribution(entangled, "spin")):
        if p > ZERO_PROBABILITY:
            branch = project(entangled, "spin", value).normalize()
            collapse += p * born_distribution(apply(machine, branch), "paper")
    return _snap(rsi), _snap(collapse)


def predicted_paper_distributions(cfg: ExperimentConfig, completion_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(RSI, collapse) distributions over the paper register (blank, No, Yes),
    computed by full state simulation."""
    rsi, collapse = _predicted(cfg.phase_actual, cfg.phase_assumed, cfg.spin_up_weight, completion_seed)
    return rsi.copy(), collapse.copy()


def rsi_yes_probability(phase_mismatch: float) -> float:
    """Closed form ``cos^2(mismatch/2)`` for the symmetric preparation."""
    return math.cos(phase_mismatch / 2) ** 2


def run_trial(cfg: ExperimentConfig, index: int, completion_seed: int = 0) -> TrialRecord:
    rng = trial_rng(cfg.seed, index)
    psi = prepare_initial(cfg)
    for step in (entangling_step(), machine_step(cfg, completion_seed)):
        psi = evolve(cfg.model, psi, step, rng)
        if isinstance(psi, MeasurementOutcome):
            psi = psi.post_state
    readout = measure_register(psi, "paper", rng)
    if readout.value == BLANK:
        raise RuntimeError("paper record left blank; machine transform is inconsistent")
    outcome = Outcome.YES if readout.value == YES else Outcome.NO
    rsi, collapse = predicted_paper_distributions(cfg, completion_seed)
    return TrialRecord(index, outcome, float(rsi[readout.value]), float(collapse[readout.value]))


def run_experiment(cfg: ExperimentConfig, workers: int = 1, completion_seed: int = 0) -> list[TrialRecord]:
    """All ``cfg.trials`` trials in index order; ``workers > 1`` runs them on a
    thread pool with identical results."""
    predicted_paper_distributions(cfg, completion_seed)
    indices = range(cfg.trials)
    if workers <= 1:
        return [run_trial(cfg, i, completion_seed) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_trial(cfg, i, completion_seed), indices))


def accumulate_evidence(records: list[TrialRecord]) -> EvidenceLedger:
    if not records:
        raise ValueError("need at least one trial record")
    yes = sum(r.outcome is Outcome.YES for r in records)
    rsi_rejected = any(r.outcome_probability_rsi == 0.0 for r in records)
    collapse_rejected = any(r.outcome_probability_collapse == 0.0 for r in records)
    if rsi_rejected or collapse_rejected:
        log_bf = None
    else:
        log_bf = math.fsum(
            math.log(r.outcome_probability_rsi) - math.log(r.outcome_probability_collapse) for r in records
        )
    return EvidenceLedger(yes, len(records) - yes, log_bf, rsi_rejected, collapse_rejected)
