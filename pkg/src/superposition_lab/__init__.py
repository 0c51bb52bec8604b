"""Simulation lab for self-applied superposition tests.

Unitary-only evolution versus objective collapse on an interference protocol,
plus numerical checks of why tests that keep branch memories cannot work.
"""

from .dynamics import EvolutionModel, ModelKind, born_distribution, evolve, measure_register
from .protocol import ExperimentConfig, accumulate_evidence, run_experiment, run_trial
from .statespace import DensityMatrix, RegisterLayout, StateVector, basis_state, inner_product, tensor_product
from .unitary import UnitaryOperator, apply, complete_to_unitary, from_generator, haar_random

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "EvolutionModel",
    "ExperimentConfig",
    "ModelKind",
    "RegisterLayout",
    "StateVector",
    "UnitaryOperator",
    "accumulate_evidence",
    "apply",
    "basis_state",
    "born_distribution",
    "complete_to_unitary",
    "evolve",
    "from_generator",
    "haar_random",
    "inner_product",
    "measure_register",
    "run_experiment",
    "run_trial",
    "tensor_product",
]
