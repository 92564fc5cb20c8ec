"""Quantum Mealy machines: simulation, equivalence checking, minimisation encodings."""

from .equivalence import (
    Verdict,
    check_machines,
    check_states,
    check_states_k,
    check_states_naive,
    experiment_bound,
)
from .linalg import SpanTracker, frobenius_inner
from .model import (
    DensityOperator,
    Experiment,
    QuantumMealyMachine,
    Scheduler,
    direct_sum,
    experiment_operator,
    is_real,
    run_experiment,
    word_unitary,
)

__version__ = "0.1.0"

__all__ = [
    "DensityOperator",
    "Experiment",
    "QuantumMealyMachine",
    "Scheduler",
    "SpanTracker",
    "Verdict",
    "check_machines",
    "check_states",
    "check_states_k",
    "check_states_naive",
    "direct_sum",
    "experiment_bound",
    "experiment_operator",
    "frobenius_inner",
    "is_real",
    "run_experiment",
    "word_unitary",
]
