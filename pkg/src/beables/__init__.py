"""Beable jump dynamics, von Neumann measurements and faithfulness experiments."""

from .beable import (
    BeableBasis,
    TrajectorySample,
    VState,
    ensemble_distribution,
    evolve,
    jump_rates,
    probability_current,
    propagate,
    run_trials,
    simulate,
    step,
    trial_rng,
)
from .experiments import SCENARIOS, decorrelation_test, get_scenario
from .hilbert import (
    apply,
    matrix_exponential_unitary,
    pauli,
    tensor_op,
    tensor_state,
)
from .measurement import (
    FaithfulnessReport,
    MeasurementSetup,
    faithfulness_experiment,
    run_measurement,
    verify_von_neumann,
)
from .schedule import Schedule, Segment

__version__ = "0.1.0"

__all__ = [
    "BeableBasis",
    "FaithfulnessReport",
    "MeasurementSetup",
    "SCENARIOS",
    "Schedule",
    "Segment",
    "TrajectorySample",
    "VState",
    "apply",
    "decorrelation_test",
    "ensemble_distribution",
    "evolve",
    "faithfulness_experiment",
    "get_scenario",
    "jump_rates",
    "matrix_exponential_unitary",
    "pauli",
    "probability_current",
    "propagate",
    "run_measurement",
    "run_trials",
    "simulate",
    "step",
    "tensor_op",
    "tensor_state",
    "trial_rng",
    "verify_von_neumann",
]
