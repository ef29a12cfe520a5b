"""Decompose quantum instruments into adaptive sequences of instruments."""
from .decompose import (
    AuxInstrumentPolicy,
    InvariantError,
    PovmDecomposition,
    PreconditionError,
    TwoStepDecomposition,
    count_additional_kraus,
    lift_history_dependence,
    min_ancilla,
    n_step,
    povm_two_step,
    product_outcomes,
    two_step,
    two_step_reduced,
)
from .linalg import DEFAULT_TOL
from .quantum import (
    ROOT,
    AdaptiveSequence,
    Diagnostic,
    Instrument,
    Povm,
    StochasticMatrix,
    apply,
    choi,
    choi_distance,
    coarse_grain,
    compose,
    detailed_instrument,
    induced_channel,
    induced_povm,
    kraus_rank,
    luders,
    minimal_kraus,
    postprocess_povm,
    povm_as_instrument,
    validate,
)
from .resources import ResourceReport, resource_report
from .runtime import EquivalenceReport, run, total_instrument, verify_equivalence

__version__ = "0.1.0"

__all__ = [
    "AdaptiveSequence",
    "AuxInstrumentPolicy",
    "DEFAULT_TOL",
    "Diagnostic",
    "EquivalenceReport",
    "Instrument",
    "InvariantError",
    "Povm",
    "PovmDecomposition",
    "PreconditionError",
    "ROOT",
    "ResourceReport",
    "StochasticMatrix",
    "TwoStepDecomposition",
    "apply",
    "choi",
    "choi_distance",
    "coarse_grain",
    "compose",
    "count_additional_kraus",
    "detailed_instrument",
    "induced_channel",
    "induced_povm",
    "kraus_rank",
    "lift_history_dependence",
    "luders",
    "min_ancilla",
    "minimal_kraus",
    "n_step",
    "postprocess_povm",
    "povm_as_instrument",
    "povm_two_step",
    "product_outcomes",
    "resource_report",
    "run",
    "total_instrument",
    "two_step",
    "two_step_reduced",
    "validate",
    "verify_equivalence",
]
