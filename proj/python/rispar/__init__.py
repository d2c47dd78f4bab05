"""Cascaded channel estimation for surface-assisted multi-user MISO downlink."""

from ._core import (
    CSV_HEADER,
    AmbiguityError,
    FeasibilityError,
    NumericalFailure,
    PrecoderInfeasible,
    SingularityError,
    als_estimate,
    compose_tensor,
    crb_nmse_bounds,
    dft_rows,
    feasibility,
    nmse,
    optimize_phase,
    precoder,
    remove_ambiguity,
    run_experiment_json,
    simulate,
    sum_rate,
    vamp_estimate,
)

__all__ = [
    "CSV_HEADER",
    "AmbiguityError",
    "FeasibilityError",
    "NumericalFailure",
    "PrecoderInfeasible",
    "SingularityError",
    "als_estimate",
    "compose_tensor",
    "crb_nmse_bounds",
    "dft_rows",
    "feasibility",
    "nmse",
    "optimize_phase",
    "precoder",
    "remove_ambiguity",
    "run_experiment_json",
    "simulate",
    "sum_rate",
    "vamp_estimate",
]
