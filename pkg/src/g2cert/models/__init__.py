"""Distribution models: the flat chart, Hilbert-Cartan, the Chazy families and
the Lame-parametrised examples."""
from .base import (
    AnnihilationFailure,
    DistributionModel,
    FlatChart,
    MissingParam,
    UnknownModel,
    a_from_c,
    big_theta,
    c_from_a,
    engel_check,
    flat_chart,
    monge_model,
    seed_triple,
    seeds_from_z,
    theta_forms,
    theta_pullbacks,
    theta_span,
    z_fields,
)
from .catalog import BUILTINS, builtin
from .chazy import AuxFunctions, ExtractionMismatch, residual_obstructions
from .checks import (
    Report,
    aux_identities,
    hc_recovery,
    lame_solution_checks,
    reduction_checks,
    rescaling_check,
    symmetry_condition,
)

__all__ = [
    "AnnihilationFailure", "DistributionModel", "FlatChart", "MissingParam", "UnknownModel",
    "a_from_c", "big_theta", "c_from_a", "engel_check", "flat_chart", "monge_model",
    "seed_triple", "seeds_from_z", "theta_forms", "theta_pullbacks", "theta_span", "z_fields",
    "BUILTINS", "builtin", "AuxFunctions", "ExtractionMismatch", "residual_obstructions",
    "Report", "aux_identities", "hc_recovery", "lame_solution_checks", "reduction_checks",
    "rescaling_check", "symmetry_condition",
]
