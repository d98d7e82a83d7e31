"""
Generalisation certificates.

This package contains:
- Closed-form gap evaluators for every bound family
- δ ledgers and union-bound surcharges
- The Student and α-stable heavy-tail factors
- Certificate assembly into versioned reports
"""

from src.bounds.budget import (
    DeltaLedger,
    LedgerEntry,
    compose_delta_budget,
    data_dependent_prior_penalty,
    lambda_grid_penalty,
    prior_variance_grid_value,
    prior_variance_penalty,
)
from src.bounds.certificate import (
    BoundFamily,
    BoundReport,
    CertificationError,
    EtaChoice,
    RiskEstimate,
    certify,
    certify_student,
    evaluate_terms,
    interpolate_eta,
    mc_expected_risk,
    optimise_eta,
    wasserstein_to,
)
from src.bounds.gaps import (
    BoundError,
    binary_kl,
    catoni_fast_rate,
    catoni_gap,
    hellinger_gap,
    kl_inverse_bound,
    kl_inverse_upper,
    kl_wass_gap,
    mcallester_gap,
    reverse_kl_gap,
    supermartingale_gap,
    tv_gap,
)
from src.bounds.heavy_tail import (
    FFactor,
    heavy_tail_factor,
    mc_f_factor,
    stable_index_to_dof,
    student_bound,
)

__all__ = [
    "BoundError",
    "BoundFamily",
    "BoundReport",
    "CertificationError",
    "DeltaLedger",
    "EtaChoice",
    "FFactor",
    "LedgerEntry",
    "RiskEstimate",
    "binary_kl",
    "catoni_fast_rate",
    "catoni_gap",
    "certify",
    "certify_student",
    "compose_delta_budget",
    "data_dependent_prior_penalty",
    "evaluate_terms",
    "heavy_tail_factor",
    "hellinger_gap",
    "interpolate_eta",
    "kl_inverse_bound",
    "kl_inverse_upper",
    "kl_wass_gap",
    "lambda_grid_penalty",
    "mc_expected_risk",
    "mc_f_factor",
    "mcallester_gap",
    "optimise_eta",
    "prior_variance_grid_value",
    "prior_variance_penalty",
    "reverse_kl_gap",
    "stable_index_to_dof",
    "student_bound",
    "supermartingale_gap",
    "tv_gap",
    "wasserstein_to",
]
