"""Bayesian ordinal probit and ordinal quantile regression."""

__version__ = "0.1.0"

from .core import (PROBIT, CutpointMap, DrawsStore, ModelKind, OrdinalDataset, PriorSpec,
                   SamplerConfig, delta_from_gamma, gamma_from_delta, log_likelihood,
                   outcome_probabilities)
from .diagnostics import PosteriorSummary, inefficiency_factor, simulate_dataset, summarize_draws
from .effects import (CovariateEffect, CovariateShift, average_covariate_effect,
                      effect_significance_filter)
from .evidence import EvidenceResult, log_bayes_factor, log_marginal_likelihood
from .probit import run_probit_chain
from .quantile import run_quantile_chain

__all__ = [
    "PROBIT", "CutpointMap", "DrawsStore", "ModelKind", "OrdinalDataset", "PriorSpec",
    "SamplerConfig", "delta_from_gamma", "gamma_from_delta", "log_likelihood",
    "outcome_probabilities", "PosteriorSummary", "inefficiency_factor", "simulate_dataset",
    "summarize_draws", "CovariateEffect", "CovariateShift", "average_covariate_effect",
    "effect_significance_filter", "EvidenceResult", "log_bayes_factor",
    "log_marginal_likelihood", "run_probit_chain", "run_quantile_chain",
]
