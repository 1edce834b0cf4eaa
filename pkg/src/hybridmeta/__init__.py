"""Meta distribution of the SIR in hybrid microwave/mm-wave two-tier networks.

Analytic moments, Gil-Pelaez and Beta inversion, and a Monte Carlo
stochastic-geometry simulator that cross-checks them.
"""

from .association import AssocProbabilities, assoc_probs, closed_form_a1
from .errors import DomainError, IntegrationFailure, NonConvergence, PreconditionError, QuadratureFailure
from .metadist import BetaFit, Degenerate, MetaCurve, Method, beta_ccdf, beta_fit, gil_pelaez_ccdf, meta_rate, meta_sir
from .model import ConfigError, NetworkConfig, config_from_dict, config_to_dict, derive, load_config, validate
from .moments import (EvalPath, MomentEngine, MomentQuery, MomentResult, Variant, mean_local_delay, moment_total,
                      network_jitter)

__version__ = "0.1.0"

__all__ = [
    "AssocProbabilities", "assoc_probs", "closed_form_a1",
    "DomainError", "IntegrationFailure", "NonConvergence", "PreconditionError", "QuadratureFailure",
    "BetaFit", "Degenerate", "MetaCurve", "Method", "beta_ccdf", "beta_fit", "gil_pelaez_ccdf", "meta_rate",
    "meta_sir",
    "ConfigError", "NetworkConfig", "config_from_dict", "config_to_dict", "derive", "load_config", "validate",
    "EvalPath", "MomentEngine", "MomentQuery", "MomentResult", "Variant", "mean_local_delay", "moment_total",
    "network_jitter",
]
