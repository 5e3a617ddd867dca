"""Bayesian model selection over hierarchically nested task families.

Exact and approximate posteriors over Markov-chain orders, regression
dimensionalities, grammar subfamilies and Boolean rule families, the
matching Bayes-optimal predictors, a hand-constructed attention circuit
that reads empirical bigram tables out of a sequence, and a seeded
experiment harness with CSV/JSON reports.
"""

__version__ = "0.1.0"

from . import errors
from .numerics import (
    Distribution,
    PosteriorReport,
    Rng,
    digamma,
    kl_divergence,
    log_det_gram,
    log_gamma,
    log_sum_exp,
    multivariate_digamma,
    pinv_apply,
    sample_dirichlet,
    trigamma,
)

__all__ = [
    "__version__",
    "errors",
    "Rng",
    "Distribution",
    "PosteriorReport",
    "log_gamma",
    "digamma",
    "trigamma",
    "multivariate_digamma",
    "sample_dirichlet",
    "pinv_apply",
    "log_det_gram",
    "kl_divergence",
    "log_sum_exp",
]
