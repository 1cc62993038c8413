"""Bayesian estimation of monotone non-increasing densities with mixtures of
uniforms, the Grenander baseline, and a contraction-rate simulation harness."""

from monobayes.grenander import (
    GrenanderFit,
    boundary_modified_eval,
    grenander_fit,
    inverse_process,
)
from monobayes.mixture import (
    K0,
    AtomicMixture,
    PartitionTrace,
    StepDensity,
    adaptive_kl_partition,
    distance,
    eval_density,
    kl_divergence,
    sample_iid,
)
from monobayes.posterior import (
    McmcConfig,
    PosteriorDraws,
    conjugate_theta_draw,
    effective_sample_size,
    run_dp_posterior,
    run_finite_mixture_posterior,
    run_posterior,
)
from monobayes.priors import BaseMeasure, PriorSpec, sample_prior, validate_prior_conditions
from monobayes.summaries import (
    credible_band,
    posterior_median_pointwise,
    posterior_radius,
)

__version__ = "0.1.0"
