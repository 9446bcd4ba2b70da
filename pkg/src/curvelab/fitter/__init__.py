"""Bayesian estimation of affine models from yield panels."""
from .diagnostics import LooResult, loo_is, rhat
from .likelihood import LatentDensity, latent_log_prior, log_likelihood, log_prior
from .mcmc import FitResult, MCMCConfig, Posterior, SamplerError, metropolis_fit
from .models import MODELS, ModelTemplate, get_model
from .priors import Prior, load_priors, prior_log_density

__all__ = [
    "FitResult", "LatentDensity", "LooResult", "MCMCConfig", "MODELS", "ModelTemplate",
    "Posterior", "Prior", "SamplerError", "get_model", "latent_log_prior", "load_priors",
    "log_likelihood", "log_prior", "loo_is", "metropolis_fit", "prior_log_density", "rhat",
]
