"""Cyclical Kernel Adaptive Metropolis and baseline adaptive MCMC samplers."""
from . import diagnostics, kernels, samplers, targets
from .kernels import RBF, Linear, Matern
from .samplers import CycleSchedule, SamplerConfig, ckam_run, run_chain
from .targets import GaussianMixture, Mesh, ProductGrid, make_target

__version__ = "0.1.0"
