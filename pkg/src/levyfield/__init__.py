"""Lévy-driven stochastic heat equations: characteristic exponents,
transition densities, fractional moments, spectral noise and a lattice
solver with Holder-exponent diagnostics."""

from . import levy_core, moments, spde_sim, spectral_noise, transition_density
from .levy_core import (CharacteristicExponent, LevyTriplet, brownian, cauchy, check_assumptions,
                        compound_poisson, evaluate_psi, exponent_from_config, stable,
                        tempered_stable)
from .moments import FractionalMomentEstimator, estimate_fractional_moment, verify_growth
from .spde_sim import (HolderExponentEstimator, InitialCondition, ModelSpec, Nonlinearity,
                       estimate_holder, paper_ranges, simulate)
from .spectral_noise import (SpectralNoiseModel, TorusLattice, compute_indices, dalang_check,
                             riesz_noise, synthesize_noise_increment, verify_lemma31, white_noise)
from .transition_density import invert_density, l1_increment_space, l1_increment_time

__version__ = "0.1.0"
