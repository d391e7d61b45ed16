"""Fuzzy-state evolution on a periodic 1D grid: point sources, free and
generalized-free evolution, interference decomposition and tail diagnostics."""

__version__ = "0.1.0"

from .grid import (Density, EnsembleSpec, EvolutionSpec, FuzzyState, Grid, PointSource,
                   SignedField, SourceSpec, build_member_states, build_source_state, make_grid,
                   norm2, normalize)
from .kernels import (ResolutionError, diffusion_correspondence_residual, diffusion_kernel,
                      evolve_convolution, gaussian_free_closed_form, propagator)
from .spectral import (SpectralPlan, evolve, evolve_spectral, evolve_split_step,
                       first_order_check, momentum_operator_apply, reverse_spectral)
from .analysis import (DecompositionResult, TailFit, TestFunction, decompose, delta_functional,
                       density, fit_tail_exponent, fringe_spacing, mixed_density, moments,
                       overlap_measure, sample_positions)
