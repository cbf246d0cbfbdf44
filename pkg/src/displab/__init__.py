"""Numerical laboratory for dispersive bounds of Schrodinger propagators.

Constructive objects (Jost solutions, Wronskians, spectral kernels, Born
expansions, weighted resolvent norms) in dimensions 1 and 3, each validated
against an independent grid oracle at desk scale.
"""

__version__ = "0.1.0"

from .jost import JostTable, decay_majorant, m_fourier_side, solve_jost
from .oscillatory import bump, filon_linear_phase, filon_quadratic_phase, free_kernel
from .potentials import (box, from_config, gaussian, kato_norm, l1_norm,
                         poschl_teller, sampled, sampled_from_csv,
                         weighted_l1_norm, zero)
from .propagator1d import (CutoffSpec, KernelAssembler1D, SpectralWindow,
                           born_term_kernel, default_cutoff,
                           dispersive_constant, full_kernel,
                           low_energy_kernel, resonant_reduction, wiener_gate)
from .resolvent3d import (AmplitudeModel, HSNorm, KatoIteration, S0Report,
                          b_kernel_norm, b_kernel_rate, bprime_norm,
                          bprime_norm_closed, ft_kernel_l1, ft_kernel_scaling,
                          g_decay_fit, g_function_norm, hs_norm_r0,
                          hs_norm_r0_closed, iterated_kato_bound,
                          mollifier_transform, neumann_threshold,
                          phase_pinned_scan, phase_slope, s0_invertibility,
                          shell_weight_profile, statphase_decay,
                          stationary_phase_I, write_norm_table)
from .scattering import (ScatteringData, classify_zero_energy, expansion_residual,
                         green_kernel, scattering_data, wronskian)
from .spectral_oracle import (GridHamiltonian, bound_state_kernel, build,
                              oracle_propagator, stone_density)
from .wiener import (l1_fourier_norm, pruf_uniform_bounds,
                     wiener_inverse_check)

__all__ = [
    "__version__",
    "bump",
    "filon_linear_phase",
    "filon_quadratic_phase",
    "free_kernel",
    "zero",
    "box",
    "gaussian",
    "poschl_teller",
    "sampled",
    "sampled_from_csv",
    "from_config",
    "l1_norm",
    "weighted_l1_norm",
    "kato_norm",
    "JostTable",
    "solve_jost",
    "decay_majorant",
    "m_fourier_side",
    "ScatteringData",
    "scattering_data",
    "wronskian",
    "expansion_residual",
    "classify_zero_energy",
    "green_kernel",
    "GridHamiltonian",
    "build",
    "oracle_propagator",
    "bound_state_kernel",
    "stone_density",
    "CutoffSpec",
    "SpectralWindow",
    "KernelAssembler1D",
    "default_cutoff",
    "low_energy_kernel",
    "resonant_reduction",
    "born_term_kernel",
    "full_kernel",
    "dispersive_constant",
    "wiener_gate",
    "l1_fourier_norm",
    "wiener_inverse_check",
    "pruf_uniform_bounds",
    "HSNorm",
    "S0Report",
    "KatoIteration",
    "AmplitudeModel",
    "hs_norm_r0",
    "hs_norm_r0_closed",
    "b_kernel_norm",
    "b_kernel_rate",
    "bprime_norm",
    "bprime_norm_closed",
    "g_function_norm",
    "g_decay_fit",
    "s0_invertibility",
    "neumann_threshold",
    "iterated_kato_bound",
    "statphase_decay",
    "stationary_phase_I",
    "phase_slope",
    "phase_pinned_scan",
    "mollifier_transform",
    "shell_weight_profile",
    "ft_kernel_l1",
    "ft_kernel_scaling",
    "write_norm_table",
]
