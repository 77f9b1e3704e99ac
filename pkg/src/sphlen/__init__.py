"""Simulation and verification of level-set lengths of random spherical harmonics."""

from .chaos import (ChaosCoefficients, ChaosProjections, alpha_coefficient,
                    beta_coefficient, beta_epsilon, chaos_coefficients,
                    chaos_projection, chaos_projections, fourth_chaos_terms,
                    gaussian_density, hermite, length_decomposition_check,
                    mean_boundary_length, sample_trispectrum, second_chaos,
                    trispectrum_level_factor)
from .experiments import (ExperimentConfig, ReplicationRecord, collect_records,
                          emit, measure_replication, parse_config,
                          run_appendix_checks, run_moment_laws,
                          run_proxy_convergence, run_theorem1)
from .field import (FieldGrid, HarmonicCoefficients, SpectrumSample,
                    replication_rng, sample_coefficients,
                    sample_power_spectrum, synthesize, zonal_coefficients)
from .geometry import (LengthMeasurement, epsilon_band_length,
                       level_curve_length, zonal_level_length)
from .legendre import (LegendreEval, MomentIntegralTable,
                       associated_legendre_normalized, legendre_moment_integrals,
                       legendre_p, legendre_with_derivatives)
from .stats import (CorrelationReport, correlation, correlation_se, mc_summary,
                    partial_correlation, regression_residual, standardize)

__version__ = "0.1.0"
