"""Numerical laboratory for a fully connected Ising model with power-law couplings."""

__version__ = "0.1.0"

from .heavy_tail import (
    DisorderMatrix,
    HeavyTailSpec,
    PppSequence,
    compute_a_N,
    order_stats_direct,
    order_stats_via_ppp,
    rank_edges,
    sample_coupling,
    sample_disorder,
    sample_g_eps,
    sample_gamma_sequence,
)
from .quadrature import (
    FormulaResult,
    L_pmf,
    QuadratureSettings,
    beta_alpha,
    bond_overlap_limit,
    centering_integral,
    expectation_limit_check,
    free_energy_limit,
    gamma_ell,
)
from .streams import derive_rng

__all__ = [
    "DisorderMatrix",
    "HeavyTailSpec",
    "PppSequence",
    "FormulaResult",
    "QuadratureSettings",
    "L_pmf",
    "beta_alpha",
    "bond_overlap_limit",
    "centering_integral",
    "compute_a_N",
    "derive_rng",
    "expectation_limit_check",
    "free_energy_limit",
    "gamma_ell",
    "order_stats_direct",
    "order_stats_via_ppp",
    "rank_edges",
    "sample_coupling",
    "sample_disorder",
    "sample_g_eps",
    "sample_gamma_sequence",
]
