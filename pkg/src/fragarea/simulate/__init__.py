"""Monte Carlo layer: recursive sampler, truncation, excursion oracle, homogeneous paths."""

from .estimators import EstimatorSummary, estimate_moments
from .excursion import discretization_allowance, excursion_path, run_excursion, sample_excursion_area
from .homogeneous import HomogeneousPath, riemann_gap_formula, run_homogeneous, simulate_homogeneous
from .rde import SimConfig, run_rde, run_truncated, sample_area_rde, sample_area_truncated, truncated_params
from .streams import block_rng, run_blocks

__all__ = [
    "EstimatorSummary", "estimate_moments",
    "discretization_allowance", "excursion_path", "run_excursion", "sample_excursion_area",
    "HomogeneousPath", "riemann_gap_formula", "run_homogeneous", "simulate_homogeneous",
    "SimConfig", "run_rde", "run_truncated", "sample_area_rde", "sample_area_truncated", "truncated_params",
    "block_rng", "run_blocks",
]
