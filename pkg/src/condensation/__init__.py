"""Diffusion condensation: a time-inhomogeneous cascade of diffusion filters
that contracts data toward local barycenters and yields a cluster hierarchy."""

__version__ = "0.1.0"

from .engine import CondensationConfig, CondensationTrace, MergeEvent, auto_epsilon, condense_step, run
from .hierarchy import adjusted_rand_index, build_tree, cut_at, sankey_export
from .operators import (
    apply_operator,
    diffusion_operator,
    gaussian_affinity,
    infinitesimal_generator,
    markov_normalize,
    pairwise_distances,
    velocity_field,
)

__all__ = [
    "CondensationConfig",
    "CondensationTrace",
    "MergeEvent",
    "adjusted_rand_index",
    "apply_operator",
    "auto_epsilon",
    "build_tree",
    "condense_step",
    "cut_at",
    "diffusion_operator",
    "gaussian_affinity",
    "infinitesimal_generator",
    "markov_normalize",
    "pairwise_distances",
    "run",
    "sankey_export",
    "velocity_field",
]
