"""Couplings between Erdos-Renyi graphs and high-dimensional spherical geometric graphs."""

from .coupling import (
    CouplingConfig,
    CouplingOutput,
    couple,
    couple_er,
    dominance_triple,
    sample_er,
    sample_rgg,
    uniformity_report,
)
from .errors import ConfigError, DomainError, NumericalError
from .graphs import Graph, LatentEmbedding
from .recursive_rep import (
    IntervalSchedule,
    build_schedule,
    distribution_audit,
    multi_round_couple,
)
from .robust_test import (
    Calibration,
    Decision,
    calibrate_witness,
    decide_spectral,
    decide_triangle,
    decide_witness,
)
from .sphere_law import Interval, SphericalLaw, law_for, tau_threshold

__all__ = [
    "Calibration", "ConfigError", "CouplingConfig", "CouplingOutput", "Decision", "DomainError", "Graph",
    "Interval", "IntervalSchedule", "LatentEmbedding", "NumericalError", "SphericalLaw", "build_schedule",
    "calibrate_witness", "couple", "couple_er", "decide_spectral", "decide_triangle", "decide_witness",
    "distribution_audit", "dominance_triple", "law_for", "multi_round_couple", "sample_er", "sample_rgg",
    "tau_threshold", "uniformity_report",
]
