"""k-covers of random graphs: exact solvers, quasiclique constructions and
fractional lower-bound machinery, with seeded Monte Carlo checks."""
from .constants import A_CONST, C_CONST
from .cover import (CoverMultiset, SetRepresentation, coverage, cover_to_representation,
                    exact_phi_k, is_k_cover, is_k_representation, representation_to_cover)
from .errors import BudgetExceeded, InfeasibleRegime, PropertyViolation
from .graph import Graph, RandomSource, check_property_P1, extension_profile, mu_omega, sample_gnp_half
from .quasiclique import QuasicliqueParams, enumerate_Q, expected_counts, is_quasiclique

__all__ = [
    "A_CONST", "C_CONST", "CoverMultiset", "SetRepresentation", "coverage",
    "cover_to_representation", "exact_phi_k", "is_k_cover", "is_k_representation",
    "representation_to_cover", "BudgetExceeded", "InfeasibleRegime", "PropertyViolation",
    "Graph", "RandomSource", "check_property_P1", "extension_profile", "mu_omega",
    "sample_gnp_half", "QuasicliqueParams", "enumerate_Q", "expected_counts", "is_quasiclique",
]
