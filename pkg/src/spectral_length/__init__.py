"""Finite spectral triples on lattices and their Connes distances."""

from .clifford import CliffordRep, euclidean_gammas, minkowski_gammas
from .dirac_lattice import circle_triple, torus_triple, two_point_triple
# The distance() dispatcher is not re-exported: it would shadow the submodule.
from .distance import (DistanceResult, character, distance_exact, distance_subgradient,
                       distance_via_characters)
from .spectral_triple import SpectralTriple, check_axioms, new_triple

__all__ = [
    "CliffordRep", "DistanceResult", "SpectralTriple", "character", "check_axioms",
    "circle_triple", "distance_exact", "distance_subgradient",
    "distance_via_characters", "euclidean_gammas", "minkowski_gammas", "new_triple",
    "torus_triple", "two_point_triple",
]
