"""Spectral analysis and simulation of gathering protocols with circulant topologies."""

from .classify import ClassificationReport, classify, gathering_point, is_gathering_circulant, is_gathering_general
from .configuration import Configuration, random_cloud
from .decompose import Decomposition, decompose, evolve, reconstruct
from .dynamics import Normalizer, Trajectory, integrate, simulate, visibility_monitor
from .eigen import ConvergenceError, GeneralSpectrum, eig, is_non_defective_real
from .estimators import CirculantModeDecomposer, GatheringFlow
from .spectral import SpectralData, Subspace, closed_form_spectrum, convergence_rates
from .topology import (
    CirculantTopology,
    WeightMatrix,
    dense_matrix,
    go_to_the_average,
    go_to_the_middle,
    is_connected,
    is_consistent,
    lift,
    make_circulant,
    n_bug,
)

__all__ = [
    "CirculantModeDecomposer",
    "CirculantTopology",
    "ClassificationReport",
    "Configuration",
    "ConvergenceError",
    "Decomposition",
    "GatheringFlow",
    "GeneralSpectrum",
    "Normalizer",
    "SpectralData",
    "Subspace",
    "Trajectory",
    "WeightMatrix",
    "classify",
    "closed_form_spectrum",
    "convergence_rates",
    "decompose",
    "dense_matrix",
    "eig",
    "evolve",
    "gathering_point",
    "go_to_the_average",
    "go_to_the_middle",
    "integrate",
    "is_connected",
    "is_consistent",
    "is_gathering_circulant",
    "is_gathering_general",
    "is_non_defective_real",
    "lift",
    "make_circulant",
    "n_bug",
    "random_cloud",
    "reconstruct",
    "simulate",
    "visibility_monitor",
]
