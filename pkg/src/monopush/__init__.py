"""Exact densities of monomial pushforward measures and their continuity at 0."""
from .box_calculus import (
    AtomSet,
    Box,
    BoxAtom,
    DensityProfile,
    approximate_by_boxes,
    assemble_bin_average,
    assemble_density,
    kbox,
    marginalize,
    reflect_decompose,
    scaled_density,
)
from .errors import DegenerateMapError, DomainError, EvaluationError
from .exponents import ExponentData
from .monomial_core import (
    ContinuityVerdict,
    FRSCase,
    Parity,
    classify,
    density_signed_cube,
    density_unit_cube,
    derive_spectrum,
    limit_at_zero,
    volume,
)
from .oracle import HistogramEstimate, compare, mc_histogram, quadrature_volume
from .symfun import complete_homogeneous, exp_divided_difference, exp_series

__all__ = [
    "AtomSet",
    "Box",
    "BoxAtom",
    "ContinuityVerdict",
    "DegenerateMapError",
    "DensityProfile",
    "DomainError",
    "EvaluationError",
    "ExponentData",
    "FRSCase",
    "HistogramEstimate",
    "Parity",
    "approximate_by_boxes",
    "assemble_bin_average",
    "assemble_density",
    "classify",
    "compare",
    "complete_homogeneous",
    "density_signed_cube",
    "density_unit_cube",
    "derive_spectrum",
    "exp_divided_difference",
    "exp_series",
    "kbox",
    "limit_at_zero",
    "marginalize",
    "mc_histogram",
    "quadrature_volume",
    "reflect_decompose",
    "scaled_density",
    "volume",
]
