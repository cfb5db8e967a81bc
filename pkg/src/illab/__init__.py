"""Limits of vanishing ideals of degenerating point configurations in C^2."""

from .errors import ConfigError, IllabError, NumericError
from .geometry import (Classification, PointFamily, ProjectiveDirection, Schedule, chordal_distance, classify,
                       direction, direction_set, limit_direction, normalize_frame)
from .green import (AffineLine, CIMap, GapReport, bidisk_pole_bounds, gap_report, green_candidate,
                    independence_sets, independent_pair, line_equation, pairing_products, uci_verify)
from .limits import (GridPoints, GridShape, LimitVerdict, NewtonBasis, SubspaceFrame, grid_points, grid_shape,
                     ideal_subspace, length_criterion, limit_grid_ideal, limit_ideal, quotient_coordinates,
                     subspace_gap, subspace_limit)
from .poly import (Ideal, Polynomial, ideal_contains, ideal_equal, parse_polynomial, power_ideal,
                   resultant_binary_quadratics, vanishing_ideal)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "IllabError", "NumericError", "Classification", "PointFamily", "ProjectiveDirection",
    "Schedule", "chordal_distance", "classify", "direction", "direction_set", "limit_direction",
    "normalize_frame", "AffineLine", "CIMap", "GapReport", "bidisk_pole_bounds", "gap_report",
    "green_candidate", "independence_sets", "independent_pair", "line_equation", "pairing_products",
    "uci_verify", "GridPoints", "GridShape", "LimitVerdict", "NewtonBasis", "SubspaceFrame", "grid_points",
    "grid_shape", "ideal_subspace", "length_criterion", "limit_grid_ideal", "limit_ideal",
    "quotient_coordinates", "subspace_gap", "subspace_limit", "Ideal", "Polynomial", "ideal_contains",
    "ideal_equal", "parse_polynomial", "power_ideal", "resultant_binary_quadratics", "vanishing_ideal",
]
