"""Geometry built from a single world function ``sigma(P, Q)``."""

from .core import (
    DEFAULT_TOL,
    Check,
    DomainError,
    FactorizationCheck,
    GeometryError,
    GeometrySpec,
    ImaginaryMagnitudeError,
    VectorPQ,
    collinearity_residual,
    distance,
    factorization_check,
    factorization_check_points,
    gram_det,
    gram_matrix,
    is_collinear,
    is_equivalent,
    is_parallel,
    norm,
    norm_squared,
    scalar_product,
    sigma,
    triangle_defect,
)
from .chains import EnsembleStats, chain_step, equivalent_displacements, simulate_chains, simulate_ensemble
from .euclidicity import (
    Basis,
    CoordinateGrid,
    EuclidicityReport,
    check_condition_I,
    check_condition_II,
    check_condition_III,
    coordinates,
    euclidicity_report,
    find_basis,
)
from .multivariance import (
    SolutionSet,
    SolverConfig,
    TransitivityReport,
    multivariance_map,
    solve_equivalent,
    transitivity_probe,
)
from .objects import (
    Grid,
    PointCloud,
    estimate_dimension,
    scan_segment,
    scan_straight,
    segment_residual,
    straight_residual,
)
from .riemann import (
    Chart,
    GeodesicConfig,
    GeodesicPath,
    eikonal_residual,
    geodesic,
    punctured_sigma,
    sigma_R,
)

__version__ = "0.1.0"
