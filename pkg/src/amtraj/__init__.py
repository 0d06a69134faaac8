"""Spatial-temporal trajectory optimization for piecewise polynomials.

Alternating minimization over waypoint derivatives and piece durations,
with an exact (sampling-free) feasibility check for polynomial constraints.
"""

from .am_solver import (
    SolveReport,
    SolverConfig,
    initial_feasible_trajectory,
    line_search_lambda,
    optimal_piece_duration_constrained,
    optimize_constrained,
    optimize_unconstrained,
)
from .cost import (
    ObjectiveConfig,
    PartitionedQuadratic,
    RationalCost,
    partitioned_quadratic,
    piece_cost,
    piece_cost_rational,
    q_matrix,
    total_cost,
    trajectory_cost,
)
from .exceptions import *  # noqa: F403
from .feasibility import (
    ConstraintSpec,
    FeasibilityVerdict,
    builtin_accel_constraint,
    builtin_obstacle_constraint,
    builtin_speed_constraint,
    check_piece,
    check_trajectory,
    compose_constraint_polynomial,
)
from .poly_core import (
    MappingConstants,
    eval_basis,
    mapping_matrix,
    mapping_matrix_inverse,
    precompute_mapping_constants,
)
from .spatial_phase import optimal_free_derivatives
from .temporal_phase import optimal_piece_duration, stationarity_polynomial
from .trajectory import (
    BoundaryCondition,
    Trajectory,
    WaypointDerivatives,
    assemble,
    disassemble,
    eval_piece,
    eval_trajectory,
)
from .univar_roots import (
    SturmSequence,
    UnivariatePolynomial,
    count_roots_in_interval,
    isolate_positive_roots,
    refine_root,
    sign_variations,
    sturm_sequence,
)

__version__ = "0.1.0"
