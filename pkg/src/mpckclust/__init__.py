"""Deterministic (k, z)-clustering with Mettu-Plaxton style fractional solutions,
level-set rounding and a bulk-synchronous MPC simulator."""

from .errors import (CapacityError, ConfigurationError, DegenerateDatasetError, GuardError,
                     InfeasibleError, KClustError, ParameterError, PreconditionError)
from .metric import (Dataset, DistanceOracle, DistortedOracle, EuclideanOracle, MatrixOracle,
                     aspect_ratio, distort, normalize_dataset, normalize_oracle, powz_dist)
from .primitives import PrimitiveBackend, ann, range_sum, ruling_set
from .facility import (DerivedConstants, SolverParams, mp_beta, mp_level_variant, radius_profile,
                       solve_radius)
from .costs import Assignment, CostReport, center_cost, clustering_cost, estimate_costs, point_cost
from .fractional import estimate_opt_value, fractional_kz
from .rounding import final_round, monotone_ann, partial_round, round_pipeline, solve_kz, sparsify
from .mpc import MpcConfig, RunStats, distributed_solve_kz, mpc_aggregate, mpc_sort
from .preprocess import jl_project, reduce_aspect_ratio

__version__ = "0.1.0"
