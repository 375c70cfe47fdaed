"""Computable path-space tools: Skorokhod J1 distances, moduli of continuity,
function-family embeddings, replica measures and processes, and
weak-convergence and tightness diagnostics for sampled càdlàg processes.
"""

from .exceptions import (
    BoundViolation,
    HorizonError,
    NotConstructiveError,
    PathSpaceError,
    SeparationError,
    TrivialMeasureError,
)
from .families import (
    ONE,
    BlackBox,
    Constant,
    Coordinate,
    FunctionFamily,
    Tent,
    TruncatedPolynomial,
    TupleFunction,
    build_closure,
    epsilon_envelope_contains,
    rho_family,
    separates_points,
    tent_family,
)
from .measures import (
    ConvergenceReport,
    DiscreteMeasure,
    concentrate,
    empirical_measure,
    expand,
    integral,
    portmanteau_check,
    pushforward,
    tightness_profile,
    weak_conv_test,
)
from .paths import (
    Horizon,
    PiecewiseLinearPath,
    StepPath,
    TimeChange,
    advance,
    compose_time_change,
    constant_path,
    eta_path,
    evaluate,
    indicator,
    jump_times,
    left_limit,
    restrict,
    restrict_extend,
    time_change_norm,
)
from .processes import (
    DiagnosticsReport,
    ProcessEnsemble,
    as_test,
    band_prob,
    eta_band_probability,
    eta_lmtc_closed_form,
    fdc_test,
    fdd,
    lmtc_profile,
    mcc_probe,
    mpcc_check,
    rap,
    rap_as_gap,
    rap_expectation,
    simulate,
    stationarity_test,
)
from .regions import Ball, Box, EmptyRegion, FiniteSet, LabelSet
from .replication import (
    EmbeddedPoint,
    ReplicaFunction,
    ReplicationBase,
    build_base,
    declare_limit,
    embed,
    replica_function,
    replica_measure,
    replica_process,
    rho_hat,
    variant_map,
)
from .skorokhod import (
    ModulusTransformer,
    SkoOptions,
    SkoResult,
    candidate_time_changes,
    modulus_w_prime,
    sko_dist,
    sup_band_dist,
)
from .states import Metric, euclidean, rho_metric, table, truncated

__version__ = "0.1.0"
