"""Singular points and singularity measures of qubit/qudit dynamical maps."""

__version__ = "0.1.0"

from dmsing.bloch import (
    AffineMap,
    OperatorBasis,
    apply_map,
    bloch_to_state,
    choi_from_affine,
    haar_average_projector,
    is_completely_positive,
    is_positive_map,
    make_basis,
    state_to_bloch,
    swap_operator,
    trace_distance,
)
from dmsing.divisibility import (
    DecompositionResult,
    SingularPoint,
    decomposition_exists,
    find_singular_points,
    null_space,
    numeric_rank,
    solve_decomposition,
)
from dmsing.errors import (
    ConfigError,
    DimensionError,
    DomainError,
    NotAStateError,
    NumericalFailure,
    PoleError,
    SchemaError,
)
from dmsing.measures import (
    MeasureConfig,
    MeasureResult,
    deviation_affine,
    max_norm_affine_over_ball,
    non_markovianity,
    restart_trajectory,
    singularity_measure,
)
from dmsing.models import (
    DephasingParams,
    JCParams,
    MapFamily,
    dephasing_family,
    dephasing_gamma,
    family_from_kraus,
    jc_c,
    jc_family,
    jc_gamma,
    jc_singular_time,
    load_tabulated_family,
    semigroup_family,
)
