"""Ground states of a weighted fourth-order Kirchhoff problem on the unit
ball of R^4, computed by Nehari-manifold minimization, with a verification
suite for every constant and inequality the construction relies on."""

from .radial import (
    RadialGrid,
    RadialFunction,
    build_grid,
    laplacian4,
    log_weight,
    ball_integral,
    w_inner,
    w_norm,
    lebesgue_norm,
    full_sobolev_norm,
    pointwise_bound_coeff,
    enforce_clamped,
    random_clamped_profile,
    write_profile_csv,
    read_profile_csv,
)
from .model import (
    KirchhoffSpec,
    NonlinearitySpec,
    ModelParams,
    RangeOverflowError,
    kirchhoff_g,
    kirchhoff_G,
    f_eval,
    F_eval,
    adams_constant,
    growth_exponent,
    check_hypotheses,
    default_params,
    params_to_dict,
    params_from_dict,
)
from .energy import (
    EnergyBreakdown,
    FiberMap,
    energy,
    weak_action,
    sobolev_gradient,
    fibering,
    fibering_deriv,
    nehari_residual,
)
from .nehari import (
    ProjectionError,
    NehariPoint,
    SearchConfig,
    GroundStateResult,
    AuxResult,
    BoundsReport,
    project,
    project_scale,
    t_leq_one_check,
    ground_state,
    aux_ground_state,
    level_bounds,
    min_admissible_cp,
    resolve_auto_cp,
    power_envelope_max,
)
from .verify import SuiteReport, run_suite

__version__ = "0.1.0"
