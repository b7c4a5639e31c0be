"""Hermite spectral laboratory for entropy decay of Ornstein-Uhlenbeck and heat flows."""
from .entropy import (
    A_p,
    B_np,
    ConstantsRequest,
    EntropyParams,
    K_npw,
    cal_H_p,
    dirichlet_p,
    entropy_p,
    fisher_info,
    h_p,
    lambda_np,
    production_p,
    rate_2lambda,
    rate_4_over_pK,
    rate_np_over_Hp,
)
from .errors import (
    ConstructionError,
    DomainError,
    EntroflowError,
    NonAdmissibleError,
    NumericError,
    UsageError,
)
from .estimators import DecayRateEstimator, HermiteProjector, OrnsteinUhlenbeckFlow
from .evolution import (
    HeatFrame,
    Trajectory,
    convolve_green,
    evolve_ou,
    green,
    heat_from_selfsimilar,
    sample_trajectory,
    stationary_gaussian,
)
from .field import (
    BoundsEstimate,
    DenseGridSpec,
    GridField,
    SpectralField,
    analyze,
    estimate_bounds,
    field_grid,
    synthesize,
)
from .hermite import HermiteBasis, MultiIndex, QuadratureRule, gauss_hermite_rule, graded_lex, integrate_mu
from .inequalities import (
    AdmissibleField,
    DecayFit,
    InequalityReport,
    SharpnessScan,
    TestFunctionFamily,
    check_all,
    decay_experiment,
    random_admissible,
    sharpness_scan,
)
from .potential import (
    DiscretizedOperator,
    GeneralOUOperator,
    OperatorSpectrum,
    PotentialSpec,
    check_general_decay,
    discretize,
    evolve_general,
    spectrum,
)

__version__ = "0.1.0"
