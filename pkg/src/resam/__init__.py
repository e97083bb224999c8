"""Laboratory for Byzantine-resilient distributed momentum SGD."""

from .aggregation import (
    CERTIFIED_RULE_NAMES,
    RULE_NAMES,
    AggregationError,
    GMConvergenceError,
    NoCertifiedCoefficient,
    ResilienceCoefficient,
    Rule,
    aggregate,
    lambda_lower_bound,
    lambda_of,
)
from .attacks import ATTACK_NAMES, Attack, AttackContext, attack_vector
from .audit import (
    AuditInstance,
    AuditReport,
    check_instance,
    cge_counterexample,
    lower_bound_instance,
    randomized_audit,
)
from .problems import (
    Logistic,
    LogisticSpec,
    Quadratic,
    QuadraticSpec,
    build_problem,
    estimate_sigma,
)
from .rng import RngStream
from .simulator import (
    RunConfig,
    RunResult,
    SimulationError,
    StepMetrics,
    metrics_to_csv,
    run,
)
from .theory import (
    TheoremInputs,
    TheoremParams,
    bound_at,
    deviation_recursion_coeffs,
    drift_bound,
    epsilon_order,
    growth_coeffs,
    kappa,
    lyapunov_weight,
    minimum_horizon,
    momentum_spread_bound,
    theorem_params,
)
from .vectors import coord_median, diameter, gaussian_vector, vec_mean

__version__ = "0.1.0"
