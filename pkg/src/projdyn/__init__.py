"""Projected dynamical systems on nonconvex sets with Riemannian metrics."""

from .analysis import (
    LyapunovLog,
    ProxReport,
    ProxVerdict,
    UniquenessReport,
    equivalence_residual,
    hausdorff,
    lasalle_monitor,
    one_sided_lipschitz,
    prox_estimate,
    uniqueness_probe,
)
from .charts import (
    Atlas,
    Chart,
    Parametrization,
    image_set,
    invariance_harness,
    inversion_chart,
    pullback_metric,
    pushforward_field,
    round_metric,
    shear_chart,
    sphere_atlas,
    stereographic,
)
from .dynamics import (
    EquilibriumKind,
    IntegratorConfig,
    Scheme,
    Termination,
    Trajectory,
    detect_equilibrium,
    integrate,
    step,
)
from .errors import (
    ChartDomainError,
    DefinitenessError,
    DegenerateRankError,
    InfeasibleError,
    IrregularityError,
    NumericalError,
    ProjDynError,
    RestorationError,
    SamplerError,
    SolverError,
)
from .flows import (
    Flow,
    ScalarField,
    grad_field,
    minimal_velocity,
    newton_flow,
    normal_cone_step,
    projected_gradient_flow,
    raw_flow,
)
from .geometry import (
    FeasibleSet,
    OracleSet,
    PolyhedralCone,
    SmoothInequalitySet,
    active_set,
    project_to_set,
    tangent_cone,
)
from .metric import MetricField, diagnostics, hessian_metric, normalized
from .nnls import nnls_gram
from .projection import (
    KrasovskiiHull,
    ProjectionResult,
    krasovskii_hull,
    moreau_check,
    normal_cone_generators,
    project_field,
)
from .scenarios import Scenario, builtin_scenarios, get_scenario, load_scenario, verify

__all__ = [
    "active_set",
    "Atlas",
    "builtin_scenarios",
    "Chart",
    "ChartDomainError",
    "DefinitenessError",
    "DegenerateRankError",
    "detect_equilibrium",
    "diagnostics",
    "EquilibriumKind",
    "equivalence_residual",
    "FeasibleSet",
    "Flow",
    "get_scenario",
    "grad_field",
    "hausdorff",
    "hessian_metric",
    "image_set",
    "InfeasibleError",
    "integrate",
    "IntegratorConfig",
    "invariance_harness",
    "inversion_chart",
    "IrregularityError",
    "krasovskii_hull",
    "KrasovskiiHull",
    "lasalle_monitor",
    "load_scenario",
    "LyapunovLog",
    "MetricField",
    "minimal_velocity",
    "moreau_check",
    "newton_flow",
    "nnls_gram",
    "normal_cone_generators",
    "normal_cone_step",
    "normalized",
    "NumericalError",
    "one_sided_lipschitz",
    "OracleSet",
    "Parametrization",
    "PolyhedralCone",
    "ProjDynError",
    "project_field",
    "project_to_set",
    "projected_gradient_flow",
    "ProjectionResult",
    "prox_estimate",
    "ProxReport",
    "ProxVerdict",
    "pullback_metric",
    "pushforward_field",
    "raw_flow",
    "RestorationError",
    "round_metric",
    "SamplerError",
    "ScalarField",
    "Scenario",
    "Scheme",
    "shear_chart",
    "SmoothInequalitySet",
    "SolverError",
    "sphere_atlas",
    "step",
    "stereographic",
    "tangent_cone",
    "Termination",
    "Trajectory",
    "uniqueness_probe",
    "UniquenessReport",
    "verify",
]

__version__ = "0.1.0"
