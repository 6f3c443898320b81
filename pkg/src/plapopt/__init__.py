"""p-Laplacian Neumann problems on planar meshes: boundary-load
rearrangement optimization and load-perturbation derivatives."""

__version__ = "0.1.0"

from .geometry import (
    ArclengthChart,
    DomainMesh,
    build_disk_mesh,
    build_square_mesh,
    validate_mesh,
)
from .rearrangement import (
    LoadField,
    RearrangementClass,
    best_response,
    binary_load,
    comonotonicity_defect,
    distribution,
    linear_functional_L,
    random_step_load,
    same_class,
    step_load,
)
from .optimizer import (
    OptimizeConfig,
    OptimizeHistory,
    evaluate_candidate,
    maximize_over_rearrangements,
)
from .perturbation import (
    DerivativeReport,
    FlowMap,
    TangentField,
    deriv_bvjump_formula,
    deriv_finite_difference,
    deriv_surfdiv_formula,
    deriv_volume_formula,
    derivative_report,
    flow_map,
    tangent_field,
    tangential_jacobian,
    transport_load,
    transported_solution_check,
)
from .solver import (
    SolveConfig,
    SolveReport,
    SolverError,
    StateField,
    energy,
    functional_I,
    functional_J,
    residual,
    solve,
)

__all__ = [
    "ArclengthChart",
    "DomainMesh",
    "build_disk_mesh",
    "build_square_mesh",
    "validate_mesh",
    "LoadField",
    "RearrangementClass",
    "best_response",
    "binary_load",
    "comonotonicity_defect",
    "distribution",
    "linear_functional_L",
    "random_step_load",
    "same_class",
    "step_load",
    "SolveConfig",
    "SolveReport",
    "SolverError",
    "StateField",
    "energy",
    "functional_I",
    "functional_J",
    "residual",
    "solve",
    "OptimizeConfig",
    "OptimizeHistory",
    "evaluate_candidate",
    "maximize_over_rearrangements",
    "DerivativeReport",
    "FlowMap",
    "TangentField",
    "deriv_bvjump_formula",
    "deriv_finite_difference",
    "deriv_surfdiv_formula",
    "deriv_volume_formula",
    "derivative_report",
    "flow_map",
    "tangent_field",
    "tangential_jacobian",
    "transport_load",
    "transported_solution_check",
    "__version__",
]
