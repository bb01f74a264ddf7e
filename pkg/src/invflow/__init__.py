"""Inversive distance circle packings on closed triangulated surfaces.

Extended (generalized) curvature, the alpha-curvature flow, its variational
potential, Newton minimisation, and combinatorial obstruction audits.
"""

from .errors import (
    DegenerateFace,
    Disconnected,
    EmptyOrFullSubset,
    InsufficientTail,
    InvflowError,
    LineSearchFailure,
    MaxIterations,
    NonFiniteState,
    NonManifold,
    NonPositiveLength,
    NonPositiveRadius,
    NotInOmega,
    QuadratureFailure,
    StepFailure,
    SubsetBudgetExceeded,
    ValidationError,
    VelocityBoundViolation,
)
from .flow import (
    DecayFit,
    FlowConfig,
    FlowResult,
    FlowTrace,
    NewtonResult,
    fit_decay_rate,
    newton_minimize,
    run_flow,
    speed_bound,
    verify_conservation,
)
from .geometry import (
    CurvatureReport,
    OmegaDiagnostics,
    curvature_report,
    edge_lengths,
    extended_angles,
    extended_curvature,
    omega_membership,
    s_alpha,
    target_curvature,
)
from .meshes import CATALOG, named_surface
from .obstruction import (
    ObstructionReport,
    SignFeasibility,
    audit_constant_curvature_candidate,
    audit_curvature_vector,
    sign_feasibility,
    subset_rows,
)
from .surface import (
    SubcomplexSummary,
    TriangulatedSurface,
    build_surface,
    subcomplex_summary,
)
from .variational import (
    PotentialValue,
    SpectralReport,
    curvature_jacobian,
    hessian,
    potential,
    potential_gradient,
    spectral_report,
)

__version__ = "0.1.0"
