"""Constrained energy minimizers of small particle clusters.

Computes, continues, and classifies the critical points of the pair-potential
energy of three particles at fixed triangle area and four particles at fixed
tetrahedron volume, producing bifurcation diagrams with stability annotation.
"""

__version__ = "0.1.0"

from .potentials import (  # noqa: E402
    Buckingham,
    ConfigError,
    LennardJones,
    NormalizedBuckingham,
    PolynomialSpring,
    PotentialSpec,
    Threshold,
    buckingham_interval_certificate,
    closed_form_thresholds,
    eval_potential,
    normalized_buckingham_convert,
    potential_from_json,
    potential_to_json,
    stability_margin,
)
from .continuation import (  # noqa: E402
    BifurcationEvent,
    Branch,
    BranchPoint,
    BranchSwitchData,
    ContinuationSettings,
    CorrectorFailure,
    DomainExit,
    PseudoArclength,
    TraceAbort,
    branch_switch,
    detect_and_localize,
    newton_correct,
    trace_branch,
)
from .triangle import (  # noqa: E402
    BoundaryRoot,
    StabilityInterval,
    TriState,
    TriangleProblem,
    classify_point3,
    heron,
    jacobian3,
    mu3,
    residual3,
    stability_boundaries3,
    stable_intervals3,
    triangle_energy,
    trivial3,
    trivial_spectrum3,
)
from .tetrahedron import (  # noqa: E402
    TetState,
    TetraProblem,
    cayley_menger,
    classify_point4,
    grad_g4,
    hess_g4,
    is_tetrahedron,
    jacobian4,
    mu_tetra,
    residual4,
    stability_boundaries4,
    tetra_energy,
    trivial4,
    trivial_spectrum4,
)
from .symmetry import (  # noqa: E402
    Perm,
    PermGroup,
    Reduction,
    fixed_projection,
    isotropy,
    orbit,
    reduced_system,
    tetra_apex_reduction,
    tetra_equal_pair_reduction,
    tetra_group,
    tetra_opposite_pair_reduction,
    triangle_group,
    triangle_isosceles_reduction,
)
from .diagram import Abc3d, Diagram, ParamVsComponent, export, load_diagram, render_svg  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
