"""Formulation registry: smooth programs, linear programs and SDPs."""
from .cycles import CycleBasis, fundamental_cycle_basis
from .matrix import (
    CONES,
    DD,
    DUAL_DD,
    MATRIX_LP_KINDS,
    SDP_KINDS,
    add_cone_rows,
    build_cone_rows,
    build_matrix_lp,
    build_sdp,
    build_udgp_milp,
    normalize_cone,
)
from .programs import (
    MAX,
    MIN,
    Block,
    LinearProgram,
    LpBuilder,
    SdpProblem,
    SdpRow,
    SmoothProgram,
    StructurallyInfeasibleError,
    UnknownFormulationError,
)
from .smooth import (
    DGP_ALIASES,
    DGP_KINDS,
    UDGP_ALIASES,
    UDGP_MINLP_KINDS,
    UDGP_SMOOTH_KINDS,
    DgpOptions,
    assignment_from_y,
    big_m,
    build_dgp,
    build_udgp_minlp,
    build_udgp_smooth,
    fix_assignment,
)

__all__ = [
    "CONES", "DD", "DUAL_DD", "MATRIX_LP_KINDS", "SDP_KINDS", "DGP_ALIASES", "DGP_KINDS", "UDGP_ALIASES",
    "UDGP_MINLP_KINDS", "UDGP_SMOOTH_KINDS", "MAX", "MIN",
    "Block", "CycleBasis", "DgpOptions", "LinearProgram", "LpBuilder", "SdpProblem",
    "SdpRow", "SmoothProgram", "StructurallyInfeasibleError", "UnknownFormulationError",
    "add_cone_rows", "assignment_from_y", "big_m", "build_cone_rows", "build_dgp",
    "build_matrix_lp", "build_sdp", "build_udgp_milp", "build_udgp_minlp",
    "build_udgp_smooth", "fix_assignment", "fundamental_cycle_basis", "normalize_cone",
]
