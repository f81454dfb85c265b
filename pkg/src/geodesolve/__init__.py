"""Distance geometry with and without the graph."""
from .core import (
    Assignment,
    DgpInstance,
    GeodesolveError,
    Graph,
    InvalidAssignmentError,
    InvalidInstanceError,
    Realization,
    SolveReport,
    Status,
    UdgpInstance,
    derive_udgp,
    reconstruct_graph,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "BACKEND",
    "DgpInstance",
    "GeodesolveError",
    "Graph",
    "InvalidAssignmentError",
    "InvalidInstanceError",
    "Realization",
    "SolveReport",
    "Status",
    "UdgpInstance",
    "derive_udgp",
    "reconstruct_graph",
]
