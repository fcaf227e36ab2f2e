"""Projected variational integrators for accelerated optimization on the
unit sphere and the Stiefel manifold."""

from . import errors, integrators, kernels, manifold, matops, problems
from .integrators import (
    BregmanParams,
    ELState,
    HTVIState,
    Method,
    RunResult,
    StopCriteria,
    TraceRecord,
    el_step,
    htvi_step,
    rgd_step,
    run,
)
from .manifold import ManifoldSpec, Sphere, Stiefel
from .problems import Brockett, Oracle, Procrustes, Rayleigh

__version__ = "0.1.0"

__all__ = [
    "BregmanParams",
    "Brockett",
    "ELState",
    "HTVIState",
    "ManifoldSpec",
    "Method",
    "Oracle",
    "Procrustes",
    "Rayleigh",
    "RunResult",
    "Sphere",
    "Stiefel",
    "StopCriteria",
    "TraceRecord",
    "el_step",
    "errors",
    "htvi_step",
    "integrators",
    "kernels",
    "manifold",
    "matops",
    "problems",
    "rgd_step",
    "run",
]
