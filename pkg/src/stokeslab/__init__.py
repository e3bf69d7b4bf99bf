"""Resolvents of Dirichlet Laplacians and Stokes operators on pixel domains, and their convergence along monotone domain sequences."""

from .fields import CellField, MacField, VertexField, curl_h, div_h, grad_h, inner, prolong, restrict
from .forcing import Forcing
from .geometry import (
    BcMode,
    Difference,
    Direction,
    Disk,
    DomainMask,
    DomainSequence,
    Family,
    Grid,
    Policy,
    Rect,
    SlitSquare,
    Union,
    components,
    dilate,
    erode,
    make_sequence,
    rasterize,
)
from .harness import ExperimentSpec, monotonicity_check, run_experiment, slit_discrimination
from .leray import is_in_solenoidal, project
from .resolvents import (
    LaplaceProblem,
    StokesProblem,
    laplace_resolvent,
    stokes_resolvent,
    stokes_resolvent_streamfn,
)
from .solver import ConvergenceError, cg, minres

__version__ = "0.1.0"
