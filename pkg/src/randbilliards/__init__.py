"""Random circular billiards on surfaces of constant curvature.

Submodules
----------
geometry     geodesic circles, central angle of a chord, flight arcs
feres        the four-branch random map on reflection angles
chain        Markov chains on finite orbit sets of angles
billiard     deterministic and random billiard maps, trajectories, cocycle
measures     Liouville measure, histograms, transfer operator, Knudsen runs
diagnostics  Lyapunov exponents, cover gaps, correlations, motion constant
export       CSV / JSON writers
cli          command-line runner
verify       invariant suite behind the verify subcommand
"""

from . import billiard, chain, diagnostics, errors, export, feres, geometry, measures
from .billiard import PhasePoint, TrajectoryRecord, simulate
from .errors import BilliardError, DomainError, InvariantError
from .feres import FeresParams
from .geometry import SurfaceKind, make_table

__all__ = [
    "billiard",
    "chain",
    "diagnostics",
    "errors",
    "export",
    "feres",
    "geometry",
    "measures",
    "PhasePoint",
    "TrajectoryRecord",
    "simulate",
    "BilliardError",
    "DomainError",
    "InvariantError",
    "FeresParams",
    "SurfaceKind",
    "make_table",
]

__version__ = "0.1.0"
