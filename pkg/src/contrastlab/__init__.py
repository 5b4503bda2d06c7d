"""contrastlab: a 2D FEM laboratory for high-contrast transmission problems.

Builds tagged triangulations, solves the scalar transmission problem
monolithically and by the power-series alternating-subdomain method, runs the
TM skin-effect analog with its delta-expansion, and packages every checkable
claim as a reproducible campaign.
"""

from .errors import ContrastlabError
from .fem import NormReport, ScalarField
from .helmholtz import TmProblem
from .mesh import (Mesh, build_annulus, build_annulus_graded,
                   build_square_checkerboard, build_square_polygon,
                   read_mesh, validate_mesh, write_mesh)
from .powerseries import SeriesRun, run_series
from .transmission import TransmissionProblem, solve_direct

__version__ = "0.1.0"

__all__ = [
    "ContrastlabError", "Mesh", "NormReport", "ScalarField", "SeriesRun",
    "TmProblem", "TransmissionProblem", "build_annulus",
    "build_annulus_graded", "build_square_checkerboard",
    "build_square_polygon", "read_mesh", "run_series", "solve_direct",
    "validate_mesh", "write_mesh", "__version__",
]
