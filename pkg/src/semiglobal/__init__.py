"""Global semiclassical wavefunctions of 1D Schrödinger problems from a
single complex contour integral, with the contour machinery and the
reference solutions used to validate them."""
from .action import ActionValue, ProblemContext, action_along_path, action_real, make_context, momentum
from .contour import (ContourPath, SectorMap, build_path, descent_path, independent_pair, scan_sectors,
                      singularities)
from .errors import SemiglobalError
from .potential import PotentialSpec, TurningPoint, parse_potential, turning_points
from .reference import (airy, compare, linear_airy_reference, local_residual, numerov_solve, pearcey,
                        schrodinger_residual, wkb)
from .wavefunction import (SampleFailure, SolutionPair, WaveSample, connected_solution, evaluate_phi,
                           evaluate_psi, normalize, psi_grid, quadratic_mode, solution_pair,
                           stokes_coefficients, wronskian_check)

__all__ = [
    "ActionValue", "ContourPath", "PotentialSpec", "ProblemContext", "SampleFailure", "SectorMap",
    "SemiglobalError", "SolutionPair", "TurningPoint", "WaveSample", "action_along_path", "action_real",
    "airy", "build_path", "compare", "connected_solution", "descent_path", "evaluate_phi", "evaluate_psi",
    "independent_pair", "linear_airy_reference", "local_residual", "make_context", "momentum",
    "normalize", "numerov_solve", "parse_potential", "pearcey", "psi_grid", "quadratic_mode",
    "scan_sectors", "schrodinger_residual", "singularities", "solution_pair", "stokes_coefficients",
    "turning_points", "wkb", "wronskian_check",
]
