"""Generalized geometric programming for 3D integrated-circuit design.

The package models positive-variable optimization problems built from
monomials, posynomials, and pointwise maxima, lowers them to standard GP
form, transforms them to a convex log-domain program, and solves them with
an equality-constrained barrier interior-point method.  On top of that core
sit three design studies (thermal floorplanning, gate sizing, interconnect
sizing), posynomial data fitting, and a reproducible experiment CLI.
"""

from .expr import (DomainError, GenExpr, GgpProblem, Max, ModelingError, Monomial,
                   Posynomial, Pow, Prod, Sum, as_genexpr, as_posynomial, const,
                   make_registry, max_of, var)
from .lower import GpProblem, lower_to_gp
from .logdomain import LogConvexProblem, LseBlock, eval_lse, to_log_domain
from .solver import (GgpSolution, KktResiduals, Solution, SolverConfig, Status, check_kkt,
                     phase1, solve, solve_ggp)
from .netlist import (BenchParseError, CircuitGraph, PathCountError, PathList,
                      count_paths_dp, enumerate_paths, parse_bench)
from .sizing import (SizingBuildError, SizingConstraints, SizingParams, build_sizing_ggp,
                     evaluate_report)
from .interconnect import (InterconnectError, RcTree, Segment, build_interconnect_ggp,
                           elmore_delay_expr, elmore_delay_numeric, parse_tree)
from .floorplan import (ArrangementSpec, FloorplanConfig, FloorplanError, ModuleSpec,
                        build_floorplan_ggp, parse_arrangement, parse_modules)
from .fit import FitConfig, FitDataset, FitError, FitResult, fit_monomial, fit_posynomial
from .instances import RngConfig, load_defaults, random_ggp
from .problem_io import load_problem, save_problem

__version__ = "0.1.0"

__all__ = [
    "DomainError", "GenExpr", "GgpProblem", "Max", "ModelingError", "Monomial",
    "Posynomial", "Pow", "Prod", "Sum", "as_genexpr", "as_posynomial", "const",
    "make_registry", "max_of", "var",
    "GpProblem", "lower_to_gp",
    "LogConvexProblem", "LseBlock", "eval_lse", "to_log_domain",
    "GgpSolution", "KktResiduals", "Solution", "SolverConfig", "Status", "check_kkt",
    "phase1", "solve", "solve_ggp",
    "BenchParseError", "CircuitGraph", "PathCountError", "PathList",
    "count_paths_dp", "enumerate_paths", "parse_bench",
    "SizingBuildError", "SizingConstraints", "SizingParams", "build_sizing_ggp",
    "evaluate_report",
    "InterconnectError", "RcTree", "Segment", "build_interconnect_ggp",
    "elmore_delay_expr", "elmore_delay_numeric", "parse_tree",
    "ArrangementSpec", "FloorplanConfig", "FloorplanError", "ModuleSpec",
    "build_floorplan_ggp", "parse_arrangement", "parse_modules",
    "FitConfig", "FitDataset", "FitError", "FitResult", "fit_monomial", "fit_posynomial",
    "RngConfig", "load_defaults", "random_ggp",
    "load_problem", "save_problem",
    "__version__",
]
