"""Finite-element and radial-ODE verification of overdetermined mixed problems on
sector-like domains in the plane, the sphere and the hyperbolic plane."""
from .assembly import Kind, ProblemSpec, assemble, solve_bvp, solve_eigen
from .domainmesh import ConeSpec, Mesh, RadialGraph, Side, Tag, build_sector_mesh
from .spaceform import EUCLIDEAN, HYPERBOLIC, SPHERE, SpaceForm
from .verify import GraphSpec, Problem, convergence_study, run_once

__version__ = "0.1.0"

__all__ = [
    "EUCLIDEAN", "HYPERBOLIC", "SPHERE", "ConeSpec", "GraphSpec", "Kind", "Mesh", "Problem",
    "ProblemSpec", "RadialGraph", "Side", "SpaceForm", "Tag", "assemble", "build_sector_mesh",
    "convergence_study", "run_once", "solve_bvp", "solve_eigen",
]
