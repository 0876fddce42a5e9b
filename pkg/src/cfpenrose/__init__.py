"""Geometric functionals of conformally flat, asymptotically flat manifolds.

The metric is ``g = u^{4/(n-2)} delta`` outside a union of star-shaped
domains in R^n. The package solves the exterior Laplace problems that
produce ``u``, evaluates masses, capacities and boundary integrals, and
checks Penrose-type inequalities with explicit error budgets.

Set ``CFPENROSE_PURE_NUMPY=1`` before import to bypass the numba kernels.
"""

from .conformal import (ConformalFactor, RadialBump, adm_mass, bump_potential, pole_family,
                        schwarzschild, schwarzschild_radius, weighted_scalar_integral)
from .errors import (CfPenroseError, ConfigInvalid, DomainError, EvaluationAtSingularity,
                     HypothesisViolated, IllConditioned, LevelSetDegeneracy, NonConvergentFlux,
                     NonConvergentIntegral, NonPositiveRadius, NotRegularZAS, OverlappingComponents,
                     ResidualTooLarge, SolverError, UnresolvedSpec)
from .geometry import (StarDomain, boundary_quadrature, functionals, is_mean_convex, make_ball,
                       make_perturbed_ball, make_spheroid, make_star_domain)
from .inequalities import (InequalityReport, verify_corollaries, verify_isoperimetric,
                           verify_lemma_zas, verify_minkowski, verify_mixed, verify_pfs,
                           verify_thm_general2_delta, verify_thm_main, verify_thm_zas)
from .mass import MassReport, adm_mass_of_zas_metric, black_hole_mass, zas_mass
from .solver import BoundaryCondition, SolverSpec, capacity, solve, solve_mixed

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "CfPenroseError",
    "ConfigInvalid",
    "ConformalFactor",
    "DomainError",
    "EvaluationAtSingularity",
    "HypothesisViolated",
    "IllConditioned",
    "InequalityReport",
    "LevelSetDegeneracy",
    "MassReport",
    "NonConvergentFlux",
    "NonConvergentIntegral",
    "NonPositiveRadius",
    "NotRegularZAS",
    "OverlappingComponents",
    "RadialBump",
    "ResidualTooLarge",
    "SolverError",
    "SolverSpec",
    "StarDomain",
    "UnresolvedSpec",
    "adm_mass",
    "adm_mass_of_zas_metric",
    "black_hole_mass",
    "boundary_quadrature",
    "bump_potential",
    "capacity",
    "functionals",
    "is_mean_convex",
    "make_ball",
    "make_perturbed_ball",
    "make_spheroid",
    "make_star_domain",
    "pole_family",
    "schwarzschild",
    "schwarzschild_radius",
    "solve",
    "solve_mixed",
    "verify_corollaries",
    "verify_isoperimetric",
    "verify_lemma_zas",
    "verify_minkowski",
    "verify_mixed",
    "verify_pfs",
    "verify_thm_general2_delta",
    "verify_thm_main",
    "verify_thm_zas",
    "weighted_scalar_integral",
    "zas_mass",
]
