"""Green functions and Poisson kernels of hyperbolic Brownian motion with drift.

Modules
-------
geometry    half-space points, distances and the domains D_a, S_{a,b}, S_{0,b}
specfun     modified Bessel functions and the Hartman-Watson density
bessel      Bessel-process densities (free, killed, hitting times)
simulate    path simulation with exit detection and occupation functionals
kernels     Monte Carlo and quadrature kernel values
bounds      closed-form two-sided estimates and the integral certifier
theory      drift reduction, modified Dirichlet problem, scaling
acceptance  the acceptance suite
cli         command-line front end
"""
from .bounds import (BoundReport, LemmaParams, green_bound_halfspace, green_bound_slab, green_bound_strip,
                     lemma_certify, lemma_lhs, lemma_rhs, poisson_bound_halfspace, poisson_bound_slab,
                     poisson_bound_strip, w_estimate, w_factor)
from .geometry import (BoundaryFace, DomainSpec, GeometryError, HyperPoint, classify, cosh_distance, delta,
                       hyperbolic_distance, scale_domain, shifted_point)
from .kernels import BoundaryRegion, KernelEstimate, estimate_green, estimate_poisson
from .quadrature import ConvergenceError
from .simulate import ExitRecord, SimConfig, first_exit, simulate_exits
from .theory import DriftPair, eta, reduce_green, reduce_poisson

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "LemmaParams", "green_bound_halfspace", "green_bound_slab", "green_bound_strip",
    "lemma_certify", "lemma_lhs", "lemma_rhs", "poisson_bound_halfspace", "poisson_bound_slab",
    "poisson_bound_strip", "w_estimate", "w_factor", "BoundaryFace", "DomainSpec", "GeometryError", "HyperPoint",
    "classify", "cosh_distance", "delta", "hyperbolic_distance", "scale_domain", "shifted_point",
    "BoundaryRegion", "KernelEstimate", "estimate_green", "estimate_poisson", "ConvergenceError", "ExitRecord",
    "SimConfig", "first_exit", "simulate_exits", "DriftPair", "eta", "reduce_green", "reduce_poisson",
]
