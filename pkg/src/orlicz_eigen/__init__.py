"""Eigenvalues of non-homogeneous Orlicz-Sobolev problems with a potential, and
optimisation of the principal eigenvalue over balls of potentials.

Modules:

* ``young``       -- Young functions phi, Phi, Phi*, indices, structural conditions
* ``grid``        -- box grids, grid functions, gradients, quadrature, CSV I/O
* ``lebesgue``    -- modulars and Luxemburg norms (variable exponent and Orlicz)
* ``functionals`` -- J_V, I, T, Rayleigh quotients and their derivatives
* ``eigensolve``  -- multi-start minimisation of the quotients and of T
* ``potopt``      -- min / max of A(V) over balls of potentials
* ``config``, ``cli`` -- YAML configs and the ``orlicz-eigen`` command
"""
__version__ = "0.1.0"

from .eigensolve import (
    EigenResult,
    SolverOptions,
    blowup_profile,
    lambda_m,
    minimize_rayleigh_A,
    minimize_rayleigh_B,
    residual_weak,
    solve_T,
)
from .functionals import I, J, T, ProblemSpec, gateaux_I, gateaux_J, rayleigh_A, rayleigh_B
from .grid import Grid, GridFunction, gradient_magnitude, integrate, random_test_function
from .lebesgue import ExponentField, holder_pairing, luxemburg_norm, modular, orlicz_luxemburg_norm
from .potopt import BallSpec, SweepRow, a_star, a_star_sweep, a_upper, ball_linear_minimize, find_zero_radius, mu_set_function
from .young import ConditionReport, YoungFunctionSpec, check_conditions, indices

__all__ = [
    "__version__",
    "EigenResult",
    "SolverOptions",
    "blowup_profile",
    "lambda_m",
    "minimize_rayleigh_A",
    "minimize_rayleigh_B",
    "residual_weak",
    "solve_T",
    "I",
    "J",
    "T",
    "ProblemSpec",
    "gateaux_I",
    "gateaux_J",
    "rayleigh_A",
    "rayleigh_B",
    "Grid",
    "GridFunction",
    "gradient_magnitude",
    "integrate",
    "random_test_function",
    "ExponentField",
    "holder_pairing",
    "luxemburg_norm",
    "modular",
    "orlicz_luxemburg_norm",
    "BallSpec",
    "SweepRow",
    "a_star",
    "a_star_sweep",
    "a_upper",
    "ball_linear_minimize",
    "find_zero_radius",
    "mu_set_function",
    "ConditionReport",
    "YoungFunctionSpec",
    "check_conditions",
    "indices",
]
