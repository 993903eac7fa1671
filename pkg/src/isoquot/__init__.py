"""Exact and numerical verification of the sharp isoperimetric-quotient
expansion along bubble families on scalar-flat conformal classes."""

from .exact import (
    Base,
    BaseMismatchError,
    DivergentIntegralError,
    ExactQuantity,
    ParityError,
    ball_volume,
    beta_half,
    beta_line_rational,
    radial_ratio_to_base,
    sphere_area,
    sphere_moment4,
    sphere_moment22,
    theta_ball,
)
from .quadrature import (
    QuadResult,
    QuadratureConvergenceError,
    TailModelError,
    TailSpec,
    algebraic_tail_1d,
    integrate_1d,
    integrate_field_weighted,
    integrate_tail_1d,
)
from .grids import Field2D, Grid2D, SolveReport, read_field, write_field
from .solver import (
    AuxProblem,
    DecayFitError,
    GridResolutionError,
    SolverDivergenceError,
    decay_fit,
    residual_norm,
    solve_reduced,
)
from .greenfn import oracle_point, verify_kernel_identity
from .coefficients import (
    CurvatureInputs,
    FieldLibrary,
    NonumbilicCoefficients,
    SignCertificate,
    SolverConfig,
    UmbilicCoefficients,
    lambda2_coefficient,
    lambda4_coefficients,
    nonumbilic_a2,
    nonumbilic_a3,
    nonumbilic_step1_closed,
    quotient_expansion,
    umbilic_closed_sum,
    umbilic_step2,
    umbilic_step3,
)

__version__ = "0.1.0"
