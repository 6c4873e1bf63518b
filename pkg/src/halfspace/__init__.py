"""Spectral engine for first-order boundary value problems on the half-space
over a periodic boundary.

Submodule map:
  grid          periodic grids, fields, transforms, homogeneous norms
  coefficients  coefficient matrices, first-order transform, accretivity
  operators     exact multiplier symbols, compositions, resolvents
  calculus      holomorphic functional calculus, semigroups, reproducing pairs
  tent          tent-space functionals, square functions, maximal functions
  bvp           spectral Hardy subspaces, trace inversion, layer potentials
  io            coefficient file formats
  cli           experiment runner
"""

from .grid import (
    Field,
    GridSpec,
    TLadder,
    forward_transform,
    inner,
    inverse_transform,
    l2_norm,
    random_field,
    sobolev_norm,
)
from .coefficients import (
    AccretivityReport,
    CoefficientMatrix,
    TransformedB,
    accretivity_estimate,
    block_diagonal_coefficients,
    hat_transform,
    identity_coefficients,
    perturbation_of_identity,
)
from .operators import (
    LinearOperatorHandle,
    MultiplierSymbol,
    assemble_dense,
    bd_operator,
    build_D_symbol,
    build_P_symbol,
    b_operator,
    d_operator,
    db_operator,
    offdiag_probe,
    p_operator,
    resolvent_solve,
)
from .calculus import (
    ContourSpec,
    HolomorphicFunctionSpec,
    apply_calculus,
    calderon_pair,
    semigroup,
)
from .tent import (
    TentField,
    WhitneyParams,
    carleson_norm,
    nt_maximal,
    nt_sharp,
    quadratic_norm,
    semigroup_tent_field,
    square_function,
    tent_norm,
)
from .bvp import (
    BVPSolution,
    FirstOrderSystem,
    SpectralHardyBasis,
    boundary_layer_representation_check,
    dirichlet_to_neumann,
    double_layer,
    grad_single_layer,
    layer_duality_check,
    neumann_to_dirichlet,
    single_layer,
    solve_dirichlet,
    solve_neumann,
    solve_regularity,
    spectral_split,
)
from .io import load_coefficients, save_coefficient_fourier, save_coefficient_samples

__version__ = "0.1.0"
