"""Tent-space functionals over the discrete half-space.

The conical square function, the Carleson functional and the
non-tangential maximal function all act on ladder-sampled interior
fields.  At exponent two the square-function energy of the flow
reproduces the boundary energy with an explicit constant: one half for
the basic rational kernel.
"""

import numpy as np

import halfspace.calculus as fc
from halfspace import GridSpec, random_field
from halfspace.grid import TLadder, l2_norm, lp_norm_grid
from halfspace.operators import d_operator, p_operator
from halfspace.tent import (
    WhitneyParams,
    carleson_norm,
    nt_maximal,
    quadratic_norm,
    semigroup_tent_field,
    square_function,
    tent_norm,
)

grid = GridSpec(dim=1, points=64)
rng = np.random.default_rng(3)
D = d_operator(grid)
ladder = TLadder.default()

h = p_operator(grid).apply(random_field(grid, rng))
ratio = quadratic_norm(D, fc.z_over_one_plus_z2(), h, ladder) / l2_norm(h) ** 2
print(f"square-function energy ratio: {ratio:.6f} (expect 0.500000)")

F = semigroup_tent_field(D, h, ladder)
sf = square_function(F)
print(f"conical square function: sup = {sf.max():.3f}, "
      f"tent norm at p=2: {tent_norm(F, 2.0):.3f}")
print(f"Carleson functional (alpha = 0): {carleson_norm(F, 0.0):.3f}, "
      f"weighted (alpha = 0.5): {carleson_norm(F, 0.5):.3f}")

nt = nt_maximal(F, WhitneyParams(c0=2.0, c1=1.0))
print(f"maximal-function ratio |N*| / |h|: "
      f"{lp_norm_grid(nt, grid, 2) / l2_norm(h):.3f} (two-sided at p=2)")

for a in (1.0, 2.0):
    print(f"aperture {a}: tent norm {tent_norm(F, 2.0, WhitneyParams(aperture=a)):.4f}")
