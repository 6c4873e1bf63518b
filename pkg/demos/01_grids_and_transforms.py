"""Grids, fields and discrete function-space norms.

The library works on the flat torus with a power-of-two grid per axis.
Fields carry m(1+n) channels: a scalar slot and a tangential slot, the
layout used by conormal gradients.  Transforms are exact and unitary
for the norms below, and homogeneous Sobolev norms are plain spectral
weights on the mean-zero subspace.
"""

import numpy as np

from halfspace import (
    Field,
    GridSpec,
    TLadder,
    forward_transform,
    l2_norm,
    random_field,
    sobolev_norm,
)

grid = GridSpec(dim=1, points=64, system_size=1)
print(f"grid: {grid.dim}-dimensional boundary, {grid.points} points, "
      f"{grid.channels} channels, {grid.dof} degrees of freedom")

rng = np.random.default_rng(0)
f = random_field(grid, rng)
fs = forward_transform(f)
print(f"Parseval defect: {abs(l2_norm(f) - l2_norm(fs)):.2e}")

x = grid.coordinates()[0]
vals = np.zeros(grid.shape + (2,), dtype=complex)
vals[..., 0] = np.exp(2j * x)
mode = Field.physical(grid, vals)
print(f"single mode |k| = 2: first-order norm / flat norm = "
      f"{sobolev_norm(mode, 1.0) / l2_norm(mode):.6f} (expect 2)")
print(f"half-order dual norm / flat norm = "
      f"{sobolev_norm(mode, -0.5) / l2_norm(mode):.6f} (expect 1/sqrt(2))")

ladder = TLadder.default()
print(f"default scale ladder: {len(ladder)} points spanning "
      f"[{ladder.t[0]:.2e}, {ladder.t[-1]:.2e}], "
      f"weights sum to log ratio: {ladder.weights.sum():.6f} "
      f"vs {np.log(ladder.t[-1] / ladder.t[0]):.6f}")
