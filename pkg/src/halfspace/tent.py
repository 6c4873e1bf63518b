"""Tent-space functionals on the discrete half-space over the torus.

A sampled function on the half-space is one field per ladder scale.
Cones and boxes use the torus metric; balls are sets of grid points
within a torus distance, and averages over them are plain means over
the contained points, so that the square-function energy identity at
exponent two holds with the exact cone cross-section constant.

Scales below the grid spacing degenerate to single-point balls; scales
outside the ladder contribute nothing, and the share of the boundary
octaves is reported as the truncation diagnostic.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from .calculus import HolomorphicFunctionSpec, eigen_apply_many, semigroup
from .grid import Field, GridSpec, TLadder, lp_norm_grid
from .operators import LinearOperatorHandle

__all__ = [
    "TentField",
    "WhitneyParams",
    "square_function",
    "tent_norm",
    "carleson_norm",
    "nt_maximal",
    "nt_sharp",
    "quadratic_norm",
    "semigroup_tent_field",
]


@dataclasses.dataclass(frozen=True)
class WhitneyParams:
    """Box constants: t-window ratio c0 > 1, ball factor c1 > 0, cone aperture a > 0."""

    c0: float = 2.0
    c1: float = 1.0
    aperture: float = 1.0

    def __post_init__(self):
        if self.c0 <= 1 or self.c1 <= 0 or self.aperture <= 0:
            raise ValueError("need c0 > 1, c1 > 0, aperture > 0")


class TentField:
    """One field per ladder scale, all sharing a grid."""

    def __init__(self, grid: GridSpec, ladder: TLadder, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        expected = (len(ladder),) + grid.shape + (grid.channels,)
        if values.shape != expected:
            raise ValueError(f"tent field shape {values.shape}, expected {expected}")
        self.grid = grid
        self.ladder = ladder
        self.values = values

    @classmethod
    def from_fields(cls, ladder: TLadder, fields) -> "TentField":
        fields = list(fields)
        grid = fields[0].grid
        vals = np.stack([f.to_physical().values for f in fields], axis=0)
        return cls(grid, ladder, vals)

    @classmethod
    def from_function(cls, grid: GridSpec, ladder: TLadder, fn) -> "TentField":
        """fn(t, coordinate arrays) -> channel array for one scale."""
        coords = grid.coordinates()
        vals = np.stack([np.asarray(fn(t, *coords), dtype=complex) for t in ladder.t])
        return cls(grid, ladder, vals)

    def scaled_by(self, weights) -> "TentField":
        w = np.asarray(weights, dtype=complex).reshape(
            (-1,) + (1,) * (self.values.ndim - 1)
        )
        return TentField(self.grid, self.ladder, self.values * w)

    def channel_square(self) -> np.ndarray:
        """|F(t, x)|^2 summed over channels, shape (K,) + grid_shape."""
        return (np.abs(self.values) ** 2).sum(axis=-1)


def semigroup_tent_field(T: LinearOperatorHandle, h: Field, ladder: TLadder) -> TentField:
    """Samples of the decay semigroup of T applied to h along the ladder."""
    specs = [_exp_spec(t) for t in ladder.t]
    fields = eigen_apply_many(T, specs, h)
    return TentField.from_fields(ladder, fields)


def _exp_spec(t: float) -> HolomorphicFunctionSpec:
    from .calculus import exp_abs

    return exp_abs(t)


def unit_ball_volume(n: int) -> float:
    return {1: 2.0, 2: np.pi}[n]


def _ball_masks(grid: GridSpec, radius: float) -> np.ndarray:
    """Indicator of the torus ball of the given radius around the origin."""
    return grid.torus_distance_table() <= radius + 1e-12


def _ball_average(scalar: np.ndarray, grid: GridSpec, radius: float) -> np.ndarray:
    """Mean over the torus ball at each center, via circular convolution.

    scalar has shape (..., grid_shape).  Balls smaller than the grid
    spacing reduce to the point value.
    """
    mask = _ball_masks(grid, radius)
    count = int(mask.sum())
    if count == 1:
        return scalar
    axes = tuple(range(-grid.dim, 0))
    kernel = np.fft.fftn(mask.astype(float), axes=axes)
    out = np.fft.ifftn(np.fft.fftn(scalar, axes=axes) * kernel, axes=axes)
    return out.real / count


def _ball_counts(grid: GridSpec, radius: float) -> int:
    return int(_ball_masks(grid, radius).sum())


def square_function(F: TentField, wp: WhitneyParams = WhitneyParams()) -> np.ndarray:
    """Conical square function on the grid.

    Value squared at x: the ladder sum with dt/t weights of the mean of
    |F(t, .)|^2 over the ball of radius aperture * t around x, times the
    cone cross-section constant (unit-ball volume times aperture^n).
    """
    grid = F.grid
    sq = F.channel_square()
    acc = np.zeros(grid.shape)
    for j, (t, w) in enumerate(zip(F.ladder.t, F.ladder.weights)):
        acc += w * _ball_average(sq[j], grid, wp.aperture * t)
    cross_section = unit_ball_volume(grid.dim) * wp.aperture**grid.dim
    return np.sqrt(cross_section * acc)


def tent_norm(F: TentField, p: float, wp: WhitneyParams = WhitneyParams()) -> float:
    """L^p norm of the conical square function, 0 < p < infinity."""
    if not (0 < p < np.inf):
        raise ValueError("p must be in (0, inf)")
    return lp_norm_grid(square_function(F, wp), F.grid, p)


def spacetime_square_integral(F: TentField) -> float:
    """Plain integral of |F|^2 dt dx / t over the sampled half-space."""
    sq = F.channel_square()
    per_scale = sq.reshape(len(F.ladder), -1).sum(axis=1) * F.grid.cell_volume
    return float((F.ladder.weights * per_scale).sum())


def tent_duality_pairing(F: TentField, G: TentField) -> complex:
    """Space-time pairing of two tent fields with dt dx / t."""
    prod = (F.values * np.conj(G.values)).sum(axis=tuple(range(1, F.values.ndim)))
    return complex((F.ladder.weights * prod).sum() * F.grid.cell_volume)


def _dyadic_radii(grid: GridSpec) -> np.ndarray:
    """Dyadic ball radii from the grid spacing up to the period."""
    h = 2 * np.pi / grid.points
    radii = []
    r = h
    while r <= 2 * np.pi + 1e-12:
        radii.append(r)
        r *= 2
    return np.asarray(radii)


def carleson_norm(F: TentField, alpha: float = 0.0) -> float:
    """Weighted Carleson functional over a dyadic family of balls.

    For each grid center and dyadic radius r, the mass of |F|^2 dt dy / t
    over scales t <= r and the ball, divided by the ball measure raised
    to 1 + 2 alpha / n; the value is the square root of the supremum.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    grid = F.grid
    sq = F.channel_square()
    best = 0.0
    for r in _dyadic_radii(grid):
        tmask = F.ladder.t <= r + 1e-12
        if not tmask.any():
            continue
        slab = np.tensordot(F.ladder.weights[tmask], sq[tmask], axes=(0, 0))
        avg = _ball_average(slab, grid, r)
        measure = _ball_counts(grid, r) * grid.cell_volume
        # ball mass over |B|^(1 + 2 alpha / n) reduces to the ball average
        # of the slab over |B|^(2 alpha / n)
        mass = avg * measure ** (-2.0 * alpha / grid.dim)
        best = max(best, float(mass.max()))
    return float(np.sqrt(best))


def nt_maximal(F: TentField, wp: WhitneyParams = WhitneyParams()) -> np.ndarray:
    """Non-tangential maximal function with root-mean-square box averages.

    At each grid point: the sup over ladder scales t of the RMS of F over
    the box (t / c0, c0 t) x ball(x, c1 t), the t-average taken with the
    linear measure dt restricted to ladder points in the window.
    """
    grid = F.grid
    sq = F.channel_square()
    t = F.ladder.t
    w_lin = F.ladder.weights * t  # dt weights from dt/t weights
    ball_avgs = {}
    best = np.zeros(grid.shape)
    for j, tj in enumerate(t):
        radius = wp.c1 * tj
        window = (t > tj / wp.c0) & (t < tj * wp.c0)
        if not window.any():
            window = np.zeros_like(window)
            window[j] = True
        total = 0.0
        acc = np.zeros(grid.shape)
        for s_idx in np.nonzero(window)[0]:
            key = (s_idx, j)
            if key not in ball_avgs:
                ball_avgs[key] = _ball_average(sq[s_idx], grid, radius)
            acc += w_lin[s_idx] * ball_avgs[key]
            total += w_lin[s_idx]
        best = np.maximum(best, acc / total)
    return np.sqrt(np.maximum(best, 0.0))


def nt_sharp(
    h: Field,
    T: LinearOperatorHandle,
    ladder: TLadder,
    wp: WhitneyParams = WhitneyParams(),
    alpha: float = 0.0,
) -> np.ndarray:
    """Non-tangential maximal function of the semigroup increment.

    Measures boundary oscillation: the box RMS of exp(-t|T|) h - h, with
    an optional t^-alpha weight per box scale.
    """
    fields = [semigroup(T, t, h) - h for t in ladder.t]
    F = TentField.from_fields(ladder, fields)
    if alpha == 0.0:
        return nt_maximal(F, wp)
    grid = F.grid
    sq = F.channel_square()
    t = ladder.t
    w_lin = ladder.weights * t
    best = np.zeros(grid.shape)
    for j, tj in enumerate(t):
        radius = wp.c1 * tj
        window = (t > tj / wp.c0) & (t < tj * wp.c0)
        if not window.any():
            window = np.zeros_like(window)
            window[j] = True
        acc = np.zeros(grid.shape)
        total = 0.0
        for s_idx in np.nonzero(window)[0]:
            acc += w_lin[s_idx] * _ball_average(sq[s_idx], grid, radius)
            total += w_lin[s_idx]
        best = np.maximum(best, tj ** (-2.0 * alpha) * acc / total)
    return np.sqrt(np.maximum(best, 0.0))


def quadratic_norm(
    T: LinearOperatorHandle,
    psi: HolomorphicFunctionSpec,
    h: Field,
    ladder: TLadder,
    warn_share: float = 0.01,
) -> float:
    """Ladder-weighted square integral of psi(t T) h over scales.

    Approximates the scale-invariant square function energy.  Warns when
    the two boundary octaves carry more than warn_share of the total,
    with a tail estimate from the decay class of psi.
    """
    if not psi.is_psi_class:
        raise ValueError("quadratic norm requires Psi-class decay")
    from .grid import l2_norm

    specs = [psi.scaled(t) for t in ladder.t]
    fields = eigen_apply_many(T, specs, h)
    norms2 = np.array([l2_norm(f) ** 2 for f in fields])
    total = float((ladder.weights * norms2).sum())
    if total > 0:
        per_octave = np.log(2.0)
        edge = ladder.weights.copy()
        u = np.log(ladder.t)
        inner_mask = (u > u[0] + per_octave) & (u < u[-1] - per_octave)
        edge[inner_mask] = 0.0
        share = float((edge * norms2).sum()) / total
        if share > warn_share:
            sigma, tau = psi.decay
            tail = (
                psi.origin_bound ** 2 * (ladder.t[0]) ** (2 * sigma) / (2 * sigma)
                + psi.bound ** 2 * (ladder.t[-1]) ** (-2 * tau) / (2 * tau)
            )
            warnings.warn(
                f"ladder boundary carries {share:.1%} of the quadratic norm; "
                f"scalar tail estimate {tail:.3e}",
                stacklevel=2,
            )
    return total
