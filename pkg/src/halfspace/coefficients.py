"""Coefficient matrices, the first-order transform, and accretivity estimates.

A coefficient matrix A(x) is an N x N complex matrix per grid point,
stored in the block layout [[a, b], [c, d]] where a acts on the scalar
slot (m channels) and d on the tangential slot (m*n channels).  The
transform turns the second-order divergence-form system into the
first-order evolution satisfied by the conormal gradient; it requires
the a block to be invertible pointwise.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .grid import Field, GridSpec, PHYSICAL

__all__ = [
    "CoefficientMatrix",
    "TransformedB",
    "AccretivityReport",
    "hat_transform",
    "accretivity_estimate",
    "identity_coefficients",
    "block_diagonal_coefficients",
    "perturbation_of_identity",
]


class CoefficientError(ValueError):
    pass


class NotAccretiveError(RuntimeError):
    """The transformed matrix fails strict accretivity on the relevant range."""


class _PointwiseMatrix:
    """Shared storage/behavior for per-grid-point N x N matrices."""

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        expected = grid.shape + (grid.channels, grid.channels)
        if values.shape != expected:
            raise CoefficientError(f"matrix field shape {values.shape}, expected {expected}")
        if not np.all(np.isfinite(values)):
            raise CoefficientError("matrix field has non-finite entries")
        self.grid = grid
        self.values = values

    def sup_norm(self) -> float:
        """Largest pointwise operator 2-norm over the grid."""
        return float(np.linalg.norm(self.values, ord=2, axis=(-2, -1)).max())

    def apply(self, f: Field) -> Field:
        fp = f.to_physical()
        out = np.einsum("...ij,...j->...i", self.values, fp.values)
        return Field(self.grid, out, PHYSICAL)

    def adjoint_values(self) -> np.ndarray:
        return np.conj(np.swapaxes(self.values, -1, -2))

    def matmul_values(self, other: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...jk->...ik", self.values, other)

    def _blocks(self):
        m = self.grid.system_size
        return (
            self.values[..., :m, :m],
            self.values[..., :m, m:],
            self.values[..., m:, :m],
            self.values[..., m:, m:],
        )


class CoefficientMatrix(_PointwiseMatrix):
    """Bounded measurable coefficients A(x), t-independent."""

    @property
    def a(self) -> np.ndarray:
        return self._blocks()[0]

    @property
    def b(self) -> np.ndarray:
        return self._blocks()[1]

    @property
    def c(self) -> np.ndarray:
        return self._blocks()[2]

    @property
    def d(self) -> np.ndarray:
        return self._blocks()[3]

    def a_condition(self) -> float:
        """Worst condition number of the scalar-slot block over the grid."""
        return float(np.linalg.cond(self.a).max())

    def adjoint(self) -> "CoefficientMatrix":
        return CoefficientMatrix(self.grid, self.adjoint_values())

    def is_block_diagonal(self, tol: float = 1e-14) -> bool:
        scale = max(self.sup_norm(), 1e-300)
        return bool(
            np.abs(self.b).max() <= tol * scale and np.abs(self.c).max() <= tol * scale
        )


class TransformedB(_PointwiseMatrix):
    """Pointwise multiplier B(x) obtained from coefficients A(x)."""

    def adjoint(self) -> "TransformedB":
        return TransformedB(self.grid, self.adjoint_values())


def hat_transform(A: CoefficientMatrix) -> TransformedB:
    """Map A = [[a,b],[c,d]] to B = [[a^-1, -a^-1 b], [c a^-1, d - c a^-1 b]].

    The defining block identity B [[a,b],[0,1]] = [[1,0],[c,d]] holds
    pointwise.  Raises if the a block is singular anywhere, naming the
    first offending grid point.
    """
    grid = A.grid
    m = grid.system_size
    a, b, c, d = A._blocks()
    dets = np.abs(np.linalg.det(a))
    scale = np.abs(a).max() or 1.0
    if np.any(dets < 1e-14 * scale**m):
        idx = tuple(int(i) for i in np.argwhere(dets < 1e-14 * scale**m)[0])
        raise CoefficientError(
            f"scalar-slot block a(x) is singular at grid point {idx}"
        )
    a_inv = np.linalg.inv(a)
    ca_inv = np.einsum("...ij,...jk->...ik", c, a_inv)
    top = np.concatenate([a_inv, -np.einsum("...ij,...jk->...ik", a_inv, b)], axis=-1)
    bottom = np.concatenate(
        [ca_inv, d - np.einsum("...ij,...jk->...ik", ca_inv, b)], axis=-1
    )
    return TransformedB(grid, np.concatenate([top, bottom], axis=-2))


@dataclasses.dataclass(frozen=True)
class AccretivityReport:
    """Certificate for the multiplier on the range of the symbol projection.

    kappa: lower bound of the real part of the compressed quadratic form.
    omega: half-angle of the smallest sector containing its numerical range.
    sup_norm: L-infinity bound of the multiplier.
    pointwise_accretive: whether B(x) is accretive at every grid point.
    """

    kappa: float
    omega: float
    sup_norm: float
    pointwise_accretive: bool
    method: dict

    def __post_init__(self):
        if self.kappa <= 0:
            raise NotAccretiveError("B not accretive on range of D")


def _range_basis_coefficients(grid: GridSpec):
    """Orthonormal spectral basis of the range of the symbol projection.

    For every nonzero frequency k: m scalar-slot unit vectors and m
    tangential vectors aligned with k.  Returns (frequency index list,
    channel-vector list) with one entry per basis element.
    """
    m = grid.system_size
    N = grid.channels
    freqs = grid.frequencies().reshape(-1, grid.dim)
    flat_indices = np.arange(freqs.shape[0])
    vectors = []
    positions = []
    for idx in flat_indices:
        k = freqs[idx]
        if np.all(k == 0):
            continue
        khat = k / np.linalg.norm(k)
        for alpha in range(m):
            e = np.zeros(N, dtype=complex)
            e[alpha] = 1.0
            vectors.append(e)
            positions.append(idx)
        for alpha in range(m):
            e = np.zeros(N, dtype=complex)
            for j in range(grid.dim):
                e[m + j * m + alpha] = khat[j]
            vectors.append(e)
            positions.append(idx)
    return np.asarray(positions), np.asarray(vectors)


def compressed_quadratic_form(B: TransformedB) -> np.ndarray:
    """Dense matrix of the multiplier compressed to the range of the projection.

    Entry (i, j) is the pairing of basis vector i with B applied to basis
    vector j, both taken in the range of the symbol projection.
    """
    grid = B.grid
    positions, vectors = _range_basis_coefficients(grid)
    r = len(positions)
    gridsize = grid.points**grid.dim
    # basis columns as spectral arrays, batched
    basis = np.zeros((r, gridsize, grid.channels), dtype=complex)
    basis[np.arange(r), positions, :] = vectors
    basis = basis.reshape((r,) + grid.shape + (grid.channels,))
    phys = np.fft.ifftn(basis, axes=tuple(range(1, 1 + grid.dim)), norm="forward")
    Bphys = np.einsum("...ij,k...j->k...i", B.values, phys)
    Bspec = np.fft.fftn(Bphys, axes=tuple(range(1, 1 + grid.dim)), norm="forward")
    Bspec = Bspec.reshape(r, gridsize, grid.channels)
    flatbasis = basis.reshape(r, gridsize, grid.channels)
    return np.einsum("ikc,jkc->ij", np.conj(flatbasis), Bspec)


def _sector_contains(C: np.ndarray, phi: float) -> bool:
    """Whether the numerical range of C lies in the closed sector of half-angle phi."""
    for sign in (+1.0, -1.0):
        rot = np.exp(1j * sign * (np.pi / 2 - phi)) * C
        herm = 0.5 * (rot + rot.conj().T)
        lam_min = np.linalg.eigvalsh(herm)[0]
        if lam_min < -1e-12 * max(np.linalg.norm(C, 2), 1.0):
            return False
    return True


def accretivity_estimate(B: TransformedB, resolution: float = 1e-3) -> AccretivityReport:
    """Estimate the accretivity bound and angle of the compressed multiplier.

    kappa is the smallest eigenvalue of the Hermitian part of the
    compression.  The angle is located by bisection of the monotone
    sector-containment predicate; the numerical range of a matrix is
    convex, so this is exact up to the angular resolution.
    """
    C = compressed_quadratic_form(B)
    herm = 0.5 * (C + C.conj().T)
    kappa = float(np.linalg.eigvalsh(herm)[0])
    sup = B.sup_norm()
    pointwise = bool(
        np.all(np.linalg.eigvalsh(0.5 * (B.values + B.adjoint_values()))[..., 0] > 0)
    )
    if kappa <= 0:
        raise NotAccretiveError("B not accretive on range of D")
    lo, hi = 0.0, np.pi / 2 - 1e-9
    if _sector_contains(C, lo):
        omega = 0.0
    else:
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if _sector_contains(C, mid):
                hi = mid
            else:
                lo = mid
        omega = hi
    return AccretivityReport(
        kappa=kappa,
        omega=float(omega),
        sup_norm=sup,
        pointwise_accretive=pointwise,
        method={
            "compression_size": C.shape[0],
            "angle_resolution": resolution,
            "angle_search": "bisection on sector containment",
        },
    )


def identity_coefficients(grid: GridSpec) -> CoefficientMatrix:
    eye = np.eye(grid.channels, dtype=complex)
    return CoefficientMatrix(grid, np.broadcast_to(eye, grid.shape + eye.shape).copy())


def block_diagonal_coefficients(grid: GridSpec, a, d) -> CoefficientMatrix:
    """A = diag(a, d) with a scalar-slot and d tangential-slot samples.

    a may be a scalar, an array over the grid, or a full m x m matrix
    field; d likewise for the tangential slot.
    """
    m = grid.system_size
    nt = grid.channels - m
    values = np.zeros(grid.shape + (grid.channels, grid.channels), dtype=complex)

    def fill(block, size, offset):
        block = np.asarray(block, dtype=complex)
        if block.ndim == 0:
            block = block * np.eye(size)
        elif block.shape == grid.shape:
            block = block[..., None, None] * np.eye(size)
        for i in range(size):
            for j in range(size):
                values[..., offset + i, offset + j] = block[..., i, j]

    fill(a, m, 0)
    fill(d, nt, m)
    return CoefficientMatrix(grid, values)


def perturbation_of_identity(
    grid: GridSpec, rng: np.random.Generator, size: float
) -> CoefficientMatrix:
    """I plus a random complex matrix field of sup-norm about `size`."""
    shape = grid.shape + (grid.channels, grid.channels)
    E = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    E /= np.linalg.norm(E, ord=2, axis=(-2, -1)).max()
    eye = np.eye(grid.channels, dtype=complex)
    return CoefficientMatrix(grid, eye + size * E)
