"""First-order operators as exact Fourier multipliers and their compositions.

The central object is the self-adjoint block operator that pairs the
divergence of the tangential slot with minus the gradient of the scalar
slot.  On the torus its symbol at frequency k is Hermitian with nonzero
eigenvalues +-|k| on its range, and the associated range projection is
an exact multiplier.  Multiplication by a transformed coefficient
matrix composes with it on either side; resolvents of the compositions
are solved densely at desk scale or by a preconditioned Krylov
iteration beyond it.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .coefficients import TransformedB
from .grid import Field, GridSpec, PHYSICAL, SPECTRAL, fft_values, ifft_values

__all__ = [
    "MultiplierSymbol",
    "LinearOperatorHandle",
    "build_D_symbol",
    "build_P_symbol",
    "build_inverse_D_symbol",
    "d_operator",
    "p_operator",
    "b_operator",
    "db_operator",
    "bd_operator",
    "resolvent_solve",
    "assemble_dense",
    "offdiag_probe",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 8192


class OperatorError(RuntimeError):
    pass


class IterationError(OperatorError):
    """Krylov iteration failed; carries the residual history."""

    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclasses.dataclass(frozen=True)
class MultiplierSymbol:
    """Frequency-indexed N x N matrices acting in the spectral representation."""

    grid: GridSpec
    matrices: np.ndarray  # grid_shape + (N, N)

    def __post_init__(self):
        expected = self.grid.shape + (self.grid.channels, self.grid.channels)
        if self.matrices.shape != expected:
            raise OperatorError(f"symbol shape {self.matrices.shape}, expected {expected}")

    def apply_spectral(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.matrices, values)

    def at(self, k) -> np.ndarray:
        """Matrix at an integer frequency tuple."""
        idx = tuple(int(ki) % self.grid.points for ki in np.atleast_1d(k))
        return self.matrices[idx]


def build_D_symbol(grid: GridSpec) -> MultiplierSymbol:
    """Symbol of the divergence / negative-gradient block operator.

    Acting on (scalar slot f_perp, tangential slot f_par):
    output scalar slot = i k . f_par, output tangential slot = -i k f_perp,
    per system component.  Hermitian for every k, zero at k = 0.
    """
    m = grid.system_size
    N = grid.channels
    freqs = grid.frequencies()
    mats = np.zeros(grid.shape + (N, N), dtype=complex)
    for j in range(grid.dim):
        kj = freqs[..., j]
        for alpha in range(m):
            mats[..., alpha, m + j * m + alpha] = 1j * kj
            mats[..., m + j * m + alpha, alpha] = -1j * kj
    return MultiplierSymbol(grid, mats)


def build_P_symbol(grid: GridSpec) -> MultiplierSymbol:
    """Orthogonal projection onto the closed range of the block operator.

    Identity on the scalar slot and the rank-one tangential projector
    along k for k != 0; zero matrix at k = 0.
    """
    m = grid.system_size
    N = grid.channels
    freqs = grid.frequencies()
    kn2 = (freqs**2).sum(axis=-1)
    mats = np.zeros(grid.shape + (N, N), dtype=complex)
    nz = kn2 > 0
    for alpha in range(m):
        mats[..., alpha, alpha][nz] = 1.0
    for i in range(grid.dim):
        for j in range(grid.dim):
            proj = np.zeros_like(kn2)
            proj[nz] = freqs[..., i][nz] * freqs[..., j][nz] / kn2[nz]
            for alpha in range(m):
                mats[..., m + i * m + alpha, m + j * m + alpha] = proj
    return MultiplierSymbol(grid, mats)


def build_inverse_D_symbol(grid: GridSpec) -> MultiplierSymbol:
    """Spectral inverse on the range of the block operator, zero elsewhere.

    Pseudo-inverse of the Hermitian symbol per frequency; the zero mode
    is annihilated, matching the mean-zero policy of homogeneous norms.
    """
    D = build_D_symbol(grid).matrices
    mats = np.linalg.pinv(D, rcond=1e-12)
    return MultiplierSymbol(grid, mats)


def build_power_symbol(grid: GridSpec, s: float) -> MultiplierSymbol:
    """|k|^s times the identity, zero at the zero frequency."""
    kn = grid.frequency_norms()
    w = np.zeros_like(kn)
    nz = kn > 0
    w[nz] = kn[nz] ** s
    eye = np.eye(grid.channels, dtype=complex)
    return MultiplierSymbol(grid, w[..., None, None] * eye)


def _resolvent_of_D_symbol(grid: GridSpec, t: float) -> MultiplierSymbol:
    """(I + i t D)^{-1} as an exact multiplier, used as a preconditioner."""
    D = build_D_symbol(grid).matrices
    eye = np.eye(grid.channels, dtype=complex)
    return MultiplierSymbol(grid, np.linalg.inv(eye + 1j * t * D))


class LinearOperatorHandle:
    """A linear map on fields with a tag and a preferred representation.

    kinds:
      multiplier  - acts in the spectral representation
      pointwise   - matrix multiplication per grid point, physical
      compose     - right-to-left composition of handles
      dense       - explicit matrix on flattened physical values
    """

    def __init__(self, tag: str, grid: GridSpec, kind: str, payload):
        self.tag = tag
        self.grid = grid
        self.kind = kind
        self.payload = payload
        self._dense = None
        self._eigen = None
        self._split_cache = None

    def __repr__(self):
        return f"LinearOperatorHandle({self.tag!r}, kind={self.kind!r})"

    def apply_array(self, values: np.ndarray, rep: str):
        """Apply to raw values with optional leading batch axes."""
        if self.kind == "multiplier":
            if rep == PHYSICAL:
                values = fft_values(values, self.grid)
            out = np.einsum("...ij,...j->...i", self.payload.matrices, values)
            return out, SPECTRAL
        if self.kind == "pointwise":
            if rep == SPECTRAL:
                values = ifft_values(values, self.grid)
            out = np.einsum("...ij,...j->...i", self.payload, values)
            return out, PHYSICAL
        if self.kind == "compose":
            for part in reversed(self.payload):
                values, rep = part.apply_array(values, rep)
            return values, rep
        if self.kind == "dense":
            if rep == SPECTRAL:
                values = ifft_values(values, self.grid)
            shape = values.shape
            flat = values.reshape(-1, self.grid.dof)
            out = flat @ self.payload.T
            return out.reshape(shape), PHYSICAL
        if self.kind == "resolvent":
            if rep == SPECTRAL:
                values = ifft_values(values, self.grid)
            shape = values.shape
            flat = values.reshape(-1, self.grid.dof)
            out = scipy.linalg.lu_solve(self._resolvent_factor(), flat.T).T
            return out.reshape(shape), PHYSICAL
        raise OperatorError(f"unknown kind {self.kind}")

    def _resolvent_factor(self):
        if not hasattr(self, "_lu"):
            T, t = self.payload
            M = np.eye(self.grid.dof, dtype=complex) + 1j * t * T.dense_matrix()
            self._lu = scipy.linalg.lu_factor(M)
        return self._lu

    def apply(self, f: Field) -> Field:
        values, rep = self.apply_array(f.values, f.rep)
        return Field(self.grid, values, rep)

    def dense_matrix(self) -> np.ndarray:
        """Matrix of the operator on flattened physical values (cached)."""
        if self._dense is None:
            self._dense = assemble_dense(self)
        return self._dense


def d_operator(grid: GridSpec) -> LinearOperatorHandle:
    return LinearOperatorHandle("D", grid, "multiplier", build_D_symbol(grid))


def p_operator(grid: GridSpec) -> LinearOperatorHandle:
    return LinearOperatorHandle("P", grid, "multiplier", build_P_symbol(grid))


def inverse_d_operator(grid: GridSpec) -> LinearOperatorHandle:
    return LinearOperatorHandle("Dinv", grid, "multiplier", build_inverse_D_symbol(grid))


def b_operator(B: TransformedB) -> LinearOperatorHandle:
    op = LinearOperatorHandle("B", B.grid, "pointwise", B.values)
    op.multiplier_matrix = B
    return op


def db_operator(B: TransformedB) -> LinearOperatorHandle:
    op = LinearOperatorHandle(
        "DB", B.grid, "compose", [d_operator(B.grid), b_operator(B)]
    )
    op.multiplier_matrix = B
    return op


def bd_operator(B: TransformedB) -> LinearOperatorHandle:
    op = LinearOperatorHandle(
        "BD", B.grid, "compose", [b_operator(B), d_operator(B.grid)]
    )
    op.multiplier_matrix = B
    return op


def dense_operator(tag: str, grid: GridSpec, matrix: np.ndarray) -> LinearOperatorHandle:
    return LinearOperatorHandle(tag, grid, "dense", matrix)


def resolvent_operator(T: LinearOperatorHandle, t: float) -> LinearOperatorHandle:
    """(I + i t T)^{-1} as a reusable handle with a cached factorization."""
    if T.grid.dof > DENSE_LIMIT:
        raise OperatorError(
            "resolvent handles factorize densely; beyond the size limit "
            "call resolvent_solve with the iterative method instead"
        )
    return LinearOperatorHandle(
        f"resolvent({T.tag},{t:g})", T.grid, "resolvent", (T, t)
    )


def assemble_dense(T: LinearOperatorHandle) -> np.ndarray:
    """Matrix of T in the flattened physical basis.

    Errors when the degree-of-freedom count exceeds the dense limit; the
    contour quadrature path works matrix-free in that regime.
    """
    dim = T.grid.dof
    if dim > DENSE_LIMIT:
        raise OperatorError(
            f"dense assembly of size {dim} exceeds limit {DENSE_LIMIT}; "
            "use the contour path with iterative resolvents instead"
        )
    if T.kind == "dense":
        return T.payload
    basis = np.eye(dim, dtype=complex).reshape(
        (dim,) + T.grid.shape + (T.grid.channels,)
    )
    out, rep = T.apply_array(basis, PHYSICAL)
    if rep == SPECTRAL:
        out = ifft_values(out, T.grid)
    return out.reshape(dim, dim).T.copy()


def resolvent_solve(
    T: LinearOperatorHandle,
    t: float,
    f: Field,
    tol: float = 1e-10,
    method: str = "auto",
) -> Field:
    """Solve (I + i t T) u = f.

    Dense LU below the size limit, otherwise restarted GMRES with the
    exact multiplier resolvent of the self-adjoint part as preconditioner.
    The returned field satisfies the residual bound tol * |f| or an
    IterationError carries the residual history.
    """
    if t == 0:
        return f.copy()
    grid = T.grid
    if method == "auto":
        method = "dense" if grid.dof <= DENSE_LIMIT else "gmres"
    rhs = f.flat()
    if method == "dense":
        M = np.eye(grid.dof, dtype=complex) + 1j * t * T.dense_matrix()
        u = scipy.linalg.solve(M, rhs)
    else:
        prec_symbol = _resolvent_of_D_symbol(grid, t)

        def matvec(x):
            vals = x.reshape(grid.shape + (grid.channels,))
            out, rep = T.apply_array(vals, PHYSICAL)
            if rep == SPECTRAL:
                out = ifft_values(out, grid)
            return (vals + 1j * t * out).reshape(-1)

        def precvec(x):
            vals = fft_values(x.reshape(grid.shape + (grid.channels,)), grid)
            out = prec_symbol.apply_spectral(vals)
            return ifft_values(out, grid).reshape(-1)

        A = scipy.sparse.linalg.LinearOperator(
            (grid.dof, grid.dof), matvec=matvec, dtype=complex
        )
        M = scipy.sparse.linalg.LinearOperator(
            (grid.dof, grid.dof), matvec=precvec, dtype=complex
        )
        history = []
        u, info = scipy.sparse.linalg.gmres(
            A,
            rhs,
            rtol=tol / 10,
            atol=0.0,
            restart=50,
            maxiter=10,
            M=M,
            callback=lambda r: history.append(float(r)),
            callback_type="pr_norm",
        )
        if info != 0:
            raise IterationError(
                f"resolvent iteration stagnated (info={info})", history
            )
    out = Field.from_flat(grid, u)
    applied, rep = T.apply_array(out.values, PHYSICAL)
    if rep == SPECTRAL:
        applied = ifft_values(applied, grid)
    residual = np.linalg.norm(out.values + 1j * t * applied - f.to_physical().values)
    if residual > tol * max(np.linalg.norm(rhs), 1e-300):
        raise IterationError(
            f"resolvent residual {residual:.3e} above tolerance", [residual]
        )
    return out


# ---------------------------------------------------------------------------
# kernel / range machinery through the compressed quadratic form
# ---------------------------------------------------------------------------


def _range_basis_fields(grid: GridSpec) -> np.ndarray:
    """Orthonormal basis of the range of the projection, flattened physical.

    Columns are index-aligned with the compressed quadratic form of the
    coefficients module.
    """
    from .coefficients import _range_basis_coefficients

    positions, vectors = _range_basis_coefficients(grid)
    r = len(positions)
    gridsize = grid.points**grid.dim
    basis = np.zeros((r, gridsize, grid.channels), dtype=complex)
    basis[np.arange(r), positions, :] = vectors
    basis = basis.reshape((r,) + grid.shape + (grid.channels,))
    phys = ifft_values(basis, grid)
    # the spectral basis is orthonormal in plain coefficient dots; the
    # series-normalized inverse transform scales flat norms by G^(n/2)
    return phys.reshape(r, -1).T * grid.points ** (-grid.dim / 2.0)


class RangeSplitter:
    """Kernel/range decompositions for both compositions with one multiplier.

    Solves the compressed quadratic form once per coefficient multiplier;
    accretivity makes the compression invertible.
    """

    def __init__(self, B: TransformedB):
        from .coefficients import compressed_quadratic_form

        self.grid = B.grid
        self.B = B
        self.Q = _range_basis_fields(B.grid)  # dof x r, orthonormal
        self.C = compressed_quadratic_form(B)
        self.lu = scipy.linalg.lu_factor(self.C)

    def compression_condition(self) -> float:
        return float(np.linalg.cond(self.C))

    def split_db(self, f: Field):
        """f = f_range + f_null for the multiplier-on-the-right composition.

        f_range lies in the range of the projection; the multiplier maps
        f_null into the kernel of the symbol.
        """
        vec = f.flat()
        Bf = np.einsum("...ij,...j->...i", self.B.values, f.to_physical().values)
        rhs = self.Q.conj().T @ Bf.reshape(-1)
        c = scipy.linalg.lu_solve(self.lu, rhs)
        f_range = Field.from_flat(self.grid, self.Q @ c)
        f_null = Field.from_flat(self.grid, vec - self.Q @ c)
        return f_range, f_null

    def split_bd(self, f: Field):
        """f = f_range + f_null for the multiplier-on-the-left composition.

        f_range = B g with g in the range of the projection; f_null lies
        in the kernel of the symbol.
        """
        vec = f.flat()
        rhs = self.Q.conj().T @ vec
        c = scipy.linalg.lu_solve(self.lu, rhs)
        g = (self.Q @ c).reshape(self.grid.shape + (self.grid.channels,))
        f_range = Field.physical(
            self.grid, np.einsum("...ij,...j->...i", self.B.values, g)
        )
        f_null = Field.from_flat(self.grid, vec - f_range.values.reshape(-1))
        return f_range, f_null

    def split(self, T: LinearOperatorHandle, f: Field):
        if T.tag == "DB":
            return self.split_db(f)
        if T.tag == "BD":
            return self.split_bd(f)
        if T.tag == "D":
            p = p_operator(self.grid)
            f_range = p.apply(f)
            return f_range, f - f_range
        raise OperatorError(f"no range split for tag {T.tag}")


def range_splitter(T: LinearOperatorHandle) -> RangeSplitter:
    if T._split_cache is None:
        B = getattr(T, "multiplier_matrix", None)
        if B is None:
            eye = np.broadcast_to(
                np.eye(T.grid.channels, dtype=complex),
                T.grid.shape + (T.grid.channels, T.grid.channels),
            ).copy()
            B = TransformedB(T.grid, eye)
        T._split_cache = RangeSplitter(B)
    return T._split_cache


# ---------------------------------------------------------------------------
# off-diagonal decay probes
# ---------------------------------------------------------------------------


def torus_mask_distance(grid: GridSpec, mask_E: np.ndarray, mask_F: np.ndarray) -> float:
    """Minimal torus distance between two index sets."""
    coords = np.stack(grid.coordinates(), axis=-1)
    E = coords[mask_E].reshape(-1, grid.dim)
    F = coords[mask_F].reshape(-1, grid.dim)
    diff = np.abs(E[:, None, :] - F[None, :, :])
    diff = np.minimum(diff, 2 * np.pi - diff)
    return float(np.sqrt((diff**2).sum(axis=-1)).min())


@dataclasses.dataclass
class DecayEstimate:
    distances_over_t: np.ndarray
    norms: np.ndarray
    exponent: float
    saturated: bool
    distance: float


def _localized_norm(T, t, mask_E, mask_F, trials, rng, tol=1e-10) -> float:
    """Empirical norm of cutoff (I + i t T)^{-1} cutoff on random data."""
    grid = T.grid
    best = 0.0
    for _ in range(trials):
        vals = np.zeros(grid.shape + (grid.channels,), dtype=complex)
        noise = rng.standard_normal(vals.shape) + 1j * rng.standard_normal(vals.shape)
        vals[mask_F] = noise[mask_F]
        f = Field.physical(grid, vals)
        norm_f = np.linalg.norm(vals)
        if norm_f == 0:
            continue
        u = resolvent_solve(T, t, f, tol=tol)
        restricted = u.to_physical().values[mask_E]
        best = max(best, float(np.linalg.norm(restricted) / norm_f))
    return best


def _fit_exponent(ratios: np.ndarray, norms: np.ndarray) -> float:
    mask = norms > 1e-14
    if mask.sum() < 2:
        return float("inf")
    slope = np.polyfit(np.log(ratios[mask]), np.log(norms[mask]), 1)[0]
    return float(-slope)


def offdiag_probe(
    T: LinearOperatorHandle,
    t,
    mask_E: np.ndarray,
    mask_F: np.ndarray,
    trials: int = 8,
    rng: np.random.Generator | None = None,
) -> DecayEstimate:
    """Localization decay of the resolvent between disjoint grid regions.

    For each t, measures the empirical norm of the resolvent localized
    from F to E and fits a power law in 1 + dist(E, F) / t.  When t
    exceeds the period the torus wraps around and the decay saturates;
    this is flagged rather than fitted away.  The spectral band cutoff
    adds an oscillatory kernel floor of order 1/(t G^2); sweeps should
    stay above it (the distance sweep below keeps the floor fixed).
    """
    rng = rng or np.random.default_rng(0)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    d = torus_mask_distance(T.grid, mask_E, mask_F)
    norms = np.array([_localized_norm(T, tj, mask_E, mask_F, trials, rng) for tj in ts])
    ratios = 1.0 + d / ts
    saturated = bool(np.any(ts > 2 * np.pi))
    exponent = _fit_exponent(ratios, norms) if len(ts) >= 2 else float("nan")
    return DecayEstimate(
        distances_over_t=d / ts,
        norms=norms,
        exponent=exponent,
        saturated=saturated,
        distance=d,
    )


def offdiag_distance_sweep(
    T: LinearOperatorHandle,
    t: float,
    distances,
    trials: int = 8,
    rng: np.random.Generator | None = None,
    center_radius: float = np.pi / 16,
    shell_width: float = np.pi / 16,
) -> DecayEstimate:
    """Fixed-scale localization decay across a sweep of separations.

    Holds t fixed (so the resolvent amplitude and the truncation floor
    are common to all measurements) and moves an annular source shell
    away from a ball around the origin.
    """
    rng = rng or np.random.default_rng(0)
    grid = T.grid
    table = grid.torus_distance_table()
    mask_E = table <= center_radius
    norms, ratios, dists = [], [], []
    for d0 in np.atleast_1d(np.asarray(distances, dtype=float)):
        mask_F = (table >= d0) & (table <= d0 + shell_width)
        if not mask_F.any() or (mask_E & mask_F).any():
            continue
        d = torus_mask_distance(grid, mask_E, mask_F)
        norms.append(_localized_norm(T, t, mask_E, mask_F, trials, rng))
        ratios.append(1.0 + d / t)
        dists.append(d)
    norms = np.asarray(norms)
    ratios = np.asarray(ratios)
    return DecayEstimate(
        distances_over_t=np.asarray(dists) / t,
        norms=norms,
        exponent=_fit_exponent(ratios, norms),
        saturated=bool(t > 2 * np.pi),
        distance=float(max(dists, default=np.nan)),
    )
