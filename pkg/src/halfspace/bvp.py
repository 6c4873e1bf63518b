"""Boundary value problems at exponent two and boundary layer potentials.

The trace space of conormal gradients of decaying solutions is the
positive spectral subspace of the first-order composition.  Solvers
invert the scalar or tangential trace map on an explicit orthonormal
basis of that subspace by least squares, reporting the residual and the
condition number rather than assuming invertibility.

Scalar boundary data are arrays of shape grid_shape + (m,); the scalar
slot of every returned interior quantity is the mean-zero
representative, which is the torus realization of the solution being
determined modulo constants.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import calculus as fc
from .calculus import eigen_data
from .coefficients import (
    AccretivityReport,
    CoefficientMatrix,
    accretivity_estimate,
    hat_transform,
)
from .grid import Field, GridSpec, TLadder, l2_norm, sobolev_norm
from .operators import (
    LinearOperatorHandle,
    bd_operator,
    db_operator,
    inverse_d_operator,
    p_operator,
)

__all__ = [
    "FirstOrderSystem",
    "SpectralHardyBasis",
    "BVPSolution",
    "TraceMapError",
    "spectral_split",
    "solve_regularity",
    "solve_neumann",
    "solve_dirichlet",
    "dirichlet_to_neumann",
    "neumann_to_dirichlet",
    "grad_single_layer",
    "single_layer",
    "double_layer",
    "layer_duality_check",
    "boundary_layer_representation_check",
    "tangential_gradient",
    "scalar_potential",
    "embed_scalar",
]

TRACE_CONDITION_LIMIT = 1e6


class TraceMapError(RuntimeError):
    """Trace map numerically not invertible; the problem may be unsolvable."""


class DatumError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar and tangential boundary data helpers
# ---------------------------------------------------------------------------


def _as_scalar_data(grid: GridSpec, f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape == grid.shape and grid.system_size == 1:
        f = f[..., None]
    if f.shape != grid.shape + (grid.system_size,):
        raise DatumError(
            f"scalar datum shape {f.shape}, expected {grid.shape + (grid.system_size,)}"
        )
    return f


def _squeeze_channels(arr: np.ndarray) -> np.ndarray:
    """Drop a singleton channel axis so shapes match scalar-style inputs."""
    return arr[..., 0] if arr.shape[-1] == 1 else arr


def _as_tangential_data(grid: GridSpec, f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    nt = grid.system_size * grid.dim
    if f.shape == grid.shape and nt == 1:
        f = f[..., None]
    if f.shape != grid.shape + (nt,):
        raise DatumError(
            f"tangential datum shape {f.shape}, expected {grid.shape + (nt,)}"
        )
    return f


def _require_mean_zero(grid: GridSpec, data: np.ndarray, what: str):
    mean = data.mean(axis=tuple(range(grid.dim)))
    if np.linalg.norm(mean) > 1e-10 * max(np.linalg.norm(data), 1e-300):
        raise DatumError(f"{what} must have zero mean on the torus")


def embed_scalar(grid: GridSpec, f) -> Field:
    """[f; 0]: scalar datum in the scalar slot, zero tangential slot."""
    f = _as_scalar_data(grid, f)
    vals = np.zeros(grid.shape + (grid.channels,), dtype=complex)
    vals[..., : grid.system_size] = f
    return Field.physical(grid, vals)


def tangential_gradient(grid: GridSpec, f) -> np.ndarray:
    """Componentwise spectral gradient of scalar data, curl-free by construction."""
    f = _as_scalar_data(grid, f)
    axes = tuple(range(grid.dim))
    fhat = np.fft.fftn(f, axes=axes, norm="forward")
    freqs = grid.frequencies()
    m = grid.system_size
    out = np.zeros(grid.shape + (m * grid.dim,), dtype=complex)
    for j in range(grid.dim):
        out[..., j * m : (j + 1) * m] = 1j * freqs[..., j][..., None] * fhat
    return _squeeze_channels(np.fft.ifftn(out, axes=axes, norm="forward"))


def scalar_potential(grid: GridSpec, g) -> np.ndarray:
    """Mean-zero scalar data whose spectral gradient matches g.

    Exact for curl-free g; in general the per-frequency least-squares
    projection onto gradients.
    """
    g = _as_tangential_data(grid, g)
    axes = tuple(range(grid.dim))
    ghat = np.fft.fftn(g, axes=axes, norm="forward")
    freqs = grid.frequencies()
    kn2 = (freqs**2).sum(axis=-1)
    m = grid.system_size
    fhat = np.zeros(grid.shape + (m,), dtype=complex)
    for j in range(grid.dim):
        fhat += -1j * freqs[..., j][..., None] * ghat[..., j * m : (j + 1) * m]
    nz = kn2 > 0
    fhat[nz] = fhat[nz] / kn2[nz][..., None]
    fhat[~nz] = 0.0
    return _squeeze_channels(np.fft.ifftn(fhat, axes=axes, norm="forward"))


def curl_free_residual(grid: GridSpec, g) -> float:
    """Relative distance of tangential data to the gradients, per frequency."""
    g = _as_tangential_data(grid, g)
    grad = _as_tangential_data(grid, tangential_gradient(grid, scalar_potential(grid, g)))
    num = np.linalg.norm(grad - g)
    den = max(np.linalg.norm(g), 1e-300)
    return float(num / den)


def _scalar_l2(grid: GridSpec, f) -> float:
    return float(np.sqrt(grid.cell_volume) * np.linalg.norm(f))


# ---------------------------------------------------------------------------
# system context: coefficients, certificate, cached operators and bases
# ---------------------------------------------------------------------------


class SpectralHardyBasis:
    """Orthonormal bases of the two spectral subspaces of one composition."""

    def __init__(self, T: LinearOperatorHandle):
        ed = eigen_data(T)
        null = ed.null_mask()
        plus = (~null) & (ed.lam.real > 0)
        minus = (~null) & (ed.lam.real < 0)
        self.plus, _ = np.linalg.qr(ed.V[:, plus])
        self.minus, _ = np.linalg.qr(ed.V[:, minus])
        self.dim_plus = int(plus.sum())
        self.dim_minus = int(minus.sum())
        self.dim_null = int(null.sum())
        grid = T.grid
        range_dim = 2 * grid.system_size * (grid.points**grid.dim - 1)
        if self.dim_plus + self.dim_minus != range_dim:
            raise TraceMapError(
                f"spectral subspaces span {self.dim_plus + self.dim_minus}, "
                f"expected range dimension {range_dim}"
            )


class FirstOrderSystem:
    """Coefficients, the transformed multiplier, its certificate and operators.

    Builds the accretivity certificate up front (it gates everything
    downstream) and caches dense eigendecompositions and Hardy bases.
    """

    def __init__(self, A: CoefficientMatrix, report: AccretivityReport | None = None):
        self.A = A
        self.grid = A.grid
        self.B = hat_transform(A)
        self.report = report if report is not None else accretivity_estimate(self.B)
        self.db = db_operator(self.B)
        self.bd = bd_operator(self.B)
        self.db.accretivity_angle = self.report.omega
        self.bd.accretivity_angle = self.report.omega
        self._hardy = {}
        self._adjoint = None

    @classmethod
    def from_coefficients(cls, A) -> "FirstOrderSystem":
        return A if isinstance(A, cls) else cls(A)

    def hardy(self, which: str) -> SpectralHardyBasis:
        if which not in self._hardy:
            self._hardy[which] = SpectralHardyBasis(
                self.db if which == "DB" else self.bd
            )
        return self._hardy[which]

    def adjoint(self) -> "FirstOrderSystem":
        if self._adjoint is None:
            self._adjoint = FirstOrderSystem(self.A.adjoint())
        return self._adjoint

    def semigroup_db(self, t: float, h: Field) -> Field:
        return fc.semigroup(self.db, t, h)

    def semigroup_bd(self, t: float, h: Field) -> Field:
        return fc.semigroup(self.bd, t, h)


def spectral_split(system, h: Field):
    """Split the range component of h into the two spectral pieces.

    The projection onto the closed range is applied first, so the sum of
    the returned pieces is exactly that projection of h.
    """
    sys_ = FirstOrderSystem.from_coefficients(system)
    Ph = p_operator(sys_.grid).apply(h)
    hp = fc.spectral_projection(sys_.db, +1, Ph)
    hm = fc.spectral_projection(sys_.db, -1, Ph)
    return hp, hm


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class BVPSolution:
    """Problem statement and solution: kind, datum, boundary trace, evaluators.

    The trace h lies in the span of the positive spectral basis.
    evaluate(t) returns the interior conormal gradient; scalar_value(t)
    the mean-zero interior scalar potential.  diagnostics carries the
    trace residual, the trace-map condition number and norm reports.
    """

    kind: str
    system: FirstOrderSystem
    h: Field
    diagnostics: dict
    datum: np.ndarray | None = None

    def evaluate(self, t: float) -> Field:
        return self.system.semigroup_db(t, self.h)

    def _potential_vector(self) -> Field:
        """v with D v = -h in the positive subspace of the reversed composition."""
        if "_v0" not in self.diagnostics:
            sys_ = self.system
            Qp = sys_.hardy("BD").plus
            M = _d_dense(sys_.grid) @ Qp
            c, *_ = np.linalg.lstsq(M, -self.h.flat(), rcond=None)
            v0 = Field.from_flat(sys_.grid, Qp @ c)
            resid = np.linalg.norm(M @ c + self.h.flat()) / max(
                np.linalg.norm(self.h.flat()), 1e-300
            )
            self.diagnostics["_v0"] = v0
            self.diagnostics["potential_residual"] = float(resid)
        return self.diagnostics["_v0"]

    def scalar_value(self, t: float) -> np.ndarray:
        """Interior scalar potential: mean-zero scalar slot of the reversed flow."""
        v0 = self._potential_vector()
        vt = self.system.semigroup_bd(t, v0)
        vt = p_operator(self.system.grid).apply(vt).to_physical()
        return _squeeze_channels(vt.values[..., : self.system.grid.system_size].copy())

    def scalar_trace(self) -> np.ndarray:
        """Mean-zero boundary value of the scalar potential."""
        grid = self.system.grid
        m = grid.system_size
        return scalar_potential(grid, self.h.to_physical().values[..., m:])

    def conormal_trace(self) -> np.ndarray:
        """Scalar slot of the boundary conormal gradient."""
        m = self.system.grid.system_size
        return _squeeze_channels(self.h.to_physical().values[..., :m].copy())

    def equation_residual(self, ladder: TLadder) -> float:
        """First-order evolution residual from ladder-resolution differences.

        Five-point fourth-order differencing in log t against the applied
        composition, maximized over interior ladder scales.
        """
        fields = [self.evaluate(t).to_physical().values for t in ladder.t]
        u = np.log(ladder.t)
        du = float(np.diff(u).mean())
        worst = 0.0
        for j in range(2, len(ladder.t) - 2):
            d_u = (
                fields[j - 2] - 8 * fields[j - 1] + 8 * fields[j + 1] - fields[j + 2]
            ) / (12 * du)
            Tf = self.system.db.apply(
                Field.physical(self.system.grid, fields[j])
            ).to_physical().values
            target = ladder.t[j] * Tf
            num = np.linalg.norm(d_u + target)
            den = max(np.linalg.norm(target), 1e-300)
            worst = max(worst, float(num / den))
        return worst

    def equation_residual_at(self, t: float, rel_delta: float = 1e-4) -> float:
        """Pointwise evolution residual with a tight centered difference."""
        dt = rel_delta * t
        fp = self.evaluate(t + dt).to_physical().values
        fm = self.evaluate(t - dt).to_physical().values
        ddt = (fp - fm) / (2 * dt)
        Tf = self.system.db.apply(self.evaluate(t)).to_physical().values
        return float(np.linalg.norm(ddt + Tf) / max(np.linalg.norm(Tf), 1e-300))


_D_DENSE_CACHE: dict = {}


def _d_dense(grid: GridSpec) -> np.ndarray:
    key = (grid.dim, grid.points, grid.system_size)
    if key not in _D_DENSE_CACHE:
        from .operators import assemble_dense, d_operator

        _D_DENSE_CACHE[key] = assemble_dense(d_operator(grid))
    return _D_DENSE_CACHE[key]


def _solve_trace(system: FirstOrderSystem, datum_field: np.ndarray, slot: str, kind: str):
    """Least squares for h in the positive subspace with prescribed slot."""
    grid = system.grid
    Qp = system.hardy("DB").plus
    m = grid.system_size
    dim_grid = grid.points**grid.dim
    Q = Qp.reshape(grid.shape + (grid.channels, Qp.shape[1]))
    if slot == "scalar":
        rows = Q[..., :m, :].reshape(dim_grid * m, -1)
        rhs = datum_field.reshape(-1)
    else:
        rows = Q[..., m:, :].reshape(dim_grid * m * grid.dim, -1)
        rhs = datum_field.reshape(-1)
    sv = np.linalg.svd(rows, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if condition > TRACE_CONDITION_LIMIT:
        problem = "regularity" if slot == "tangential" else "neumann"
        raise TraceMapError(
            f"{problem} problem numerically not solvable at exponent two: "
            f"trace-map condition number {condition:.3e}"
        )
    c, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    h = Field.from_flat(grid, Qp @ c)
    fitted = rows @ c
    residual = float(
        np.linalg.norm(fitted - rhs) / max(np.linalg.norm(rhs), 1e-300)
    )
    diagnostics = {
        "trace_residual": residual,
        "trace_condition": condition,
        "hardy_dim": Qp.shape[1],
        "datum_l2": _scalar_l2(grid, datum_field),
        "trace_l2": l2_norm(h),
    }
    try:
        diagnostics["datum_sobolev_-1/2"] = sobolev_norm(
            _embed_datum(grid, datum_field, slot), -0.5
        )
    except ValueError:
        pass
    return BVPSolution(
        kind=kind, system=system, h=h, diagnostics=diagnostics, datum=datum_field
    )


def _embed_datum(grid: GridSpec, datum: np.ndarray, slot: str) -> Field:
    vals = np.zeros(grid.shape + (grid.channels,), dtype=complex)
    m = grid.system_size
    if slot == "scalar":
        vals[..., :m] = datum
    else:
        vals[..., m:] = datum
    return Field.physical(grid, vals)


def solve_regularity(system, f) -> BVPSolution:
    """Prescribe the tangential gradient at the boundary.

    f must be mean-zero and curl-free per system component; the solution
    trace h has tangential slot f and the interior conormal gradient is
    the decay semigroup applied to h.
    """
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    f = _as_tangential_data(grid, f)
    _require_mean_zero(grid, f, "regularity datum")
    curl = curl_free_residual(grid, f)
    if curl > 1e-8:
        raise DatumError(
            f"regularity datum is not a discrete gradient (curl residual {curl:.2e})"
        )
    return _solve_trace(sys_, f, "tangential", "regularity")


def solve_neumann(system, g) -> BVPSolution:
    """Prescribe the conormal derivative (scalar slot) at the boundary."""
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    g = _as_scalar_data(grid, g)
    _require_mean_zero(grid, g, "neumann datum")
    return _solve_trace(sys_, g, "scalar", "neumann")


def solve_dirichlet(system, f, ladder: TLadder | None = None) -> BVPSolution:
    """Prescribe the boundary value; solved as regularity for its gradient.

    The interior scalar potential is recovered from the reversed-order
    flow, normalized mean-zero.  A square-function report of the scaled
    conormal gradient is attached when a ladder is supplied.
    """
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    f = _as_scalar_data(grid, f)
    _require_mean_zero(grid, f, "dirichlet datum")
    grad = tangential_gradient(grid, f)
    sol = _solve_trace(sys_, grad, "tangential", "dirichlet")
    u0 = sol.scalar_value(0.0)
    sol.diagnostics["boundary_value_error"] = _scalar_l2(
        grid, u0 - _squeeze_channels(f)
    ) / max(_scalar_l2(grid, f), 1e-300)
    if ladder is not None:
        from .tent import TentField, tent_norm

        fields = [sol.evaluate(t) * t for t in ladder.t]
        sol.diagnostics["tent_norm_t_grad"] = tent_norm(
            TentField.from_fields(ladder, fields), 2.0
        )
    return sol


def dirichlet_to_neumann(system, f) -> np.ndarray:
    """Boundary map from the potential value to its conormal derivative."""
    sys_ = FirstOrderSystem.from_coefficients(system)
    grad = tangential_gradient(sys_.grid, _as_scalar_data(sys_.grid, f))
    sol = solve_regularity(sys_, grad)
    return sol.conormal_trace()


def neumann_to_dirichlet(system, g) -> np.ndarray:
    """Boundary map from the conormal derivative back to the potential value."""
    sys_ = FirstOrderSystem.from_coefficients(system)
    sol = solve_neumann(sys_, g)
    return sol.scalar_trace()


# ---------------------------------------------------------------------------
# boundary layer potentials
# ---------------------------------------------------------------------------


def _resolve_side(t: float, side) -> int:
    if t != 0:
        return +1 if t > 0 else -1
    if side in (+1, "+", "plus"):
        return +1
    if side in (-1, "-", "minus"):
        return -1
    raise DatumError("layer potentials at t = 0 need side='+' or side='-'")


def _decaying_extension_spec(t: float, sgn: int) -> fc.HolomorphicFunctionSpec:
    """exp(-t z) on the spectral half selected by sgn.

    For t of the matching sign this decays into the corresponding
    half-space; at t = 0 it is the one-sided boundary limit.
    """
    if sgn > 0:
        return fc.custom(
            0.0,
            0.0,
            lambda z, _t=t: np.exp(-_t * z) * (z.real > 0),
            0.0,
            name=f"exp(-{t:g}z)chi+",
        )
    return fc.custom(
        0.0,
        0.0,
        lambda z, _t=t: np.exp(-_t * z) * (z.real < 0),
        0.0,
        name=f"exp(-{t:g}z)chi-",
    )


def grad_single_layer(system, t: float, f, side=None) -> Field:
    """Conormal gradient of the single layer at height t.

    Positive heights use the decaying extension on the positive spectral
    half; negative heights the complementary half with a sign flip.  At
    t = 0 pass side='+' or '-' for the exact one-sided boundary limit.
    """
    sgn = _resolve_side(t, side)
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    f = _as_scalar_data(grid, f)
    _require_mean_zero(grid, f, "single layer density")
    w = embed_scalar(grid, f)
    out = fc.apply_calculus(_decaying_extension_spec(t, sgn), sys_.db, w, path="eigen")
    return out if sgn > 0 else -out


def single_layer(system, t: float, f, side=None) -> np.ndarray:
    """Single layer potential, mean-zero scalar data.

    The symbol inverse on the range integrates the conormal gradient;
    the zero mode is excluded, realizing the potential modulo constants.
    """
    sgn = _resolve_side(t, side)
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    f = _as_scalar_data(grid, f)
    _require_mean_zero(grid, f, "single layer density")
    w = embed_scalar(grid, f)
    flow = fc.apply_calculus(_decaying_extension_spec(t, sgn), sys_.db, w, path="eigen")
    lifted = inverse_d_operator(grid).apply(flow).to_physical()
    scalar = _squeeze_channels(lifted.values[..., : grid.system_size])
    return -scalar if sgn > 0 else scalar.copy()


def double_layer(system, t: float, f, side=None) -> np.ndarray:
    """Double layer potential.

    Applies the reversed-order flow to the embedded datum, projects onto
    the closed range (which removes the zero mode) and reads the scalar
    slot; signs follow the jump convention.
    """
    sgn = _resolve_side(t, side)
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    f = _as_scalar_data(grid, f)
    _require_mean_zero(grid, f, "double layer density")
    w = embed_scalar(grid, f)
    flow = fc.apply_calculus(_decaying_extension_spec(t, sgn), sys_.bd, w, path="eigen")
    projected = p_operator(grid).apply(flow).to_physical()
    scalar = _squeeze_channels(projected.values[..., : grid.system_size])
    return -scalar if sgn > 0 else scalar.copy()


def conormal_single_layer(system, t: float, f, side=None) -> np.ndarray:
    """Scalar slot of the conormal gradient of the single layer."""
    sys_ = FirstOrderSystem.from_coefficients(system)
    grad = grad_single_layer(sys_, t, f, side=side).to_physical()
    return _squeeze_channels(grad.values[..., : sys_.grid.system_size].copy())


def _scalar_inner(grid: GridSpec, u, v) -> complex:
    """Sesquilinear boundary pairing, conjugate-linear in the first slot."""
    return complex(grid.cell_volume * np.vdot(u, v))


def layer_duality_check(system, t: float, f, g):
    """Residuals of the two adjoint identities between the layers.

    Pairs the single layer of the system at height t against the adjoint
    system at height -t, and the double layer against the conormal
    derivative of the adjoint single layer.  Both are identities of the
    calculus; only quadrature and eigensolver noise remain.
    """
    if t == 0:
        raise DatumError("duality check needs t != 0")
    sys_ = FirstOrderSystem.from_coefficients(system)
    adj = sys_.adjoint()
    grid = sys_.grid
    f = _as_scalar_data(grid, f)
    g = _as_scalar_data(grid, g)
    _require_mean_zero(grid, f, "density")
    _require_mean_zero(grid, g, "density")

    Sf = single_layer(sys_, t, f)
    Sg_adj = single_layer(adj, -t, g)
    lhs1 = _scalar_inner(grid, g, Sf)
    rhs1 = _scalar_inner(grid, Sg_adj, f)
    scale1 = max(abs(lhs1), abs(rhs1), 1e-300)
    res_single = abs(lhs1 - rhs1) / scale1

    Df = double_layer(sys_, t, f)
    conormal_adj = conormal_single_layer(adj, -t, g)
    lhs2 = _scalar_inner(grid, g, Df)
    rhs2 = _scalar_inner(grid, conormal_adj, f)
    scale2 = max(abs(lhs2), abs(rhs2), 1e-300)
    res_double = abs(lhs2 - rhs2) / scale2
    return res_single, res_double


def boundary_layer_representation_check(
    system, solution: BVPSolution, ladder: TLadder | None = None
) -> float:
    """Largest relative defect of the interior value against the two layers.

    The interior scalar potential should equal the single layer of its
    conormal trace minus the double layer of its boundary value, height
    by height.
    """
    sys_ = FirstOrderSystem.from_coefficients(system)
    grid = sys_.grid
    if ladder is None:
        ladder = TLadder.logspaced(2.0**-6, 2.0**2, per_octave=1)
    conormal0 = solution.conormal_trace()
    value0 = solution.scalar_trace()
    worst = 0.0
    for t in ladder.t:
        u_t = solution.scalar_value(t)
        rep = single_layer(sys_, t, conormal0) - double_layer(sys_, t, value0)
        scale = max(
            _scalar_l2(grid, u_t), _scalar_l2(grid, rep), 1e-12 * _scalar_l2(grid, value0)
        )
        worst = max(worst, _scalar_l2(grid, u_t - rep) / max(scale, 1e-300))
    return worst
