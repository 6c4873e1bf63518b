import numpy as np
import pytest

import halfspace.bvp as bvp
from halfspace.bvp import (
    DatumError,
    FirstOrderSystem,
    TraceMapError,
    boundary_layer_representation_check,
    dirichlet_to_neumann,
    double_layer,
    embed_scalar,
    grad_single_layer,
    layer_duality_check,
    neumann_to_dirichlet,
    scalar_potential,
    single_layer,
    solve_dirichlet,
    solve_neumann,
    solve_regularity,
    spectral_split,
    tangential_gradient,
)
from halfspace.coefficients import (
    block_diagonal_coefficients,
    perturbation_of_identity,
)
from halfspace.grid import Field, TLadder, l2_norm, random_field
from halfspace.operators import p_operator

from conftest import band_limited_scalar


def scalar_norm(grid, f):
    return float(np.sqrt(grid.cell_volume) * np.linalg.norm(f))


# ---------------------------------------------------------------------------
# trace solvers against closed-form oracles
# ---------------------------------------------------------------------------


def test_regularity_flat_coefficients_poisson(identity_system_32):
    sys_ = identity_system_32
    grid = sys_.grid
    x = grid.coordinates()[0]
    f = -np.sin(x)  # tangential gradient of cos x
    sol = solve_regularity(sys_, f)
    h = sol.h.to_physical().values
    assert np.allclose(h[..., 0], -np.cos(x), atol=1e-10)
    assert np.allclose(h[..., 1], -np.sin(x), atol=1e-10)
    for t in (0.2, 1.0):
        F = sol.evaluate(t).to_physical().values
        assert np.allclose(F[..., 0], -np.exp(-t) * np.cos(x), atol=1e-10)
        assert np.allclose(F[..., 1], -np.exp(-t) * np.sin(x), atol=1e-10)
    assert sol.diagnostics["trace_residual"] <= 1e-8


def test_regularity_zero_datum(identity_system_32):
    sol = solve_regularity(identity_system_32, np.zeros(identity_system_32.grid.shape))
    assert l2_norm(sol.h) <= 1e-12


def test_regularity_block_diagonal_mode_oracle(g32):
    # constant block-diagonal coefficients: each mode solves a scalar
    # two-point ODE whose decaying branch has rate sqrt(d) |k|
    d = 2.3
    sys_ = FirstOrderSystem(block_diagonal_coefficients(g32, 1.0, d))
    x = g32.coordinates()[0]
    f = -np.sin(x)
    sol = solve_regularity(sys_, f)
    rate = np.sqrt(d)
    h = sol.h.to_physical().values
    assert np.allclose(h[..., 1], -np.sin(x), atol=1e-9)
    assert np.allclose(h[..., 0], -rate * np.cos(x), atol=1e-9)
    for t in (0.3, 1.1):
        F = sol.evaluate(t).to_physical().values
        decay = np.exp(-rate * t)
        assert np.allclose(F[..., 0], -rate * decay * np.cos(x), atol=1e-9)
        assert np.allclose(F[..., 1], -decay * np.sin(x), atol=1e-9)


def test_neumann_matches_regularity_for_flat(identity_system_32):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    sol_n = solve_neumann(identity_system_32, -np.cos(x))
    sol_r = solve_regularity(identity_system_32, -np.sin(x))
    assert l2_norm(sol_n.h - sol_r.h) <= 1e-9


def test_neumann_zero_datum(identity_system_32):
    sol = solve_neumann(identity_system_32, np.zeros(identity_system_32.grid.shape))
    assert l2_norm(sol.h) <= 1e-12


def test_neumann_random_near_identity(g32):
    rng = np.random.default_rng(17)
    sys_ = FirstOrderSystem(perturbation_of_identity(g32, rng, 0.1))
    g = band_limited_scalar(g32, rng)
    sol = solve_neumann(sys_, g)
    assert sol.diagnostics["trace_residual"] < 1e-8
    assert sol.diagnostics["trace_condition"] < 100


def test_solver_requires_mean_zero(identity_system_32):
    grid = identity_system_32.grid
    with pytest.raises(DatumError, match="zero mean"):
        solve_neumann(identity_system_32, np.ones(grid.shape))
    with pytest.raises(DatumError, match="zero mean"):
        solve_dirichlet(identity_system_32, np.ones(grid.shape))


def test_regularity_requires_gradient_datum(perturbed_system_2d):
    grid = perturbed_system_2d.grid
    rng = np.random.default_rng(3)
    raw = rng.standard_normal(grid.shape + (2,))
    raw -= raw.mean(axis=(0, 1))
    with pytest.raises(DatumError, match="gradient"):
        solve_regularity(perturbed_system_2d, raw)


def test_trace_condition_guard(identity_system_32, monkeypatch):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    monkeypatch.setattr(bvp, "TRACE_CONDITION_LIMIT", 0.5)
    with pytest.raises(TraceMapError, match="not solvable"):
        solve_regularity(identity_system_32, -np.sin(x))


# ---------------------------------------------------------------------------
# interior consistency
# ---------------------------------------------------------------------------


def test_equation_residual_bounds(perturbed_system_32):
    rng = np.random.default_rng(4)
    grid = perturbed_system_32.grid
    f = band_limited_scalar(grid, rng)
    sol = solve_neumann(perturbed_system_32, f)
    ladder = TLadder.logspaced(2.0**-4, 2.0**2, 8)
    assert sol.equation_residual(ladder) <= 1e-4
    for t in (0.1, 0.9):
        assert sol.equation_residual_at(t) <= 1e-6


def test_trace_continuity_monotone(perturbed_system_32):
    rng = np.random.default_rng(9)
    grid = perturbed_system_32.grid
    sol = solve_neumann(perturbed_system_32, band_limited_scalar(grid, rng))
    gaps = []
    for t in (0.5, 0.25, 0.125, 0.0625, 0.03125):
        gaps.append(l2_norm(sol.evaluate(t) - sol.h))
    for a, b in zip(gaps, gaps[1:]):
        assert b <= a * 1.05
    assert gaps[-1] < 0.2 * gaps[0]


def test_dirichlet_poisson_modes(identity_system_32):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    sol = solve_dirichlet(identity_system_32, np.cos(x))
    for t in (0.2, 1.0, 2.5):
        u = sol.scalar_value(t)
        assert np.allclose(u, np.exp(-t) * np.cos(x), atol=1e-10)
    assert sol.diagnostics["boundary_value_error"] <= 1e-8


def test_dirichlet_zero(identity_system_32):
    sol = solve_dirichlet(identity_system_32, np.zeros(identity_system_32.grid.shape))
    assert l2_norm(sol.h) <= 1e-12
    assert scalar_norm(identity_system_32.grid, sol.scalar_value(0.5)) <= 1e-12


def test_dirichlet_tent_diagnostic(perturbed_system_32):
    rng = np.random.default_rng(10)
    grid = perturbed_system_32.grid
    ladder = TLadder.logspaced(2.0**-5, 2.0**3, 2)
    sol = solve_dirichlet(perturbed_system_32, band_limited_scalar(grid, rng), ladder=ladder)
    assert sol.diagnostics["tent_norm_t_grad"] > 0


# ---------------------------------------------------------------------------
# boundary maps
# ---------------------------------------------------------------------------


def test_dtn_symbol_flat(identity_system_32):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    for k in (1, 2, 3):
        out = dirichlet_to_neumann(identity_system_32, np.cos(k * x))
        assert np.allclose(out, -k * np.cos(k * x), atol=1e-9 * k)


def test_dtn_ntd_inverse_pair(perturbed_system_32):
    rng = np.random.default_rng(12)
    grid = perturbed_system_32.grid
    f = band_limited_scalar(grid, rng)
    g = dirichlet_to_neumann(perturbed_system_32, f)
    back = neumann_to_dirichlet(perturbed_system_32, g)
    assert scalar_norm(grid, back - f) <= 1e-8 * scalar_norm(grid, f)


def test_dtn_adjoint_consistency(perturbed_system_32):
    # the boundary map of the adjoint coefficients is the conjugate
    # transpose of the boundary map on the mode basis
    sys_ = perturbed_system_32
    grid = sys_.grid
    adj = sys_.adjoint()
    x = grid.coordinates()[0]
    modes = [np.exp(1j * k * x) for k in (-3, -2, -1, 1, 2, 3)]
    M = np.zeros((len(modes), len(modes)), dtype=complex)
    Mstar = np.zeros_like(M)
    for j, f in enumerate(modes):
        out = dirichlet_to_neumann(sys_, f)
        out_star = dirichlet_to_neumann(adj, f)
        for i, g in enumerate(modes):
            M[i, j] = grid.cell_volume * np.vdot(g, out)
            Mstar[i, j] = grid.cell_volume * np.vdot(g, out_star)
    assert np.abs(M - Mstar.conj().T).max() <= 1e-8 * np.abs(M).max()


def test_trace_inversion_identity_on_hardy_basis(perturbed_system_32):
    # reconstructing from the tangential trace returns the same vector:
    # the inversion composed with the trace is the identity on the subspace
    rng = np.random.default_rng(14)
    sys_ = perturbed_system_32
    Q = sys_.hardy("DB").plus
    coeff = rng.standard_normal(Q.shape[1]) + 1j * rng.standard_normal(Q.shape[1])
    h = Field.from_flat(sys_.grid, Q @ coeff)
    f = h.to_physical().values[..., 1:]
    sol = solve_regularity(sys_, f)
    assert l2_norm(sol.h - h) <= 1e-8 * l2_norm(h)


# ---------------------------------------------------------------------------
# spectral split
# ---------------------------------------------------------------------------


def test_spectral_split_single_mode(identity_system_32):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    vals = np.zeros(grid.shape + (2,), dtype=complex)
    vals[..., 0] = np.exp(1j * x)
    vals[..., 1] = -1j * np.exp(1j * x)
    h = Field.physical(grid, vals)
    hp, hm = spectral_split(identity_system_32, h)
    assert l2_norm(hp - h) <= 1e-10 * l2_norm(h)
    assert l2_norm(hm) <= 1e-10 * l2_norm(h)


def test_spectral_split_constant(perturbed_system_32):
    grid = perturbed_system_32.grid
    h = Field.physical(grid, np.ones(grid.shape + (2,), dtype=complex))
    hp, hm = spectral_split(perturbed_system_32, h)
    assert l2_norm(hp) <= 1e-12
    assert l2_norm(hm) <= 1e-12


def test_spectral_split_sum_and_lower_bound(perturbed_system_32):
    rng = np.random.default_rng(15)
    grid = perturbed_system_32.grid
    for _ in range(5):
        h = random_field(grid, rng)
        Ph = p_operator(grid).apply(h)
        hp, hm = spectral_split(perturbed_system_32, h)
        assert l2_norm(hp + hm - Ph) <= 1e-8 * l2_norm(h)
        # parallelogram lower bound with constant two
        assert l2_norm(hp) ** 2 + l2_norm(hm) ** 2 >= 0.5 * l2_norm(Ph) ** 2 * (1 - 1e-12)


def test_hardy_dimensions(perturbed_system_32):
    basis = perturbed_system_32.hardy("DB")
    grid = perturbed_system_32.grid
    assert basis.dim_plus + basis.dim_minus == 2 * (grid.points - 1)
    assert basis.dim_plus == basis.dim_minus


# ---------------------------------------------------------------------------
# layer potentials
# ---------------------------------------------------------------------------


def test_single_layer_flat_symbol(identity_system_32):
    # flat coefficients: the layer kernel is exponential with the mode
    # modulus, normalized by twice the modulus; signs follow the jump
    # convention, making this the negative of the classical kernel
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    f = np.exp(1j * x)
    for t in (0.4, 1.0):
        out = single_layer(identity_system_32, t, f)
        expected = -np.exp(-t) / 2.0 * np.exp(1j * x)
        assert np.allclose(out, expected, atol=1e-12)
        out_m = single_layer(identity_system_32, -t, f)
        assert np.allclose(out_m, expected, atol=1e-12)


def test_layer_jump_relations_random(g32):
    rng = np.random.default_rng(18)
    for trial in range(3):
        sys_ = FirstOrderSystem(perturbation_of_identity(g32, rng, 0.2))
        f = band_limited_scalar(g32, rng)
        w = embed_scalar(g32, f).values
        gp = grad_single_layer(sys_, 0.0, f, side="+").to_physical().values
        gm = grad_single_layer(sys_, 0.0, f, side="-").to_physical().values
        assert np.linalg.norm(gp - gm - w) <= 1e-8 * np.linalg.norm(w)
        dp = double_layer(sys_, 0.0, f, side="+")
        dm = double_layer(sys_, 0.0, f, side="-")
        assert np.linalg.norm(dp - dm + f) <= 1e-8 * np.linalg.norm(f)


def test_layer_limits_attained(perturbed_system_32):
    rng = np.random.default_rng(19)
    grid = perturbed_system_32.grid
    f = band_limited_scalar(grid, rng)
    lim = grad_single_layer(perturbed_system_32, 0.0, f, side="+")
    gaps = [
        l2_norm(grad_single_layer(perturbed_system_32, t, f) - lim)
        for t in (0.1, 0.01, 0.001)
    ]
    assert gaps[2] < gaps[1] < gaps[0]


def test_layer_requires_side_at_zero(identity_system_32):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    with pytest.raises(DatumError, match="side"):
        single_layer(identity_system_32, 0.0, np.cos(x))


def test_layer_rejects_nonzero_mean(identity_system_32):
    grid = identity_system_32.grid
    with pytest.raises(DatumError, match="zero mean"):
        single_layer(identity_system_32, 0.5, np.ones(grid.shape))


def test_layer_duality_identity_selfadjoint(identity_system_32):
    grid = identity_system_32.grid
    rng = np.random.default_rng(20)
    f = band_limited_scalar(grid, rng)
    g = band_limited_scalar(grid, rng)
    rs, rd = layer_duality_check(identity_system_32, 0.3, f, g)
    assert rs < 1e-10 and rd < 1e-10


def test_layer_duality_random(perturbed_system_32):
    rng = np.random.default_rng(22)
    grid = perturbed_system_32.grid
    f = band_limited_scalar(grid, rng)
    g = band_limited_scalar(grid, rng)
    worst = 0.0
    for t in TLadder.logspaced(0.125, 2.0, 1).t:
        rs, rd = layer_duality_check(perturbed_system_32, t, f, g)
        worst = max(worst, rs, rd)
    assert worst <= 1e-6


def test_representation_poisson(identity_system_32):
    grid = identity_system_32.grid
    x = grid.coordinates()[0]
    sol = solve_dirichlet(identity_system_32, np.cos(x))
    assert boundary_layer_representation_check(identity_system_32, sol) <= 1e-8


def test_representation_random_coefficients(perturbed_system_32):
    rng = np.random.default_rng(23)
    grid = perturbed_system_32.grid
    for solver, datum in (
        (solve_dirichlet, band_limited_scalar(grid, rng)),
        (solve_neumann, band_limited_scalar(grid, rng)),
    ):
        sol = solver(perturbed_system_32, datum)
        assert boundary_layer_representation_check(perturbed_system_32, sol) <= 1e-6


def test_representation_zero_solution(identity_system_32):
    sol = solve_dirichlet(identity_system_32, np.zeros(identity_system_32.grid.shape))
    assert boundary_layer_representation_check(identity_system_32, sol) == 0.0


# ---------------------------------------------------------------------------
# scalar/tangential helpers
# ---------------------------------------------------------------------------


def test_gradient_potential_roundtrip(g32, rng):
    f = band_limited_scalar(g32, rng)
    grad = tangential_gradient(g32, f)
    back = scalar_potential(g32, grad)
    assert np.allclose(back, f, atol=1e-12 * np.abs(f).max())


def test_gradient_potential_roundtrip_2d(g8x2, rng):
    f = band_limited_scalar(g8x2, rng)
    grad = tangential_gradient(g8x2, f)
    back = scalar_potential(g8x2, grad)
    assert np.allclose(back, f, atol=1e-12 * np.abs(f).max())


def test_two_dimensional_poisson(perturbed_system_2d):
    # full pipeline touch at boundary dimension two
    rng = np.random.default_rng(29)
    grid = perturbed_system_2d.grid
    f = band_limited_scalar(grid, rng, decay=2.0)
    sol = solve_dirichlet(perturbed_system_2d, f)
    assert sol.diagnostics["trace_residual"] <= 1e-8
    assert sol.diagnostics["boundary_value_error"] <= 1e-8
    assert boundary_layer_representation_check(perturbed_system_2d, sol) <= 1e-6


def test_layer_jumps_far_from_identity(g32):
    # the jumps are projection-sum identities, valid for any accretive
    # coefficients, not only near-identity ones
    rng = np.random.default_rng(31)
    base = perturbation_of_identity(g32, rng, 0.45)
    from halfspace.coefficients import CoefficientMatrix

    A = CoefficientMatrix(g32, np.exp(0.4j) * base.values)
    sys_ = FirstOrderSystem(A)
    assert sys_.report.kappa > 0
    assert sys_.report.omega > 0.3
    f = band_limited_scalar(g32, rng)
    w = embed_scalar(g32, f).values
    gp = grad_single_layer(sys_, 0.0, f, side="+").to_physical().values
    gm = grad_single_layer(sys_, 0.0, f, side="-").to_physical().values
    assert np.linalg.norm(gp - gm - w) <= 1e-8 * np.linalg.norm(w)
    dp = double_layer(sys_, 0.0, f, side="+")
    dm = double_layer(sys_, 0.0, f, side="-")
    assert np.linalg.norm(dp - dm + f) <= 1e-8 * np.linalg.norm(f)
