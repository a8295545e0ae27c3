"""Tests for the spectral core: transforms, multipliers, products, identities."""
import itertools

import numpy as np
import pytest

from fieldgen import embed_field, int_freq_index, random_divfree, random_field, random_vector
from gaugewave.spectral import (
    Grid,
    SpectralField,
    VectorField,
    check_current_projection_identity,
    check_gradient_coupling_identity,
    curl,
    dealiased_product,
    divergence,
    grad_norm,
    gradient,
    h1dot_norm,
    helmholtz_split,
    inner,
    integral,
    inv_laplacian,
    inv_modulus,
    l2_norm,
    laplacian,
    null_form,
    partial_deriv,
    project_df,
    riesz,
    zero_mean,
)


def fd_partial(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order centered finite difference on periodic samples."""
    p1 = np.roll(values, -1, axis=axis)
    m1 = np.roll(values, 1, axis=axis)
    p2 = np.roll(values, -2, axis=axis)
    m2 = np.roll(values, 2, axis=axis)
    return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)


def convolve_banded(grid: Grid, f: SpectralField, g: SpectralField) -> np.ndarray:
    """Brute-force convolution of retained modes, truncated to the band."""
    n, dim = grid.n, grid.dim
    idx = int_freq_index(n)
    half = n // 2 - 1
    out = np.zeros(grid.shape, dtype=complex)
    slots = list(itertools.product(range(n), repeat=dim))
    for a in slots:
        ca = f.coeffs[a]
        if ca == 0.0:
            continue
        ka = np.array([idx[i] for i in a])
        for b in slots:
            cb = g.coeffs[b]
            if cb == 0.0:
                continue
            kt = ka + np.array([idx[i] for i in b])
            if np.all(np.abs(kt) <= half):
                out[tuple(kt % n)] += ca * cb
    return out


class TestGrid:
    def test_validation(self):
        """Bad dimensions, odd or tiny n, and nonpositive boxes are rejected."""
        with pytest.raises(ValueError):
            Grid(4, 16, 1.0)
        with pytest.raises(ValueError):
            Grid(2, 15, 1.0)
        with pytest.raises(ValueError):
            Grid(2, 6, 1.0)
        with pytest.raises(ValueError):
            Grid(3, 16, 0.0)

    def test_wavenumbers(self):
        """Wavenumber lattice is (2 pi / L) times the signed integer index."""
        g = Grid(2, 8, 4.0)
        k0 = g.k[0][:, 0]
        expect = (2.0 * np.pi / 4.0) * np.array([0, 1, 2, 3, -4, -3, -2, -1], dtype=float)
        assert np.allclose(k0, expect, rtol=0, atol=1e-15)

    def test_active_mask_excludes_nyquist(self):
        """The retained band drops index n/2 on every axis."""
        g = Grid(2, 8, 1.0)
        assert not g.active[4, 0]
        assert not g.active[0, 4]
        assert g.active[3, 3]
        assert int(np.sum(~g.active)) == 8 * 8 - 7 * 7

    def test_kmax(self):
        """Largest retained |k| is sqrt(dim) * (2 pi / L) * (n/2 - 1)."""
        g = Grid(2, 8, 2.0 * np.pi)
        assert g.kmax == pytest.approx(3.0 * np.sqrt(2.0), rel=0, abs=1e-14)
        g3 = Grid(3, 16, 2.0 * np.pi)
        assert g3.kmax == pytest.approx(7.0 * np.sqrt(3.0), rel=0, abs=1e-13)

    def test_equality_and_hash(self):
        """Grids compare by (dim, n, box length)."""
        assert Grid(2, 8, 1.0) == Grid(2, 8, 1.0)
        assert Grid(2, 8, 1.0) != Grid(2, 8, 2.0)
        assert hash(Grid(3, 8, 1.5)) == hash(Grid(3, 8, 1.5))


class TestSpectralField:
    def test_roundtrip(self):
        """values -> coefficients -> values is the identity for banded data."""
        g = Grid(2, 16, 3.0)
        rng = np.random.default_rng(11)
        f = random_field(g, rng, real=True)
        back = SpectralField.from_values(g, f.values())
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-14

    def test_real_field_values_are_real(self):
        """Hermitian coefficients give real samples and a real dtype."""
        g = Grid(3, 8, 1.0)
        f = random_field(g, np.random.default_rng(2), real=True)
        v = f.values()
        assert v.dtype.kind == "f"
        vp = f.values(pad=True)
        assert vp.shape == (12, 12, 12)
        assert vp.dtype.kind == "f"

    def test_hermitian_validation(self):
        """Claiming reality for non-Hermitian coefficients raises."""
        g = Grid(2, 8, 1.0)
        c = np.zeros(g.shape, dtype=complex)
        c[1, 0] = 1.0  # no matching conjugate at (-1, 0)
        with pytest.raises(ValueError):
            SpectralField.from_coeffs(g, c, real=True)
        SpectralField.from_coeffs(g, c, real=False)

    def test_nyquist_projection(self):
        """Pure Nyquist samples project to the zero field."""
        g = Grid(2, 8, 1.0)
        x = np.arange(8)
        vals = np.outer((-1.0) ** x, np.ones(8))
        f = SpectralField.from_values(g, vals)
        assert l2_norm(f) == 0.0

    def test_single_mode_values(self):
        """One coefficient reproduces exp(i k.x) on bare and padded lattices."""
        L = 5.0
        g = Grid(2, 8, L)
        c = np.zeros(g.shape, dtype=complex)
        c[2, 7] = 1.5 - 0.5j  # modes (2, -1)
        f = SpectralField.from_coeffs(g, c)
        for pad in (False, True):
            xs = g.meshgrid(pad=pad)
            expect = (1.5 - 0.5j) * np.exp(1j * (2 * np.pi / L) * (2 * xs[0] - xs[1]))
            assert np.max(np.abs(f.values(pad=pad) - expect)) < 1e-13

    def test_padded_values_match_interpolation(self):
        """Padded samples agree with evaluating the series on the fine lattice."""
        g = Grid(2, 8, 2.0)
        fine = Grid(2, 12, 2.0)
        f = random_field(g, np.random.default_rng(3), real=True)
        assert np.max(np.abs(f.values(pad=True) - embed_field(f, fine).values())) < 1e-13

    def test_linear_arithmetic(self):
        """Addition and scalar multiples act on coefficients."""
        g = Grid(2, 8, 1.0)
        rng = np.random.default_rng(4)
        f, h = random_field(g, rng), random_field(g, rng)
        c = (2.0 * f - h * 0.5).coeffs
        assert np.allclose(c, 2.0 * f.coeffs - 0.5 * h.coeffs, rtol=0, atol=1e-15)
        with pytest.raises(TypeError):
            f * h

    def test_grid_mismatch_rejected(self):
        """Mixing grids in arithmetic raises."""
        f = SpectralField.zero(Grid(2, 8, 1.0))
        h = SpectralField.zero(Grid(2, 16, 1.0))
        with pytest.raises(ValueError):
            f + h

    def test_vector_component_count(self):
        """A vector field needs exactly dim components."""
        g = Grid(3, 8, 1.0)
        with pytest.raises(ValueError):
            VectorField((SpectralField.zero(g), SpectralField.zero(g)))


class TestDerivatives:
    def test_single_mode_closed_form(self):
        """d/dx_i multiplies a mode by i k_i."""
        L = 3.0
        g = Grid(3, 8, L)
        c = np.zeros(g.shape, dtype=complex)
        c[1, 6, 2] = 2.0j  # modes (1, -2, 2)
        f = SpectralField.from_coeffs(g, c)
        for ax, m in [(0, 1), (1, -2), (2, 2)]:
            d = partial_deriv(f, ax)
            assert d.coeffs[1, 6, 2] == pytest.approx(2.0j * (1j * 2 * np.pi * m / L), abs=1e-14)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_finite_difference_convergence(self, dim):
        """A 4th-order stencil converges to the spectral derivative at rate 16."""
        L = 2.0 * np.pi
        coarse = Grid(dim, 32, L)
        fine = Grid(dim, 64, L)
        f = random_field(coarse, np.random.default_rng(7), kmax=4, real=True)
        errs = []
        for grid, field in [(coarse, f), (fine, embed_field(f, fine))]:
            h = L / grid.n
            vals = field.values()
            err = max(
                np.max(np.abs(fd_partial(vals, ax, h) - partial_deriv(field, ax).values()))
                for ax in range(dim)
            )
            errs.append(err)
        ratio = errs[0] / errs[1]
        assert 12.0 < ratio < 20.0

    def test_gradient_divergence_laplacian_chain(self):
        """div(grad f) equals lap f exactly."""
        g = Grid(3, 16, 2.5)
        f = random_field(g, np.random.default_rng(8), real=True)
        lhs = divergence(gradient(f))
        assert np.max(np.abs(lhs.coeffs - laplacian(f).coeffs)) < 1e-12

    @pytest.mark.parametrize("dim", [2, 3])
    def test_curl_of_gradient_vanishes(self, dim):
        """curl(grad f) is identically zero."""
        g = Grid(dim, 16, 1.0)
        f = random_field(g, np.random.default_rng(9), real=True)
        c = curl(gradient(f))
        assert l2_norm(c) < 1e-13

    def test_reality_preserved(self):
        """Odd multipliers keep real fields real."""
        g = Grid(2, 16, 1.0)
        f = random_field(g, np.random.default_rng(10), real=True)
        assert partial_deriv(f, 0).real
        assert riesz(f, 1).real
        assert inv_laplacian(f).real


class TestInverses:
    def test_inv_laplacian_roundtrip(self):
        """lap(inv_lap f) restores the zero-mean part of f."""
        g = Grid(2, 16, 3.0)
        f = random_field(g, np.random.default_rng(12), zero_mean=False)
        back = laplacian(inv_laplacian(f))
        assert np.max(np.abs(back.coeffs - zero_mean(f).coeffs)) < 1e-12
        assert inv_laplacian(f).coeffs[0, 0] == 0.0

    def test_riesz_squares_sum_to_identity(self):
        """sum_i R_i R_i = -identity on zero-mean fields."""
        g = Grid(3, 8, 1.7)
        f = random_field(g, np.random.default_rng(13))
        acc = np.zeros(g.shape, dtype=complex)
        for ax in range(3):
            acc += riesz(riesz(f, ax), ax).coeffs
        assert np.max(np.abs(acc + zero_mean(f).coeffs)) < 1e-13

    def test_inv_modulus_inverts_modulus(self):
        """-sum_i d_i R_i recovers |D|, inverting the order -1 smoothing."""
        g = Grid(2, 16, 2.0)
        f = random_field(g, np.random.default_rng(14))
        smooth = inv_modulus(f)
        acc = np.zeros(g.shape, dtype=complex)
        for ax in range(2):
            acc -= partial_deriv(riesz(smooth, ax), ax).coeffs
        assert np.max(np.abs(acc - zero_mean(f).coeffs)) < 1e-13

    def test_multipliers_commute(self):
        """Fourier multipliers commute with each other."""
        g = Grid(2, 16, 1.0)
        f = random_field(g, np.random.default_rng(15))
        a = partial_deriv(inv_laplacian(f), 0)
        b = inv_laplacian(partial_deriv(f, 0))
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-14


class TestHelmholtz:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_split_reconstructs_and_is_orthogonal(self, dim):
        """A = df + cf with div df = 0, curl cf = 0, and L2 orthogonality."""
        g = Grid(dim, 16, 2.0)
        A = random_vector(g, np.random.default_rng(16), real=True, zero_mean=False)
        df, cf = helmholtz_split(A)
        for ax in range(dim):
            delta = df[ax].coeffs + cf[ax].coeffs - A[ax].coeffs
            assert np.max(np.abs(delta)) < 1e-13
        assert l2_norm(divergence(df)) < 1e-12 * l2_norm(A)
        assert l2_norm(curl(cf)) < 1e-12 * l2_norm(A)
        dot = sum(inner(df[ax], cf[ax]).real for ax in range(dim))
        assert abs(dot) < 1e-13 * l2_norm(A) ** 2

    def test_mean_goes_to_divfree_part(self):
        """The vector mean rides with the divergence-free component."""
        g = Grid(2, 8, 1.0)
        A = random_vector(g, np.random.default_rng(17), real=True, zero_mean=False)
        mean = [A[ax].coeffs[0, 0] for ax in range(2)]
        df, cf = helmholtz_split(A)
        for ax in range(2):
            assert df[ax].coeffs[0, 0] == pytest.approx(mean[ax], abs=1e-15)
            assert cf[ax].coeffs[0, 0] == 0.0

    def test_idempotent(self):
        """Splitting a divergence-free field returns it unchanged."""
        g = Grid(3, 8, 1.0)
        A = random_divfree(g, np.random.default_rng(18), real=True)
        df, cf = helmholtz_split(A)
        assert l2_norm(cf) < 1e-13
        assert max(np.max(np.abs(df[ax].coeffs - A[ax].coeffs)) for ax in range(3)) < 1e-13

    def test_project_df_matches_split_and_rejects_2d(self):
        """project_df is the 3D divergence-free projection only."""
        g = Grid(3, 8, 1.0)
        A = random_vector(g, np.random.default_rng(19), real=True)
        df, _ = helmholtz_split(A)
        P = project_df(A)
        assert max(np.max(np.abs(P[ax].coeffs - df[ax].coeffs)) for ax in range(3)) == 0.0
        with pytest.raises(ValueError):
            project_df(random_vector(Grid(2, 8, 1.0), np.random.default_rng(0)))

    @pytest.mark.parametrize("dim", [2, 3])
    def test_gradient_curl_norms_agree_divfree(self, dim):
        """For divergence-free fields the gradient and curl norms coincide."""
        g = Grid(dim, 16, 3.0)
        A = random_divfree(g, np.random.default_rng(20), real=True)
        assert grad_norm(A) == pytest.approx(l2_norm(curl(A)), rel=1e-13)


class TestNormsAndPairings:
    def test_parseval_quadrature(self):
        """Lattice quadrature of |f|^2 matches the coefficient-space norm."""
        g = Grid(2, 16, 2.0)
        f = random_field(g, np.random.default_rng(21), zero_mean=False)
        quad = g.cell_volume * np.sum(np.abs(f.values()) ** 2)
        assert quad == pytest.approx(l2_norm(f) ** 2, rel=1e-13)

    def test_inner_orthogonal_modes(self):
        """Distinct Fourier modes are L2 orthogonal."""
        g = Grid(2, 8, 1.0)
        c1 = np.zeros(g.shape, dtype=complex)
        c2 = np.zeros(g.shape, dtype=complex)
        c1[1, 2] = 1.0
        c2[2, 1] = 1.0
        f1, f2 = SpectralField.from_coeffs(g, c1), SpectralField.from_coeffs(g, c2)
        assert inner(f1, f2) == 0.0
        assert inner(f1, f1) == pytest.approx(g.volume, abs=1e-15)

    def test_integral_reads_zero_mode(self):
        """The box integral is L^dim times the zero-mode coefficient."""
        g = Grid(3, 8, 2.0)
        c = np.zeros(g.shape, dtype=complex)
        c[0, 0, 0] = 1.25
        c[1, 0, 0] = 0.7j
        f = SpectralField.from_coeffs(g, c)
        assert integral(f) == pytest.approx(8.0 * 1.25, abs=1e-14)

    def test_h1dot_matches_gradient_norm(self):
        """The |k|-weighted norm equals the L2 norm of the gradient."""
        g = Grid(2, 16, 1.5)
        f = random_field(g, np.random.default_rng(22), real=True)
        gn = np.sqrt(sum(l2_norm(partial_deriv(f, ax)) ** 2 for ax in range(2)))
        assert h1dot_norm(f) == pytest.approx(gn, rel=1e-14)


class TestDealiasedProduct:
    def test_two_modes_closed_form(self):
        """exp(i k.x) * exp(i l.x) lands a unit coefficient at k + l."""
        g = Grid(2, 8, 1.0)
        c1 = np.zeros(g.shape, dtype=complex)
        c2 = np.zeros(g.shape, dtype=complex)
        c1[2, 1] = 1.0
        c2[1, 7] = 1.0  # modes (1, -1)
        p = dealiased_product(
            SpectralField.from_coeffs(g, c1), SpectralField.from_coeffs(g, c2)
        )
        expect = np.zeros(g.shape, dtype=complex)
        expect[3, 0] = 1.0
        assert np.max(np.abs(p.coeffs - expect)) < 1e-15

    def test_out_of_band_mode_truncated(self):
        """Products overflowing the retained band are cut, not wrapped."""
        g = Grid(2, 8, 1.0)
        c = np.zeros(g.shape, dtype=complex)
        c[3, 0] = 1.0  # mode (3, 0); square would land at (6, 0) -> truncated
        f = SpectralField.from_coeffs(g, c)
        p = dealiased_product(f, f)
        assert l2_norm(p) < 1e-14

    @pytest.mark.parametrize("dim", [2, 3])
    def test_matches_bruteforce_convolution(self, dim):
        """The padded-lattice product equals the exact banded convolution."""
        g = Grid(dim, 8, 2.0)
        rng = np.random.default_rng(23 + dim)
        f = random_field(g, rng, real=True)
        h = random_field(g, rng)
        p = dealiased_product(f, h)
        oracle = convolve_banded(g, f, h)
        assert np.max(np.abs(p.coeffs - oracle)) < 1e-13
        naive = np.fft.fftn(f.values() * h.values()) / g.n ** dim
        assert np.max(np.abs(naive - oracle)) > 1e-8  # bare lattice does alias

    def test_real_inputs_give_real_product(self):
        """Reality survives multiplication."""
        g = Grid(2, 16, 1.0)
        rng = np.random.default_rng(25)
        f = random_field(g, rng, real=True)
        h = random_field(g, rng, real=True)
        assert dealiased_product(f, h).real


class TestNullForm:
    def test_two_mode_closed_form(self):
        """Q_01 on modes (1,2,0) and (3,-1,0) has coefficient 7 at (4,1,0)."""
        g = Grid(3, 16, 2.0 * np.pi)
        cu = np.zeros(g.shape, dtype=complex)
        cv = np.zeros(g.shape, dtype=complex)
        cu[1, 2, 0] = 1.0
        cv[3, 15, 0] = 1.0  # mode (3, -1, 0)
        u = SpectralField.from_coeffs(g, cu)
        v = SpectralField.from_coeffs(g, cv)
        q = null_form(u, v, 0, 1)
        expect = np.zeros(g.shape, dtype=complex)
        expect[4, 1, 0] = 7.0
        assert np.max(np.abs(q.coeffs - expect)) < 1e-12

    def test_antisymmetry(self):
        """Q is antisymmetric in its index pair and in its arguments."""
        g = Grid(2, 16, 1.0)
        rng = np.random.default_rng(26)
        u = random_field(g, rng, real=True)
        v = random_field(g, rng, real=True)
        q = null_form(u, v, 0, 1)
        assert np.max(np.abs(q.coeffs + null_form(u, v, 1, 0).coeffs)) < 1e-12
        assert np.max(np.abs(q.coeffs + null_form(v, u, 0, 1).coeffs)) < 1e-12
        assert l2_norm(null_form(u, u, 0, 1)) < 1e-12

    def test_parallel_gradients_annihilate(self):
        """Q(u, F(u)) vanishes when both gradients are parallel pointwise."""
        g = Grid(2, 16, 2.0 * np.pi)
        c = np.zeros(g.shape, dtype=complex)
        c[1, 0] = 0.5
        c[g.n - 1, 0] = 0.5  # cos(x): gradients of u and u^2-like fields align
        u = SpectralField.from_coeffs(g, c, real=True)
        v = dealiased_product(u, u)
        assert l2_norm(null_form(u, v, 0, 1)) < 1e-13


class TestStructureIdentities:
    def test_gradient_coupling_alpha_one(self):
        """2 A.grad(phi) matches its null-form resummation with alpha = 1."""
        g = Grid(3, 16, 2.0)
        rng = np.random.default_rng(27)
        A = random_divfree(g, rng, real=True)
        phi = random_field(g, rng)
        rep = check_gradient_coupling_identity(A, phi)
        assert abs(rep.alpha - 1.0) < 1e-10
        assert rep.residual < 1e-10
        assert rep.raw_residual < 1e-10

    def test_gradient_coupling_rejects_bad_input(self):
        """Non-solenoidal or mean-carrying inputs are refused."""
        g = Grid(3, 8, 1.0)
        rng = np.random.default_rng(28)
        A = random_vector(g, rng, real=True)  # not divergence-free
        phi = random_field(g, rng)
        with pytest.raises(ValueError):
            check_gradient_coupling_identity(A, phi)

    def test_current_projection_alpha_minus_one(self):
        """The projected current matches its null-form resummation, alpha = -1."""
        g = Grid(3, 16, 2.0)
        phi = random_field(g, np.random.default_rng(29))
        rep = check_current_projection_identity(phi)
        assert abs(rep.alpha + 1.0) < 1e-10
        assert rep.residual < 1e-10

    def test_identities_hold_across_seeds(self):
        """Calibration scalars are stable over draws and scales."""
        g = Grid(3, 16, 1.0)
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            A = random_divfree(g, rng, real=True, amplitude=0.1 + 0.4 * seed)
            phi = random_field(g, rng, amplitude=2.0)
            r1 = check_gradient_coupling_identity(A, phi)
            r2 = check_current_projection_identity(phi)
            assert abs(r1.alpha - 1.0) < 1e-10 and r1.residual < 1e-10
            assert abs(r2.alpha + 1.0) < 1e-10 and r2.residual < 1e-10

    def test_report_summary_format(self):
        """The one-line summary carries the name, alpha, and residual."""
        g = Grid(3, 8, 1.0)
        rng = np.random.default_rng(30)
        rep = check_gradient_coupling_identity(
            random_divfree(g, rng, real=True), random_field(g, rng)
        )
        s = rep.summary()
        assert "gradient-coupling" in s and "alpha=" in s and "residual=" in s
