import numpy as np
import pytest

from pnlayer.grid import (
    GridSpec,
    RealField,
    SpectralField,
    build_grid,
    forward_transform,
    inverse_transform,
)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return RealField(grid, rng.standard_normal(grid.shape))


class TestBuildGrid:
    def test_1d_spacings(self):
        g = build_grid(1, 64, 256)
        assert g.h_x == pytest.approx(0.5)
        xi = np.sort(g.xi)
        assert np.diff(xi)[0] == pytest.approx(np.pi / 64)
        assert g.x[0] == -64.0 and g.x[-1] == pytest.approx(64.0 - 0.5)

    def test_2d_torus_frequencies(self):
        g = build_grid(2, 64, 256, [32])
        assert g.shape == (256, 32)
        k = np.sort(g.k(0)) / (2 * np.pi)
        assert np.array_equal(np.rint(k), np.arange(-16, 16))
        assert g.h_y == (1 / 32,)

    def test_rejects_small_box(self):
        with pytest.raises(ValueError, match="half_length"):
            build_grid(1, 2, 256)

    @pytest.mark.parametrize("nx", [255, 2])
    def test_rejects_bad_counts(self, nx):
        with pytest.raises(ValueError):
            build_grid(1, 64, nx)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            build_grid(4, 64, 256, [8, 8, 8])
        with pytest.raises(ValueError):
            GridSpec(d=2, half_length=64, n_x=256, n_y=())


class TestForwardTransform:
    def test_constant_field(self):
        g = build_grid(1, 16, 64)
        F = forward_transform(RealField(g, np.full(g.shape, 3.25)))
        assert F.coefficients[0] == pytest.approx(3.25 * 2 * 16)
        assert np.max(np.abs(F.coefficients[1:])) < 1e-12 * 3.25 * 32

    def test_single_cosine_mode(self):
        g = build_grid(1, 16, 64)
        f = RealField(g, np.cos(np.pi * g.x / 16))
        F = forward_transform(f).coefficients
        # mass splits equally between xi = +-pi/X, each worth X
        idx = np.argmin(np.abs(g.xi - np.pi / 16))
        idx_neg = np.argmin(np.abs(g.xi + np.pi / 16))
        assert F[idx] == pytest.approx(16.0, abs=1e-10)
        assert F[idx_neg] == pytest.approx(16.0, abs=1e-10)
        others = np.delete(F, [idx, idx_neg])
        assert np.max(np.abs(others)) < 1e-10

    def test_matches_direct_summation(self):
        # oracle: two-sided direct DFT sum at a handful of frequencies
        g = build_grid(2, 8, 16, [8])
        f = random_field(g, seed=3)
        F = forward_transform(f).coefficients
        x = g.x[:, None]
        y = g.y(0)[None, :]
        for ix, iy in [(0, 0), (3, 2), (9, 7), (15, 1)]:
            nu_x, nu_y = g.xi[ix], g.k(0)[iy]
            direct = np.sum(f.values * np.exp(-1j * (nu_x * x + nu_y * y))) \
                * g.cell_volume
            assert F[ix, iy] == pytest.approx(direct, abs=1e-10)

    def test_parseval(self):
        for d, ny in [(1, []), (2, [16]), (3, [8, 8])]:
            g = build_grid(d, 8, 32, ny)
            f = random_field(g, seed=d)
            F = forward_transform(f).coefficients
            grid_side = g.l2_norm(f.values) ** 2
            spec_side = np.sum(np.abs(F) ** 2) / g.volume
            assert spec_side == pytest.approx(grid_side, rel=1e-10)

    def test_real_fields_have_hermitian_spectra(self):
        g = build_grid(2, 8, 32, [8])
        F = forward_transform(random_field(g, 7))
        assert F.hermitian_defect() < 1e-10 * np.max(np.abs(F.coefficients))


class TestInverseTransform:
    @pytest.mark.parametrize("d,ny", [(1, []), (2, [16]), (3, [8, 8])])
    def test_round_trip(self, d, ny):
        g = build_grid(d, 8, 32, ny)
        f = random_field(g, seed=10 + d)
        back = inverse_transform(forward_transform(f))
        err = np.max(np.abs(back.values - f.values))
        assert err <= 1e-12 * np.max(np.abs(f.values))

    def test_zero_spectrum(self):
        g = build_grid(1, 8, 32)
        out = inverse_transform(SpectralField(g, np.zeros(g.shape, complex)))
        assert np.all(out.values == 0)

    def test_single_mode_matches_analytic(self):
        g = build_grid(1, 8, 64)
        coeffs = np.zeros(g.shape, complex)
        xi0 = np.pi / 8
        idx = np.argmin(np.abs(g.xi - xi0))
        idx_neg = np.argmin(np.abs(g.xi + xi0))
        amp = 2.0 + 0.5j
        coeffs[idx] = amp * g.volume / 2
        coeffs[idx_neg] = np.conj(amp) * g.volume / 2
        out = inverse_transform(SpectralField(g, coeffs)).values
        expected = np.real(amp * np.exp(1j * xi0 * g.x))
        assert np.max(np.abs(out - expected)) < 1e-12

    def test_hermitian_violation_raises(self):
        g = build_grid(1, 8, 32)
        coeffs = np.zeros(g.shape, complex)
        coeffs[1] = 1.0  # no conjugate partner
        with pytest.raises(ValueError, match="Hermitian"):
            inverse_transform(SpectralField(g, coeffs))


def test_field_validation():
    g = build_grid(1, 8, 32)
    with pytest.raises(ValueError, match="shape"):
        RealField(g, np.zeros(31))
    bad = np.zeros(g.shape)
    bad[3] = np.nan
    with pytest.raises(ValueError, match="finite"):
        RealField(g, bad)
