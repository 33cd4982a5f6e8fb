import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osgrf.errors import ConfigurationError, DomainError
from osgrf.estimate import gamma_window_count
from osgrf.synthesis import FieldSpec, synthesize_many
from osgrf.wavelet import (DiagonalAnisotropy, WaveletCoefficientSet, anisotropic_wavelet_transform,
                           build_index_set, complete_scale, daubechies_filter, grid_index_set,
                           max_resolvable_scale, reconstruct)

DS = [(1.0, 1.0), (1.2, 0.8), (1.5, 0.5)]


def brute(lam, j):
    """Enumerate I^j(D) straight from the bracket conditions."""
    d = len(lam)
    if j == 0:
        return {(("F",) * d, (0,) * d)}
    out = set()
    for G in itertools.product("FM", repeat=d):
        if G == ("F",) * d:
            continue
        for gamma in itertools.product(range(0, 2 * j + 2), repeat=d):
            ok = True
            for r in range(d):
                lo, hi = math.floor((j - 1) * lam[r]), math.floor(j * lam[r])
                ok &= gamma[r] == lo if G[r] == "F" else lo <= gamma[r] < hi
            if ok:
                out.add((G, gamma))
    return out


class TestAnisotropy:
    def test_validation(self):
        with pytest.raises(DomainError):
            DiagonalAnisotropy((1.5, 0.6))
        with pytest.raises(DomainError):
            DiagonalAnisotropy((2.0, 0.0))
        assert DiagonalAnisotropy.normalized([3, 1]).lam == (1.5, 0.5)


class TestIndexSet:
    def test_scale_zero(self):
        for lam in DS:
            assert build_index_set(DiagonalAnisotropy(lam), 0) == [(("F", "F"), (0, 0))]

    def test_isotropic_j2(self):
        got = set(build_index_set(DiagonalAnisotropy((1.0, 1.0)), 2))
        assert got == {(("M", "F"), (1, 1)), (("F", "M"), (1, 1)), (("M", "M"), (1, 1))}

    def test_anisotropic_j2(self):
        got = set(build_index_set(DiagonalAnisotropy((1.5, 0.5)), 2))
        assert got == {(("M", "F"), (1, 0)), (("M", "F"), (2, 0)), (("F", "M"), (1, 0)),
                       (("M", "M"), (1, 0)), (("M", "M"), (2, 0))}

    @pytest.mark.parametrize("lam", DS)
    def test_matches_brute_force(self, lam):
        for j in range(0, 9):
            assert set(build_index_set(DiagonalAnisotropy(lam), j)) == brute(lam, j)

    @settings(max_examples=60, deadline=None)
    @given(l1=st.floats(0.3, 1.7), j=st.integers(1, 10))
    def test_invariants(self, l1, j):
        lam = (l1, 2 - l1)
        for G, gamma in build_index_set(DiagonalAnisotropy(lam), j):
            assert "M" in G
            for r, g in enumerate(G):
                lo, hi = math.floor((j - 1) * lam[r]), math.floor(j * lam[r])
                assert gamma[r] == lo if g == "F" else lo <= gamma[r] < hi
            if j >= 2:
                # the trace bracket 2^{(j-2)d} <= 2^{Tr} <= 2^{jd}
                assert 2 * (j - 2) <= sum(gamma) <= 2 * j

    def test_capped_and_resolvable(self):
        D = DiagonalAnisotropy((1.5, 0.5))
        assert max_resolvable_scale(D, (6, 6)) == 4
        assert complete_scale(D, (6, 6)) == 12
        for G, gamma in grid_index_set(D, 8, (6, 6)):
            assert max(gamma) <= 6

    def test_negative_scale(self):
        with pytest.raises(DomainError):
            build_index_set(DiagonalAnisotropy((1.0, 1.0)), -1)

    @pytest.mark.parametrize("lam", DS)
    def test_cell_count_growth(self, lam):
        D = DiagonalAnisotropy(lam)
        js = np.arange(4, 12)
        card = np.array([len(build_index_set(D, j)) * gamma_window_count(D, j) for j in js])
        ratio = card / (js ** 2 * 4.0 ** js)
        assert 0 < ratio.min() and ratio.max() / ratio.min() < 20
        n = np.array([gamma_window_count(D, j) for j in js])
        slope = np.polyfit(js, np.log2(n / js ** 2.0), 1)[0]
        assert slope == pytest.approx(2, abs=0.1)


class TestFilters:
    def test_db2_closed_form(self):
        s3 = math.sqrt(3)
        ref = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4 * math.sqrt(2))
        np.testing.assert_allclose(daubechies_filter(2), ref, atol=1e-14)

    @pytest.mark.parametrize("order", [1, 2, 3, 4, 6, 8])
    def test_orthonormal_and_moments(self, order):
        h = daubechies_filter(order)
        assert h.size == 2 * order
        assert h.sum() == pytest.approx(math.sqrt(2), abs=1e-12)
        for shift in range(0, order):
            assert np.dot(h[2 * shift:], h[:h.size - 2 * shift]) == pytest.approx(float(shift == 0), abs=1e-10)
        g = np.array([(-1) ** m * h[h.size - 1 - m] for m in range(h.size)])
        for p in range(order):
            assert np.sum(g * np.arange(h.size) ** p) == pytest.approx(0, abs=1e-7 * h.size ** p)

    def test_bad_order(self):
        with pytest.raises(DomainError):
            daubechies_filter(0)


@pytest.fixture(scope="module")
def grid64():
    return np.random.default_rng(7).normal(size=(64, 64))


class TestTransform:
    @pytest.mark.parametrize("lam", DS)
    def test_parseval(self, lam, grid64):
        cs = anisotropic_wavelet_transform(grid64, DiagonalAnisotropy(lam), spacing=(1 / 64, 1 / 64))
        energy = sum(float(np.sum(cs.orthonormal_coordinates(k) ** 2)) for k in cs.coefficients)
        l2 = float(np.sum(grid64 ** 2)) / 64 ** 2  # grid L2 norm with cell volume 1/64^2
        assert energy == pytest.approx(l2, rel=1e-8)

    @pytest.mark.parametrize("lam", DS)
    @pytest.mark.parametrize("order", [1, 2, 4])
    def test_reconstruction(self, lam, order, grid64):
        cs = anisotropic_wavelet_transform(grid64, DiagonalAnisotropy(lam), filter_order=order)
        rec = reconstruct(cs)
        assert np.linalg.norm(rec - grid64) <= 1e-8 * np.linalg.norm(grid64)

    def test_constant_field(self):
        x = np.full((32, 32), 3.7)
        cs = anisotropic_wavelet_transform(x, DiagonalAnisotropy((1.2, 0.8)))
        for (j, G, gamma), arr in cs.coefficients.items():
            if "M" in G:
                assert np.max(np.abs(arr)) <= 1e-10 * 3.7

    def test_linear_field_interior(self):
        n = 64
        x = np.tile(np.arange(n, dtype=float)[:, None], (1, n))  # f = x_1
        cs = anisotropic_wavelet_transform(x, DiagonalAnisotropy((1.0, 1.0)), filter_order=2)
        for (j, G, gamma), arr in cs.coefficients.items():
            if G[0] != "M":
                continue
            # periodization wraps the ramp; cells whose support meets the seam are excluded
            width = 3 * 2 ** max(0, 6 - gamma[0])
            k = np.arange(arr.shape[0]) * 2 ** (6 - gamma[0])
            interior = k + width < n
            assert np.max(np.abs(arr[interior]), initial=0.0) <= 1e-10 * n

    def test_linear_field_direct_oracle(self):
        # one coefficient against the explicit grid inner product with its atom
        n = 32
        x = np.tile(np.arange(n, dtype=float)[:, None], (1, n)) ** 2
        D = DiagonalAnisotropy((1.0, 1.0))
        cs = anisotropic_wavelet_transform(x, D, filter_order=2, spacing=(1.0, 1.0))
        key = sorted(cs.coefficients)[5]
        unit = WaveletCoefficientSet(D, 2, {k: np.zeros_like(v) for k, v in cs.coefficients.items()},
                                     cs.grid_shape, cs.spacing)
        unit.coefficients[key][(1, 1)] = 2.0 ** (sum(key[2]) / 2)
        atom = reconstruct(unit)
        assert np.sum(atom * x) * 2.0 ** (sum(key[2]) / 2) == pytest.approx(cs.coefficients[key][1, 1], rel=1e-10)

    def test_zero_coefficients(self, grid64):
        cs = anisotropic_wavelet_transform(grid64, DiagonalAnisotropy((1.2, 0.8)))
        zero = cs.scaled(0.0)
        assert np.all(reconstruct(zero) == 0)

    def test_delta_response(self):
        D = DiagonalAnisotropy((1.2, 0.8))
        cs = anisotropic_wavelet_transform(np.zeros((32, 32)), D, spacing=(1.0, 1.0))
        key = (3, ("M", "M"), (2, 1))
        assert key in cs.coefficients
        cs.coefficients[key][1, 0] = 1.0
        again = anisotropic_wavelet_transform(reconstruct(cs), D, spacing=(1.0, 1.0))
        for k, arr in again.coefficients.items():
            expected = np.zeros_like(arr)
            if k == key:
                expected[1, 0] = 1.0
            assert np.max(np.abs(arr - expected)) <= 1e-8

    def test_symmetric_boundary(self, grid64):
        cs = anisotropic_wavelet_transform(grid64, DiagonalAnisotropy((1.2, 0.8)), boundary="symmetric")
        assert cs.grid_shape == (128, 128) and cs.source_shape == (64, 64)
        rec = reconstruct(cs)
        np.testing.assert_allclose(rec[:64, :64], grid64, atol=1e-10)

    def test_errors(self, grid64):
        D = DiagonalAnisotropy((1.0, 1.0))
        with pytest.raises(ConfigurationError):
            anisotropic_wavelet_transform(np.zeros((48, 64)), D)
        with pytest.raises(ConfigurationError):
            anisotropic_wavelet_transform(np.zeros((4, 4)), D, filter_order=4)
        with pytest.raises(DomainError):
            anisotropic_wavelet_transform(grid64, D, boundary="reflect")
        cs = anisotropic_wavelet_transform(grid64, D, j_max=3)
        with pytest.raises(DomainError):
            reconstruct(cs)


@pytest.fixture(scope="module")
def osgrf_coeffs():
    spec = FieldSpec.create(np.diag([1.2, 0.8]), 0.4, n=256, seed=51)
    D = DiagonalAnisotropy((1.2, 0.8))
    return [anisotropic_wavelet_transform(r, D, j_max=7) for r in synthesize_many(spec, 100)]


class TestStatistics:
    def test_stationary_in_k(self, osgrf_coeffs):
        # periodization wraps the non-periodic field; keep cells whose 8-tap atom support
        # of (L - 1)(2^m - 1) + 1 samples does not cross the seam
        K, L = 8, 8
        for key in [(6, ("M", "F"), (6, 4)), (7, ("M", "F"), (7, 4))]:
            arr = np.array([c.coefficients[key] for c in osgrf_coeffs]) ** 2
            masks = []
            for n_k, g in zip(arr.shape[1:], key[2]):
                m = K - g
                k = np.arange(n_k)
                masks.append(k * 2 ** m + (L - 1) * (2 ** m - 1) + 1 <= 2 ** K)
            inner = arr[:, masks[0]][:, :, masks[1]]
            # four blocks along each axis, replicate-level block means
            b0 = np.array_split(np.arange(inner.shape[1]), 4)
            b1 = np.array_split(np.arange(inner.shape[2]), 4)
            blocks = np.array([[inner[:, i][:, :, jj].mean(axis=(1, 2)) for jj in b1] for i in b0])
            means = blocks.mean(axis=2).ravel()
            se = blocks.std(axis=2, ddof=1).ravel() / math.sqrt(arr.shape[0])
            assert np.all(np.abs(means - means.mean()) <= 3 * se), key

    def test_weak_correlation_along_wavelet_axes(self, osgrf_coeffs):
        slopes = []
        for j in (6, 7):
            for key in osgrf_coeffs[0].branches(j):
                arrs = np.array([c.coefficients[key] for c in osgrf_coeffs])
                arrs = arrs / arrs.std()
                for axis, g in enumerate(key[1]):
                    if g != "M" or arrs.shape[axis + 1] < 32:
                        continue
                    lags = np.arange(1, 9)
                    corr = np.array([abs(np.mean(arrs * np.roll(arrs, l, axis=axis + 1))) for l in lags])
                    env = np.maximum.accumulate(corr[::-1])[::-1]
                    slopes.append(np.polyfit(np.log(lags), np.log(env), 1)[0])
        assert slopes and max(slopes) <= -1 + 0.3

    def test_variance_scaling(self, osgrf_coeffs):
        js = np.arange(2, 7)
        ms = [np.mean(np.concatenate([c.coefficients[k].ravel() ** 2 for c in osgrf_coeffs
                                      for k in c.branches(j)])) for j in js]
        slope = np.polyfit(js, np.log2(ms), 1)[0]
        assert slope == pytest.approx(-0.8, abs=0.15)
