import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from osgrf.errors import DomainError
from osgrf.linalg import matrix_power
from osgrf.pseudonorm import (diagonal_pseudonorm, equivalence_constants, euclidean_pseudonorm,
                              integral_pseudonorm, polar_decompose, pseudonorm_from_dict,
                              quasi_triangle_constant)


class TestDiagonal:
    def test_l1(self):
        assert diagonal_pseudonorm([1, 1])([3.0, 4.0]) == pytest.approx(7)

    def test_mixed(self):
        assert diagonal_pseudonorm([1.5, 0.5])([8.0, 2.0]) == pytest.approx(8, rel=1e-14)

    def test_homogeneity_example(self):
        rho = diagonal_pseudonorm([1.2, 0.8])
        assert rho([16 ** 1.2, 16 ** 0.8]) == pytest.approx(32, rel=1e-14)

    def test_origin_and_positivity(self, rng):
        rho = diagonal_pseudonorm([1.3, 0.7])
        assert rho([0.0, 0.0]) == 0
        assert np.all(rho(rng.normal(size=(1000, 2))) > 0)

    @pytest.mark.parametrize("lam", [[0.0, 2.0], [-1.0, 3.0]])
    def test_rejects(self, lam):
        with pytest.raises(DomainError):
            diagonal_pseudonorm(lam)

    @settings(max_examples=100, deadline=None)
    @given(l1=st.floats(0.3, 1.7), a=st.floats(0.1, 10),
           x=st.tuples(st.floats(-5, 5), st.floats(-5, 5)).filter(lambda v: max(map(abs, v)) > 1e-3))
    def test_exact_homogeneity(self, l1, a, x):
        lam = [l1, 2 - l1]
        rho = diagonal_pseudonorm(lam)
        ax = matrix_power(np.diag(lam), a) @ np.array(x)
        assert abs(rho(ax) - a * rho(np.array(x))) <= 1e-12 * a * rho(np.array(x))


class TestIntegral:
    def test_indicator_isotropic_closed_form(self):
        rho = integral_pseudonorm(np.eye(2), profile="indicator")
        # oracle: |x| * int_1^2 s^-2 ds by 1-D quadrature
        oracle = quad(lambda s: s ** -2, 1, 2)[0]
        for theta in np.linspace(0, 2 * np.pi, 7):
            x = np.array([math.cos(theta), math.sin(theta)])
            assert rho(x) == pytest.approx(oracle, rel=1e-10)
            assert rho(3 * x) == pytest.approx(3 * oracle, rel=1e-10)

    def test_bump_against_quadrature(self):
        E = np.array([[1.2, 0.3], [-0.2, 0.8]])  # E + E^T positive definite: Euclidean radius
        rho = integral_pseudonorm(E)

        def phi(y):
            u = 2 * np.linalg.norm(y) - 3  # annulus [1, 2] mapped to (-1, 1)
            return math.exp(1 - 1 / (1 - u * u)) if abs(u) < 1 else 0.0

        for x in [np.array([0.7, -1.9]), np.array([-2.5, 0.4]), np.array([0.01, 0.02])]:
            lo, hi = (float(v) for v in rho.support(x))
            # oracle: adaptive quadrature in a over the support, a = e^t
            oracle = quad(lambda a: phi(matrix_power(E, 1 / a) @ x), math.exp(lo), math.exp(hi),
                          epsabs=0, epsrel=1e-11, limit=200)[0]
            assert rho(x) == pytest.approx(oracle, rel=1e-7)

    @pytest.mark.parametrize("E", [np.diag([1.5, 0.5]), np.array([[1.2, 0.4], [0.0, 0.8]]),
                                   np.array([[1.0, -1.0], [1.0, 1.0]])])
    def test_homogeneity(self, E, rng):
        rho = integral_pseudonorm(E)
        x = rng.normal(size=(300, 2))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        a = np.exp(rng.uniform(math.log(0.1), math.log(10), size=300))
        ax = np.einsum("nij,nj->ni", rho.homogeneity.power(a), x)
        rel = np.abs(rho(ax) - a * rho(x)) / (a * rho(x))
        assert rel.max() <= 1e-3

    def test_a_equals_4(self, rng):
        rho = integral_pseudonorm(np.array([[1.1, 0.5], [-0.3, 0.9]]))
        x = rng.normal(size=(50, 2))
        ax = x @ matrix_power(rho.homogeneity.entries, 4.0).T
        np.testing.assert_allclose(rho(ax), 4 * rho(x), rtol=1e-3)

    @pytest.mark.parametrize("r_in, r_out", [(0.0, 2.0), (2.0, 1.0), (-1.0, 1.0)])
    def test_bad_support(self, r_in, r_out):
        with pytest.raises(DomainError):
            integral_pseudonorm(np.eye(2), r_in=r_in, r_out=r_out)

    def test_equivalent_to_diagonal(self):
        E = np.diag([1.5, 0.5])
        lo, hi, _ = equivalence_constants(integral_pseudonorm(E), diagonal_pseudonorm([1.5, 0.5]),
                                          samples=10_000, rng=1)
        assert 0 < lo <= hi < np.inf
        C = max(hi, 1 / lo)
        assert 1 / C <= lo and hi <= C

    def test_dict_roundtrip(self, rng):
        rho = integral_pseudonorm(np.array([[1.2, 0.1], [0.0, 0.8]]))
        back = pseudonorm_from_dict(rho.to_dict())
        x = rng.normal(size=(20, 2))
        np.testing.assert_allclose(back(x), rho(x), rtol=1e-12)


class TestPolar:
    def test_euclidean(self):
        pp = polar_decompose(euclidean_pseudonorm(2), [3.0, 4.0])
        assert pp.r == pytest.approx(5)
        np.testing.assert_allclose(pp.theta, [0.6, 0.8], atol=1e-12)

    def test_diagonal_example(self):
        rho = diagonal_pseudonorm([1.5, 0.5])
        pp = polar_decompose(rho, [8.0, 2.0])
        assert pp.r == pytest.approx(8, rel=1e-10)
        np.testing.assert_allclose(pp.theta, [0.35355339, 0.70710678], atol=1e-8)
        assert rho(pp.theta) == pytest.approx(1, abs=1e-12)

    def test_origin(self):
        with pytest.raises(DomainError):
            polar_decompose(diagonal_pseudonorm([1, 1]), [0.0, 0.0])

    @pytest.mark.parametrize("make", [lambda: diagonal_pseudonorm([1.3, 0.7]),
                                      lambda: integral_pseudonorm(np.array([[1.2, 0.5], [-0.4, 0.8]]))])
    def test_roundtrip_and_annulus(self, make, rng):
        rho = make()
        x = rng.normal(size=(2000, 2)) * np.exp(rng.uniform(-4, 4, size=(2000, 1)))
        pp = polar_decompose(rho, x)
        back = np.einsum("nij,nj->ni", rho.homogeneity.power(pp.r), pp.theta)
        assert np.max(np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1)) <= 1e-8
        assert np.max(np.abs(rho(pp.theta) - 1)) <= 1e-8
        norms = np.linalg.norm(pp.theta, axis=1)
        assert 0.05 < norms.min() <= norms.max() < 20


class TestComparisons:
    def test_identity(self):
        rho = diagonal_pseudonorm([1.2, 0.8])
        assert equivalence_constants(rho, rho, samples=500, rng=0) == (1.0, 1.0, 0.0)

    def test_rescaled(self):
        lo, hi, fit = equivalence_constants(diagonal_pseudonorm([1.2, 0.8], scale=3.0),
                                            diagonal_pseudonorm([1.2, 0.8]), samples=500, rng=0)
        assert lo == pytest.approx(3) and hi == pytest.approx(3) and fit == 0

    def test_diagonal_vs_integral(self):
        lo, hi, _ = equivalence_constants(diagonal_pseudonorm([1.2, 0.8]), integral_pseudonorm(np.diag([1.2, 0.8])),
                                          samples=2000, rng=0)
        assert 0 < lo <= hi < np.inf

    def test_mismatched_parts(self):
        with pytest.raises(DomainError):
            equivalence_constants(diagonal_pseudonorm([1.2, 0.8]), diagonal_pseudonorm([1.0, 1.0]))

    def test_log_comparison(self):
        # same real diagonalizable part (Id), different nilpotent part
        rho1 = integral_pseudonorm(np.array([[1.0, 0.5], [0.0, 1.0]]))
        rho2 = euclidean_pseudonorm(2)
        lo, hi, slope = equivalence_constants(rho1, rho2, samples=5000, rng=3)
        assert 0 < lo <= hi
        assert slope <= 2 / 1.0 + 0.5

    @pytest.mark.parametrize("make", [lambda: diagonal_pseudonorm([1.5, 0.5]),
                                      lambda: integral_pseudonorm(np.array([[1.2, 0.3], [0.0, 0.8]]))])
    def test_quasi_triangle(self, make):
        C, running = quasi_triangle_constant(make(), samples=100_000, rng=4)
        assert math.isfinite(C) and C > 0
        # the running maximum has settled over the last half of the samples
        assert running[-1] <= 1.05 * running[len(running) // 2]
