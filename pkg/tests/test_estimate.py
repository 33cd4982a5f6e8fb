import math

import numpy as np
import pytest

from osgrf.errors import DomainError, InsufficientDataError, NumericError
from osgrf.estimate import (OUTSIDE_HYPOTHESIS, CandidateFamily, _argmax, anisotropy_search, candidate_grid,
                            fit_tent, gamma_window_count, normalized_coefficient_stats, predicted_exponent)
from osgrf.synthesis import FieldSpec, synthesize_many
from osgrf.wavelet import DiagonalAnisotropy, WaveletCoefficientSet, anisotropic_wavelet_transform


@pytest.fixture(scope="module")
def iso_fields():
    spec = FieldSpec.create(np.eye(2), 0.4, n=256, seed=2024)
    return [r.values for r in synthesize_many(spec, 4)]


class TestCandidateGrid:
    def test_default_grid(self):
        fam = candidate_grid(2, 0.6, 1.4, 0.1)
        lams = [m.lam[0] for m in fam]
        assert lams == [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4]
        assert all(m.lam[0] + m.lam[1] == pytest.approx(2) for m in fam)
        assert fam.members[0].lam == (0.6, 1.4)

    def test_single(self):
        fam = candidate_grid(2, 1.0, 1.0, 0.1)
        assert len(fam) == 1

    @pytest.mark.parametrize("args", [(3, 0.6, 1.4, 0.1), (2, 1.4, 0.6, 0.1), (2, 0.6, 1.4, 0),
                                      (2, 0.5, 2.0, 0.5), (2, 0.0, 1.0, 0.5)])
    def test_errors(self, args):
        with pytest.raises(DomainError):
            candidate_grid(*args)

    def test_family_validation(self):
        with pytest.raises(DomainError):
            CandidateFamily(())
        with pytest.raises(DomainError):
            CandidateFamily((DiagonalAnisotropy((1.0, 1.2)),))
        with pytest.raises(DomainError):
            CandidateFamily((DiagonalAnisotropy((1.0, 1.0)), DiagonalAnisotropy((1.0, 1.0))))

    def test_roundtrip(self):
        fam = candidate_grid(2, 0.8, 1.2, 0.2)
        again = CandidateFamily.from_dict(fam.to_dict())
        assert [m.lam for m in again] == [m.lam for m in fam]
        mixed = CandidateFamily.from_dict({"members": [[1.2, 0.8], [[1.0, 0.2], [0.0, 1.0]]]})
        assert isinstance(mixed.members[0], DiagonalAnisotropy)
        assert isinstance(mixed.members[1], np.ndarray)


class TestPrediction:
    def test_predicted(self):
        assert predicted_exponent((1.2, 0.8), (1.2, 0.8), 0.4) == pytest.approx(0.4)
        assert predicted_exponent((1.0, 1.0), (1.2, 0.8), 0.4) == pytest.approx(0.4 / 1.2)
        assert predicted_exponent((0.8, 1.2), (1.2, 0.8), 0.4) == pytest.approx(0.4 * 0.8 / 1.2)

    def test_tent_exact(self):
        lams = np.round(np.arange(0.6, 1.41, 0.1), 12)
        alphas = [predicted_exponent((l, 2 - l), (1.2, 0.8), 0.4) for l in lams]
        t = fit_tent(lams, alphas)
        assert t["lambda0"] == pytest.approx(1.2, abs=1e-5)
        assert t["H"] == pytest.approx(0.4, abs=1e-6)
        assert t["r2"] == pytest.approx(1.0, abs=1e-9)

    def test_tent_needs_three(self):
        with pytest.raises(InsufficientDataError):
            fit_tent([1.0, 1.1], [0.3, 0.3])


class TestSearch:
    def test_isotropic_peak(self, iso_fields):
        res = anisotropy_search(iso_fields, candidate_grid(2, 0.6, 1.4, 0.1))
        assert res.argmax_lambda in (0.9, 1.0, 1.1)
        assert res.H_hat == pytest.approx(0.4 * 0.85, abs=0.12)
        assert sum(res.votes.values()) == 4
        assert len(res.curve) == 9 and math.isnan(res.curve[0][3])
        assert set(res.tent) == {"lambda0", "H", "r2"}

    def test_scale_invariance(self, iso_fields):
        fam = candidate_grid(2, 0.8, 1.2, 0.2)
        a = anisotropy_search(iso_fields, fam)
        b = anisotropy_search([7.5 * f for f in iso_fields], fam)
        assert a.argmax_lambda == b.argmax_lambda
        assert a.H_hat == pytest.approx(b.H_hat, abs=1e-10)

    def test_parallel_matches_serial(self, iso_fields):
        fam = candidate_grid(2, 0.8, 1.2, 0.2)
        a = anisotropy_search(iso_fields[:2], fam)
        b = anisotropy_search(iso_fields[:2], fam, parallelism=3)
        assert a.to_dict() == b.to_dict()

    def test_single_candidate(self, iso_fields):
        res = anisotropy_search(iso_fields[:1], candidate_grid(2, 1.0, 1.0, 0.1))
        assert res.argmax_lambda == 1.0 and res.tent == {}

    def test_non_diagonal_flag(self, iso_fields):
        fam = CandidateFamily((DiagonalAnisotropy((1.0, 1.0)), np.array([[1.1, 0.2], [0.0, 0.9]])))
        res = anisotropy_search(iso_fields[:1], fam)
        assert len(res.flags) == 1 and OUTSIDE_HYPOTHESIS in res.flags[0]

    def test_truth_curve(self, iso_fields):
        res = anisotropy_search(iso_fields[:1], candidate_grid(2, 0.8, 1.2, 0.2), truth=((1.0, 1.0), 0.4))
        assert [c[3] for c in res.curve] == pytest.approx([0.32, 0.4, 0.32])

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            anisotropy_search([], candidate_grid(2, 1.0, 1.0, 0.1))

    def test_tie_break(self):
        members = [DiagonalAnisotropy((l, 2 - l)) for l in (0.8, 0.9, 1.1, 1.2)]
        assert _argmax(members, [0.3, 0.5, 0.5, 0.3]).lam[0] == 0.9
        assert _argmax(members, [0.5, 0.4, 0.4, 0.5]).lam[0] == 0.8
        assert _argmax(members, [0.1, 0.2, 0.3, 0.4]).lam[0] == 1.2


class TestNormalizedStats:
    def test_gaussian_moments(self):
        spec = FieldSpec.create(np.diag([1.2, 0.8]), 0.4, n=512, seed=5)
        D = DiagonalAnisotropy((1.2, 0.8))
        # the periodic seam mixes in high-variance cells, so use the symmetric extension
        cs = anisotropic_wavelet_transform(synthesize_many(spec, 1)[0], D, boundary="symmetric")
        s2 = normalized_coefficient_stats(cs, 2.0)
        s1 = normalized_coefficient_stats(cs, 1.0)
        for a, b in zip(s2, s1):
            assert a.mean_p == pytest.approx(1.0, rel=1e-12)
            if b.n_j >= 4000:
                assert b.mean_p == pytest.approx(math.sqrt(2 / math.pi), abs=0.03)
                assert 1.0 < b.max_norm < 2.0
        ns = [s.n_j for s in s2]
        assert ns == sorted(ns)

    def test_zero_variance(self):
        D = DiagonalAnisotropy((1.0, 1.0))
        cs = anisotropic_wavelet_transform(np.zeros((64, 64)), D)
        with pytest.raises(NumericError):
            normalized_coefficient_stats(cs)

    def test_bad_p(self):
        cs = anisotropic_wavelet_transform(np.ones((64, 64)), DiagonalAnisotropy((1.0, 1.0)))
        with pytest.raises(DomainError):
            normalized_coefficient_stats(cs, 0.0)


@pytest.mark.parametrize("lam", [(1.0, 1.0), (1.2, 0.8), (0.7, 1.3)])
@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_gamma_window_count(lam, j):
    bound = j * 2.0 ** j
    K = int(math.ceil(bound ** max(lam))) + 1
    k = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    brute = np.count_nonzero(np.abs(k1) ** (1 / lam[0]) + np.abs(k2) ** (1 / lam[1]) < bound)
    assert gamma_window_count(DiagonalAnisotropy(lam), j) == brute


def test_gamma_window_count_edge():
    assert gamma_window_count(DiagonalAnisotropy((1.0, 1.0)), 0) == 0
    assert gamma_window_count(DiagonalAnisotropy((1.0,)), 2) == 15
