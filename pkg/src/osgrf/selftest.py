"""Reduced-scale invariant checks for every module.

Each check returns ``(passed, detail)``; :func:`run_selftest` runs them all
and never stops at the first failure.  The ``filter-tap`` fault flips the
sign of one Daubechies tap so that the wavelet basis is no longer
orthonormal.
"""
from __future__ import annotations

import contextlib
import itertools
import math
import time
import traceback
from dataclasses import dataclass, field
from unittest import mock

import numpy as np

from . import wavelet
from .besov import BesovSpec, besov_norm
from .estimate import anisotropy_search, candidate_grid, gamma_window_count
from .linalg import jordan_additive_decompose, matrix_power
from .pseudonorm import diagonal_pseudonorm, integral_pseudonorm, polar_decompose, quasi_triangle_constant
from .synthesis import FieldSpec, model_variogram, synthesize_field
from .wavelet import (DiagonalAnisotropy, anisotropic_wavelet_transform, build_index_set,
                      reconstruct)

__all__ = ["CheckResult", "SelfTestReport", "run_selftest", "CHECKS", "FAULTS"]

FAULTS = ("filter-tap",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


@dataclass
class SelfTestReport:
    results: list = field(default_factory=list)
    fault: str | None = None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "fault": self.fault, "failures": self.failures,
                "checks": [{"name": r.name, "status": "pass" if r.passed else "FAIL",
                            "detail": r.detail} for r in self.results]}

    def to_text(self) -> str:
        lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in self.results]
        lines.append(f"{sum(r.passed for r in self.results)}/{len(self.results)} checks passed")
        return "\n".join(lines) + "\n"


def _rng(i: int) -> np.random.Generator:
    return np.random.default_rng(20240 + i)


def _random_eplus(rng, d: int) -> np.ndarray:
    while True:
        M = rng.normal(scale=0.4, size=(d, d)) + np.eye(d) * rng.uniform(0.5, 1.5)
        if np.min(np.linalg.eigvals(M).real) > 0.2:
            return M


# ---------------------------------------------------------------------------
# linalg


def check_group_law():
    rng = _rng(1)
    worst = 0.0
    for _ in range(50):
        M = _random_eplus(rng, int(rng.integers(2, 4)))
        a, b = rng.uniform(0.1, 10, size=2)
        ab = matrix_power(M, a * b)
        worst = max(worst, np.max(np.abs(matrix_power(M, a) @ matrix_power(M, b) - ab)) / np.max(np.abs(ab)))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def check_inverse_law():
    rng = _rng(2)
    worst = 0.0
    for _ in range(50):
        M = _random_eplus(rng, int(rng.integers(2, 4)))
        a = rng.uniform(0.1, 10)
        inv = matrix_power(M, 1 / a)
        worst = max(worst, np.max(np.abs(np.linalg.inv(matrix_power(M, a)) - inv)) / np.max(np.abs(inv)))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def check_jordan():
    rng = _rng(3)
    worst = 0.0
    cases = [_random_eplus(rng, 2) for _ in range(20)] + [np.array([[1.0, 1.0], [0.0, 1.0]]),
                                                         np.array([[1.0, -2.0], [2.0, 1.0]])]
    for M in cases:
        D, S, N = jordan_additive_decompose(M)
        scale = max(1.0, np.max(np.abs(M)))
        errs = [np.max(np.abs(D + S + N - M)),
                *(np.max(np.abs(X @ Y - Y @ X)) for X, Y in [(D, S), (D, N), (S, N)]),
                np.max(np.abs(np.linalg.matrix_power(N, M.shape[0])))]
        a = 3.0
        prod = matrix_power(D, a) @ matrix_power(S, a) @ matrix_power(N, a)
        errs.append(np.max(np.abs(prod - matrix_power(M, a))) / np.max(np.abs(matrix_power(M, a))))
        worst = max(worst, max(errs) / scale)
    return worst <= 1e-9, f"max violation {worst:.2e}"


# ---------------------------------------------------------------------------
# pseudonorm


def _homogeneity_error(rho, n: int, rng) -> float:
    x = rng.normal(size=(n, rho.d))
    a = np.exp(rng.uniform(-2, 2, size=n))
    ax = np.einsum("nij,nj->ni", rho.homogeneity.power(a), x)
    return float(np.max(np.abs(rho(ax) - a * rho(x)) / (a * rho(x))))


def check_homogeneity_diagonal():
    err = _homogeneity_error(diagonal_pseudonorm([1.2, 0.8]), 1000, _rng(4))
    return err <= 1e-12, f"max relative error {err:.2e}"


def check_homogeneity_integral():
    rho = integral_pseudonorm(np.array([[1.2, 0.3], [0.0, 0.8]]))
    err = _homogeneity_error(rho, 200, _rng(5))
    return err <= 1e-3, f"max relative error {err:.2e}"


def check_polar_roundtrip():
    rng = _rng(6)
    worst = 0.0
    for rho in [diagonal_pseudonorm([1.2, 0.8]), integral_pseudonorm(np.array([[1.1, 0.2], [-0.1, 0.9]]))]:
        x = rng.normal(size=(200, 2)) * np.exp(rng.uniform(-3, 3, size=(200, 1)))
        pp = polar_decompose(rho, x)
        back = np.einsum("nij,nj->ni", rho.homogeneity.power(pp.r), pp.theta)
        worst = max(worst, float(np.max(np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1))),
                    float(np.max(np.abs(rho(pp.theta) - 1))))
    return worst <= 1e-8, f"max error {worst:.2e}"


def check_quasi_triangle():
    C, running = quasi_triangle_constant(diagonal_pseudonorm([1.5, 0.5]), samples=20_000, rng=_rng(7))
    ok = math.isfinite(C) and C >= 0.5
    return ok, f"empirical C = {C:.3f}"


# ---------------------------------------------------------------------------
# wavelet


def _periodic_grid(n: int = 64) -> np.ndarray:
    return _rng(8).normal(size=(n, n))


def check_parseval():
    x = _periodic_grid()
    worst = 0.0
    for lam in [(1.0, 1.0), (1.2, 0.8), (1.5, 0.5)]:
        cs = anisotropic_wavelet_transform(x, DiagonalAnisotropy(lam), spacing=(1.0, 1.0))
        energy = sum(float(np.sum(cs.orthonormal_coordinates(k) ** 2)) for k in cs.coefficients)
        worst = max(worst, abs(energy - float(np.sum(x ** 2))) / float(np.sum(x ** 2)))
    return worst <= 1e-8, f"max relative energy error {worst:.2e}"


def check_reconstruction():
    x = _periodic_grid()
    worst = 0.0
    for lam in [(1.0, 1.0), (1.2, 0.8), (1.5, 0.5)]:
        cs = anisotropic_wavelet_transform(x, DiagonalAnisotropy(lam), spacing=(1.0, 1.0))
        worst = max(worst, float(np.linalg.norm(reconstruct(cs) - x) / np.linalg.norm(x)))
    return worst <= 1e-8, f"max relative error {worst:.2e}"


def _brute_index_set(lam, j):
    out = []
    d = len(lam)
    lo = [math.floor((j - 1) * l) for l in lam]
    hi = [math.floor(j * l) for l in lam]
    for G in itertools.product("FM", repeat=d):
        if j > 0 and "M" not in G:
            continue
        ranges = [[lo[r]] if g == "F" else range(lo[r], hi[r]) for r, g in enumerate(G)]
        for gamma in itertools.product(*ranges):
            out.append((tuple(G), tuple(gamma)))
    return sorted(out)


def check_index_sets():
    bad = []
    for lam in [(1.0, 1.0), (1.5, 0.5), (1.2, 0.8)]:
        for j in range(1, 9):
            if sorted(build_index_set(DiagonalAnisotropy(lam), j)) != _brute_index_set(lam, j):
                bad.append((lam, j))
    return not bad, "matches enumeration" if not bad else f"mismatch at {bad[:3]}"


def check_trace_bracket():
    bad = 0
    for lam in [(1.0, 1.0), (1.5, 0.5), (1.2, 0.8)]:
        for j in range(2, 9):
            for G, gamma in build_index_set(DiagonalAnisotropy(lam), j):
                if not (j - 2) * 2 <= sum(gamma) <= 2 * j:
                    bad += 1
    return bad == 0, f"{bad} violations"


# ---------------------------------------------------------------------------
# synthesis


def _small_spec(**kw) -> FieldSpec:
    return FieldSpec.create(np.diag([1.2, 0.8]), 0.4, n=64, seed=11, **kw)


def check_origin_zero():
    spec = _small_spec()
    vals = [synthesize_field(spec, r).values.flat[0] for r in range(3)]
    return all(v == 0.0 for v in vals), f"X(0) = {vals}"


def check_determinism():
    spec = _small_spec()
    a, b = synthesize_field(spec, 2).values, synthesize_field(spec, 2).values
    return a.tobytes() == b.tobytes(), "bit-identical" if a.tobytes() == b.tobytes() else "differs"


def check_spectral_convergence():
    spec = FieldSpec.create(np.diag([1.2, 0.8]), 0.4, n=256)
    lags = np.array([[0.25, 0.0], [0.0, 0.25], [0.3, 0.3]])
    v8 = model_variogram(spec, lags, levels=8)
    v9 = model_variogram(spec, lags, levels=9)
    rel = float(np.max(np.abs(v9 - v8) / v9))
    return rel < 0.01, f"relative change L=8 -> 9: {rel:.2e}"


# ---------------------------------------------------------------------------
# besov / estimate


def check_besov_orderings():
    rng = _rng(9)
    cs = anisotropic_wavelet_transform(rng.normal(size=(32, 32)) * 1e-3, DiagonalAnisotropy((1.2, 0.8)),
                                       spacing=(1.0, 1.0))
    prev, ok = -1.0, True
    for s in np.linspace(-1, 1, 9):
        val = besov_norm(cs, BesovSpec(s, 2, 2))
        ok &= val >= prev
        prev = val
    # the beta ordering holds term by term on scales j >= 2, so zero the coarser ones
    cs1 = cs.scaled(1.0)
    cs1.coefficients = {k: (v if k[0] >= 2 else 0 * v) for k, v in cs.coefficients.items()}
    b = [besov_norm(cs1, BesovSpec(0.3, 2, 2, beta)) for beta in (1.0, 0.0, -1.0)]
    ok &= b[0] <= b[1] <= b[2]
    return bool(ok), f"monotone in s; beta ordering {b[0]:.3g} <= {b[1]:.3g} <= {b[2]:.3g}"


def check_argmax_invariance():
    spec = FieldSpec.create(np.diag([1.2, 0.8]), 0.4, n=128, seed=3)
    reals = [synthesize_field(spec, 0)]
    fam = candidate_grid(2, 0.8, 1.2, 0.2)
    r1 = anisotropy_search(reals, fam)
    scaled = [type(reals[0])(reals[0].values * 7.5, spec, 0)]
    r2 = anisotropy_search(scaled, fam)
    a1 = np.array([c[1] for c in r1.curve])
    a2 = np.array([c[1] for c in r2.curve])
    diff = float(np.max(np.abs(a1 - a2)))
    return diff <= 1e-9 and r1.argmax == r2.argmax, f"max alpha change {diff:.2e}"


def check_nj_growth():
    D = DiagonalAnisotropy((1.2, 0.8))
    js = np.arange(4, 11)
    n = np.array([gamma_window_count(D, j) for j in js])
    slope = float(np.polyfit(js, np.log2(n / js ** 2.0), 1)[0])
    return abs(slope - 2) <= 0.1, f"slope {slope:.3f}"


CHECKS = [
    ("linalg: group law", check_group_law),
    ("linalg: inverse law", check_inverse_law),
    ("linalg: Jordan recomposition and commutation", check_jordan),
    ("pseudonorm: homogeneity (diagonal-sum)", check_homogeneity_diagonal),
    ("pseudonorm: homogeneity (integral)", check_homogeneity_integral),
    ("pseudonorm: polar roundtrip", check_polar_roundtrip),
    ("pseudonorm: quasi-triangle constant", check_quasi_triangle),
    ("wavelet: Parseval identity", check_parseval),
    ("wavelet: perfect reconstruction", check_reconstruction),
    ("wavelet: index sets vs enumeration", check_index_sets),
    ("wavelet: trace bracket", check_trace_bracket),
    ("synthesis: X(0) = 0", check_origin_zero),
    ("synthesis: determinism", check_determinism),
    ("synthesis: refinement convergence", check_spectral_convergence),
    ("besov: norm orderings", check_besov_orderings),
    ("estimate: argmax scale invariance", check_argmax_invariance),
    ("estimate: n_j growth", check_nj_growth),
]


@contextlib.contextmanager
def _fault(name: str | None):
    if name is None:
        yield
        return
    if name != "filter-tap":
        raise ValueError(f"unknown fault {name!r}; choose from {FAULTS}")
    original = wavelet.daubechies_filter

    def broken(order):
        h = original(order).copy()
        h[1] = -h[1]
        return h

    with mock.patch.object(wavelet, "daubechies_filter", broken):
        yield


def run_selftest(fault: str | None = None, checks=None) -> SelfTestReport:
    """Run the checks (all by default), optionally under an injected fault."""
    report = SelfTestReport(fault=fault)
    with _fault(fault):
        for name, fn in (CHECKS if checks is None else checks):
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crashing check is a failing check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
                traceback.print_exc(limit=1)
            report.results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return report
