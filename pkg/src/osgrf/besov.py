"""Anisotropic Besov norms and critical exponents from wavelet coefficients.

With the sup-normalized coefficients of :mod:`osgrf.wavelet`, membership in
``B^s_{p,q}(D)`` reads

    sum_j j^(-beta q) 2^(j (s - d/p) q) S_j^q < inf,
    S_j = (sum_{(G, gamma) in I^j} sum_k |c|^p)^(1/p),

so the decay rate of ``S_j`` in ``j`` identifies the critical smoothness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDataError, NumericError
from .wavelet import DiagonalAnisotropy, WaveletCoefficientSet, grid_index_set

__all__ = [
    "BesovSpec",
    "ExponentEstimate",
    "scale_sums",
    "besov_norm",
    "fit_critical_exponent",
    "critical_exponent_estimate",
    "default_j_range",
    "envelope_scales",
]

MIN_SCALES = 4


def _check_pq(value, name: str) -> float:
    value = float(value)
    if not value >= 1:
        raise DomainError(f"{name} must lie in [1, inf], got {value}")
    return value


@dataclass(frozen=True)
class BesovSpec:
    s: float
    p: float
    q: float
    beta: float = 0.0
    anisotropy: DiagonalAnisotropy | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", _check_pq(self.p, "p"))
        object.__setattr__(self, "q", _check_pq(self.q, "q"))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "beta", float(self.beta))


@dataclass
class ExponentEstimate:
    """Fitted critical exponent for one analysing anisotropy and ``(p, q)``.

    ``per_scale`` lists ``(j, S_j)`` for every computed scale; the fit uses
    the scales in ``j_range`` (inclusive).
    """

    anisotropy: DiagonalAnisotropy
    p: float
    q: float
    per_scale: list[tuple[int, float]]
    alpha_hat: float
    slope_stderr: float
    j_range: tuple[int, int]
    intercept: float = 0.0
    counts: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def log2_table(self) -> list[tuple[int, float]]:
        return [(j, math.log2(S)) for j, S in self.per_scale if S > 0]

    def to_dict(self) -> dict:
        return {"anisotropy": list(self.anisotropy.lam), "p": _jsonable(self.p), "q": _jsonable(self.q),
                "alpha_hat": self.alpha_hat, "slope_stderr": self.slope_stderr,
                "j_range": list(self.j_range), "intercept": self.intercept,
                "per_scale": [[j, S] for j, S in self.per_scale], "meta": dict(self.meta)}


def _jsonable(v: float):
    return "inf" if math.isinf(v) else v


def _expected_branches(coeffs: WaveletCoefficientSet, j: int) -> list[tuple]:
    return [(j, G, gamma) for G, gamma in grid_index_set(coeffs.anisotropy, j, coeffs.levels)]


def scale_sums(coeffs: WaveletCoefficientSet, p: float, scales=None) -> dict[int, float]:
    """``S_j`` for each requested scale (all stored scales by default)."""
    p = _check_pq(p, "p")
    scales = coeffs.scales if scales is None else list(scales)
    out = {}
    for j in scales:
        keys = _expected_branches(coeffs, j)
        missing = [k for k in keys if k not in coeffs.coefficients]
        if missing:
            raise DomainError(f"coefficients for scale {j} are missing ({len(missing)} branches)")
        arrays = [np.abs(coeffs.coefficients[k]) for k in keys]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise NumericError(f"non-finite coefficients at scale {j}")
        if not arrays:
            out[j] = 0.0
        elif math.isinf(p):
            out[j] = float(max(a.max() for a in arrays))
        else:
            # factor out the maximum to avoid under/overflow in |c|^p
            top = max(float(a.max()) for a in arrays)
            if top == 0:
                out[j] = 0.0
            else:
                total = sum(float(np.sum((a / top) ** p)) for a in arrays)
                out[j] = top * total ** (1.0 / p)
    return out


def besov_norm(coeffs: WaveletCoefficientSet, spec: BesovSpec, j_max: int | None = None) -> float:
    """Truncated discrete norm ``(sum_j j^(-beta q) 2^(j (s - d/p) q) S_j^q)^(1/q)``.

    Scales run from 1 (from 0 when ``beta == 0``) to ``j_max`` (default: the
    largest stored scale); ``q = inf`` takes the supremum of the terms.
    """
    d = coeffs.d
    j_max = max(coeffs.scales) if j_max is None else int(j_max)
    j_lo = 0 if spec.beta == 0 else 1
    S = scale_sums(coeffs, spec.p, range(j_lo, j_max + 1))
    dp = 0.0 if math.isinf(spec.p) else d / spec.p
    terms = np.array([
        (float(j) ** (-spec.beta) if j > 0 else 1.0) * 2.0 ** (j * (spec.s - dp)) * S[j]
        for j in range(j_lo, j_max + 1)
    ])
    if not np.all(np.isfinite(terms)):
        raise NumericError("non-finite Besov norm term")
    if math.isinf(spec.q):
        return float(terms.max(initial=0.0))
    return float(np.sum(terms ** spec.q) ** (1.0 / spec.q))


def fit_critical_exponent(js, S, d: int, p: float, counts=None) -> tuple[float, float, float]:
    """Least-squares fit of ``log2 S_j = (d/p - alpha) j + c``.

    With ``counts`` (the number ``n_j`` of coefficients per scale) the
    idealized ``d j / p`` is replaced by ``log2(n_j) / p``, i.e. the fit is
    ``log2 S_j - log2(n_j)/p = -alpha j + c``.  Returns ``(alpha_hat, stderr, c)``.
    """
    js = np.asarray(js, dtype=float)
    S = np.asarray(S, dtype=float)
    if len(js) < MIN_SCALES:
        raise InsufficientDataError(f"need at least {MIN_SCALES} scales, got {len(js)}")
    if not np.all(np.isfinite(S)) or np.any(S <= 0):
        raise NumericError("per-scale sums must be finite and positive")
    dp = 0.0 if math.isinf(p) else d / p
    y = np.log2(S)
    if counts is not None:
        y = y - (0.0 if math.isinf(p) else np.log2(np.asarray(counts, dtype=float)) / p)
        dp = 0.0
    slope, se, c = _line(js, y)
    return float(dp - slope), se, c


def _line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0))), float(coef[1])


def envelope_scales(js, y, tau: float = 0.3, min_scales: int = MIN_SCALES) -> np.ndarray:
    """Mask of the scales kept by an upper-envelope line fit.

    Repeatedly fits a line to the kept points and drops the point lying
    furthest below it, as long as that point is more than ``tau`` below the
    line and more than ``min_scales`` points remain.
    """
    js = np.asarray(js, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.ones(js.size, dtype=bool)
    while keep.sum() > min_scales:
        slope, _, c = _line(js[keep], y[keep])
        resid = np.where(keep, y - (slope * js + c), np.inf)
        worst = int(np.argmin(resid))
        if resid[worst] >= -tau:
            break
        keep[worst] = False
    return keep


def default_j_range(coeffs: WaveletCoefficientSet) -> tuple[int, int]:
    """``[2, j_hi]`` with ``j_hi`` the first scale at which the grid caps a level.

    ``j_hi`` is the largest ``j`` with ``floor(j lambda_r) <= K_r + 1`` on
    every axis, ``K_r`` being the number of dyadic levels of the analysed
    grid: past it whole branch families disappear from the index sets.
    """
    lam = coeffs.anisotropy.lam
    j = 2
    while all(math.floor((j + 1) * l) <= K + 1 for l, K in zip(lam, coeffs.levels)):
        j += 1
    return 2, min(j, max(coeffs.scales))


def _branch_normalized(coeffs: WaveletCoefficientSet, p: float, j: int) -> float:
    """``(sum_branches mean_k |c|^p)^(1/p)``: ``S_j`` with every branch given ``2**(j d)`` cells."""
    arrays = [np.abs(coeffs.coefficients[k]) for k in _expected_branches(coeffs, j)]
    if not arrays:
        return 0.0
    if math.isinf(p):
        return float(max(a.max() for a in arrays))
    top = max(float(a.max()) for a in arrays)
    if top == 0:
        return 0.0
    return top * sum(float(np.mean((a / top) ** p)) for a in arrays) ** (1.0 / p)


COUNT_MODES = ("branch", "cell", "none")


def critical_exponent_estimate(coeffs: WaveletCoefficientSet, p: float = 2.0, q: float = 2.0,
                               j_range: tuple[int, int] | None = None, counts: str = "branch",
                               envelope: bool = True, tau: float = 0.3) -> ExponentEstimate:
    """Estimate the critical exponent ``alpha(D, p, q)`` from the decay of ``S_j``.

    The fit is ``log2 S_j = (d/p - alpha) j + c`` over ``j_range``, with two
    finite-grid corrections.

    ``counts``
        The floors in the index sets make the number of cells per branch
        oscillate around ``2**(j d)`` by up to ``2**d``, and the number of
        branches per scale varies as well.  With ``"branch"`` (default)
        every branch is credited with exactly ``2**(j d)`` cells, i.e. the
        fit uses ``(sum_b mean_k |c|^p)^(1/p)``; ``"cell"`` uses the actual
        total count ``n_j`` and ``"none"`` the raw ``S_j``.
    ``envelope``
        At scales where ``floor(j lambda_r)`` does not advance the wavelets
        along axis ``r`` are absent.  If that axis carries the slowest
        decay, ``S_j`` dips far below the trend.  The membership sum is
        governed by the upper envelope, so points more than ``tau`` (in
        ``log2``) below the fitted line are discarded one at a time while
        at least four scales remain.

    ``q`` is recorded but does not enter the point estimate: it only moves
    the norm by logarithmic factors.
    """
    p = _check_pq(p, "p")
    q = _check_pq(q, "q")
    if counts not in COUNT_MODES:
        raise DomainError(f"counts must be one of {COUNT_MODES}, got {counts!r}")
    lo, hi = default_j_range(coeffs) if j_range is None else (int(j_range[0]), int(j_range[1]))
    if hi - lo + 1 < MIN_SCALES:
        raise InsufficientDataError(
            f"scale range [{lo}, {hi}] has fewer than {MIN_SCALES} scales")
    available = [j for j in coeffs.scales if lo <= j <= hi]
    if len(available) != hi - lo + 1:
        raise InsufficientDataError(f"coefficients do not cover scales {lo}..{hi}")
    S = scale_sums(coeffs, p)
    n = {j: sum(coeffs.coefficients[k].size for k in coeffs.branches(j)) for j in S}
    usable = [j for j in available if S[j] > 0]
    if len(usable) < MIN_SCALES:
        raise InsufficientDataError(f"only {len(usable)} scales in [{lo}, {hi}] carry coefficients")
    if not all(math.isfinite(S[j]) for j in usable):
        raise NumericError("non-finite per-scale sum")
    js = np.array(usable, dtype=float)
    d = coeffs.d
    dp = 0.0 if math.isinf(p) else d / p
    if counts == "branch":
        y = np.log2([_branch_normalized(coeffs, p, j) for j in usable])
        dp = 0.0
    elif counts == "cell":
        y = np.log2([S[j] for j in usable]) - (0.0 if math.isinf(p) else np.log2([n[j] for j in usable]) / p)
        dp = 0.0
    else:
        y = np.log2([S[j] for j in usable])
    keep = envelope_scales(js, y, tau) if envelope else np.ones(js.size, dtype=bool)
    slope, se, c = _line(js[keep], y[keep])
    est = ExponentEstimate(coeffs.anisotropy, p, q, sorted(S.items()), float(dp - slope), se, (lo, hi), c, n)
    est.meta = {"scales_used": [int(j) for j in js[keep]], "counts": counts, "envelope": bool(envelope),
                "fit_values": [[int(j), float(v)] for j, v in zip(js, y)]}
    return est
