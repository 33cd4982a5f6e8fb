"""Anisotropy search: the candidate maximizing the critical exponent.

For a field with diagonal operator-scaling exponent ``E0`` and Hurst index
``H0``, the exponent read through a commuting candidate ``diag(lam, 2 - lam)``
is ``H0 * min(lam / lam1, (2 - lam) / lam2)``; its maximizer recovers ``E0``
and the maximum recovers ``H0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .besov import ExponentEstimate, critical_exponent_estimate
from .errors import DomainError, InsufficientDataError, NumericError
from .wavelet import DiagonalAnisotropy, WaveletCoefficientSet, anisotropic_wavelet_transform

__all__ = [
    "CandidateFamily",
    "SearchResult",
    "candidate_grid",
    "anisotropy_search",
    "predicted_exponent",
    "fit_tent",
    "normalized_coefficient_stats",
    "ScaleStats",
    "gamma_window_count",
]

OUTSIDE_HYPOTHESIS = "outside theorem hypothesis"


@dataclass(frozen=True)
class CandidateFamily:
    """Trace-normalized candidate anisotropies, searched in order.

    Members are usually :class:`DiagonalAnisotropy`; square arrays are
    accepted too and are reported as lying outside the commuting setting.
    """

    members: tuple
    description: str = ""

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DomainError("candidate family is empty")
        for m in members:
            tr = sum(m.lam) if isinstance(m, DiagonalAnisotropy) else float(np.trace(m))
            dim = m.d if isinstance(m, DiagonalAnisotropy) else np.shape(m)[0]
            if abs(tr - dim) > 1e-9:
                raise DomainError(f"candidate {m} is not trace-normalized")
        keys = [_key(m) for m in members]
        if len(set(keys)) != len(keys):
            raise DomainError("candidate family has repeated members")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def to_dict(self) -> dict:
        return {"description": self.description,
                "members": [_member_json(m) for m in self.members]}

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateFamily":
        if "members" not in data:
            lo, hi, step = data["lambda_lo"], data["lambda_hi"], data["step"]
            return candidate_grid(int(data.get("d", 2)), lo, hi, step)
        members = []
        for m in data["members"]:
            arr = np.asarray(m, dtype=float)
            if arr.ndim == 1:
                members.append(DiagonalAnisotropy(tuple(arr)))
            elif arr.ndim == 2 and np.allclose(arr, np.diag(np.diag(arr))):
                members.append(DiagonalAnisotropy(tuple(np.diag(arr))))
            else:
                members.append(arr)
        return cls(tuple(members), data.get("description", ""))


def _key(m) -> tuple:
    if isinstance(m, DiagonalAnisotropy):
        return tuple(np.diag(m.lam).round(12).ravel())
    return tuple(np.asarray(m, dtype=float).round(12).ravel())


def _member_json(m):
    if isinstance(m, DiagonalAnisotropy):
        return list(m.lam)
    return np.asarray(m, dtype=float).tolist()


def candidate_grid(d: int, param_lo: float, param_hi: float, step: float) -> CandidateFamily:
    """``diag(lam, 2 - lam)`` for ``lam = param_lo, param_lo + step, ..., param_hi``.

    Grid values are rounded to 12 decimals so that ``0.1`` steps land on the
    intended decimals.
    """
    if d != 2:
        raise DomainError(f"candidate grids are defined for d = 2, got d = {d}")
    if not (step > 0 and 0 < param_lo <= param_hi):
        raise DomainError(f"need 0 < lo <= hi and step > 0, got ({param_lo}, {param_hi}, {step})")
    count = int(math.floor((param_hi - param_lo) / step + 1e-9)) + 1
    lams = [round(param_lo + i * step, 12) for i in range(count)]
    for lam in lams:
        if lam <= 0 or 2 - lam <= 0:
            raise DomainError(f"candidate diag({lam}, {2 - lam}) is not positive")
    members = tuple(DiagonalAnisotropy((lam, round(2 - lam, 12))) for lam in lams)
    desc = f"diag(lambda, 2-lambda), lambda in [{lams[0]}, {lams[-1]}] step {step}"
    return CandidateFamily(members, desc)


@dataclass
class SearchResult:
    """Per-candidate exponents and the maximizing candidate.

    ``curve`` lists ``(lambda, alpha_hat, stderr, alpha_predicted)``; the
    prediction needs the true ``E0, H0`` and is ``nan`` when they are not
    supplied.  ``votes`` counts the per-realization argmax.
    """

    per_candidate: list
    argmax: object
    H_hat: float
    curve: list
    votes: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    p: float = 2.0
    q: float = 2.0
    tent: dict = field(default_factory=dict)

    @property
    def argmax_lambda(self) -> float:
        return _param(self.argmax)

    def to_dict(self) -> dict:
        return {
            "argmax": _member_json(self.argmax),
            "argmax_lambda": self.argmax_lambda,
            "H_hat": self.H_hat,
            "p": _num(self.p), "q": _num(self.q),
            "flags": list(self.flags),
            "votes": {str(k): v for k, v in self.votes.items()},
            "tent": dict(self.tent),
            "curve": [{"lambda": lam, "alpha_hat": a, "stderr": se, "alpha_predicted": _num(pr)}
                      for lam, a, se, pr in self.curve],
            "per_candidate": [{"anisotropy": _member_json(m), "alpha_hat": e.alpha_hat,
                               "slope_stderr": e.slope_stderr, "j_range": list(e.j_range)}
                              for m, e in self.per_candidate],
        }


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def _param(m) -> float:
    if isinstance(m, DiagonalAnisotropy):
        return m.lam[0]
    return float(np.asarray(m)[0, 0])


def predicted_exponent(lam, E0_diag, H0: float) -> float:
    """Critical exponent of a diagonal field read through ``diag(lam)``.

    Both ``lam`` and ``E0_diag`` are diagonal exponent vectors with the same
    trace; the value is ``H0 * min_r lam_r / E0_r``.
    """
    lam = np.asarray(lam, dtype=float)
    E0_diag = np.asarray(E0_diag, dtype=float)
    return float(H0 * np.min(lam / E0_diag))


def fit_tent(lams, alphas) -> dict:
    """Least-squares fit of ``H * min(lam / l0, (2 - lam) / (2 - l0))``.

    Returns the fitted ``lambda0``, ``H`` and the coefficient of
    determination ``r2`` of the fit.
    """
    lams = np.asarray(lams, dtype=float)
    y = np.asarray(alphas, dtype=float)
    if lams.size < 3:
        raise InsufficientDataError("a tent fit needs at least three candidates")

    def shape(l0):
        return np.minimum(lams / l0, (2 - lams) / (2 - l0))

    def sse(l0):
        b = shape(l0)
        H = float(b @ y / (b @ b))
        return float(np.sum((y - H * b) ** 2))

    grid = np.linspace(0.05, 1.95, 381)
    l0 = grid[np.argmin([sse(g) for g in grid])]
    res = minimize_scalar(sse, bounds=(max(0.01, l0 - 0.01), min(1.99, l0 + 0.01)), method="bounded")
    l0 = float(res.x)
    b = shape(l0)
    H = float(b @ y / (b @ b))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - sse(l0) / ss_tot if ss_tot > 0 else 1.0
    return {"lambda0": l0, "H": H, "r2": r2}


def _tie_key(m):
    lam = _param(m)
    return (abs(lam - 1.0), lam)


def _argmax(members, values):
    best = max(values)
    tied = [m for m, v in zip(members, values) if v == best]
    return min(tied, key=_tie_key)


def anisotropy_search(realizations, family: CandidateFamily, p: float = 2.0, q: float = 2.0,
                      j_range=None, truth=None, parallelism: int = 1,
                      **estimator_options) -> SearchResult:
    """Estimate the critical exponent for every candidate and return the maximizer.

    Parameters
    ----------
    realizations : sequence of FieldRealization or arrays
        Independent realizations of the field.  ``alpha_hat`` is averaged
        across them before the argmax; the per-realization argmax is
        reported as ``votes``.
    family : CandidateFamily
    truth : (E0_diag, H0), optional
        When given, the predicted curve is attached to ``curve``.
    estimator_options
        Passed to :func:`~osgrf.besov.critical_exponent_estimate`
        (``boundary`` is used for the transform).
    """
    realizations = list(realizations)
    if not realizations:
        raise InsufficientDataError("anisotropy_search needs at least one realization")
    boundary = estimator_options.pop("boundary", "symmetric")
    flags = []
    members = list(family.members)
    analysed = []
    for m in members:
        if isinstance(m, DiagonalAnisotropy):
            analysed.append(m)
        else:
            # non-diagonal candidates are read through their diagonal part
            flags.append(f"{_member_json(m)}: {OUTSIDE_HYPOTHESIS}")
            analysed.append(DiagonalAnisotropy(tuple(np.diag(np.asarray(m, dtype=float)))))

    def one(D):
        ests = []
        for real in realizations:
            coeffs = anisotropic_wavelet_transform(real, D, boundary=boundary)
            ests.append(critical_exponent_estimate(coeffs, p, q, j_range, **estimator_options))
        return ests

    if parallelism > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(parallelism) as pool:
            per_real = list(pool.map(one, analysed))
    else:
        per_real = [one(D) for D in analysed]

    alpha = []
    per_candidate = []
    curve = []
    for m, ests in zip(members, per_real):
        vals = np.array([e.alpha_hat for e in ests])
        if not np.all(np.isfinite(vals)):
            raise NumericError(f"non-finite exponent estimate for candidate {_member_json(m)}")
        a = float(vals.mean())
        if len(ests) > 1:
            se = float(vals.std(ddof=1) / math.sqrt(len(ests)))
        else:
            se = ests[0].slope_stderr
        summary = ExponentEstimate(ests[0].anisotropy, ests[0].p, ests[0].q, ests[0].per_scale,
                                   a, se, ests[0].j_range, ests[0].intercept, ests[0].counts)
        summary.meta = {"per_realization": vals.tolist()}
        alpha.append(a)
        per_candidate.append((m, summary))
        pr = float("nan")
        if truth is not None and isinstance(m, DiagonalAnisotropy):
            pr = predicted_exponent(m.lam, truth[0], truth[1])
        curve.append((_param(m), a, se, pr))

    best = _argmax(members, alpha)
    votes = {}
    for i in range(len(realizations)):
        vals = [ests[i].alpha_hat for ests in per_real]
        lam = _param(_argmax(members, vals))
        votes[lam] = votes.get(lam, 0) + 1
    tent = {}
    if len(members) >= 3 and not flags:
        tent = fit_tent([c[0] for c in curve], alpha)
    return SearchResult(per_candidate, best, float(max(alpha)), curve, votes, flags, p, q, tent)


# ---------------------------------------------------------------------------
# normalized coefficients


@dataclass
class ScaleStats:
    j: int
    mean_p: float
    max_norm: float
    n_j: int


def gamma_window_count(D0: DiagonalAnisotropy, j: int) -> int:
    """Number of ``k`` in ``Z^d`` with ``sum_l |k_l|**(1/lambda_l) < j 2**j``."""
    if j <= 0:
        return 0
    bound = j * 2.0 ** j
    lam = np.asarray(D0.lam)
    if len(lam) == 1:
        kmax = math.ceil(bound ** lam[0])
        k = np.arange(-kmax, kmax + 1)
        return int(np.count_nonzero(np.abs(k) ** (1 / lam[0]) < bound))
    # loop over the first axis, count the rest recursively in closed form for d = 2
    if len(lam) == 2:
        k1max = int(math.ceil(bound ** lam[0]))
        k1 = np.arange(-k1max, k1max + 1)
        rest = bound - np.abs(k1).astype(float) ** (1 / lam[0])
        rest = rest[rest > 0]
        r2 = rest ** lam[1]
        # |k2| < r2  <=>  |k2| <= ceil(r2) - 1
        m = np.ceil(r2) - 1
        return int(np.sum(2 * m + 1))
    raise DomainError("gamma_window_count is implemented for d <= 2")


def normalized_coefficient_stats(coeffs: WaveletCoefficientSet, p: float = 2.0,
                                 min_cells: int = 100, reference=None) -> list[ScaleStats]:
    """Per-scale moments of branch-normalized coefficients.

    Each branch ``(j, G, gamma)`` with at least ``min_cells`` coefficients is
    divided by a root mean square, giving ``g``.  For every scale the report
    holds ``mean(|g|**p)``, ``max|g| / sqrt(log n_j)`` and the number ``n_j``
    of pooled cells.

    Parameters
    ----------
    reference : sequence of WaveletCoefficientSet, optional
        Independent coefficient sets of the same field.  When given, each
        branch is scaled by the root mean square pooled over these sets, so
        ``mean(|g|**2)`` becomes a genuine test; otherwise the branch's own
        root mean square is used and that moment equals one by construction.
    """
    p = float(p)
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    if len(coeffs.scales) < 2:
        raise InsufficientDataError("need coefficients at two or more scales")
    out = []
    for j in coeffs.scales:
        pooled = []
        for key in coeffs.branches(j):
            arr = coeffs.coefficients[key]
            if arr.size < min_cells:
                continue
            if reference is None:
                rms = math.sqrt(float(np.mean(arr ** 2)))
            else:
                rms = math.sqrt(float(np.mean([np.mean(r.coefficients[key] ** 2) for r in reference])))
            if not rms > 0:
                raise NumericError(f"branch {key} has zero variance")
            pooled.append(np.ravel(arr) / rms)
        if not pooled:
            continue
        g = np.concatenate(pooled)
        n = g.size
        mean_p = float(np.max(np.abs(g))) if math.isinf(p) else float(np.mean(np.abs(g) ** p))
        max_norm = float(np.max(np.abs(g)) / math.sqrt(math.log(n))) if n > 1 else float("nan")
        out.append(ScaleStats(j, mean_p, max_norm, n))
    if not out:
        raise InsufficientDataError(f"no branch has {min_cells} or more coefficients")
    return out
