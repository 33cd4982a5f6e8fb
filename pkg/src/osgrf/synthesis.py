"""Spectral synthesis of operator-scaling Gaussian random fields.

The field is the Riemann-sum discretization of the harmonizable integral

    X(x) = int (e^{i<x, xi>} - 1) rho(xi)^{-H0 - Tr(E0)/2} dW(xi)

on nested frequency lattices.  The base lattice covers the grid's Nyquist
band and is evaluated with an FFT; frequencies outside the band alias onto
the grid exactly, so the spectral mass of ``aliases`` neighbouring bands is
folded into each base cell.  Near the origin, where the density varies on
the scale of the cells themselves, the central block of ``2 M + 1`` cells
per axis is replaced by a lattice twice as fine, whose own central block is
refined again, ``levels`` times.  Each refined lattice is a tensor grid, so
its contribution is two small matrix products.

Every cell carries an independent complex circular Gaussian and the real
field is ``sqrt(2) Re(sum_cells ...)``, which has the same law as the
Hermitian-symmetrized sum.  The spectral measure has unit density, so only
variogram ratios are meaningful.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, InsufficientDataError, InvalidSpecError
from .linalg import AnisotropyMatrix
from .pseudonorm import (DiagonalPseudoNorm, EuclideanPseudoNorm, IntegralPseudoNorm, PseudoNorm,
                         pseudonorm_from_dict)
from .rng import cell_gaussians

__all__ = [
    "FieldSpec",
    "FieldRealization",
    "Variogram",
    "synthesize_field",
    "synthesize_many",
    "model_variogram",
    "variogram_estimate",
    "variogram_map",
    "scaling_law_check",
    "ScalingLawReport",
]

DEFAULT_LEVELS = 8
DEFAULT_BLOCK = 16
MAX_ALIASES = 64


def _auto_aliases(E0: AnisotropyMatrix, spacing) -> tuple[int, ...]:
    """Number of aliased bands folded in per axis on each side.

    Along axis ``r`` the spectral density stays comparable to its value at the
    other axes' Nyquist frequency ``B_s`` out to ``B_s**(lam_r / lam_s)``.
    """
    band = np.pi / np.asarray(spacing)
    if E0.is_diagonal:
        lam = np.diag(np.asarray(E0.entries))
        reach = [max(b ** (lam[r] / lam[s]) for s, b in enumerate(band)) for r in range(len(band))]
    else:
        ratio = E0.rho_max / E0.rho_min
        reach = [max(b ** ratio for b in band)] * len(band)
    return tuple(int(min(MAX_ALIASES, math.ceil(x / (2 * b) + 0.5))) for x, b in zip(reach, band))


def _tuple(value, d: int, cast) -> tuple:
    if np.ndim(value) == 0:
        return (cast(value),) * d
    out = tuple(cast(v) for v in value)
    if len(out) != d:
        raise InvalidSpecError(f"expected {d} entries, got {len(out)}")
    return out


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """Model ``(E0, H0, rho)`` plus grid, lattice and seed.

    Use :meth:`create` for the common cases; the constructor validates the
    existence condition ``0 < H0 < rho_min(E0)``, the trace normalization
    and that ``rho`` is ``E0^T``-homogeneous.

    ``lattice`` is the base lattice size per axis (at least the grid size),
    ``levels`` the number of dyadic refinements near the origin, ``block``
    the half-width ``M`` in cells of each refined central block and
    ``aliases`` the number of folded bands per axis (automatic by default).
    """

    E0: AnisotropyMatrix
    H0: float
    rho: PseudoNorm
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    lattice: tuple[int, ...]
    levels: int = DEFAULT_LEVELS
    seed: int = 0
    aliases: tuple[int, ...] | None = None
    block: int = DEFAULT_BLOCK

    def __post_init__(self):
        E0 = self.E0 if isinstance(self.E0, AnisotropyMatrix) else AnisotropyMatrix.from_matrix(self.E0)
        object.__setattr__(self, "E0", E0)
        d = E0.d
        if abs(E0.trace - d) > 1e-10:
            raise InvalidSpecError(f"E0 must have trace d={d}, got {E0.trace}")
        H0 = float(self.H0)
        object.__setattr__(self, "H0", H0)
        if not (0 < H0 < E0.rho_min):
            raise InvalidSpecError(
                f"the field exists only for 0 < H0 < rho_min(E0) = {E0.rho_min:.6g}; got H0 = {H0}")
        if self.rho.d != d:
            raise InvalidSpecError("pseudo-norm dimension differs from E0")
        if np.max(np.abs(np.asarray(self.rho.homogeneity.entries) - np.asarray(E0.entries).T)) > 1e-10:
            raise InvalidSpecError("pseudo-norm must be homogeneous for the transpose of E0")
        shape = _tuple(self.shape, d, int)
        spacing = _tuple(self.spacing, d, float)
        lattice = _tuple(self.lattice, d, int)
        if any(n < 2 for n in shape) or any(not (s > 0 and math.isfinite(s)) for s in spacing):
            raise InvalidSpecError(f"bad grid geometry shape={shape} spacing={spacing}")
        for n, N in zip(shape, lattice):
            if N < n or N % 2:
                raise ConfigurationError(
                    f"frequency lattice size {N} must be even and at least the grid size {n}")
        levels, block = int(self.levels), int(self.block)
        if levels < 0 or block < 1:
            raise InvalidSpecError("refinement levels must be >= 0 and the block half-width >= 1")
        if levels and 2 * block + 1 > min(lattice):
            raise ConfigurationError(f"refinement block of {2 * block + 1} cells exceeds the lattice")
        seed = int(self.seed)
        if not 0 <= seed < 2 ** 64:
            raise InvalidSpecError("seed must be an unsigned 64-bit integer")
        aliases = _auto_aliases(E0, spacing) if self.aliases is None else _tuple(self.aliases, d, int)
        if any(a < 0 for a in aliases):
            raise InvalidSpecError("alias counts must be non-negative")
        for name, value in [("shape", shape), ("spacing", spacing), ("lattice", lattice), ("levels", levels),
                            ("block", block), ("seed", seed), ("aliases", aliases)]:
            object.__setattr__(self, name, value)

    @classmethod
    def create(cls, E0, H0: float, rho="diagonal", n=256, spacing=None, lattice=None,
               levels: int = DEFAULT_LEVELS, seed: int = 0, aliases=None,
               block: int | None = None) -> "FieldSpec":
        """Build a spec, choosing the pseudo-norm by name.

        ``rho`` may be a :class:`PseudoNorm` or one of ``"diagonal"``
        (requires diagonal ``E0``), ``"integral"`` or ``"euclidean"``
        (requires ``E0 = Id``).  Grid spacing defaults to ``1/n`` (unit
        domain) and the lattice to the grid size.
        """
        E0 = E0 if isinstance(E0, AnisotropyMatrix) else AnisotropyMatrix.from_matrix(E0)
        d = E0.d
        ET = np.asarray(E0.entries).T
        if isinstance(rho, str):
            if rho == "diagonal":
                if not E0.is_diagonal:
                    raise InvalidSpecError("the diagonal pseudo-norm needs a diagonal E0")
                rho = DiagonalPseudoNorm(np.diag(ET))
            elif rho == "integral":
                rho = IntegralPseudoNorm(ET)
            elif rho == "euclidean":
                if np.max(np.abs(ET - np.eye(d))) > 1e-12:
                    raise InvalidSpecError("the Euclidean norm is only homogeneous for E0 = Id")
                rho = EuclideanPseudoNorm(d)
            else:
                raise InvalidSpecError(f"unknown pseudo-norm {rho!r}")
        shape = _tuple(n, d, int)
        spacing = tuple(1.0 / s for s in shape) if spacing is None else spacing
        lattice = shape if lattice is None else lattice
        if block is None:
            block = max(1, min(DEFAULT_BLOCK, (min(_tuple(lattice, d, int)) - 1) // 4))
        return cls(E0, H0, rho, shape, spacing, lattice, levels, seed, aliases, block)

    @property
    def d(self) -> int:
        return self.E0.d

    def replace(self, **changes) -> "FieldSpec":
        return dataclasses.replace(self, **changes)

    def with_seed(self, seed: int) -> "FieldSpec":
        return self.replace(seed=seed)

    def with_rho(self, rho: PseudoNorm) -> "FieldSpec":
        return self.replace(rho=rho)

    def to_dict(self) -> dict:
        return {"d": self.d, "E0": self.E0.tolist(), "H0": self.H0, "pseudonorm": self.rho.to_dict(),
                "grid": list(self.shape), "spacing": list(self.spacing), "lattice": list(self.lattice),
                "levels": self.levels, "block": self.block, "aliases": list(self.aliases),
                "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "FieldSpec":
        try:
            E0 = AnisotropyMatrix.from_matrix(np.asarray(data["E0"], dtype=float))
            rho_spec = data.get("pseudonorm", "diagonal")
            rho = rho_spec if isinstance(rho_spec, str) else pseudonorm_from_dict(rho_spec)
            return cls.create(E0, data["H0"], rho, n=data.get("grid", 256), spacing=data.get("spacing"),
                              lattice=data.get("lattice"), levels=data.get("levels", DEFAULT_LEVELS),
                              seed=data.get("seed", 0), aliases=data.get("aliases"),
                              block=data.get("block"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, (InvalidSpecError, ConfigurationError)):
                raise
            raise InvalidSpecError(f"malformed field spec: {exc}") from exc

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- spectral discretization ----------------------------------------------
    @property
    def frequency_steps(self) -> np.ndarray:
        return np.array([2 * np.pi / (N * dx) for N, dx in zip(self.lattice, self.spacing)])

    def lattice_frequencies(self) -> list[np.ndarray]:
        """Per-axis base lattice frequencies in FFT order."""
        return [np.fft.fftfreq(N, 1.0 / N) * step for N, step in zip(self.lattice, self.frequency_steps)]

    @property
    def spectral_levels(self) -> list["SpectralLevel"]:
        """Base lattice followed by the refined lattices, finest last."""
        return _spectral_levels(self)


@dataclass(frozen=True)
class SpectralLevel:
    """One tensor lattice: per-axis cell centres and per-cell amplitudes.

    Amplitudes are ``sqrt`` of the spectral mass of each cell and zero on
    cells handed to the next, finer level.
    """

    freqs: tuple[np.ndarray, ...]
    weights: np.ndarray


_LEVEL_CACHE: dict = {}


def _spectral_levels(spec: FieldSpec) -> list[SpectralLevel]:
    data = spec.to_dict()
    data.pop("seed")
    key = json.dumps(data, sort_keys=True)
    if key not in _LEVEL_CACHE:
        if len(_LEVEL_CACHE) >= 8:
            _LEVEL_CACHE.pop(next(iter(_LEVEL_CACHE)))
        _LEVEL_CACHE[key] = _build_levels(spec)
    return _LEVEL_CACHE[key]


def _density(spec: FieldSpec, xi: np.ndarray) -> np.ndarray:
    r = spec.rho.evaluate_many(xi)
    out = np.zeros(r.shape)
    nz = r > 0
    out[nz] = r[nz] ** (-2 * spec.H0 - spec.E0.trace)
    return out


def _tensor_points(freqs) -> np.ndarray:
    return np.stack(np.meshgrid(*freqs, indexing="ij"), axis=-1)


def _build_levels(spec: FieldSpec) -> list[SpectralLevel]:
    d, M = spec.d, spec.block
    step = spec.frequency_steps
    band = 2 * np.pi / np.asarray(spec.spacing)
    freqs = spec.lattice_frequencies()
    grid = _tensor_points(freqs)
    vol = float(np.prod(step))
    var = vol * _density(spec, grid)
    # frequencies beyond the band alias onto the grid: fold their mass in
    for k in np.ndindex(*(2 * a + 1 for a in spec.aliases)):
        shift = (np.array(k) - np.array(spec.aliases)) * band
        if np.any(shift):
            var += vol * _density(spec, grid + shift)
    if spec.levels:
        central = np.ones(spec.lattice, dtype=bool)
        for axis, N in enumerate(spec.lattice):
            m = np.fft.fftfreq(N, 1.0 / N)
            shape = [1] * d
            shape[axis] = N
            central &= (np.abs(m) <= M).reshape(shape)
        var[central] = 0.0
    var.flat[0] = 0.0
    out = [SpectralLevel(tuple(freqs), np.sqrt(var))]
    # refined levels: cells of width step / 2**l centred at (k + 1/2) step / 2**l
    half = M + 0.5  # half-width of the region handed down, in parent cells
    for lev in range(1, spec.levels + 1):
        cell = step / 2 ** lev
        K = int(round(2 * half))
        k = np.arange(-K, K) + 0.5
        freqs = tuple(k * c for c in cell)
        var = float(np.prod(cell)) * _density(spec, _tensor_points(freqs))
        if lev < spec.levels:
            inner = np.all(np.abs(_tensor_points([k] * d)) < M, axis=-1)
            var[inner] = 0.0
        out.append(SpectralLevel(freqs, np.sqrt(var)))
        half = M
    for level in out:
        level.weights.setflags(write=False)
    return out


@dataclass(eq=False)
class FieldRealization:
    values: np.ndarray
    spec: FieldSpec
    replicate_index: int = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


@dataclass
class Variogram:
    """Empirical variogram: ``v[i]`` estimates ``E|X(lags[i])|**2``."""

    lags: np.ndarray
    v: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)


def _tensor_transform(coef: np.ndarray, phases: list[np.ndarray]) -> np.ndarray:
    # sum_k coef[k] prod_r phases[r][x_r, k_r], one axis at a time
    out = coef
    for axis, P in enumerate(phases):
        out = np.moveaxis(np.tensordot(P, out, axes=([1], [axis])), 0, axis)
    return out


def synthesize_field(spec: FieldSpec, replicate: int = 0) -> FieldRealization:
    """One realization on the spec's grid, deterministic in ``(seed, replicate)``.

    Cell ``i`` of the concatenated levels always uses counter block ``i`` of
    the replicate's stream.
    """
    replicate = int(replicate)
    if replicate < 0:
        raise DomainError("replicate index must be non-negative")
    levels = spec.spectral_levels
    sizes = [lv.weights.size for lv in levels]
    g = cell_gaussians(spec.seed, replicate, 0, sum(sizes))
    base = levels[0]
    ncell = sizes[0]
    F = np.fft.ifftn(base.weights * g[:ncell].reshape(base.weights.shape)) * ncell
    X = F[tuple(slice(0, n) for n in spec.shape)]
    X = X - X.flat[0]
    start = ncell
    coords = [np.arange(n) * dx for n, dx in zip(spec.shape, spec.spacing)]
    for lv, size in zip(levels[1:], sizes[1:]):
        coef = lv.weights * g[start:start + size].reshape(lv.weights.shape)
        start += size
        phases = [np.exp(1j * np.outer(x, f)) for x, f in zip(coords, lv.freqs)]
        X = X + _tensor_transform(coef, phases) - coef.sum()
    values = math.sqrt(2.0) * X.real
    values.flat[0] = 0.0
    if not np.all(np.isfinite(values)):
        raise InvalidSpecError("synthesis produced non-finite values")
    return FieldRealization(values, spec, replicate)


def synthesize_many(spec: FieldSpec, replicates, parallelism: int = 1) -> list[FieldRealization]:
    """Realizations for the given replicate indices (or ``range(replicates)``).

    Output order and values do not depend on ``parallelism``.
    """
    idx = list(range(replicates)) if np.ndim(replicates) == 0 else [int(r) for r in replicates]
    if parallelism <= 1 or len(idx) <= 1:
        return [synthesize_field(spec, r) for r in idx]
    with ThreadPoolExecutor(max_workers=int(parallelism)) as pool:
        return list(pool.map(lambda r: synthesize_field(spec, r), idx))


def model_variogram(spec: FieldSpec, lags, levels: int | None = None) -> np.ndarray:
    """Variogram of the discretized model, ``sum_cells w**2 |e^{i<h, xi>} - 1|**2``.

    Exact for on-grid lags.  ``levels`` overrides the spec's refinement depth.
    """
    if levels is not None:
        spec = spec.replace(levels=levels)
    lags = np.atleast_2d(np.asarray(lags, dtype=float))
    out = np.zeros(len(lags))
    for lv in spec.spectral_levels:
        w2 = lv.weights ** 2
        for i, h in enumerate(lags):
            # 2 - 2 cos(<h, xi>) over a tensor lattice via per-axis exponentials
            ph = [np.exp(1j * hr * f) for hr, f in zip(h, lv.freqs)]
            e = ph[0]
            for p in ph[1:]:
                e = np.multiply.outer(e, p)
            out[i] += float(np.sum(w2 * (2.0 - 2.0 * e.real)))
    return out


# ---------------------------------------------------------------------------
# estimation


def _lag_offsets(lags, spacing) -> np.ndarray:
    lags = np.atleast_2d(np.asarray(lags, dtype=float))
    if lags.shape[1] != len(spacing):
        raise DomainError(f"lags must have {len(spacing)} components")
    steps = lags / np.asarray(spacing)
    offsets = np.rint(steps)
    if np.any(np.abs(steps - offsets) > 1e-9 * np.maximum(1.0, np.abs(steps))):
        raise DomainError("lag is not a multiple of the grid spacing")
    return offsets.astype(int)


def _increment_moment(values: np.ndarray, offset) -> float:
    src, dst = [], []
    for o, n in zip(offset, values.shape):
        if abs(o) >= n:
            raise DomainError(f"lag offset {o} does not fit a grid of {n} nodes")
        src.append(slice(max(0, -o), n - max(0, o)))
        dst.append(slice(max(0, o), n - max(0, -o)))
    diff = values[tuple(dst)] - values[tuple(src)]
    return float(np.mean(diff * diff))


def variogram_estimate(realizations, lags) -> Variogram:
    """Mean squared increments over base points and replicates.

    Only base points ``x`` with ``x + h`` inside the grid are used.  The
    standard error comes from the spread of the per-replicate means.
    """
    reals = list(realizations)
    if len(reals) < 2:
        raise InsufficientDataError("need at least two realizations")
    spec = reals[0].spec
    if any(r.spec.spec_hash() != spec.spec_hash() for r in reals[1:]):
        raise DomainError("realizations do not share one spec")
    offsets = _lag_offsets(lags, spec.spacing)
    per = np.array([[_increment_moment(r.values, o) for o in offsets] for r in reals])
    v = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(len(reals))
    return Variogram(offsets * np.asarray(spec.spacing), v, se, {"replicates": len(reals)})


def variogram_map(values: np.ndarray) -> np.ndarray:
    """All non-wrapping lag moments ``mean (X(x+h) - X(x))^2`` via FFT.

    Returns an array of shape ``2n - 1`` per axis; entry ``n - 1 + o`` holds
    the lag offset ``o``.
    """
    values = np.asarray(values, dtype=float)
    shape = values.shape
    pad = tuple(2 * n for n in shape)
    ones = np.ones(shape)

    def corr(a, b):
        axes = tuple(range(len(pad)))
        fa = np.fft.rfftn(a, pad, axes)
        fb = np.fft.rfftn(b, pad, axes)
        c = np.fft.irfftn(np.conj(fa) * fb, pad, axes)
        # c[o] = sum_x a(x) b(x + o); reorder to offsets -(n-1) .. n-1
        for axis, n in enumerate(shape):
            c = np.roll(c, n - 1, axis=axis)
        return c[tuple(slice(0, 2 * n - 1) for n in shape)]

    sq = values * values
    count = corr(ones, ones)
    total = corr(sq, ones) + corr(ones, sq) - 2 * corr(values, values)
    return np.maximum(total, 0.0) / np.maximum(np.rint(count), 1.0)


def _interp_log_map(logmap: np.ndarray, centre, pos: np.ndarray) -> np.ndarray:
    """Multilinear interpolation at fractional offsets ``pos`` (n_points, d)."""
    idx = pos + np.asarray(centre)
    base = np.floor(idx).astype(int)
    frac = idx - base
    out = np.zeros(len(pos))
    d = pos.shape[1]
    for corner in np.ndindex(*(2,) * d):
        wgt = np.prod(np.where(np.array(corner), frac, 1 - frac), axis=1)
        out += wgt * logmap[tuple((base + np.array(corner)).T)]
    return out


@dataclass
class ScalingLawReport:
    """Comparison of ``v(a^E0 h)`` with ``a^(2 H0) v(h)`` at matched lags."""

    a: tuple[float, ...]
    lags: np.ndarray
    ratios: np.ndarray
    H_hat: float
    H_stderr: float
    max_discrepancy: float
    passed: bool
    tolerance: float


def _default_scaling_lags(spec: FieldSpec, a_max: float, lo_px: float = 6.0, frac: float = 0.25) -> np.ndarray:
    d = spec.d
    dirs = [np.eye(d)[r] for r in range(d)]
    if d == 2:
        dirs += [np.array([1.0, 1.0]) / math.sqrt(2), np.array([1.0, -1.0]) / math.sqrt(2)]
    dx = np.asarray(spec.spacing)
    hi_px = frac * min(spec.shape)
    E = spec.E0
    big = E.power(a_max)
    lags = []
    for u in dirs:
        for t in np.geomspace(lo_px, hi_px, 12):
            h = t * u * dx
            ah = big @ h
            if np.all(np.abs(ah) / dx <= hi_px) and np.linalg.norm(ah / dx) >= lo_px:
                lags.append(h)
    if not lags:
        raise ConfigurationError("grid too small for a scaling-law check at this dilation")
    return np.array(lags)


def scaling_law_check(spec: FieldSpec, a=2.0, replicates: int = 200, lags=None,
                      realizations=None, tolerance: float = 0.05, parallelism: int = 1) -> ScalingLawReport:
    """Test ``X(a^E0 .) = a^H0 X(.)`` in law through the variogram.

    The variogram map of every realization is computed over all lags and
    averaged; values at the off-grid dilated lags ``a^E0 h`` are read by
    multilinear interpolation of ``log v``.  ``H_hat`` is the least-squares
    solution of ``log v(a^E0 h) - log v(h) = 2 H log a`` over all lags and
    dilations, with a standard error from the replicate-to-replicate spread
    (split into ten batches).
    """
    a_values = tuple(float(v) for v in np.atleast_1d(a))
    if any(not v > 0 for v in a_values):
        raise DomainError("dilation factors must be positive")
    if realizations is None:
        realizations = synthesize_many(spec, replicates, parallelism)
    reals = list(realizations)
    if not reals:
        raise InsufficientDataError("no realizations")
    # batch means of the variogram maps; holding all maps at once costs too much memory
    nb = min(10, len(reals))
    batches = np.array_split(np.arange(len(reals)), nb)
    batch_maps = [np.mean([variogram_map(reals[i].values) for i in b], axis=0) for b in batches]
    sizes = np.array([len(b) for b in batches], dtype=float)
    mean_map = np.tensordot(sizes / sizes.sum(), np.array(batch_maps), axes=1)
    centre = [n - 1 for n in spec.shape]
    dx = np.asarray(spec.spacing)
    if lags is None:
        lags = _default_scaling_lags(spec, max(max(a_values), 1 / min(a_values)))
    lags = np.atleast_2d(np.asarray(lags, dtype=float))

    def fit(vmap):
        logmap = np.log(np.maximum(vmap, 1e-300))
        ys, xs, ratios = [], [], []
        for av in a_values:
            if av == 1.0:
                continue
            dil = np.einsum("ij,nj->ni", spec.E0.power(av), lags)
            lv0 = _interp_log_map(logmap, centre, lags / dx)
            lv1 = _interp_log_map(logmap, centre, dil / dx)
            ys.append(lv1 - lv0)
            xs.append(np.full(len(lags), 2 * math.log(av)))
            ratios.append(np.exp(lv1 - lv0 - 2 * spec.H0 * math.log(av)))
        if not ys:
            return spec.H0, np.ones((1, len(lags)))
        y, x = np.concatenate(ys), np.concatenate(xs)
        return float(x @ y / (x @ x)), np.array(ratios)

    H_hat, ratios = fit(mean_map)
    if nb >= 2:
        hb = np.array([fit(m)[0] for m in batch_maps])
        H_se = float(hb.std(ddof=1) / math.sqrt(nb))
    else:
        H_se = float("nan")
    disc = float(np.max(np.abs(ratios - 1.0)))
    return ScalingLawReport(a_values, lags, ratios, H_hat, H_se, disc,
                            bool(abs(H_hat - spec.H0) <= tolerance), tolerance)
