"""Anisotropic (diagonal) multiresolution analysis on periodic grids.

A scale ``j`` of the anisotropic basis with exponents ``lambda`` groups
together the tensor wavelets whose per-axis levels ``gamma_r`` fall between
``floor((j-1) lambda_r)`` and ``floor(j lambda_r)``.  Along each axis the
1-D orthonormal Daubechies cascade supplies the scaling branch (``F``) or
the wavelet branch (``M``) at that level.

Coefficients are stored in the sup-normalized form
``c = <f, 2**Tr(D) Psi(2**D x - k)>`` computed with the grid inner product,
so that ``2**(-Tr(D)/2) c`` are the coordinates in an orthonormal basis.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.special import comb

from .errors import ConfigurationError, DomainError

__all__ = [
    "DiagonalAnisotropy",
    "WaveletIndex",
    "WaveletCoefficientSet",
    "daubechies_filter",
    "build_index_set",
    "grid_index_set",
    "max_resolvable_scale",
    "complete_scale",
    "anisotropic_wavelet_transform",
    "reconstruct",
]

F, M = "F", "M"


@dataclass(frozen=True)
class DiagonalAnisotropy:
    """Diagonal exponents ``lambda`` with ``sum(lambda) == d``."""

    lam: tuple[float, ...]

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lam)
        object.__setattr__(self, "lam", lam)
        if not lam or any(not (v > 0 and math.isfinite(v)) for v in lam):
            raise DomainError(f"anisotropy exponents must be positive, got {lam}")
        if abs(sum(lam) - len(lam)) > 1e-10:
            raise DomainError(f"anisotropy exponents must sum to d={len(lam)}, got {sum(lam)}")

    @classmethod
    def normalized(cls, lam) -> "DiagonalAnisotropy":
        lam = np.asarray(lam, dtype=float)
        return cls(tuple(lam * (lam.size / lam.sum())))

    @property
    def d(self) -> int:
        return len(self.lam)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.lam)

    def __iter__(self):
        return iter(self.lam)


@dataclass(frozen=True)
class WaveletIndex:
    j: int
    G: tuple[str, ...]
    gamma: tuple[int, ...]
    k: tuple[int, ...]


# ---------------------------------------------------------------------------
# filters


@lru_cache(maxsize=None)
def _daubechies(order: int) -> tuple[float, ...]:
    if order == 1:
        return (1 / math.sqrt(2), 1 / math.sqrt(2))
    # P(y) = sum_k C(p-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z)/4
    p = order
    P = [comb(p - 1 + k, k, exact=True) for k in range(p)]
    yroots = np.roots(P[::-1])
    zroots = []
    for y in yroots:
        # z + 1/z = 2 - 4y; keep the root inside the unit circle
        b = 2 - 4 * y
        disc = np.sqrt(b * b - 4 + 0j)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        zroots.append(z1 if abs(z1) < 1 else z2)
    poly = np.array([1.0 + 0j])
    for _ in range(p):
        poly = np.convolve(poly, [1.0, 1.0])
    for z in zroots:
        poly = np.convolve(poly, [1.0, -z])
    h = np.real(poly)
    h = h * (math.sqrt(2) / h.sum())
    return tuple(h[::-1] if h[0] < h[-1] else h)


def daubechies_filter(order: int) -> np.ndarray:
    """Orthonormal Daubechies low-pass filter with ``order`` vanishing moments.

    The filter has ``2 * order`` taps, sums to ``sqrt(2)`` and is returned in
    the usual "extremal phase" ordering (largest taps first).
    """
    if int(order) != order or order < 1:
        raise DomainError(f"filter order must be a positive integer, got {order}")
    return np.array(_daubechies(int(order)))


def _highpass(h: np.ndarray) -> np.ndarray:
    L = h.size
    return np.array([(-1) ** m * h[L - 1 - m] for m in range(L)])


# ---------------------------------------------------------------------------
# index sets


def build_index_set(D: DiagonalAnisotropy, j: int) -> list[tuple[tuple[str, ...], tuple[int, ...]]]:
    """Enumerate the pairs ``(G, gamma)`` of scale ``j`` for anisotropy ``D``."""
    return grid_index_set(D, j, None)


def grid_index_set(D: DiagonalAnisotropy, j: int, levels: Sequence[int] | None):
    """Like :func:`build_index_set` but with per-axis levels capped at ``levels``.

    Capping keeps the decomposition an orthonormal basis of a finite grid
    with ``2**levels[r]`` samples along axis ``r``.
    """
    j = int(j)
    if j < 0:
        raise DomainError(f"scale must be non-negative, got {j}")
    d = D.d
    if j == 0:
        return [((F,) * d, (0,) * d)]
    cap = [math.inf] * d if levels is None else list(levels)
    lo = [min(math.floor((j - 1) * lam), cap[r]) for r, lam in enumerate(D.lam)]
    hi = [min(math.floor(j * lam), cap[r]) for r, lam in enumerate(D.lam)]
    out = []
    for G in itertools.product((F, M), repeat=d):
        if all(g == F for g in G):
            continue
        ranges = [range(lo[r], lo[r] + 1) if g == F else range(lo[r], hi[r]) for r, g in enumerate(G)]
        for gamma in itertools.product(*ranges):
            out.append((G, tuple(int(v) for v in gamma)))
    return out


def max_resolvable_scale(D: DiagonalAnisotropy, levels: Sequence[int]) -> int:
    """Largest ``j`` whose index set needs no capping on a grid with ``levels``."""
    j = 0
    while all(math.floor((j + 1) * lam) <= K for lam, K in zip(D.lam, levels)):
        j += 1
    return j


def complete_scale(D: DiagonalAnisotropy, levels: Sequence[int]) -> int:
    """Smallest ``j`` at which every axis reaches its finest grid level."""
    j = 0
    while any(math.floor(j * lam) < K for lam, K in zip(D.lam, levels)):
        j += 1
    return j


# ---------------------------------------------------------------------------
# 1-D periodized filter bank


def _analysis_step(x: np.ndarray, axis: int, h: np.ndarray, g: np.ndarray):
    N = x.shape[axis]
    half = N // 2
    base = 2 * np.arange(half)
    a = 0.0
    dd = 0.0
    for m in range(h.size):
        xm = np.take(x, (base + m) % N, axis=axis)
        a = a + h[m] * xm
        dd = dd + g[m] * xm
    return a, dd


def _synthesis_step(a: np.ndarray | None, dd: np.ndarray | None, axis: int, h, g) -> np.ndarray:
    ref = a if a is not None else dd
    half = ref.shape[axis]
    N = 2 * half
    shape = list(ref.shape)
    shape[axis] = N
    x = np.zeros(shape)
    xv = np.moveaxis(x, axis, 0)
    av = None if a is None else np.moveaxis(a, axis, 0)
    dv = None if dd is None else np.moveaxis(dd, axis, 0)
    base = 2 * np.arange(half)
    for m in range(h.size):
        idx = (base + m) % N
        if av is not None:
            xv[idx] += h[m] * av
        if dv is not None:
            xv[idx] += g[m] * dv
    return x


class _Pyramid:
    """Lazily computed per-axis cascades, shared between branches."""

    def __init__(self, x: np.ndarray, h: np.ndarray, levels: Sequence[int]):
        self.x = x
        self.h = h
        self.g = _highpass(h)
        self.levels = list(levels)
        self._cache: dict = {}

    def _axis(self, prefix: tuple, axis: int):
        key = (prefix, axis)
        if key not in self._cache:
            arr = self.get(prefix)
            approx, detail = [arr], [None]
            for _ in range(self.levels[axis]):
                a, dd = _analysis_step(approx[-1], axis, self.h, self.g)
                approx.append(a)
                detail.append(dd)
            self._cache[key] = (approx, detail)
        return self._cache[key]

    def get(self, ops: tuple) -> np.ndarray:
        if not ops:
            return self.x
        prefix, (kind, depth) = ops[:-1], ops[-1]
        approx, detail = self._axis(prefix, len(ops) - 1)
        return approx[depth] if kind == F else detail[depth]


# ---------------------------------------------------------------------------
# coefficient sets


@dataclass
class WaveletCoefficientSet:
    """Coefficients ``c[j, G, gamma][k]`` of one grid.

    ``coefficients`` maps ``(j, G, gamma)`` to an array of shape
    ``tuple(2**gamma)`` indexed by the spatial index ``k``.
    """

    anisotropy: DiagonalAnisotropy
    filter_order: int
    coefficients: dict
    grid_shape: tuple[int, ...]
    spacing: tuple[float, ...]
    boundary: str = "periodic"
    source_shape: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.grid_shape)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(int(round(math.log2(n))) for n in self.grid_shape)

    @property
    def scales(self) -> list[int]:
        return sorted({key[0] for key in self.coefficients})

    @property
    def max_resolvable_scale(self) -> int:
        return max_resolvable_scale(self.anisotropy, self.levels)

    def branches(self, j: int) -> list[tuple]:
        return sorted(key for key in self.coefficients if key[0] == j)

    def scale_values(self, j: int) -> list[np.ndarray]:
        return [self.coefficients[key] for key in self.branches(j)]

    def __iter__(self) -> Iterator[tuple[WaveletIndex, float]]:
        for key in sorted(self.coefficients):
            j, G, gamma = key
            arr = self.coefficients[key]
            for k in np.ndindex(arr.shape):
                yield WaveletIndex(j, G, gamma, tuple(int(v) for v in k)), float(arr[k])

    def __len__(self) -> int:
        return sum(a.size for a in self.coefficients.values())

    def orthonormal_coordinates(self, key) -> np.ndarray:
        """Coordinates in the orthonormal basis: ``2**(-Tr(D)/2) c``."""
        _, _, gamma = key
        return self.coefficients[key] * 2.0 ** (-sum(gamma) / 2)

    def scaled(self, factor: float) -> "WaveletCoefficientSet":
        coeffs = {key: factor * arr for key, arr in self.coefficients.items()}
        return WaveletCoefficientSet(self.anisotropy, self.filter_order, coeffs, self.grid_shape,
                                     self.spacing, self.boundary, self.source_shape, dict(self.meta))


def _levels_of(shape: Sequence[int]) -> list[int]:
    levels = []
    for n in shape:
        K = int(round(math.log2(n))) if n > 0 else -1
        if n < 2 or 2 ** K != n:
            raise ConfigurationError(f"grid size {n} is not a power of two >= 2")
        levels.append(K)
    return levels


def _extend(values: np.ndarray, boundary: str) -> np.ndarray:
    if boundary == "periodic":
        return values
    if boundary == "symmetric":
        out = values
        for axis in range(values.ndim):
            out = np.concatenate([out, np.flip(out, axis=axis)], axis=axis)
        return out
    raise DomainError(f"unknown boundary mode {boundary!r}")


def anisotropic_wavelet_transform(field, D: DiagonalAnisotropy, j_max: int | None = None,
                                  filter_order: int = 4, spacing=None,
                                  boundary: str = "periodic") -> WaveletCoefficientSet:
    """Anisotropic wavelet coefficients of a grid for scales ``0..j_max``.

    Parameters
    ----------
    field : FieldRealization or array_like
        Grid values. A realization contributes its grid spacing.
    D : DiagonalAnisotropy
        Exponents of the analysing anisotropy.
    j_max : int, optional
        Largest scale to compute; default is the scale at which the basis
        becomes complete for the grid.
    filter_order : int
        Vanishing moments of the Daubechies filter.
    boundary : {"periodic", "symmetric"}
        ``"symmetric"`` mirrors the grid along every axis before the periodic
        transform, which removes the wrap-around jump of non-periodic data.
    """
    if hasattr(field, "values") and hasattr(field, "spec"):
        values = np.asarray(field.values, dtype=float)
        spacing = field.spec.spacing if spacing is None else spacing
    else:
        values = np.asarray(field, dtype=float)
    if not isinstance(D, DiagonalAnisotropy):
        D = DiagonalAnisotropy(tuple(D))
    if values.ndim != D.d:
        raise ConfigurationError(f"grid has {values.ndim} axes but anisotropy has d={D.d}")
    if not np.all(np.isfinite(values)):
        raise DomainError("grid contains non-finite values")
    spacing = tuple(float(s) for s in (spacing if spacing is not None else (1.0 / n for n in values.shape)))
    source_shape = values.shape
    grid = _extend(values, boundary)
    levels = _levels_of(grid.shape)
    h = daubechies_filter(filter_order)
    if h.size > min(grid.shape):
        raise ConfigurationError(f"filter of length {h.size} exceeds grid size {min(grid.shape)}")
    J = complete_scale(D, levels)
    j_max = J if j_max is None else int(j_max)
    if j_max < 0:
        raise DomainError("j_max must be non-negative")
    cellvol = float(np.prod(spacing))
    pyr = _Pyramid(grid, h, levels)
    coeffs = {}
    for j in range(0, min(j_max, J) + 1):
        for G, gamma in grid_index_set(D, j, levels):
            ops = tuple((g, levels[r] - gamma[r]) for r, g in enumerate(G))
            w = pyr.get(ops)
            coeffs[(j, G, gamma)] = w * (2.0 ** (sum(gamma) / 2) * math.sqrt(cellvol))
    return WaveletCoefficientSet(D, int(filter_order), coeffs, tuple(grid.shape), spacing,
                                 boundary, tuple(source_shape))


def reconstruct(coeffs: WaveletCoefficientSet, grid_shape=None) -> np.ndarray:
    """Inverse of :func:`anisotropic_wavelet_transform` for a complete set.

    Returns the analysed grid (the mirrored grid for ``boundary="symmetric"``).
    """
    grid_shape = tuple(coeffs.grid_shape if grid_shape is None else grid_shape)
    if grid_shape != tuple(coeffs.grid_shape):
        raise DomainError(f"coefficients describe a {coeffs.grid_shape} grid, not {grid_shape}")
    levels = _levels_of(grid_shape)
    D = coeffs.anisotropy
    J = complete_scale(D, levels)
    expected = {(j, G, gamma) for j in range(J + 1) for G, gamma in grid_index_set(D, j, levels)}
    missing = expected - set(coeffs.coefficients)
    if missing:
        raise DomainError(f"incomplete coefficient set: {len(missing)} branches missing, e.g. {sorted(missing)[0]}")
    h = daubechies_filter(coeffs.filter_order)
    g = _highpass(h)
    cellvol = float(np.prod(coeffs.spacing))
    out = np.zeros(grid_shape)
    for (j, G, gamma) in sorted(expected):
        arr = coeffs.coefficients[(j, G, gamma)] / (2.0 ** (sum(gamma) / 2) * math.sqrt(cellvol))
        for axis in reversed(range(len(G))):
            depth = levels[axis] - gamma[axis]
            for step in range(depth):
                if step == 0 and G[axis] == M:
                    arr = _synthesis_step(None, arr, axis, h, g)
                else:
                    arr = _synthesis_step(arr, None, axis, h, g)
        out += arr
    return out
