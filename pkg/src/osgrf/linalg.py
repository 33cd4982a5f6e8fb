"""Matrix machinery for anisotropic scaling.

Generalized powers ``a**M = expm(M log a)``, the real additive Jordan
decomposition ``M = D + S + N`` and the spectral bounds used everywhere
else in the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.special

from .errors import DomainError, InvalidAnisotropyError, NumericError

__all__ = [
    "AnisotropyMatrix",
    "matrix_power",
    "matrix_power_batch",
    "jordan_additive_decompose",
    "spectral_bounds",
    "normalize_trace",
]

CLUSTER_TOL = 1e-8
IMAGINARY_AXIS_TOL = 1e-8
# eigenbases worse conditioned than this are treated as numerically defective
MERGE_COND = 1e6


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return M


def matrix_power(M, a: float) -> np.ndarray:
    """Return ``a**M = exp(M log a)`` for a real ``a > 0``."""
    M = _as_square(M)
    a = float(a)
    if not a > 0:
        raise DomainError(f"matrix power needs a > 0, got {a}")
    return scipy.linalg.expm(M * np.log(a))


def _cluster(eigvals: np.ndarray, tol: float) -> list[list[int]]:
    clusters: list[list[int]] = []
    centers: list[complex] = []
    order = np.lexsort((eigvals.imag, eigvals.real))
    for i in order:
        lam = eigvals[i]
        for c, mu in enumerate(centers):
            if abs(lam - mu) <= tol:
                clusters[c].append(int(i))
                centers[c] = np.mean(eigvals[clusters[c]])
                break
        else:
            clusters.append([int(i)])
            centers.append(lam)
    return clusters


def _cluster_bases(M: np.ndarray, eigvals: np.ndarray, clusters):
    d = M.shape[0]
    bases, mus = [], []
    for idx in clusters:
        m = len(idx)
        mu = complex(np.mean(eigvals[idx]))
        A = np.linalg.matrix_power(M - mu * np.eye(d), m)
        # generalized eigenspace: the m right singular vectors with smallest singular values
        _, _, vh = np.linalg.svd(A)
        bases.append(vh[d - m:].conj().T)
        mus.append(mu)
    V = np.hstack(bases)
    return bases, mus, V, np.linalg.cond(V)


def _spectral_projectors(M: np.ndarray, tol: float = CLUSTER_TOL):
    """Eigenvalue clusters and the projectors onto their generalized eigenspaces.

    A defective eigenvalue of multiplicity m is split by rounding into m
    eigenvalues about ``eps**(1/m)`` apart, well beyond ``tol``.  Such splits
    show up as a near-singular eigenbasis, so the two nearest clusters are
    merged until the basis is well conditioned.
    """
    try:
        eigvals = scipy.linalg.eigvals(M)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigensolver failed: {exc}") from exc
    clusters = _cluster(eigvals, tol)
    bases, mus, V, cond = _cluster_bases(M, eigvals, clusters)
    while len(clusters) > 1 and not cond <= MERGE_COND:
        centers = [np.mean(eigvals[c]) for c in clusters]
        pairs = [(abs(centers[a] - centers[b]), a, b)
                 for a in range(len(clusters)) for b in range(a + 1, len(clusters))]
        _, a, b = min(pairs)
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)] + [clusters[a] + clusters[b]]
        bases, mus, V, cond = _cluster_bases(M, eigvals, clusters)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericError(f"generalized eigenbasis is singular (condition number {cond:.3g})")
    Vinv = np.linalg.inv(V)
    projectors = []
    start = 0
    for B in bases:
        m = B.shape[1]
        projectors.append(V[:, start:start + m] @ Vinv[start:start + m, :])
        start += m
    return np.array(mus), projectors


def jordan_additive_decompose(M):
    """Split ``M`` into commuting real parts ``(D, S, N)``.

    ``D`` is real-diagonalizable, ``S`` is semisimple with purely imaginary
    spectrum and ``N`` is nilpotent, with ``D + S + N == M``.  Eigenvalues are
    grouped into clusters of radius ``1e-8``; each cluster contributes its
    mean eigenvalue times the spectral projector onto its generalized
    eigenspace.
    """
    M = _as_square(M)
    mus, projectors = _spectral_projectors(M)
    D = sum(mu.real * P for mu, P in zip(mus, projectors)).real
    S = sum(1j * mu.imag * P for mu, P in zip(mus, projectors)).real
    N = M - D - S
    resid = np.max(np.abs(np.linalg.matrix_power(N, M.shape[0])))
    if resid > 1e-8 * max(1.0, np.max(np.abs(M))) ** M.shape[0]:
        raise NumericError(f"nilpotent part check failed, max|N^d| = {resid:.3g}")
    return D, S, N


def spectral_bounds(M) -> tuple[float, float]:
    """``(rho_min, rho_max)``: extreme values of ``|Re(lambda)|`` over the spectrum."""
    M = _as_square(M)
    re = np.abs(scipy.linalg.eigvals(M).real)
    return float(re.min()), float(re.max())


def matrix_power_batch(M, a) -> np.ndarray:
    """Vectorized ``a**M`` for an array of positive ``a``; returns ``a.shape + (d, d)``.

    Uses ``a**M = sum_c a**mu_c P_c @ sum_k (log a)**k N**k / k!`` which is
    exact for the spectral decomposition and cheap for many exponents.
    """
    M = _as_square(M)
    return _PowerFamily(M)(a)


class _PowerFamily:
    def __init__(self, M: np.ndarray):
        d = M.shape[0]
        self.d = d
        mus, projectors = _spectral_projectors(M)
        self.mus = mus
        self.P = np.array(projectors)
        Ms = np.einsum("c,cij->ij", mus, self.P)
        N = M - Ms
        self.Npow = np.array([np.linalg.matrix_power(N, k) for k in range(d)]).astype(complex)

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if np.any(~(a > 0)):
            raise DomainError("matrix power needs a > 0")
        t = np.log(a)[..., None]
        semisimple = np.einsum("...c,cij->...ij", np.exp(t * self.mus), self.P)
        k = np.arange(self.d)
        coef = t ** k / scipy.special.factorial(k)
        nil = np.einsum("...k,kij->...ij", coef, self.Npow)
        return np.real(semisimple @ nil)


@dataclass(frozen=True, eq=False)
class AnisotropyMatrix:
    """A real matrix whose eigenvalues all have positive real part.

    Build instances with :meth:`from_matrix` (or :func:`normalize_trace`),
    which validates membership and fills in the Jordan parts and bounds.
    """

    entries: np.ndarray
    rho_min: float
    rho_max: float
    jordan: tuple[np.ndarray, np.ndarray, np.ndarray]

    @classmethod
    def from_matrix(cls, M) -> "AnisotropyMatrix":
        M = _as_square(M)
        re = scipy.linalg.eigvals(M).real
        if np.any(re <= IMAGINARY_AXIS_TOL):
            raise InvalidAnisotropyError(
                f"eigenvalue real parts {np.round(re, 10).tolist()} are not all > {IMAGINARY_AXIS_TOL}"
            )
        D, S, N = jordan_additive_decompose(M)
        M = M.copy()
        M.setflags(write=False)
        for part in (D, S, N):
            part.setflags(write=False)
        rmin, rmax = float(np.abs(re).min()), float(np.abs(re).max())
        return cls(M, rmin, rmax, (D, S, N))

    @classmethod
    def diagonal(cls, lam) -> "AnisotropyMatrix":
        return cls.from_matrix(np.diag(np.asarray(lam, dtype=float)))

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def real_diagonalizable_part(self) -> np.ndarray:
        return self.jordan[0]

    @property
    def is_diagonal(self) -> bool:
        off = self.entries - np.diag(np.diag(self.entries))
        return bool(np.max(np.abs(off), initial=0.0) <= 1e-12)

    @property
    def T(self) -> "AnisotropyMatrix":
        return AnisotropyMatrix.from_matrix(self.entries.T)

    @cached_property
    def _powers(self) -> _PowerFamily:
        return _PowerFamily(np.asarray(self.entries))

    def power(self, a) -> np.ndarray:
        """``a**E``; vectorized over an array of ``a``."""
        if np.ndim(a) == 0:
            return matrix_power(self.entries, a)
        return self._powers(a)

    def tolist(self) -> list[list[float]]:
        return np.asarray(self.entries).tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnisotropyMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(np.all(self.entries == other.entries))

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())

    def __repr__(self) -> str:
        return f"AnisotropyMatrix({self.tolist()})"


def normalize_trace(M) -> AnisotropyMatrix:
    """Rescale ``M`` to trace ``d`` and validate it as an anisotropy."""
    M = _as_square(M)
    tr = float(np.trace(M))
    if not tr > 0:
        raise InvalidAnisotropyError(f"trace must be positive, got {tr}")
    return AnisotropyMatrix.from_matrix(M * (M.shape[0] / tr))
