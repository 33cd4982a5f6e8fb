"""Counter-based Gaussian draws addressed by (seed, replicate, cell).

Each replicate owns a Philox stream keyed by ``SeedSequence([seed,
replicate])``.  Cell ``i`` always consumes counter block ``i`` (four raw
64-bit words), so a draw depends only on its address and never on how many
other cells were generated before it, or in what order.
"""
from __future__ import annotations

import numpy as np

__all__ = ["cell_gaussians"]

_TWO_PI = 2.0 * np.pi


def _bit_generator(seed: int, replicate: int) -> np.random.Philox:
    return np.random.Philox(np.random.SeedSequence([int(seed), int(replicate)]))


def _unit_open(raw: np.ndarray) -> np.ndarray:
    # top 53 bits mapped to (0, 1]
    return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53


def cell_gaussians(seed: int, replicate: int, start: int, count: int) -> np.ndarray:
    """Complex circular standard normals for cells ``start .. start+count-1``.

    ``E|g|**2 = 1``; real and imaginary parts are independent ``N(0, 1/2)``.
    """
    if count <= 0:
        return np.zeros(0, dtype=complex)
    bg = _bit_generator(seed, replicate)
    if start:
        bg.advance(int(start))
    raw = bg.random_raw(4 * int(count)).reshape(count, 4)
    u1 = _unit_open(raw[:, 0])
    u2 = _unit_open(raw[:, 1])
    radius = np.sqrt(-np.log(u1))  # sqrt(-2 log u) / sqrt(2)
    return radius * np.exp(1j * _TWO_PI * u2)
