"""Truncated count-lattice summation shared by the exact error evaluators.

Each sector's count axis is cut at the Poisson quantile ``1 - eps/(2M)``
under the largest intensity any hypothesis assigns to that sector.  Poisson
tails grow with the mean, so every hypothesis loses at most ``eps/(2M)``
mass per sector; callers turn that into a bound on their own sum.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import poisson

from .errors import ContractError, UnsupportedError

MAX_LATTICE_POINTS = 10**8
_CHUNK = 1 << 18


def sector_caps(intensities, eps: float) -> np.ndarray:
    lam = np.atleast_2d(np.asarray(intensities, dtype=float))
    if not 0 < eps < 1:
        raise ContractError("tail_epsilon must lie in (0, 1)")
    M = lam.shape[1]
    return poisson.ppf(1.0 - eps / (2 * M), lam.max(axis=0)).astype(np.int64)


def tail_mass(intensities, caps) -> np.ndarray:
    """Per-hypothesis upper bound on the probability outside the lattice."""
    lam = np.atleast_2d(np.asarray(intensities, dtype=float))
    return poisson.sf(caps[None, :], lam).sum(axis=1)


def lattice_size(caps) -> int:
    return int(np.prod([int(c) + 1 for c in caps], dtype=object))


def iter_lattice(intensities, eps: float):
    """Yield ``(counts, logpmf)`` chunks covering the truncated lattice.

    ``counts`` is ``(n, M)``; ``logpmf`` is ``(H, n)`` with one row per
    hypothesis (row of ``intensities``).
    """
    lam = np.atleast_2d(np.asarray(intensities, dtype=float))
    if np.any(lam <= 0):
        raise ContractError("lattice evaluation needs strictly positive intensities")
    caps = sector_caps(lam, eps)
    total = lattice_size(caps)
    if total > MAX_LATTICE_POINTS:
        raise UnsupportedError(
            f"truncated lattice has {total} points (> {MAX_LATTICE_POINTS}); use Monte-Carlo instead"
        )
    axes = [np.arange(c + 1) for c in caps]
    # per-sector log pmf tables, (H, cap_m + 1)
    tables = [poisson.logpmf(ax[None, :], lam[:, [m]]) for m, ax in enumerate(axes)]
    shape = tuple(len(ax) for ax in axes)
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(flat, shape)
        counts = np.stack(idx, axis=1)
        logp = sum(tables[m][:, idx[m]] for m in range(len(axes)))
        yield counts, logp
