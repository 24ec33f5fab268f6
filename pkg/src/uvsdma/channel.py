"""Poisson photon-count channel primitives.

Intensities throughout the package are dimensionless mean photoelectron
counts per symbol slot.  A sector is one detector of the receiving array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import ContractError, DomainError

PLANCK = 6.62607015e-34  # J*s

__all__ = [
    "PLANCK",
    "GainMatrix",
    "NoiseVector",
    "PhotonCounts",
    "PhysicalLink",
    "SumMoments",
    "stream_rng",
    "gain_from_physics",
    "compose_intensity",
    "sample_counts",
    "weighted_sum",
    "weighted_sum_moments",
    "q_function",
]


def _frozen(values, name, ndim, dtype=float):
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ContractError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if dtype is float and not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GainMatrix:
    """Mean signal counts ``lambda_s[k, m]`` from user ``k`` to sector ``m``."""

    lambda_s: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.lambda_s, "lambda_s", 2)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractError("GainMatrix needs K >= 1 and M >= 1")
        if np.any(arr < 0):
            raise ContractError("lambda_s entries must be >= 0")
        object.__setattr__(self, "lambda_s", arr)

    @property
    def K(self) -> int:
        return self.lambda_s.shape[0]

    @property
    def M(self) -> int:
        return self.lambda_s.shape[1]

    def row(self, k: int) -> np.ndarray:
        return self.lambda_s[k]


@dataclass(frozen=True)
class NoiseVector:
    """Mean background counts per sector."""

    lambda_n: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.lambda_n, "lambda_n", 1)
        if np.any(arr < 0):
            raise ContractError("lambda_n entries must be >= 0")
        object.__setattr__(self, "lambda_n", arr)

    @property
    def M(self) -> int:
        return self.lambda_n.shape[0]

    @classmethod
    def from_rate(cls, rate, symbol_time: float) -> "NoiseVector":
        """Build from background count rates (1/s) and the slot duration."""
        return cls(np.asarray(rate, dtype=float) * symbol_time)


@dataclass(frozen=True)
class PhotonCounts:
    """Detected photoelectrons per sector in one slot."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.array(self.counts)
        if arr.ndim != 1 or not np.issubdtype(arr.dtype, np.integer):
            raise ContractError("counts must be a 1-D integer vector")
        if np.any(arr < 0):
            raise ContractError("counts must be nonnegative")
        arr = arr.astype(np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def M(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class PhysicalLink:
    eta: float  # quantum efficiency
    P: float  # emitted power, W
    T_s: float  # slot duration, s
    xi: float  # path loss
    nu: float  # optical frequency, Hz

    def __post_init__(self):
        for name in ("eta", "P", "T_s", "xi", "nu"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if self.eta > 1:
            raise DomainError(f"eta must be <= 1, got {self.eta!r}")
        if self.xi < 1:
            raise DomainError(f"path loss xi must be >= 1, got {self.xi!r}")


@dataclass(frozen=True)
class SumMoments:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def stream_rng(seed: int, stream: int = 0, lane: int = 0) -> np.random.Generator:
    """Return an independent generator for ``(seed, lane, stream)``.

    Backed by the counter-based Philox bit generator: the 128-bit key is
    built from the master seed and the stream address, so any stream can be
    regenerated in isolation regardless of how work was scheduled.
    ``lane`` separates different uses (symbols, pilot truncation, ...)
    under one master seed.
    """
    if seed < 0 or stream < 0 or lane < 0:
        raise ContractError("seed, stream and lane must be nonnegative")
    if seed >= 2**64 or stream >= 2**40 or lane >= 2**24:
        raise ContractError("seed/stream/lane out of range")
    key = np.array([seed, (lane << 40) | stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gain_from_physics(link: PhysicalLink) -> float:
    """Mean signal count ``eta * P * T_s / (xi * h * nu)``."""
    denom = link.xi * PLANCK * link.nu
    value = link.eta * link.P * link.T_s / denom if denom > 0 else math.inf
    if not math.isfinite(value):
        raise DomainError(f"non-finite mean count from {link!r}")
    return value


def compose_intensity(gains: GainMatrix, noise: NoiseVector, active) -> np.ndarray:
    """Per-sector Poisson intensity with the users in ``active`` switched on.

    ``active`` may be a single length-K binary vector or an ``(n, K)`` batch,
    in which case an ``(n, M)`` array is returned.
    """
    if gains.M != noise.M:
        raise ContractError(f"gain matrix has M={gains.M} but noise has M={noise.M}")
    x = np.asarray(active)
    if x.shape[-1] != gains.K:
        raise ContractError(f"active has length {x.shape[-1]}, expected K={gains.K}")
    if np.any((x != 0) & (x != 1)):
        raise ContractError("active must be binary")
    return x.astype(float) @ gains.lambda_s + noise.lambda_n


def sample_counts(intensity, rng: np.random.Generator, size: int | None = None):
    """Independent Poisson counts per sector.

    With ``size=None`` a single :class:`PhotonCounts` is returned.  Otherwise
    ``intensity`` broadcasts against ``(size, M)`` and a plain integer array
    is returned, which is what the Monte-Carlo drivers use.
    """
    lam = np.asarray(intensity, dtype=float)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ContractError("intensities must be finite and >= 0")
    if size is None:
        if lam.ndim != 1:
            raise ContractError("single-slot sampling needs a 1-D intensity vector")
        return PhotonCounts(rng.poisson(lam))
    if lam.ndim == 1:
        return rng.poisson(lam, size=(size, lam.shape[0]))
    if lam.shape[0] != size:
        raise ContractError(f"batch intensity has {lam.shape[0]} rows, size={size}")
    return rng.poisson(lam)


def _counts_array(counts):
    return counts.counts if isinstance(counts, PhotonCounts) else np.asarray(counts)


def weighted_sum(weights, counts):
    """``sum_m weights[m] * counts[m]``; works on a batch along the last axis."""
    w = np.asarray(weights, dtype=float)
    n = _counts_array(counts)
    if n.shape[-1] != w.shape[-1]:
        raise ContractError(f"weights have length {w.shape[-1]}, counts {n.shape[-1]}")
    out = n @ w
    return float(out) if np.ndim(out) == 0 else out


def weighted_sum_moments(weights, intensity) -> SumMoments:
    """Mean and variance of the weighted count sum under independent Poisson."""
    w = np.asarray(weights, dtype=float)
    lam = np.asarray(intensity, dtype=float)
    if w.shape != lam.shape or w.ndim != 1:
        raise ContractError(f"weights {w.shape} and intensity {lam.shape} must be equal-length vectors")
    if np.any(lam < 0):
        raise ContractError("intensities must be >= 0")
    return SumMoments(float(w @ lam), float((w * w) @ lam))


def q_function(x):
    """Upper tail of the standard normal, ``0.5 * erfc(x / sqrt(2))``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out
