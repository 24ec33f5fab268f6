"""Two-hypothesis separation with a linear weighted count sum.

Hypothesis ``"A"`` has per-sector total intensity ``lambda_a`` (signal plus
background), hypothesis ``"B"`` has ``lambda_b``; priors are equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import PhotonCounts, q_function, weighted_sum_moments
from .errors import ContractError, DegenerateProblemError, NumericError
from .lattice import iter_lattice, sector_caps, tail_mass

A, B = "A", "B"
EQUAL_VARIANCE_RTOL = 1e-9


@dataclass(frozen=True)
class TwoUserProblem:
    lambda_a: np.ndarray
    lambda_b: np.ndarray

    def __post_init__(self):
        la = np.array(self.lambda_a, dtype=float)
        lb = np.array(self.lambda_b, dtype=float)
        if la.ndim != 1 or la.shape != lb.shape or la.size == 0:
            raise ContractError(f"lambda_a {la.shape} and lambda_b {lb.shape} must be equal-length vectors")
        if not (np.all(np.isfinite(la)) and np.all(np.isfinite(lb))):
            raise ContractError("intensities must be finite")
        if np.any(la <= 0) or np.any(lb <= 0):
            raise ContractError(
                "total intensities must be strictly positive; add a background floor "
                "(e.g. lambda_n = 1e-12) to zero-noise configurations"
            )
        la.setflags(write=False)
        lb.setflags(write=False)
        object.__setattr__(self, "lambda_a", la)
        object.__setattr__(self, "lambda_b", lb)

    @property
    def M(self) -> int:
        return self.lambda_a.shape[0]

    @classmethod
    def from_gains(cls, gain_a, gain_b, noise) -> "TwoUserProblem":
        noise = np.asarray(noise, dtype=float)
        return cls(np.asarray(gain_a, float) + noise, np.asarray(gain_b, float) + noise)

    def swapped(self) -> "TwoUserProblem":
        return TwoUserProblem(self.lambda_b, self.lambda_a)


def _num(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ThresholdDetector:
    """Declares ``upper`` when the weighted sum is >= ``threshold``."""

    weights: np.ndarray
    threshold: float
    upper: str = A

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise ContractError("detector weights must be a unit-norm vector")
        if self.upper not in (A, B):
            raise ContractError("upper must be 'A' or 'B'")
        if not math.isfinite(self.threshold):
            raise ContractError("threshold must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def lower(self) -> str:
        return B if self.upper == A else A

    def statistic(self, counts):
        n = counts.counts if isinstance(counts, PhotonCounts) else np.asarray(counts)
        return n @ self.weights

    def upper_mask(self, counts) -> np.ndarray:
        """Batch decision: True where the upper-tail hypothesis is declared."""
        return self.statistic(counts) >= self.threshold

    def to_json(self) -> str:
        w = ", ".join(_num(x) for x in self.weights)
        return f'{{"weights": [{w}], "threshold": {_num(self.threshold)}, "orientation": "{self.upper}"}}'

    @classmethod
    def from_json(cls, text: str) -> "ThresholdDetector":
        import json

        doc = json.loads(text)
        return cls(np.array(doc["weights"], dtype=float), float(doc["threshold"]), doc["orientation"])


def optimal_weights(p: TwoUserProblem) -> np.ndarray:
    """Weights ``(la - lb) / (la + lb)`` scaled to unit norm."""
    k = (p.lambda_a - p.lambda_b) / (p.lambda_a + p.lambda_b)
    norm = np.linalg.norm(k)
    if norm == 0:
        raise DegenerateProblemError("lambda_a == lambda_b in every sector; hypotheses are not separable")
    return k / norm


def uniform_weights(M: int) -> np.ndarray:
    return np.full(M, 1.0 / math.sqrt(M))


def _oriented_moments(p, weights):
    ma = weighted_sum_moments(weights, p.lambda_a)
    mb = weighted_sum_moments(weights, p.lambda_b)
    if ma.mean >= mb.mean:
        return A, ma, mb
    return B, mb, ma


def gaussian_threshold(mu_hi, var_hi, mu_lo, var_lo) -> float:
    """Crossing point of two Gaussian densities lying between their means."""
    if var_hi <= 0 or var_lo <= 0:
        raise DegenerateProblemError("both hypotheses need positive variance")
    if abs(var_hi - var_lo) < EQUAL_VARIANCE_RTOL * (var_hi + var_lo):
        return 0.5 * (mu_hi + mu_lo)
    s_hi, s_lo = math.sqrt(var_hi), math.sqrt(var_lo)
    disc = (mu_hi - mu_lo) ** 2 + 2 * (var_hi - var_lo) * math.log(s_hi / s_lo)
    th = (s_hi * s_lo * math.sqrt(disc) + var_hi * mu_lo - var_lo * mu_hi) / (var_hi - var_lo)
    if not math.isfinite(th):
        raise NumericError("non-finite threshold", mu_hi=mu_hi, var_hi=var_hi, mu_lo=mu_lo, var_lo=var_lo)
    return th


def optimal_threshold(p: TwoUserProblem, weights) -> float:
    _, hi, lo = _oriented_moments(p, weights)
    return gaussian_threshold(hi.mean, hi.variance, lo.mean, lo.variance)


def make_detector(p: TwoUserProblem, weights=None) -> ThresholdDetector:
    """Threshold detector with the Gaussian-optimal threshold for ``weights``
    (the Cauchy-optimal weights when omitted)."""
    w = optimal_weights(p) if weights is None else np.asarray(weights, float) / np.linalg.norm(weights)
    upper, hi, lo = _oriented_moments(p, w)
    th = gaussian_threshold(hi.mean, hi.variance, lo.mean, lo.variance)
    return ThresholdDetector(w, th, upper)


def decide(d: ThresholdDetector, counts) -> str:
    return d.upper if d.statistic(counts) >= d.threshold else d.lower


def pe_gaussian(p: TwoUserProblem, weights, threshold: float) -> float:
    """Equal-prior error of the Gaussian surrogate at the given threshold."""
    _, hi, lo = _oriented_moments(p, weights)
    if hi.variance <= 0 or lo.variance <= 0:
        raise DegenerateProblemError("zero-variance weighted sum")
    return 0.5 * (q_function((hi.mean - threshold) / hi.std) + q_function((threshold - lo.mean) / lo.std))


def separation(p: TwoUserProblem) -> float:
    """``sqrt(sum (la - lb)^2 / (2 (la + lb)))``, the argument of the closed-form error."""
    d = p.lambda_a - p.lambda_b
    return math.sqrt(float(np.sum(d * d / (2 * (p.lambda_a + p.lambda_b)))))


def pe_threshold_closed_form(p: TwoUserProblem) -> float:
    return q_function(separation(p))


def loglik(lam, counts):
    """Poisson log-likelihood without the ``-log N!`` term (common to all hypotheses)."""
    n = counts.counts if isinstance(counts, PhotonCounts) else np.asarray(counts)
    lam = np.asarray(lam, dtype=float)
    return n @ np.log(lam).T - lam.sum(axis=-1)


def ml_decide_pair(p: TwoUserProblem, counts) -> str:
    return A if loglik(p.lambda_a, counts) >= loglik(p.lambda_b, counts) else B


def ml_mask_pair(p: TwoUserProblem, counts) -> np.ndarray:
    """Batch ML decision: True where A is declared."""
    return loglik(p.lambda_a, counts) >= loglik(p.lambda_b, counts)


class TruncatedSum(NamedTuple):
    value: float
    tail_bound: float


def pe_ml_pair(p: TwoUserProblem, tail_epsilon: float = 1e-10) -> TruncatedSum:
    """Exact ML error by summing ``min(P_a, P_b) / 2`` over a truncated lattice."""
    lam = np.vstack([p.lambda_a, p.lambda_b])
    total = 0.0
    for _, logp in iter_lattice(lam, tail_epsilon):
        total += 0.5 * np.exp(logp.min(axis=0)).sum()
    caps = sector_caps(lam, tail_epsilon)
    bound = 0.25 * float(tail_mass(lam, caps).sum())
    return TruncatedSum(float(total), bound)


def detector_error_exact(p: TwoUserProblem, d: ThresholdDetector, tail_epsilon: float = 1e-10) -> TruncatedSum:
    """Equal-prior error of a threshold detector on the true Poisson channel."""
    lam = np.vstack([p.lambda_a, p.lambda_b])
    err = 0.0
    for counts, logp in iter_lattice(lam, tail_epsilon):
        says_a = d.upper_mask(counts) if d.upper == A else ~d.upper_mask(counts)
        err += np.exp(logp[0][~says_a]).sum() + np.exp(logp[1][says_a]).sum()
    caps = sector_caps(lam, tail_epsilon)
    return TruncatedSum(0.5 * float(err), 0.5 * float(tail_mass(lam, caps).sum()))


def pe_derivative_magnitude(p: TwoUserProblem, m: int, published: bool = False) -> float:
    """``|d pe / d lambda_a(m)|`` for the closed-form error ``Q(G)``.

    The exact derivative is ``phi(G) |f(x)| / (4 G)`` with
    ``x = lambda_a(m) / lambda_b(m)`` and ``f(x) = 1 - (2 / (1 + x))^2``.
    ``published=True`` returns the commonly quoted form with ``2 G`` in the
    denominator, which is twice the exact value (still a valid upper bound).
    """
    if not 0 <= m < p.M:
        raise ContractError(f"sector index {m} out of range for M={p.M}")
    G = separation(p)
    if G == 0:
        raise DegenerateProblemError("G = 0: derivative undefined")
    x = p.lambda_a[m] / p.lambda_b[m]
    f = abs(1.0 - (2.0 / (1.0 + x)) ** 2)
    denom = (2.0 if published else 4.0) * math.sqrt(2 * math.pi) * G
    return float(math.exp(-G * G / 2) * f / denom)


def sensitivity_constant(C: float, D: float) -> float:
    if C <= 0 or D <= 0:
        raise ContractError("C and D must be positive")
    return 3.0 * math.exp(-C / (8.0 * D)) / math.sqrt(2 * math.pi * C / D)


def sensitivity_bound(C: float, D: float, delta: float) -> float:
    """Largest change of the closed-form error when one ``lambda_a(m)`` moves by
    at most ``delta``, for problems with ``sum (la - lb)^2 >= C`` and all
    intensities ``<= D``."""
    if delta <= 0:
        raise ContractError("delta must be positive")
    return sensitivity_constant(C, D) * delta


def _check_weights(weights, p):
    w = np.asarray(weights, dtype=float)
    if w.shape != (p.M,):
        raise ContractError(f"weights must have length M={p.M}")
    if not np.any(w):
        raise ContractError("weights must not be all zero")
    return w


def div_objective(weights, p: TwoUserProblem) -> float:
    w = _check_weights(weights, p)
    num = w @ (p.lambda_a - p.lambda_b)
    return float(num / (math.sqrt((w * w) @ p.lambda_a) + math.sqrt((w * w) @ p.lambda_b)))


def div_lower_bound(weights, p: TwoUserProblem) -> float:
    w = _check_weights(weights, p)
    num = w @ (p.lambda_a - p.lambda_b)
    return float(num / math.sqrt((w * w) @ (p.lambda_a + p.lambda_b)))
