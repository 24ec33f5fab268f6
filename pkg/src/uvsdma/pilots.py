"""Balanced binary pilot matrices and least-squares gain estimation.

User indices are 0-based in this API.  Pattern weights ``beta`` are column
Hamming weights and therefore live in ``1..K``.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import stream_rng
from .errors import ContractError, InconsistencyError, SingularPatternError, UnsupportedError

log = logging.getLogger(__name__)

PILOT_LANE = 1
MAX_EXHAUSTIVE_K = 20


def binom(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


@dataclass(frozen=True)
class BalancedPattern:
    K: int
    beta: tuple

    def __post_init__(self):
        if self.K < 1:
            raise ContractError("K must be >= 1")
        beta = tuple(sorted(int(b) for b in self.beta))
        if not beta:
            raise ContractError("beta must be nonempty")
        if len(set(beta)) != len(beta):
            raise ContractError(f"beta weights must be distinct, got {self.beta!r}")
        if beta[0] < 1 or beta[-1] > self.K:
            raise ContractError(f"beta weights must lie in 1..{self.K}, got {beta!r}")
        object.__setattr__(self, "beta", beta)

    @property
    def width(self) -> int:
        return sum(math.comb(self.K, b) for b in self.beta)

    @property
    def label(self) -> str:
        return "{" + ",".join(map(str, self.beta)) + "}"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class PilotMatrix:
    """K x L binary pilot, optionally tagged with the pattern it came from.

    ``truncated`` is true when columns of the last repetition block were
    dropped; such matrices are generally only approximately balanced.
    """

    bits: np.ndarray
    origin: BalancedPattern | None = None
    seed: int | None = None
    truncated: bool = False

    def __post_init__(self):
        arr = np.array(self.bits)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractError(f"pilot must be a nonempty K x L matrix, got shape {arr.shape}")
        if np.any((arr != 0) & (arr != 1)):
            raise ContractError("pilot entries must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)
        if self.origin is not None and self.origin.K != arr.shape[0]:
            raise ContractError("origin pattern K does not match the matrix")

    @property
    def K(self) -> int:
        return self.bits.shape[0]

    @property
    def L(self) -> int:
        return self.bits.shape[1]

    @property
    def exact_balanced_origin(self) -> bool:
        return self.origin is not None and not self.truncated

    def to_json(self) -> str:
        doc = {"K": self.K, "L": self.L}
        if self.origin is not None:
            doc["beta"] = list(self.origin.beta)
        if self.seed is not None:
            doc["seed"] = self.seed
        doc["rows"] = ["".join(map(str, row)) for row in self.bits.tolist()]
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "PilotMatrix":
        doc = json.loads(text)
        rows = doc["rows"]
        if len(rows) != doc["K"] or any(len(r) != doc["L"] for r in rows):
            raise ContractError("pilot JSON rows disagree with K/L")
        if any(set(r) - {"0", "1"} for r in rows):
            raise ContractError("pilot JSON rows must be bitstrings")
        bits = np.array([[int(ch) for ch in r] for r in rows], dtype=np.uint8)
        origin = BalancedPattern(doc["K"], tuple(doc["beta"])) if "beta" in doc else None
        truncated = origin is not None and doc["L"] % origin.width != 0
        return cls(bits, origin, doc.get("seed"), truncated)


@dataclass(frozen=True)
class AbcCoefficients:
    """Per-column frequency of single, pairwise and triple pilot activity."""

    a: Fraction
    b: Fraction
    c: Fraction

    def as_floats(self):
        return float(self.a), float(self.b), float(self.c)


@dataclass(frozen=True)
class ChannelEstimate:
    lambda_hat: np.ndarray
    sector: int = 0

    def __post_init__(self):
        arr = np.array(self.lambda_hat, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ContractError("channel estimate has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "lambda_hat", arr)


# -- construction -------------------------------------------------------------


def basic_matrix(K: int, R: int) -> PilotMatrix:
    """All weight-``R`` columns of length ``K`` in lexicographic support order."""
    if not 1 <= R <= K:
        raise ContractError(f"R must satisfy 1 <= R <= K={K}, got {R}")
    cols = list(itertools.combinations(range(K), R))
    bits = np.zeros((K, len(cols)), dtype=np.uint8)
    for j, support in enumerate(cols):
        bits[list(support), j] = 1
    return PilotMatrix(bits, BalancedPattern(K, (R,)))


def concat_pattern(p: BalancedPattern) -> PilotMatrix:
    blocks = [basic_matrix(p.K, r).bits for r in p.beta]
    return PilotMatrix(np.hstack(blocks), p)


def enumerate_patterns(K: int):
    """All ``2^K - 1`` nonempty weight sets, by size then lexicographically."""
    if K > MAX_EXHAUSTIVE_K:
        raise UnsupportedError(f"pattern enumeration limited to K <= {MAX_EXHAUSTIVE_K}")
    weights = range(1, K + 1)
    return [BalancedPattern(K, beta) for r in weights for beta in itertools.combinations(weights, r)]


def expand_to_length(p: BalancedPattern, L: int, seed: int) -> PilotMatrix:
    """Repeat the pattern block until it covers ``L`` slots, then drop
    randomly chosen columns of the final block to land on exactly ``L``."""
    if L < 1:
        raise ContractError("L must be >= 1")
    block = concat_pattern(p).bits
    width = block.shape[1]
    reps = -(-L // width)
    bits = np.tile(block, reps)
    excess = width * reps - L
    if excess:
        rng = stream_rng(seed, 0, PILOT_LANE)
        last = np.arange(width * (reps - 1), width * reps)
        drop = rng.choice(last, size=excess, replace=False)
        bits = np.delete(bits, drop, axis=1)
    return PilotMatrix(bits, p, seed, truncated=bool(excess))


# -- balance checks -----------------------------------------------------------


def _column_masks(X: PilotMatrix) -> np.ndarray:
    powers = (1 << np.arange(X.K, dtype=np.int64))
    return X.bits.astype(np.int64).T @ powers


def zeta(X: PilotMatrix, theta) -> int:
    """Number of columns whose support contains every user in ``theta``."""
    theta = sorted(set(int(t) for t in theta))
    if not theta:
        raise ContractError("theta must be nonempty")
    if theta[0] < 0 or theta[-1] >= X.K:
        raise ContractError(f"theta indices must lie in 0..{X.K - 1}")
    return int(np.all(X.bits[theta, :] == 1, axis=0).sum())


def superset_counts(X: PilotMatrix) -> np.ndarray:
    """``zeta`` for every subset at once, indexed by bitmask (SOS transform)."""
    if X.K > MAX_EXHAUSTIVE_K:
        raise UnsupportedError(f"exhaustive balance check limited to K <= {MAX_EXHAUSTIVE_K}")
    f = np.bincount(_column_masks(X), minlength=1 << X.K).astype(np.int64)
    idx = np.arange(1 << X.K)
    for k in range(X.K):
        bit = 1 << k
        lo = idx[(idx & bit) == 0]
        f[lo] += f[lo | bit]
    return f


def is_balanced(X: PilotMatrix) -> bool:
    """True iff ``zeta(X, theta)`` depends only on ``len(theta)``."""
    f = superset_counts(X)
    sizes = np.array([bin(i).count("1") for i in range(len(f))])
    for r in range(1, X.K + 1):
        vals = f[sizes == r]
        if vals.min() != vals.max():
            return False
    return True


def balance_residual(X: PilotMatrix) -> dict:
    """Spread (max - min) of per-user and per-pair activity counts.

    Zero for a balanced matrix; truncated expansions leave a small residue.
    """
    G = X.bits.astype(np.int64) @ X.bits.T.astype(np.int64)
    diag = np.diag(G)
    off = G[~np.eye(X.K, dtype=bool)]
    return {
        "single_spread": int(diag.max() - diag.min()),
        "pair_spread": int(off.max() - off.min()) if off.size else 0,
    }


def abc_of_pattern(p: BalancedPattern) -> AbcCoefficients:
    K = p.K
    den = sum(binom(K, b) for b in p.beta)
    a = Fraction(sum(binom(K - 1, b - 1) for b in p.beta), den)
    b = Fraction(sum(binom(K - 2, s - 2) for s in p.beta), den)
    c = Fraction(sum(binom(K - 3, s - 3) for s in p.beta), den)
    return AbcCoefficients(a, b, c)


def abc_of_matrix(X: PilotMatrix) -> AbcCoefficients:
    """Empirical a, b, c; raises if they depend on which users are picked."""
    B = X.bits.astype(np.int64)
    L = X.L
    singles = B.sum(axis=1)
    if singles.min() != singles.max():
        raise InconsistencyError(f"per-user activity differs across users: {singles.tolist()}")
    pairs = [int(B[i] @ B[j]) for i, j in itertools.combinations(range(X.K), 2)]
    if pairs and min(pairs) != max(pairs):
        raise InconsistencyError(f"pairwise co-activity is index dependent: {sorted(set(pairs))}")
    triples = [int((B[i] * B[j] * B[k]).sum()) for i, j, k in itertools.combinations(range(X.K), 3)]
    if triples and min(triples) != max(triples):
        raise InconsistencyError(f"triple co-activity is index dependent: {sorted(set(triples))}")
    return AbcCoefficients(
        Fraction(int(singles[0]), L),
        Fraction(pairs[0] if pairs else 0, L),
        Fraction(triples[0] if triples else 0, L),
    )


def is_singular(p: BalancedPattern) -> bool:
    abc = abc_of_pattern(p)
    return abc.a == abc.b


# -- estimation ---------------------------------------------------------------


def gram_inverse(X: PilotMatrix) -> np.ndarray:
    """``(X X^T)^{-1}``, in closed form for untruncated balanced pilots."""
    if X.exact_balanced_origin:
        abc = abc_of_pattern(X.origin)
        a, b = float(abc.a), float(abc.b)
        if abc.a == abc.b:
            raise SingularPatternError(f"pattern {X.origin} has a == b; X X^T is singular")
        K = X.K
        return (np.eye(K) - b / (a + (K - 1) * b) * np.ones((K, K))) / (X.L * (a - b))
    G = X.bits.astype(float) @ X.bits.T.astype(float)
    if np.linalg.matrix_rank(G) < X.K:
        name = f"pattern {X.origin}" if X.origin is not None else "pilot matrix"
        raise SingularPatternError(f"{name}: X X^T is singular")
    # LU with partial pivoting
    return np.linalg.solve(G, np.eye(X.K))


def ls_estimate(X: PilotMatrix, u, lambda_n_m: float, sector: int = 0, clip: bool = False):
    """Unbiased LS gain estimate ``(X X^T)^{-1} X (u - lambda_n 1)``.

    ``u`` may carry leading batch axes (``(..., L)``); then a plain array of
    shape ``(..., K)`` is returned instead of a :class:`ChannelEstimate`.
    ``clip`` zeroes negative estimates; it breaks unbiasedness and is off
    by default.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != X.L:
        raise ContractError(f"count vector has length {u.shape[-1]}, pilot L={X.L}")
    H = gram_inverse(X) @ X.bits.astype(float)
    est = (u - lambda_n_m) @ H.T
    if clip:
        est = np.maximum(est, 0.0)
    if u.ndim == 1:
        return ChannelEstimate(est, sector)
    return est


def exact_mse_trace(X: PilotMatrix, lambda_sr, lambda_n_m: float) -> float:
    """Dense evaluation of the LS estimator MSE for one sector."""
    lam = np.asarray(lambda_sr, dtype=float)
    if lam.shape != (X.K,):
        raise ContractError(f"lambda_sr must have length K={X.K}")
    Xf = X.bits.astype(float)
    G = Xf @ Xf.T
    if np.linalg.matrix_rank(G) < X.K:
        raise SingularPatternError("X X^T is singular")
    A = np.linalg.inv(G)
    B = A @ Xf
    per_slot = Xf.T @ lam
    return float(np.sum(B * B, axis=0) @ per_slot + lambda_n_m * np.trace(A))


def theoretical_mse(K: int, L: int, abc: AbcCoefficients, lambda_n_m: float, lambda_l1: float) -> float:
    """Closed-form LS MSE of a balanced pilot with coefficients ``abc``."""
    a, b, c = abc.a, abc.b, abc.c
    if a == b:
        raise SingularPatternError("a == b: degenerate pattern, X X^T singular")
    s = a + (K - 1) * b
    if s <= 0:
        raise SingularPatternError("a + (K-1) b must be positive")
    a, b, c, s = float(a), float(b), float(c), float(s)
    noise = lambda_n_m * K * (1 - b / s) / (L * (a - b))
    correction = ((2 - K) * b * b - 2 * a * b) / s**2
    signal = lambda_l1 / (L * (a - b) ** 2) * (s + correction * (a + 3 * b * (K - 1) + c * (K - 1) * (K - 2)))
    return noise + signal


@dataclass
class RankedPattern:
    pattern: BalancedPattern
    abc: AbcCoefficients
    per_sector: list = field(default_factory=list)

    @property
    def aggregate(self) -> float:
        return float(sum(self.per_sector))


def rank_patterns(K: int, L: int, sectors):
    """Rank every nonsingular pattern by summed closed-form MSE.

    ``sectors`` is a sequence of ``(lambda_n, l1_norm)`` pairs.  Returns
    ``(ranked, excluded)``; singular patterns land in ``excluded``.
    """
    sectors = list(sectors)
    if not sectors:
        raise ContractError("need at least one sector")
    ranked, excluded = [], []
    for p in enumerate_patterns(K):
        abc = abc_of_pattern(p)
        if abc.a == abc.b:
            excluded.append(p)
            continue
        mses = [theoretical_mse(K, L, abc, ln, l1) for ln, l1 in sectors]
        ranked.append(RankedPattern(p, abc, mses))
    if not ranked:
        raise ContractError(f"every pattern is singular for K={K}")
    for p in excluded:
        log.info("excluded singular pattern %s (a == b)", p)
    ranked.sort(key=lambda r: (r.aggregate, r.pattern.width, r.pattern.beta))
    return ranked, excluded


def optimize_pattern(K: int, L: int, lambda_n_m: float, lambda_l1: float):
    """Single-sector pattern search: ``[(pattern, mse), ...]`` ascending."""
    ranked, _ = rank_patterns(K, L, [(lambda_n_m, lambda_l1)])
    return [(r.pattern, r.aggregate) for r in ranked]


def normalized_mse(estimate, truth) -> float:
    err = np.asarray(estimate, float) - np.asarray(truth, float)
    return float(np.sum(err**2) / np.sum(np.asarray(truth, float) ** 2))


def normalized_mae(estimate, truth) -> float:
    err = np.asarray(estimate, float) - np.asarray(truth, float)
    return float(np.sum(np.abs(err)) / np.sum(np.abs(np.asarray(truth, float))))
