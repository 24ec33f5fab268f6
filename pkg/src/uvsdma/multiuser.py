"""Detection of one desired OOK user under unknown interference.

Interferer on/off patterns ("modes") are indexed little-endian: bit ``k`` of
mode index ``i`` is interferer ``k``'s symbol, so mode 0 is all-off.  ``C``
holds the per-mode intensities with the desired user on, ``D`` with it off.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .channel import q_function
from .errors import ContractError, DegenerateProblemError, UnsupportedError
from .lattice import iter_lattice, sector_caps, tail_mass
from .twouser import TruncatedSum, TwoUserProblem, loglik, make_detector, separation

log = logging.getLogger(__name__)

MAX_INTERFERERS = 16
ASCENDING, DESCENDING = "ascending", "descending"


@dataclass(frozen=True)
class InterferenceScenario:
    lambda_a: np.ndarray
    interferers: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        la = np.array(self.lambda_a, dtype=float)
        ln = np.array(self.noise, dtype=float)
        lb = np.array(self.interferers, dtype=float)
        if la.ndim != 1 or ln.shape != la.shape:
            raise ContractError("lambda_a and noise must be equal-length vectors")
        if lb.size == 0:
            lb = lb.reshape(0, la.shape[0])
        if lb.ndim != 2 or lb.shape[1] != la.shape[0]:
            raise ContractError(f"interferers must be K' x M with M={la.shape[0]}, got {lb.shape}")
        if lb.shape[0] > MAX_INTERFERERS:
            raise UnsupportedError(f"at most {MAX_INTERFERERS} interferers can be enumerated")
        for name, arr in (("lambda_a", la), ("interferers", lb), ("noise", ln)):
            if not np.all(np.isfinite(arr)):
                raise ContractError(f"{name} has non-finite entries")
        if np.any(la < 0) or np.any(lb < 0):
            raise ContractError("gains must be >= 0")
        if np.any(ln <= 0):
            raise ContractError("noise must be strictly positive (use a floor such as 1e-12)")
        for name, arr in (("lambda_a", la), ("interferers", lb), ("noise", ln)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def M(self) -> int:
        return self.lambda_a.shape[0]

    @property
    def n_interferers(self) -> int:
        return self.interferers.shape[0]

    def digest(self) -> str:
        doc = {k: np.asarray(getattr(self, k)).tolist() for k in ("lambda_a", "interferers", "noise")}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class HypothesisSets:
    C: np.ndarray  # (2^K', M), desired user on
    D: np.ndarray  # (2^K', M), desired user off
    modes: np.ndarray  # (2^K', K') interferer bits

    @property
    def size(self) -> int:
        return self.C.shape[0]

    @property
    def n_interferers(self) -> int:
        return self.modes.shape[1]


def mode_bits(n_interferers: int) -> np.ndarray:
    idx = np.arange(1 << n_interferers)
    return ((idx[:, None] >> np.arange(n_interferers)) & 1).astype(np.int64)


def enumerate_modes(s: InterferenceScenario) -> np.ndarray:
    """Interference intensity of every mode, shape ``(2^K', M)``."""
    return mode_bits(s.n_interferers).astype(float) @ s.interferers


def build_hypotheses(s: InterferenceScenario) -> HypothesisSets:
    phi = enumerate_modes(s)
    D = phi + s.noise
    C = D + s.lambda_a
    for arr in (C, D):
        arr.setflags(write=False)
    return HypothesisSets(C, D, mode_bits(s.n_interferers))


def _loglik_sets(h: HypothesisSets, counts):
    return loglik(h.C, counts), loglik(h.D, counts)


def ml_decide_multi(h: HypothesisSets, counts):
    """ML bit for the desired user; ties go to 1.  Accepts a batch of counts."""
    lc, ld = _loglik_sets(h, counts)
    bit = logsumexp(lc, axis=-1) >= logsumexp(ld, axis=-1)
    return int(bit) if np.ndim(bit) == 0 else bit.astype(np.int8)


def pe_ml_multi(h: HypothesisSets, tail_epsilon: float = 1e-10) -> TruncatedSum:
    n = h.size
    lam = np.vstack([h.C, h.D])
    total = 0.0
    for _, logp in iter_lattice(lam, tail_epsilon):
        pc = logsumexp(logp[:n], axis=0)
        pd = logsumexp(logp[n:], axis=0)
        total += np.exp(np.minimum(pc, pd)).sum()
    caps = sector_caps(lam, tail_epsilon)
    bound = float(tail_mass(lam, caps).sum()) / (2 * n) / 2
    return TruncatedSum(float(total) / (2 * n), bound)


@dataclass
class PairwiseTable:
    """Offline threshold detectors for every ``(C_i, D_j)`` pair.

    ``sign[i, j]`` is +1 when ``C_i`` occupies the upper tail.  ``C_i``
    beats ``D_j`` exactly when the pair's two-user detector would declare
    ``C_i``, i.e. ``weights . N >= threshold`` for sign +1 and ``<`` for -1.
    """

    weights: np.ndarray  # (nC, nD, M)
    thresholds: np.ndarray  # (nC, nD)
    sign: np.ndarray  # (nC, nD)
    valid: np.ndarray  # (nC, nD) bool, False for degenerate pairs
    scenario_digest: str = ""
    build_seconds: float = field(default=0.0, compare=False)

    @property
    def size(self) -> int:
        return self.thresholds.shape[0]

    def u_values(self, counts) -> np.ndarray:
        """``U = sign * (weights . N - threshold)`` for every pair; shape ``(..., nC, nD)``."""
        return self.sign * self._raw(counts)

    def c_wins(self, counts) -> np.ndarray:
        """Boolean ``(..., nC, nD)``: True where ``C_i`` beats ``D_j``."""
        return (self._raw(counts) >= 0) == (self.sign > 0)

    def _raw(self, counts):
        n = np.asarray(counts, dtype=float)
        return np.einsum("...m,ijm->...ij", n, self.weights) - self.thresholds

    def to_json(self) -> str:
        entries = []
        for i in range(self.size):
            for j in range(self.size):
                entries.append(
                    {
                        "i": i,
                        "j": j,
                        "weights": [format(x, ".17g") for x in self.weights[i, j]],
                        "threshold": format(self.thresholds[i, j], ".17g"),
                        "orientation": "C" if self.sign[i, j] > 0 else "D",
                        "valid": bool(self.valid[i, j]),
                    }
                )
        return json.dumps({"scenario": self.scenario_digest, "size": self.size, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "PairwiseTable":
        doc = json.loads(text)
        n = doc["size"]
        M = len(doc["entries"][0]["weights"])
        W = np.zeros((n, n, M))
        T = np.zeros((n, n))
        S = np.zeros((n, n))
        V = np.zeros((n, n), dtype=bool)
        for e in doc["entries"]:
            i, j = e["i"], e["j"]
            W[i, j] = [float(x) for x in e["weights"]]
            T[i, j] = float(e["threshold"])
            S[i, j] = 1.0 if e["orientation"] == "C" else -1.0
            V[i, j] = e["valid"]
        return cls(W, T, S, V, doc["scenario"])


def build_pairwise_table(h: HypothesisSets, scenario_digest: str = "") -> PairwiseTable:
    t0 = time.perf_counter()
    n, M = h.size, h.C.shape[1]
    W = np.zeros((n, n, M))
    T = np.zeros((n, n))
    S = np.ones((n, n))
    V = np.ones((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            try:
                det = make_detector(TwoUserProblem(h.C[i], h.D[j]))
            except DegenerateProblemError:
                V[i, j] = False
                log.warning("degenerate pair (C_%d, D_%d): comparison will be skipped", i, j)
                continue
            W[i, j] = det.weights
            T[i, j] = det.threshold
            S[i, j] = 1.0 if det.upper == "A" else -1.0
    return PairwiseTable(W, T, S, V, scenario_digest, time.perf_counter() - t0)


def _probe_order(n, order):
    if order == ASCENDING:
        return list(range(n))
    if order == DESCENDING:
        return list(range(n - 1, -1, -1))
    raise ContractError(f"probe order must be {ASCENDING!r} or {DESCENDING!r}")


def successive_elimination(t: PairwiseTable, counts, order: str = ASCENDING, trace: list | None = None) -> int:
    """Round-based elimination for one count vector.

    Each round takes the first surviving ``C`` member (in ``order``) and
    tests it against every surviving ``D`` member: ``D_j`` falls when
    the probe beats it, the probe falls at round end if it lost any comparison.
    Returns 1 iff ``D`` empties.  Pass a list as ``trace`` to record
    ``(round, i, j, outcome)`` events.
    """
    wins = t.c_wins(counts)
    c_alive = _probe_order(t.size, order)
    d_alive = list(range(t.size))
    rnd = 0
    while c_alive and d_alive:
        i = c_alive[0]
        lost = progress = False
        for j in list(d_alive):
            if not t.valid[i, j]:
                if trace is not None:
                    trace.append((rnd, i, j, "skipped"))
                continue
            if wins[i, j]:
                d_alive.remove(j)
                progress = True
                if trace is not None:
                    trace.append((rnd, i, j, "D eliminated"))
            else:
                lost = True
                if trace is not None:
                    trace.append((rnd, i, j, "C loses"))
        if lost or not progress:
            c_alive.pop(0)
            if trace is not None:
                trace.append((rnd, i, None, "C eliminated" if lost else "C retired"))
        rnd += 1
        # every round removes a D member or the probe
        assert rnd <= 2 * t.size, "elimination failed to make progress"
    return 1 if not d_alive else 0


def successive_elimination_batch(t: PairwiseTable, counts, order: str = ASCENDING) -> np.ndarray:
    """Vectorized :func:`successive_elimination` over rows of ``counts``."""
    counts = np.atleast_2d(counts)
    n_sym = counts.shape[0]
    wins = t.c_wins(counts)  # (n, nC, nD)
    probes = np.array(_probe_order(t.size, order))
    c_alive = np.ones((n_sym, t.size), dtype=bool)
    d_alive = np.ones((n_sym, t.size), dtype=bool)
    rows = np.arange(n_sym)
    for _ in range(t.size):
        running = c_alive.any(axis=1) & d_alive.any(axis=1)
        if not running.any():
            break
        first = np.argmax(c_alive[:, probes], axis=1)
        probe = probes[first]
        valid = t.valid[probe]
        beats = wins[rows, probe]
        d_next = d_alive & ~(valid & beats)
        d_alive = np.where(running[:, None], d_next, d_alive)
        # probe leaves unless it cleared D (a lost comparison or a stall)
        drop = running & d_alive.any(axis=1)
        c_alive[rows[drop], probe[drop]] = False
    return (~d_alive.any(axis=1)).astype(np.int8)


def elimination_error_exact(
    t: PairwiseTable, h: HypothesisSets, order: str = ASCENDING, tail_epsilon: float = 1e-10
) -> TruncatedSum:
    """Error of the elimination detector summed over the truncated lattice."""
    n = h.size
    lam = np.vstack([h.C, h.D])
    err = 0.0
    for counts, logp in iter_lattice(lam, tail_epsilon):
        bit = successive_elimination_batch(t, counts, order).astype(bool)
        p = np.exp(logp)
        err += p[:n][:, ~bit].sum() + p[n:][:, bit].sum()
    caps = sector_caps(lam, tail_epsilon)
    return TruncatedSum(float(err) / (2 * n), float(tail_mass(lam, caps).sum()) / (2 * n))


def pe_upper_bound(s: InterferenceScenario) -> float:
    """Closed-form union bound on the elimination detector's error."""
    h = build_hypotheses(s)
    n = h.size
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += q_function(separation(TwoUserProblem(h.C[i], h.D[j])))
    return total / n
