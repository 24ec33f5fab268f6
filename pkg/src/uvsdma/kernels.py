"""Compiled per-symbol detectors used for wall-clock comparisons.

The batch detectors in :mod:`uvsdma.multiuser` are vectorized across
symbols, which hides the per-symbol work each rule actually needs.  These
kernels process one symbol at a time, the way a streaming receiver would:
ML evaluates all ``2 * 2^K'`` log-likelihoods and two log-sum-exps, while
elimination stops as soon as one set is empty.  All of them are compiled
with numba so interpreter overhead does not dominate either side.

:func:`ml_pmf_stream` evaluates the ML rule literally, as two sums of
products of Poisson pmfs.  It makes the same decisions as the log-domain
kernel while the products stay representable, and is kept as a second
timing baseline.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .multiuser import ASCENDING, HypothesisSets, PairwiseTable, _probe_order


@njit(cache=True)
def _ml_kernel(counts, log_c, sum_c, log_d, sum_d, out):
    n, M = counts.shape
    H = log_c.shape[0]
    lc = np.empty(H)
    ld = np.empty(H)
    for s in range(n):
        mc = -np.inf
        md = -np.inf
        for k in range(H):
            a = -sum_c[k]
            b = -sum_d[k]
            for m in range(M):
                a += counts[s, m] * log_c[k, m]
                b += counts[s, m] * log_d[k, m]
            lc[k] = a
            ld[k] = b
            mc = max(mc, a)
            md = max(md, b)
        acc_c = 0.0
        acc_d = 0.0
        for k in range(H):
            acc_c += math.exp(lc[k] - mc)
            acc_d += math.exp(ld[k] - md)
        out[s] = 1 if mc + math.log(acc_c) >= md + math.log(acc_d) else 0


@njit(cache=True)
def _ml_pmf_kernel(counts, lam_c, lam_d, out):
    n, M = counts.shape
    H = lam_c.shape[0]
    for s in range(n):
        pc = 0.0
        pd = 0.0
        for k in range(H):
            a = 1.0
            b = 1.0
            for m in range(M):
                x = counts[s, m]
                lf = math.lgamma(x + 1.0)
                a *= math.exp(x * math.log(lam_c[k, m]) - lam_c[k, m] - lf)
                b *= math.exp(x * math.log(lam_d[k, m]) - lam_d[k, m] - lf)
            pc += a
            pd += b
        out[s] = 1 if pc >= pd else 0


@njit(cache=True)
def _elimination_kernel(counts, weights, thresholds, sign, valid, probes, out):
    n, M = counts.shape
    H = thresholds.shape[0]
    d_alive = np.empty(H, np.bool_)
    x = np.empty(M)
    for s in range(n):
        for m in range(M):
            x[m] = counts[s, m]
        for j in range(H):
            d_alive[j] = True
        n_d = H
        p = 0
        while p < H and n_d > 0:
            i = probes[p]
            lost = False
            progress = False
            for j in range(H):
                if not d_alive[j] or not valid[i, j]:
                    continue
                raw = -thresholds[i, j]
                for m in range(M):
                    raw += weights[i, j, m] * x[m]
                if (raw >= 0.0) == (sign[i, j] > 0.0):
                    d_alive[j] = False
                    n_d -= 1
                    progress = True
                else:
                    lost = True
            if lost or not progress:
                p += 1
        out[s] = 1 if n_d == 0 else 0


def _as_counts(counts):
    return np.ascontiguousarray(np.atleast_2d(counts), dtype=np.int64)


def ml_stream(h: HypothesisSets, counts) -> np.ndarray:
    """Per-symbol ML decisions; identical to :func:`~uvsdma.multiuser.ml_decide_multi`."""
    n = _as_counts(counts)
    out = np.empty(n.shape[0], dtype=np.int8)
    _ml_kernel(n, np.log(h.C), h.C.sum(axis=1), np.log(h.D), h.D.sum(axis=1), out)
    return out


def ml_pmf_stream(h: HypothesisSets, counts) -> np.ndarray:
    """Per-symbol ML with the likelihoods formed as pmf products."""
    n = _as_counts(counts)
    out = np.empty(n.shape[0], dtype=np.int8)
    _ml_pmf_kernel(n, np.ascontiguousarray(h.C), np.ascontiguousarray(h.D), out)
    return out


def elimination_stream(t: PairwiseTable, counts, order: str = ASCENDING) -> np.ndarray:
    """Per-symbol successive elimination; identical to the batch version."""
    n = _as_counts(counts)
    out = np.empty(n.shape[0], dtype=np.int8)
    probes = np.array(_probe_order(t.size, order), dtype=np.int64)
    _elimination_kernel(
        n,
        np.ascontiguousarray(t.weights),
        np.ascontiguousarray(t.thresholds),
        np.ascontiguousarray(t.sign),
        np.ascontiguousarray(t.valid),
        probes,
        out,
    )
    return out
