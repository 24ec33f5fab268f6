"""Acceptance suite; each test prints one ``criterion N PASS|FAIL`` line."""

import itertools
import json
import math
import time

import numpy as np
import pytest

from uvsdma.channel import q_function, stream_rng
from uvsdma.config import load_config, validate_document
from uvsdma.harness import run_experiment
from uvsdma.kernels import elimination_stream, ml_stream
from uvsdma.multiuser import (
    InterferenceScenario,
    build_hypotheses,
    build_pairwise_table,
    ml_decide_multi,
    pe_ml_multi,
    successive_elimination_batch,
)
from uvsdma.pilots import (
    abc_of_pattern,
    enumerate_patterns,
    exact_mse_trace,
    expand_to_length,
    is_singular,
    rank_patterns,
    theoretical_mse,
)
from uvsdma.twouser import (
    TwoUserProblem,
    make_detector,
    ml_mask_pair,
    pe_ml_pair,
    pe_threshold_closed_form,
    sensitivity_constant,
)


def test_closed_form_mse_matches_dense_trace(acceptance):
    t0 = time.perf_counter()
    rng = stream_rng(101)
    patterns = [p for p in enumerate_patterns(4) if not is_singular(p)]
    worst = 0.0
    for p in patterns:
        abc = abc_of_pattern(p)
        for _ in range(100):
            X = expand_to_length(p, p.width * int(rng.integers(1, 8)), seed=0)
            lam = rng.uniform(0.0, 50.0, 4)
            ln = float(rng.uniform(0.0, 10.0))
            exact = exact_mse_trace(X, lam, ln)
            closed = theoretical_mse(4, X.L, abc, ln, float(lam.sum()))
            worst = max(worst, abs(closed - exact) / exact)
    elapsed = time.perf_counter() - t0
    ok = len(patterns) == 14 and worst <= 1e-9 and elapsed < 5
    acceptance("1", ok, f"14x100 draws, max rel diff {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_identity_plus_ones_ranks_first(acceptance, pmt_gains):
    t0 = time.perf_counter()
    firsts = []
    for g in pmt_gains:
        ranked, _ = rank_patterns(4, 100, [(1.0, float(g.sum()))])
        firsts.append(ranked[0].pattern.label)
    ranked, _ = rank_patterns(4, 100, [(1.0, float(g.sum())) for g in pmt_gains])
    firsts.append(ranked[0].pattern.label)
    elapsed = time.perf_counter() - t0
    ok = firsts == ["{1,4}"] * 4 and elapsed < 1
    acceptance("2", ok, f"first pattern per PMT and aggregate: {firsts} (expected {{1,4}}), {elapsed:.2f}s")
    assert ok


def test_estimator_statistics(acceptance, configs_dir):
    cfg = load_config(configs_dir / "table1.json")
    cfg["estimate"]["patterns"] = ["{1,4}"]
    del cfg["estimate"]["detection"]
    t0 = time.perf_counter()
    rep = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    rows = rep.tables["mse"]
    rel = [abs(r["relative_error"]) for r in rows]
    z = [r["max_abs_bias_z"] for r in rows]
    ok = len(rows) == 3 and max(rel) <= 0.10 and max(z) <= 3 and elapsed < 30
    acceptance("3", ok, f"max |rel MSE err| {max(rel):.3f}, max |bias z| {max(z):.2f}, {elapsed:.2f}s")
    assert ok


def test_gaussian_surrogate(acceptance, configs_dir):
    cfg = load_config(configs_dir / "gaussfit.json")
    cfg["gaussfit"]["scales"] = [1.0]
    t0 = time.perf_counter()
    rep = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    fit = rep.tables["fit"][0]
    ok = fit["samples"] == 10**6 and fit["ks_distance"] <= 0.02 and elapsed < 10
    acceptance("4", ok, f"KS {fit['ks_distance']:.4f} on 1e6 samples, {elapsed:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def scalar_two_user():
    doc = {
        "schema_version": 1,
        "kind": "detect2",
        "seed": 3,
        "detect2": {"problems": [{"name": "p", "gain_a": [8.0], "gain_b": [3.0], "noise": [1.0]}], "symbols": 10**6},
    }
    t0 = time.perf_counter()
    rep = run_experiment(validate_document(doc))
    return rep, time.perf_counter() - t0


class TestTwoUserQuality:
    def test_closed_form_value(self, acceptance):
        p = TwoUserProblem([9.0], [4.0])
        pe = pe_threshold_closed_form(p)
        ok = abs(pe - q_function(0.98058)) < 1e-5 and abs(pe - 0.16337) < 1e-4
        acceptance("5a", ok, f"closed form {pe:.6f}, Q(0.98058) = {q_function(0.98058):.6f}")
        assert ok

    def test_empirical_close_to_closed_form(self, acceptance, scalar_two_user):
        rep, elapsed = scalar_two_user
        det = next(r for r in rep.tables["detectors"] if r["detector"] == "optimal")
        pe = rep.tables["analytic"][0]["closed_form"]
        gap = abs(det["ser_rate"] - pe)
        tol = 3 * det["ser_se"] + 0.002
        ok = det["symbols"] == 10**6 and gap <= tol and elapsed < 20
        acceptance("5b", ok, f"empirical {det['ser_rate']:.6f} vs closed form {pe:.6f}: gap {gap:.5f} > tol {tol:.5f}" if gap > tol else f"gap {gap:.5f} <= {tol:.5f}, {elapsed:.2f}s")
        assert ok

    def test_ml_below_closed_form(self, acceptance, scalar_two_user):
        rep, elapsed = scalar_two_user
        ana = rep.tables["analytic"][0]
        ok = ana["pe_ml"] <= ana["closed_form"] and elapsed < 20
        acceptance("5c", ok, f"pe_ml {ana['pe_ml']:.6f} <= closed form {ana['closed_form']:.6f}, {elapsed:.2f}s")
        assert ok


def test_union_bound_and_ordering(acceptance):
    doc = {
        "schema_version": 1,
        "kind": "multiuser",
        "seed": 5,
        "multiuser": {"scenarios": [{"name": "k1", "desired": [5.0], "interferers": [[3.0]], "noise": [1.0]}], "symbols": 10**6},
    }
    t0 = time.perf_counter()
    row = run_experiment(validate_document(doc)).tables["scenarios"][0]
    elapsed = time.perf_counter() - t0
    se = row["test_se"]
    ok = (
        abs(row["pe_upper_bound"] - 0.30914) < 1e-4
        and row["pe_ml_exact"] <= row["test_rate"] + 3 * se
        and row["test_rate"] <= row["pe_upper_bound"] + 3 * se
        and elapsed < 60
    )
    acceptance(
        "6",
        ok,
        f"bound {row['pe_upper_bound']:.5f}, pe_ml {row['pe_ml_exact']:.5f} <= test {row['test_rate']:.5f} (se {se:.1e}) <= bound, {elapsed:.2f}s",
    )
    assert ok


def test_sensitivity_bound(acceptance):
    t0 = time.perf_counter()
    rng = stream_rng(707)
    violations = checked = 0
    worst = 0.0
    for _ in range(1000):
        M = int(rng.integers(1, 5))
        la = rng.uniform(0.5, 40.0, M)
        lb = rng.uniform(0.5, 40.0, M)
        dist = float(np.linalg.norm(la - lb))
        delta = float(rng.uniform(0.01, 0.5)) * dist
        # constants that keep every perturbed problem inside the constraint set
        C = (dist - delta) ** 2
        D = float(max(la.max(), lb.max())) + delta
        K = sensitivity_constant(C, D)
        p0 = pe_threshold_closed_form(TwoUserProblem(la, lb))
        for m in range(M):
            for s in np.concatenate([[-delta, delta], rng.uniform(-delta, delta, 3)]):
                pert = la.copy()
                pert[m] = max(pert[m] + s, 1e-9)
                diff = abs(pe_threshold_closed_form(TwoUserProblem(pert, lb)) - p0)
                checked += 1
                worst = max(worst, diff / (K * delta))
                violations += diff > K * delta
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 30
    acceptance("7", ok, f"{violations} violations in {checked} perturbations, max |dp|/(K delta) {worst:.3f}, {elapsed:.2f}s")
    assert ok


def test_timing_direction(acceptance, configs_dir):
    cfg = load_config(configs_dir / "timing.json")
    cfg["timing"]["scenarios"] = [s for s in cfg["timing"]["scenarios"] if len(s["interferers"]) == 3]
    rep = run_experiment(cfg)
    r = rep.runtime["ratios"][0]
    audit = rep.tables["audit"][0]
    ok = r["repetitions"] >= 10 and r["ratio_median"] > 1 and audit["audit_pass"]
    acceptance(
        "8",
        ok,
        f"K'=3 median t_ML/t_TH {r['ratio_median']:.3f} (range {r['ratio_min']:.3f}..{r['ratio_max']:.3f}, "
        f"pmf-form ML {r['ratio_pmf_median']:.2f}) over {r['repetitions']} reps",
    )
    assert ok


class TestReductionAndDeterminism:
    def test_no_interferer_path_matches_two_user(self, acceptance):
        t0 = time.perf_counter()
        s = InterferenceScenario([14.0, 3.0, 0.5], np.zeros((0, 3)), [1.0, 6.0, 2.0])
        h = build_hypotheses(s)
        p = TwoUserProblem(h.C[0], h.D[0])
        grid = np.array(list(itertools.product(range(61), repeat=3)), dtype=np.int64)
        ml_multi = ml_decide_multi(h, grid).astype(bool)
        ml_pair = ml_mask_pair(p, grid)
        d = make_detector(p)
        th_pair = d.upper_mask(grid) if d.upper == "A" else ~d.upper_mask(grid)
        t = build_pairwise_table(h)
        th_multi = successive_elimination_batch(t, grid).astype(bool)
        same = (
            np.array_equal(ml_multi, ml_pair)
            and np.array_equal(ml_stream(h, grid).astype(bool), ml_pair)
            and np.array_equal(th_multi, th_pair)
            and np.array_equal(elimination_stream(t, grid).astype(bool), th_pair)
            and pe_ml_multi(h).value == pe_ml_pair(p).value
        )
        elapsed = time.perf_counter() - t0
        ok = same and elapsed < 10
        acceptance("9a", ok, f"{len(grid)} lattice points, ML and threshold decisions identical: {same}, {elapsed:.2f}s")
        assert ok

    def test_same_seed_byte_identical_csv(self, acceptance, tmp_path):
        docs = {
            "gaussfit": {"intensity": [10, 15, 20], "samples": 20000, "bins": 10, "scales": [1, 10]},
            "estimate": {
                "sectors": [{"name": "a", "gains": [3.0, 9.0], "noise": 1.0}, {"name": "b", "gains": [7.0, 2.0], "noise": 0.5}],
                "lengths": [12],
                "trials": 30,
                "detection": {"users": [1, 2]},
            },
            "pilot_search": {"K": 3, "L": 30, "sectors": [{"name": "a", "noise": 1.0, "gains": [1.0, 2.0, 3.0]}]},
            "detect2": {"problems": [{"name": "p", "gain_a": [8.0, 1.0], "gain_b": [3.0, 4.0], "noise": [1.0, 1.0]}], "symbols": 50000},
            "multiuser": {"scenarios": [{"name": "s", "desired": [5.0, 2.0], "interferers": [[3.0, 4.0]], "noise": [1.0, 1.0]}], "symbols": 50000},
            "timing": {"scenarios": [{"name": "s", "desired": [5.0], "interferers": [[3.0]], "noise": [1.0]}], "symbols": 5000, "repetitions": 10, "warmup": 1},
        }
        kinds = {"pilot_search": "pilot-search"}
        t0 = time.perf_counter()
        mismatched = []
        for section, body in docs.items():
            cfg = validate_document({"schema_version": 1, "kind": kinds.get(section, section), "seed": 12, section: body})
            a, b = run_experiment(cfg), run_experiment(json.loads(json.dumps(cfg)))
            for name in a.tables:
                if a.csv(name).encode() != b.csv(name).encode():
                    mismatched.append(f"{section}/{name}")
        elapsed = time.perf_counter() - t0
        ok = not mismatched and elapsed < 10
        acceptance("9b", ok, f"6 experiment kinds rerun, mismatched tables: {mismatched or 'none'}, {elapsed:.2f}s")
        assert ok
