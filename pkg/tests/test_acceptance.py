"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

The synthetic runs are expensive, so runs are shared through module-scoped
fixtures: one replication at the largest budget yields every smaller
budget through its checkpoints (tested in ``test_designs``). Run alone with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import record_criterion
from paircal.classifiers import bootstrap_committee, enrollment_set
from paircal.datagen import SyntheticConfig, effect_size
from paircal.designs import RunConfig, run_design
from paircal.gp import gp_fit, gp_predict
from paircal.harness import append_records, report, run_replications, summarize
from paircal.matching import empirical_label_rate
from paircal.seqtest import payoff
from paircal.theory import run_theoretical_robustcal

import oracles

pytestmark = pytest.mark.slow

BUDGETS = (200, 300, 400, 500, 600, 700)
N_RUNS = 100
PAPER_POWER = {"conventional": (0.07, 0.11, 0.15, 0.18, 0.19, 0.22),
               "robustcal": (0.16, 0.34, 0.61, 0.76, 0.85, 0.85)}


def _by_budget(records):
    return {(s.design, s.budget): s for s in summarize(records)}


@pytest.fixture(scope="module")
def h1_runs():
    """100 H1 replications per design, budgets 200..700 from one run each."""
    out, timing = {}, {}
    for design in ("robustcal", "conventional", "regression", "tau-bald"):
        t0 = time.perf_counter()
        out[design] = run_replications(RunConfig(design=design, seed=0), N_RUNS, 1, BUDGETS)
        timing[design] = time.perf_counter() - t0
    return out, timing


def test_criterion_1_power(h1_runs):
    runs, timing = h1_runs
    s = _by_budget(runs["robustcal"] + runs["conventional"])
    pr = [s["robustcal", b].rejection_rate for b in BUDGETS]
    pc = [s["conventional", b].rejection_rate for b in BUDGETS]
    ok_r = abs(pr[3] - 0.76) <= 0.15
    ok_c = abs(pc[3] - 0.18) <= 0.10
    ok_dom = all(pr[i] > pc[i] for i in range(1, 6))
    wall = timing["robustcal"] + timing["conventional"]
    ok_time = wall < 600
    detail = (f"B=500 RobustCAL {pr[3]:.2f} (0.76+-0.15), Conventional {pc[3]:.2f} (0.18+-0.10); "
              f"RobustCAL by budget {pr}, Conventional {pc}; dominance B>=300 {ok_dom}; "
              f"wall {wall:.0f}s")
    passed = ok_r and ok_c and ok_dom and ok_time
    record_criterion(1, passed, detail)
    assert passed, detail


@pytest.fixture(scope="module")
def h0_runs():
    out = {}
    for design in ("robustcal", "conventional", "regression", "tau-bald"):
        cfg = RunConfig(design=design, budget=700, seed=100_000,
                        synthetic=SyntheticConfig(hypothesis="H0"))
        out[design] = run_replications(cfg, 500, 1)
    return out


def test_criterion_2_type1(h0_runs):
    bound = 0.05 + 3 * math.sqrt(0.05 * 0.95 / 500)
    rates = {d: sum(r["v"] for r in recs) / len(recs) for d, recs in h0_runs.items()}
    passed = all(v <= bound for v in rates.values())
    detail = ", ".join(f"{d} {v:.3f}" for d, v in rates.items()) + f" (bound {bound:.4f}, 500 runs, B=700)"
    record_criterion(2, passed, detail)
    assert passed, detail


def test_criterion_3_stopping_time(h1_runs):
    runs, _ = h1_runs
    stop = {d: np.array([r["labels_used"] for r in runs[d] if r["budget"] == 500], float)
            for d in ("robustcal", "conventional")}
    rng = np.random.default_rng(2024)
    n = len(stop["robustcal"])
    wins = 0
    n_boot = 10_000
    for _ in range(n_boot):
        a = stop["robustcal"][rng.integers(0, n, n)].mean()
        b = stop["conventional"][rng.integers(0, n, n)].mean()
        wins += a < b
    frac = wins / n_boot
    mean_r = stop["robustcal"].mean()
    ok_boot, ok_mean = frac >= 0.95, abs(mean_r - 182.0) <= 60
    detail = (f"RobustCAL mean stop {mean_r:.1f}+-{stop['robustcal'].std():.1f} (182+-60: {ok_mean}); "
              f"Conventional {stop['conventional'].mean():.1f}; bootstrap P(RobustCAL<Conventional) {frac:.3f}")
    passed = ok_boot and ok_mean
    record_criterion(3, passed, detail)
    assert passed, detail


def test_criterion_4_tpr(h1_runs):
    runs, _ = h1_runs
    s = _by_budget(runs["robustcal"] + runs["regression"] + runs["tau-bald"])
    tpr = {d: [s[d, b].tpr_mean for b in BUDGETS] for d in ("robustcal", "regression", "tau-bald")}
    ok_level = all(t >= 0.9 for b, t in zip(BUDGETS, tpr["robustcal"]) if b >= 400)
    ok_dom = all(tpr["robustcal"][i] > max(tpr["regression"][i], tpr["tau-bald"][i])
                 for i in range(len(BUDGETS)))
    fmt = {d: "[" + ", ".join(f"{t:.4f}" for t in v) + "]" for d, v in tpr.items()}
    detail = (f"TPR by budget 200..700: RobustCAL {fmt['robustcal']}, regression {fmt['regression']}, "
              f"tau-BALD {fmt['tau-bald']}; >=0.9 for B>=400 {ok_level}; strict dominance {ok_dom}")
    passed = ok_level and ok_dom
    record_criterion(4, passed, detail)
    assert passed, detail


def test_criterion_5_difficulty(h1_runs):
    runs, _ = h1_runs
    power = {}
    for s_val in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5):
        for design in ("robustcal", "conventional"):
            if s_val == 0.5:
                recs = [r for r in runs[design] if r["budget"] == 200]
            else:
                cfg = RunConfig(design=design, budget=200, seed=0, synthetic=SyntheticConfig(s=s_val))
                recs = run_replications(cfg, N_RUNS, 1)
            power[design, s_val] = sum(r["v"] for r in recs) / len(recs)
    grid = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    ok_dom = all(power["robustcal", s] >= power["conventional", s] for s in grid)
    ok_easy = abs(power["robustcal", 0.0] - 1.0) <= 0.05 and abs(power["conventional", 0.0] - 1.0) <= 0.05
    detail = ("s: RobustCAL/Conventional " +
              ", ".join(f"{s}: {power['robustcal', s]:.2f}/{power['conventional', s]:.2f}" for s in grid))
    passed = ok_dom and ok_easy
    record_criterion(5, passed, detail)
    assert passed, detail


def test_criterion_6_martingale():
    t0 = time.perf_counter()
    probs = np.linspace(0.0, 1.0, 1001)
    ok_anti = all(payoff(p, 1) == -payoff(p, 0) for p in probs)
    cfg = RunConfig(design="conventional", budget=40, n_init=2, stop_on_reject=False,
                    synthetic=SyntheticConfig(hypothesis="H0"))
    finals, ok_pos = [], True
    for i in range(1000):
        r = run_design(replace(cfg, seed=50_000 + i))
        ok_pos &= all(row[1] > 0 for row in r.trajectory) and r.min_factor >= 0.5
        finals.append(r.wealth_final)
    finals = np.array(finals)
    se = finals.std(ddof=1) / math.sqrt(len(finals))
    ok_mean = abs(finals.mean() - 1.0) <= 3 * se
    wall = time.perf_counter() - t0
    detail = (f"antisymmetry {ok_anti}; positive wealth {ok_pos}; mean final H0 wealth "
              f"{finals.mean():.4f} (SE {se:.4f}, 1000 runs x 20 pairs); wall {wall:.1f}s")
    passed = ok_anti and ok_pos and ok_mean and wall < 60
    record_criterion(6, passed, detail)
    assert passed, detail


def test_criterion_7_bayes_region():
    cfg = SyntheticConfig()
    c = (np.arange(50) + 0.5) / 50
    grid = np.array([(a, b) for a in c for b in c])
    eta = empirical_label_rate(grid, cfg, 0.2, 10_000, np.random.default_rng(7))
    delta = np.asarray(effect_size(grid, cfg))
    ok = bool(np.all(eta[delta == 1] >= 0.5) and np.all(eta[delta == 0] < 0.5))
    detail = (f"min eta on effect cells {eta[delta == 1].min():.4f}, max eta elsewhere "
              f"{eta[delta == 0].max():.4f} ({int(delta.sum())} of 2500 cells in the region)")
    record_criterion(7, ok, detail)
    assert ok, detail


def test_criterion_8_theory_enclosure():
    cfg = RunConfig(design="theory", budget=4000, match_tol=0.0, stop_on_reject=False,
                    synthetic=SyntheticConfig(sigma2=1e-12))
    truth_ok = enclosure_ok = monotone_ok = reaches_one = True
    for seed in range(50):
        r = run_theoretical_robustcal(replace(cfg, seed=seed))
        truth_ok &= all(s.truth_active for s in r.monitor)
        enclosure_ok &= all(s.enclosure for s in r.monitor)
        ratios = [s.ratio for s in r.monitor]
        monotone_ok &= all(b <= a for a, b in zip(ratios, ratios[1:]))
        reaches_one &= ratios[-1] == 1.0
    passed = truth_ok and enclosure_ok and monotone_ok and reaches_one
    detail = (f"50 seeds: truth survives {truth_ok}; enclosure at every doubling {enclosure_ok}; "
              f"ratio non-increasing {monotone_ok}; ratio reaches 1 {reaches_one}")
    record_criterion(8, passed, detail)
    assert passed, detail


def test_criterion_9_determinism_and_oracles(tmp_path):
    checks = {}
    recs = []
    same = True
    for design in ("robustcal", "conventional", "regression", "tau-bald", "theory"):
        cfg = RunConfig(design=design, budget=160 if design != "theory" else 300, seed=77,
                        **({"match_tol": 0.0} if design == "theory" else {}))
        a = run_replications(cfg, 4, 1)
        b = run_replications(cfg, 4, 4)
        same &= a == b and summarize(a) == summarize(b)
        recs += a
    checks["parallelism 1 vs 4 identical"] = same

    enr_ok = True
    rng = np.random.default_rng(0)
    for k in range(10):
        X = rng.random((80, 2))
        y = (X[:, 0] + 0.5 < X[:, 1]).astype(float)
        flip = rng.random(80) < 0.2
        y[flip] = 1 - y[flip]
        com = bootstrap_committee(X, y, "logreg", 10, rng)
        pool = rng.random((300, 2))
        fns = [lambda x, m=m: int(m.predict(x[None])[0]) for m in com.members]
        enr_ok &= enrollment_set(com, pool).tolist() == oracles.brute_enrollment(fns, pool)
    checks["enrollment brute force"] = enr_ok

    gp_ok = True
    for k in range(10):
        X, yv, Xs = rng.random((30, 2)), rng.normal(size=30), rng.random((40, 2))
        gp = gp_fit(X, yv)
        m, v = gp_predict(gp, Xs)
        mr, vr = oracles.dense_gp(X, yv, Xs, gp.length_scale_, gp.signal_variance_, 1e-2)
        gp_ok &= bool(np.allclose(m, mr, atol=1e-8) and np.allclose(v, np.maximum(vr, 0), atol=1e-8))
    checks["GP posterior vs dense inverse"] = gp_ok

    path = tmp_path / "r.jsonl"
    append_records(recs, path)
    summaries = report(path, tmp_path / "s.csv")
    ref = oracles.aggregate_jsonl(path)
    agg_ok = len(summaries) == len(ref)
    for s in summaries:
        r = ref[(s.design, s.hypothesis, s.budget)]
        for key in ("rejection_rate", "stop_mean", "stop_std", "tpr_mean", "precision_mean"):
            x, y = getattr(s, key), r[key]
            agg_ok &= (math.isnan(x) and math.isnan(y)) or abs(x - y) <= 1e-12
    checks["aggregate recomputation"] = agg_ok

    passed = all(checks.values())
    detail = "; ".join(f"{k} {v}" for k, v in checks.items())
    record_criterion(9, passed, detail)
    assert passed, detail


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
