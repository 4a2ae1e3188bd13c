"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from conftest import plan_sets
from holarchy.dataio import generate_synthetic
from holarchy.engine import AgentStates, run_baseline
from holarchy.metrics import (baseline_comm_cost, improvement_index, relative_performance,
                              standardize, sync_comm_cost, total_comm_cost)
from holarchy.oracle import enumerate_costs, rank_of
from holarchy.plans import CostFunction, make_plan_set
from holarchy.scheduler import (Scheme, SchemeConfig, run_holarchic_pass,
                                run_mitigation_scenario, run_scheme)
from holarchy.topology import build_tree, decompose_holarchy

CF0 = CostFunction()


def test_criterion_1_oracle_optimality(report):
    start = time.perf_counter()
    plans = generate_synthetic(10, k=4, d=20, seed=2024)
    costs = enumerate_costs(plans).sorted_costs
    ranks = []
    for shuffle in range(10):
        tr = run_baseline(build_tree(10, 2, seed=shuffle), plans, CF0)
        ranks.append(rank_of(tr.final_cost, costs))
    elapsed = time.perf_counter() - start
    median, worst = float(np.median(ranks)), max(ranks)
    ok = median <= 0.2 and worst <= 1.0 and elapsed < 60
    report(1, ok, f"median rank {median:.4f}%, worst {worst:.4f}%, {elapsed:.1f}s")
    assert ok


def test_criterion_2_monotonicity(report):
    rng = np.random.default_rng(7)
    schemes = list(Scheme)
    bad = []
    for run in range(1000):
        N = int(rng.integers(1, 41))
        c = int(rng.integers(2, 6))
        k = int(rng.integers(1, 6))
        d = int(rng.integers(1, 9))
        lam = float(rng.choice([0.0, 0.25, 0.5, 0.75]))
        tree = build_tree(N, c, seed=run)
        partial = tree.height > 0 and rng.random() < 0.5
        cfg = SchemeConfig(schemes[run % 4], tau=int(rng.integers(1, 4)),
                           scale="partial" if partial else "full",
                           branch_index=int(rng.integers(len(tree.children[0]))) if partial else None)
        tr = run_scheme(cfg, tree, plan_sets(rng, N, k, d), CostFunction(lam=lam), T_max=12)
        if any(b > a for a, b in zip(tr.costs, tr.costs[1:])):
            bad.append(run)
    report(2, not bad, f"{1000 - len(bad)}/1000 traces non-increasing")
    assert not bad


def test_criterion_3_communication_cost(report):
    start = time.perf_counter()
    mismatches = []
    for c in range(2, 6):
        for h in range(1, 5):
            t = build_tree(sum(c**i for i in range(h + 1)), c)
            plans = plan_sets(np.random.default_rng(c + 10 * h), t.num_agents, 2, 2)
            if run_baseline(t, plans, CF0, T_max=1).total_messages != baseline_comm_cost(c, h):
                mismatches.append(("M_b", c, h))
            for tau in (1, 5):
                res = run_holarchic_pass(decompose_holarchy(t), AgentStates(t, plans), CF0, tau)
                if res.messages != total_comm_cost(c, h, tau):
                    mismatches.append(("M_t", c, h, tau))
                if res.sync_messages != sync_comm_cost(c, h, tau):
                    mismatches.append(("M_s", c, h, tau))
                if (c, h) == (2, 3):
                    per_stage = [sum(n for (_, s, _), n in res.ledger.counts.items() if s == j)
                                 for j in range(3)]
                    holon0 = res.ledger.counts[min(k for k in res.ledger.counts if k[1] == 0)]
                    if per_stage != [16 * tau, 24 * tau, 28 * tau] or res.messages != 68 * tau \
                            or holon0 != 4 * tau:
                        mismatches.append(("anchors", tau))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 10
    report(3, ok, f"{len(mismatches)} mismatches over 32 (c, h, tau) cases, {elapsed:.2f}s")
    assert ok


def test_criterion_4_convergence_speed(report):
    base_ok = faster = 0
    details = []
    for seed in range(10):
        plans = generate_synthetic(127, seed=seed)
        tree = build_tree(127, 2, seed=seed)
        b = run_baseline(tree, plans, CF0)
        r = run_scheme(SchemeConfig(Scheme.HOLARCHIC_RUNTIME), tree, plans, CF0)
        base_ok += b.converged and b.iterations_to_convergence <= 20
        faster += r.iterations_to_convergence <= b.iterations_to_convergence
        details.append(f"{b.iterations_to_convergence}/{r.iterations_to_convergence}")
    ok = base_ok >= 9 and faster >= 8
    report(4, ok, f"baseline <=20 its in {base_ok}/10, runtime <= baseline in {faster}/10 "
                  f"(baseline/runtime its: {' '.join(details)})")
    assert ok


def test_criterion_5_mitigation_bound(report):
    ratios = []
    for seed in range(10):
        plans = generate_synthetic(127, seed=seed)
        tree = build_tree(127, 2, seed=seed)
        b = run_baseline(tree, plans, CF0)
        m = run_mitigation_scenario(tree, plans, CF0, {0}, 2, SchemeConfig())
        ratios.append(m.survivor_cost / b.final_cost)
    median = float(np.median(ratios))
    ok = median <= 1.25
    report(5, ok, f"median survivor/baseline cost ratio {median:.3f} "
                  f"(range {min(ratios):.2f}-{max(ratios):.2f}), bound 1.25")
    assert ok


def test_criterion_6_metric_properties(report):
    rng = np.random.default_rng(11)
    pairs = rng.exponential(size=(100_000, 2)) * rng.choice([1e-6, 1, 1e6], size=(100_000, 1))
    pairs[::1000] = 0.0
    bounded = antisym = True
    for a, b in pairs:
        i = improvement_index(a, b)
        bounded &= -1 <= i <= 1
        antisym &= improvement_index(b, a) == -i
    hand = (relative_performance(10, 5, 10, 5) == 1.0
            and relative_performance(10, 7.5, 10, 5) == 0.5
            and relative_performance(10, 10, 10, 5) == 0
            and relative_performance(10, 5, 4, 4) is None
            and standardize([1, 1, 1])[1]
            and standardize([0, 2])[0].tolist() == [-1.0, 1.0])
    invariant = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        N, k = 8, 5
        vectors = [r.standard_normal((k, 6)) for _ in range(N)]
        a = [make_plan_set(i, v, np.arange(k)) for i, v in enumerate(vectors)]
        b = [make_plan_set(i, v, r.permutation(k)) for i, v in enumerate(vectors)]
        tree = build_tree(N, 2, seed=seed)
        ta = run_baseline(tree, a, CF0, keep_history=True)
        tb = run_baseline(tree, b, CF0, keep_history=True)
        invariant += ta.history == tb.history and ta.costs == tb.costs
    ok = bounded and antisym and hand and invariant == 100
    report(6, ok, f"bounded={bounded}, antisymmetric={antisym}, hand values={hand}, "
                  f"permutation-invariant {invariant}/100")
    assert ok


def _cli(out: Path, threads: int) -> None:
    env = dict(os.environ, HOLARCH_THREADS=str(threads))
    cmd = [sys.executable, "-m", "holarchy", "--agents", "31", "--plans", "6", "--dim", "12",
           "--reps", "3", "--iterations", "8", "--children", "2", "3",
           "--lambda", "0", "0.5", "--scheme", "baseline", "h-init", "h-runtime", "h-term",
           "--scale", "full", "partial", "--branch", "all", "--seed", "5", "--out", str(out)]
    subprocess.run(cmd, env=env, check=True, capture_output=True)


def test_criterion_7_determinism(report, tmp_path):
    _cli(tmp_path / "a", 1)
    _cli(tmp_path / "b", 1)
    _cli(tmp_path / "c", 3)
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / x / f).read_bytes()
               for f in ("curves.csv", "summary.csv") for x in ("b", "c"))
    rows = len((tmp_path / "a" / "summary.csv").read_text().splitlines()) - 1
    report(7, same, f"byte-identical curves.csv and summary.csv across 2 runs and 1 vs 3 "
                    f"workers ({rows} runs)" if same else "outputs differ")
    assert same
