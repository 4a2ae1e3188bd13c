import math

import numpy as np
import pytest

from conftest import plan_sets
from holarchy.engine import AgentStates, holon_entry_state, learning_iteration, run_baseline
from holarchy.metrics import total_comm_cost
from holarchy.netsim import Network
from holarchy.plans import CostFunction, make_plan_set
from holarchy.scheduler import (Scheme, SchemeConfig, run_holarchic_pass,
                                run_mitigation_scenario, run_scheme)
from holarchy.topology import ConfigurationError, Scale, build_tree, decompose_holarchy

CF0 = CostFunction()


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SchemeConfig(Scheme.HOLARCHIC_RUNTIME, tau=0)
    with pytest.raises(ConfigurationError):
        SchemeConfig(Scheme.HOLARCHIC_RUNTIME, scale=Scale.PARTIAL)
    assert SchemeConfig("h-term", scale="partial", branch_index=1).scheme is Scheme.HOLARCHIC_TERMINATION


def test_pass_on_fifteen_nodes_sends_68_tau(rng):
    t = build_tree(15, 2)
    states = AgentStates(t, plan_sets(rng, 15, 4, 6))
    res = run_holarchic_pass(decompose_holarchy(t), states, CF0, tau=5)
    assert res.messages == 340 == total_comm_cost(2, 3, 5)
    stage0 = [n for (it, st, h), n in res.ledger.counts.items() if st == 0]
    assert stage0 == [20, 20, 20, 20]  # 2 * tau * (2^0 + 2^1 - 1) per holon
    assert [len(c) for c in res.stage_costs] == [4, 2, 1]


def test_single_stage_pass_equals_one_baseline_iteration(rng):
    t = build_tree(3, 2, seed=1)
    plans = plan_sets(rng, 3, 5, 4)
    a = AgentStates(t, plans)
    res = run_holarchic_pass(decompose_holarchy(t), a, CF0, tau=1)
    base = run_baseline(t, plans, CF0, T_max=1)
    assert res.cost == base.final_cost
    assert a.selections_by_agent(t) == base.selections
    assert res.messages == base.total_messages


def test_baseline_scheme_delegates(rng):
    t = build_tree(31, 2, seed=2)
    plans = plan_sets(rng, 31, 6, 8)
    a = run_scheme(SchemeConfig(Scheme.BASELINE), t, plans, CF0, keep_history=True)
    b = run_baseline(t, plans, CF0, keep_history=True)
    assert a.costs == b.costs and a.history == b.history
    assert [r.messages for r in a.records] == [r.messages for r in b.records]


def test_runtime_with_tau_one_on_single_stage_is_baseline(rng):
    t = build_tree(3, 2, seed=0)
    plans = plan_sets(rng, 3, 6, 5)
    rt = run_scheme(SchemeConfig(Scheme.HOLARCHIC_RUNTIME, tau=1), t, plans, CF0,
                    keep_history=True)
    bl = run_baseline(t, plans, CF0, keep_history=True)
    assert rt.costs == bl.costs and rt.history == bl.history


def test_termination_after_perfect_baseline_changes_nothing():
    # complementary plans let baseline reach zero cost
    plans = [make_plan_set(i, [[1, 0], [0, 1]], [0, 1]) for i in range(6)]
    t = build_tree(6, 2, seed=0)
    base = run_baseline(t, plans, CF0)
    assert base.final_cost == 0
    term = run_scheme(SchemeConfig(Scheme.HOLARCHIC_TERMINATION), t, plans, CF0)
    assert term.final_cost == 0
    assert term.selections == base.selections


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("scale", ["full", "partial"])
def test_schemes_monotone(scheme, scale, rng):
    t = build_tree(40, 3, seed=5)
    plans = plan_sets(rng, 40, 6, 10)
    cfg = SchemeConfig(scheme, tau=3, scale=scale, branch_index=1 if scale == "partial" else None)
    tr = run_scheme(cfg, t, plans, CostFunction(lam=0.25))
    assert all(b <= a for a, b in zip(tr.costs, tr.costs[1:]))
    g = sum(plans[a].matrix[i] for a, i in tr.selections.items())
    np.testing.assert_allclose(tr.global_response, g, rtol=1e-9, atol=1e-9)


def test_h_init_switches_to_baseline(rng):
    t = build_tree(31, 2, seed=1)
    tr = run_scheme(SchemeConfig(Scheme.HOLARCHIC_INITIALIZATION, init_passes=2), t,
                    plan_sets(rng, 31, 5, 8), CF0)
    phases = [r.phase for r in tr.records]
    assert phases[:2] == ["holarchic", "holarchic"]
    assert set(phases[2:]) == {"baseline"}


def test_h_term_runs_baseline_first(rng):
    t = build_tree(31, 2, seed=1)
    tr = run_scheme(SchemeConfig(Scheme.HOLARCHIC_TERMINATION), t, plan_sets(rng, 31, 5, 8), CF0)
    phases = [r.phase for r in tr.records]
    k = phases.index("holarchic")
    assert set(phases[:k]) == {"baseline"} and set(phases[k:]) == {"holarchic"}
    # stops at the first holarchic pass that brings no improvement
    costs = tr.costs
    assert all(costs[i] < costs[i - 1] for i in range(k, len(costs) - 1))


def test_full_pass_messages_per_main_iteration(rng):
    t = build_tree(63, 2, seed=0)
    tr = run_scheme(SchemeConfig(Scheme.HOLARCHIC_RUNTIME, tau=2), t, plan_sets(rng, 63, 4, 6), CF0)
    assert {r.messages for r in tr.records} == {total_comm_cost(2, 5, 2)}


def test_mitigation_without_failure_is_run_scheme(rng):
    t = build_tree(15, 2, seed=0)
    plans = plan_sets(rng, 15, 4, 6)
    cfg = SchemeConfig(Scheme.HOLARCHIC_RUNTIME)
    m = run_mitigation_scenario(t, plans, CF0, set(), 2, cfg)
    assert m.trace.costs == run_scheme(cfg, t, plans, CF0).costs


def test_root_failure_splits_learning(rng):
    t = build_tree(7, 2, seed=0)
    plans = plan_sets(rng, 7, 4, 6)
    m = run_mitigation_scenario(t, plans, CF0, {0}, 2, SchemeConfig())
    assert sorted(c.num_agents for c in m.components) == [3, 3]
    assert [r.phase for r in m.trace.records[:2]] == ["baseline", "baseline"]
    for tr in m.component_traces:
        assert all(b <= a for a, b in zip(tr.costs, tr.costs[1:]))
    assert t.agent_at(0) not in m.selections
    g = sum(plans[a].matrix[i] for a, i in m.selections.items())
    assert m.survivor_cost == pytest.approx(CF0.global_cost(g))


def test_all_non_root_fail_leaves_singleton_on_best_plan(rng):
    t = build_tree(7, 2, seed=0)
    plans = plan_sets(rng, 7, 5, 6)
    m = run_mitigation_scenario(t, plans, CF0, set(range(1, 7)), 1, SchemeConfig())
    root_agent = t.agent_at(0)
    variances = np.var(plans[root_agent].matrix, axis=1)
    assert m.selections == {root_agent: int(np.argmin(variances))}


def test_mitigation_on_link_cut(rng):
    t = build_tree(15, 2, seed=0)
    m = run_mitigation_scenario(t, plan_sets(rng, 15, 4, 6), CF0, (), 1, SchemeConfig(),
                                failed_edges=[(0, 1)])
    assert sorted(c.num_agents for c in m.components) == [7, 8]
