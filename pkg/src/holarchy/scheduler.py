"""Holarchic learning schemes layered over the baseline engine.

A holarchic pass walks the stages of a :class:`HolonStagePlan`. Every holon
of a stage runs ``tau`` learning iterations on its own members, with the
holon root closing each iteration; selections carry over to the next stage.
Holons of one stage are disjoint, so their order does not affect results.

Across main iterations the system keeps a whole-tree incumbent: a pass that
ends with a higher system-wide cost than the incumbent is undone.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .engine import (AgentStates, ConvergenceMonitor, IterationRecord, Trace,
                     baseline_iterations, holon_entry_state, learning_iteration)
from .netsim import FailureEvent, FailureKind, MessageLedger, Network
from .plans import CostFunction, PlanSet
from .topology import (ConfigurationError, HolonStagePlan, Scale, TreeTopology,
                       decompose_holarchy, partition_on_failure)


class Scheme(enum.Enum):
    BASELINE = "baseline"
    HOLARCHIC_INITIALIZATION = "h-init"
    HOLARCHIC_RUNTIME = "h-runtime"
    HOLARCHIC_TERMINATION = "h-term"


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme = Scheme.BASELINE
    tau: int = 5
    scale: Scale = Scale.FULL
    branch_index: int | None = None
    init_passes: int = 1
    conv_window: int = 3

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "scale", Scale(self.scale))
        if self.tau < 1:
            raise ConfigurationError("tau must be at least 1")
        if self.init_passes < 1:
            raise ConfigurationError("init_passes must be at least 1")
        if self.conv_window < 1:
            raise ConfigurationError("conv_window must be at least 1")
        if self.scale is Scale.PARTIAL and self.branch_index is None:
            raise ConfigurationError("partial scale needs a branch index")


@dataclass
class HolarchicPassResult:
    stage_costs: list[list[float]]  # per stage, final accepted cost of each holon
    global_response: np.ndarray
    cost: float
    ledger: MessageLedger
    selections: dict[int, int | None] = field(default_factory=dict)

    @property
    def messages(self) -> int:
        return self.ledger.total()

    @property
    def sync_messages(self) -> int:
        return self.ledger.sync()


def run_holarchic_pass(plan: HolonStagePlan, states: AgentStates, cf: CostFunction, tau: int,
                       network: Network | None = None) -> HolarchicPassResult:
    if not plan.stages:
        raise ValueError("empty holon stage plan")
    top = plan.stages[-1][0].tree
    ledger = MessageLedger()
    scratch = Network(top, ledger)
    if network is not None:
        scratch.crashed, scratch.cut = network.crashed, network.cut
        scratch.iteration = network.iteration
    stage_costs = []
    for j, holons in enumerate(plan.stages):
        costs = []
        for holon in holons:
            state = holon_entry_state(holon.tree, states, cf)
            for _ in range(tau):
                state, _ = learning_iteration(holon.tree, states, state, cf, scratch, stage=j)
            costs.append(state.cost)
        stage_costs.append(costs)
    if network is not None:
        network.ledger.merge(ledger)
    g = states.response(top.positions)
    cost = cf.global_cost(g)
    return HolarchicPassResult(stage_costs, g, cost, ledger,
                               {p: states.selected[p] for p in top.positions})


def _accepting_pass(plan: HolonStagePlan, topology: TreeTopology, states: AgentStates,
                    cf: CostFunction, tau: int, network: Network,
                    incumbent: float) -> tuple[float, HolarchicPassResult]:
    """One pass, undone when it leaves the tree incomplete or costlier than ``incumbent``."""
    before = states.snapshot()
    res = run_holarchic_pass(plan, states, cf, tau, network)
    if not states.complete(topology.positions) or res.cost > incumbent:
        states.restore(before)
        return incumbent, res
    return res.cost, res


def _holarchic_passes(plan: HolonStagePlan, topology: TreeTopology, states: AgentStates,
                      cf: CostFunction, cfg: SchemeConfig, network: Network, trace: Trace,
                      T_max: int, incumbent: float, stop_on_stall: bool, max_passes: int | None = None,
                      monitor: ConvergenceMonitor | None = None) -> tuple[float, bool]:
    """Append accepted-or-undone passes to ``trace``; True once learning has settled."""
    monitor = monitor or ConvergenceMonitor(cfg.conv_window)
    done = 0
    while len(trace) < T_max and (max_passes is None or done < max_passes):
        it = len(trace) + 1
        network.advance(it)
        cost, res = _accepting_pass(plan, topology, states, cf, cfg.tau, network, incumbent)
        done += 1
        improved = cost < incumbent
        incumbent = cost
        trace.records.append(IterationRecord(it, "holarchic", cost, res.messages, res.sync_messages))
        trace.note(topology, states)
        if stop_on_stall and not improved:
            return incumbent, True
        if monitor.update(cost):
            return incumbent, True
    return incumbent, False


def _finish(trace: Trace, topology: TreeTopology, states: AgentStates) -> Trace:
    trace.selections = states.selections_by_agent(topology)
    trace.global_response = states.response(topology.positions)
    return trace


def run_scheme(cfg: SchemeConfig, topology: TreeTopology, plans: Sequence[PlanSet] | AgentStates,
               cf: CostFunction, T_max: int = 40, network: Network | None = None,
               keep_history: bool = False) -> Trace:
    """Run one learning scheme on ``topology`` and return the system-wide trace."""
    if T_max < 1:
        raise ValueError("T_max must be at least 1")
    states = plans if isinstance(plans, AgentStates) else AgentStates(topology, plans)
    network = network or Network(topology)
    trace = Trace(history=[] if keep_history else None)
    scheme = cfg.scheme

    if scheme is Scheme.BASELINE:
        trace.converged = baseline_iterations(topology, states, cf, network, trace, T_max,
                                              cfg.conv_window)
        return _finish(trace, topology, states)

    plan = decompose_holarchy(topology, cfg.scale, cfg.branch_index)
    if scheme is Scheme.HOLARCHIC_RUNTIME:
        _, trace.converged = _holarchic_passes(plan, topology, states, cf, cfg, network, trace,
                                               T_max, math.inf, stop_on_stall=False)
    elif scheme is Scheme.HOLARCHIC_INITIALIZATION:
        monitor = ConvergenceMonitor(cfg.conv_window)
        _holarchic_passes(plan, topology, states, cf, cfg, network, trace, T_max, math.inf,
                          stop_on_stall=False, max_passes=cfg.init_passes, monitor=monitor)
        trace.converged = baseline_iterations(topology, states, cf, network, trace, T_max,
                                              cfg.conv_window, monitor)
    elif scheme is Scheme.HOLARCHIC_TERMINATION:
        baseline_iterations(topology, states, cf, network, trace, T_max, cfg.conv_window)
        incumbent = trace.final_cost
        _, trace.converged = _holarchic_passes(plan, topology, states, cf, cfg, network, trace,
                                               T_max, incumbent, stop_on_stall=True)
    return _finish(trace, topology, states)


@dataclass
class MitigationResult:
    trace: Trace  # system-wide: whole tree before failure, union of survivors after
    components: list[TreeTopology]
    component_traces: list[Trace]
    survivor_cost: float
    selections: dict[int, int | None]


def run_mitigation_scenario(topology: TreeTopology, plans: Sequence[PlanSet], cf: CostFunction,
                            failure: Iterable[int] = (), fail_at_iter: int = 1,
                            cfg: SchemeConfig | None = None, T_max: int = 40,
                            failed_edges: Iterable[tuple[int, int]] = ()) -> MitigationResult:
    """Learn normally, crash ``failure`` after ``fail_at_iter`` main iterations, then
    keep learning with holarchic runtime inside every surviving component."""
    cfg = cfg or SchemeConfig()
    failure, failed_edges = set(failure), list(failed_edges)
    if fail_at_iter < 1:
        raise ValueError("fail_at_iter must be at least 1")
    if not failure and not failed_edges:
        trace = run_scheme(cfg, topology, plans, cf, T_max)
        return MitigationResult(trace, [topology], [trace], trace.final_cost, trace.selections)

    states = AgentStates(topology, plans)
    network = Network(topology)
    if failure:
        network.inject(FailureEvent(fail_at_iter + 1, FailureKind.NODE_CRASH, failure))
    if failed_edges:
        network.inject(FailureEvent(fail_at_iter + 1, FailureKind.LINK_CUT, failed_edges))
    trace = run_scheme(cfg, topology, states, cf, min(fail_at_iter, T_max), network)
    components = partition_on_failure(topology, failure, failed_edges)
    survivors = [p for comp in components for p in comp.positions]
    comp_traces = [Trace() for _ in components]
    monitors = [ConvergenceMonitor(cfg.conv_window) for _ in components]
    stage_plans = [decompose_holarchy(comp) for comp in components]
    incumbents = [math.inf] * len(components)
    # components learn in lockstep so the survivors' union has a per-iteration cost
    active = list(range(len(components)))
    while active and len(trace) < T_max:
        it = len(trace) + 1
        network.advance(it)
        total = sync = 0
        for i in list(active):
            cost, res = _accepting_pass(stage_plans[i], components[i], states, cf, cfg.tau,
                                        network, incumbents[i])
            incumbents[i] = cost
            comp_traces[i].records.append(
                IterationRecord(it, "holarchic", cost, res.messages, res.sync_messages))
            total += res.messages
            sync = max(sync, res.sync_messages)
            if monitors[i].update(cost):
                active.remove(i)
        g = states.response(survivors)
        trace.records.append(IterationRecord(it, "mitigation", cf.global_cost(g), total, sync))
    for i, comp in enumerate(components):
        _finish(comp_traces[i], comp, states)
        comp_traces[i].converged = i not in active
    trace.converged = not active
    trace.selections = {topology.agent_at(p): states.selected[p] for p in survivors}
    trace.global_response = states.response(survivors)
    return MitigationResult(trace, components, comp_traces,
                            cf.global_cost(trace.global_response), trace.selections)
