"""Baseline learning engine: bottom-up selection plus top-down broadcast.

One learning iteration over a tree (or a holon, which is just a subtree):

* bottom-up, leaves first: every agent keeps or vetoes each child's new
  subtree choice, then scores each of its plans against ``previous global
  response - own previous subtree aggregate + children's aggregates + plan``,
  keeps the cheapest (lowest index on ties) and sends its new subtree
  aggregate to its parent;
* top-down: the root accepts the candidate global response only if it does
  not raise the global cost, otherwise every member rolls back; the accepted
  response is broadcast to the leaves and vetoed subtrees revert.

Agent state is keyed by tree position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .netsim import Message, Network, Phase
from .plans import CostFunction, DimensionError, PlanSet, weighted_scores
from .topology import TreeTopology

CONVERGENCE_TOL = 1e-12


class AgentStates:
    """Mutable learning state of every agent, keyed by position.

    ``selected[p]`` is ``None`` until the agent has taken part in an accepted
    iteration.
    """

    def __init__(self, topology: TreeTopology, plan_sets: Sequence[PlanSet]):
        by_agent = {ps.agent_id: ps for ps in plan_sets}
        self.plans: dict[int, PlanSet] = {}
        dims = set()
        for pos in topology.positions:
            ps = by_agent[topology.agent_at(pos)]
            self.plans[pos] = ps
            dims.add(ps.dim)
        if len(dims) != 1:
            raise DimensionError(f"agents disagree on plan dimension: {sorted(dims)}")
        self.dim = dims.pop()
        self.selected: dict[int, int | None] = dict.fromkeys(topology.positions)
        self.prev_selected: dict[int, int | None] = dict.fromkeys(topology.positions)
        zero = np.zeros(self.dim)
        self.subtree_aggregate = dict.fromkeys(topology.positions, zero)
        self.prev_subtree_aggregate = dict.fromkeys(topology.positions, zero)
        self.known_global = dict.fromkeys(topology.positions, zero)

    def plan_vector(self, pos: int) -> np.ndarray:
        idx = self.selected[pos]
        if idx is None:
            return np.zeros(self.dim)
        return self.plans[pos].matrix[idx]

    def response(self, positions) -> np.ndarray:
        """Element-wise sum of the selected plans at ``positions``."""
        total = np.zeros(self.dim)
        for p in positions:
            if self.selected[p] is not None:
                total = total + self.plans[p].matrix[self.selected[p]]
        return total

    def complete(self, positions) -> bool:
        return all(self.selected[p] is not None for p in positions)

    def snapshot(self) -> dict[int, int | None]:
        return dict(self.selected)

    def restore(self, selections: dict[int, int | None]) -> None:
        self.selected.update(selections)
        self.prev_selected.update(selections)

    def selections_by_agent(self, topology: TreeTopology) -> dict[int, int | None]:
        return {topology.agent_at(p): self.selected[p] for p in topology.positions}


@dataclass
class RunState:
    iteration: int
    global_response: np.ndarray
    cost: float = math.inf
    global_cost_trace: list[float] = field(default_factory=list)
    selections: dict[int, int | None] = field(default_factory=dict)
    accepted: bool = True
    rejected: set[int] = field(default_factory=set)  # children whose subtree change was vetoed


def holon_entry_state(tree: TreeTopology, states: AgentStates, cf: CostFunction) -> RunState:
    """Refresh subtree aggregates from current selections and open a run.

    The incumbent cost is that of the members' current selections, or
    infinite while some member has not selected yet.
    """
    for p in reversed(tree.positions):
        agg = states.plan_vector(p)
        for ch in tree.children[p]:
            agg = agg + states.subtree_aggregate[ch]
        states.subtree_aggregate[p] = agg
        states.prev_subtree_aggregate[p] = agg
        states.prev_selected[p] = states.selected[p]
    g = states.response(tree.positions)
    cost = cf.global_cost(g) if states.complete(tree.positions) else math.inf
    return RunState(0, g, cost, [], {p: states.selected[p] for p in tree.positions})


def _approval_masks(c: int) -> np.ndarray:
    """Every approve/reject pattern over ``c`` children, approve-all first."""
    masks = _MASKS.get(c)
    if masks is None:
        bits = np.arange(2**c - 1, -1, -1)[:, None] >> np.arange(c)[None, :] & 1
        masks = _MASKS[c] = bits.astype(float)
    return masks


_MASKS: dict[int, np.ndarray] = {}


def bottom_up_pass(tree: TreeTopology, states: AgentStates, prev: RunState, cf: CostFunction,
                   network: Network | None = None, stage: int = 0) -> tuple[RunState, list[Message]]:
    """Leaves-first plan selection.

    Once an iteration has been accepted, a parent first decides which of its
    children's new subtree choices to keep: it picks the approve/reject
    pattern whose global cost estimate is lowest, with rejected subtrees
    counted at their previous aggregate. Keeping everything as before is one
    of the patterns, so the estimate never exceeds the incumbent cost.
    """
    g_prev = prev.global_response
    if g_prev.shape != (states.dim,):
        raise DimensionError(
            f"global response has shape {g_prev.shape}, plans have dimension {states.dim}")
    approve = math.isfinite(prev.cost)
    msgs = []
    choice = {}
    rejected = set()
    for p in reversed(tree.positions):
        ps = states.plans[p]
        kids = tree.children[p]
        if kids:
            new = np.vstack([states.subtree_aggregate[ch] for ch in kids])
            if approve:
                old = np.vstack([states.prev_subtree_aggregate[ch] for ch in kids])
                masks = _approval_masks(len(kids))
                options = masks @ new + (1.0 - masks) @ old
                rest = g_prev - old.sum(axis=0)
                best = int(np.argmin(cf.global_costs(rest + options)))
                rejected.update(ch for ch, m in zip(kids, masks[best]) if not m)
                below = options[best]
            else:
                below = new.sum(axis=0)
        else:
            below = np.zeros(states.dim)
        base = g_prev - states.prev_subtree_aggregate[p] + below
        scores = weighted_scores(base + ps.matrix, ps.local_costs, cf)
        idx = int(np.argmin(scores))
        choice[p] = idx
        states.selected[p] = idx
        states.subtree_aggregate[p] = below + ps.matrix[idx]
        up = tree.parent[p]
        if up is not None:
            msgs.append(Message(p, up, Phase.BOTTOM_UP, stage, states.dim))
    if network is not None:
        network.deliver(msgs, holon=tree.root)
    g = _effective_response(tree, states, rejected)
    cand = RunState(prev.iteration + 1, g, cf.global_cost(g), list(prev.global_cost_trace), choice)
    cand.rejected = rejected
    return cand, msgs


def _effective_response(tree: TreeTopology, states: AgentStates, rejected: set) -> np.ndarray:
    # one canonical summation order, so equal selections always give equal costs
    reverted = set()
    total = np.zeros(states.dim)
    for p in tree.positions:
        up = tree.parent[p]
        if p in rejected or (up is not None and up in reverted):
            reverted.add(p)
            idx = states.prev_selected[p]
        else:
            idx = states.selected[p]
        if idx is not None:
            total = total + states.plans[p].matrix[idx]
    return total


def top_down_pass(tree: TreeTopology, states: AgentStates, candidate: RunState, incumbent: RunState,
                  network: Network | None = None, stage: int = 0) -> tuple[RunState, list[Message]]:
    """Root-side acceptance, then broadcast; rejected subtrees revert on the way down."""
    if candidate.cost <= incumbent.cost:
        reverted = set()
        for p in tree.positions:
            up = tree.parent[p]
            if p in candidate.rejected or (up is not None and up in reverted):
                reverted.add(p)
                states.selected[p] = states.prev_selected[p]
                states.subtree_aggregate[p] = states.prev_subtree_aggregate[p]
            else:
                states.prev_selected[p] = states.selected[p]
                states.prev_subtree_aggregate[p] = states.subtree_aggregate[p]
        out = candidate
        out.selections = {p: states.selected[p] for p in tree.positions}
        out.accepted = True
    else:
        for p in tree.positions:
            states.selected[p] = states.prev_selected[p]
            states.subtree_aggregate[p] = states.prev_subtree_aggregate[p]
        out = RunState(candidate.iteration, incumbent.global_response, incumbent.cost,
                       candidate.global_cost_trace, dict(incumbent.selections), accepted=False)
    out.global_cost_trace.append(out.cost)
    msgs = []
    for up, p in tree.edges:
        states.known_global[p] = out.global_response
        msgs.append(Message(up, p, Phase.TOP_DOWN, stage, states.dim))
    states.known_global[tree.root] = out.global_response
    if network is not None:
        network.deliver(msgs, holon=tree.root)
    return out, msgs


def learning_iteration(tree: TreeTopology, states: AgentStates, prev: RunState, cf: CostFunction,
                       network: Network | None = None, stage: int = 0) -> tuple[RunState, int]:
    """One bottom-up plus top-down pass; returns the new state and message count."""
    cand, up = bottom_up_pass(tree, states, prev, cf, network, stage)
    out, down = top_down_pass(tree, states, cand, prev, network, stage)
    return out, len(up) + len(down)


def run_iterations(tree: TreeTopology, states: AgentStates, cf: CostFunction, n: int,
                   network: Network | None = None, stage: int = 0) -> RunState:
    """Run ``n`` iterations inside ``tree`` starting from current selections."""
    state = holon_entry_state(tree, states, cf)
    for _ in range(n):
        state, _ = learning_iteration(tree, states, state, cf, network, stage)
    return state


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    phase: str
    global_cost: float
    messages: int
    sync_messages: int


@dataclass
class Trace:
    """System-wide learning curve, one record per main iteration."""

    records: list[IterationRecord] = field(default_factory=list)
    selections: dict[int, int | None] = field(default_factory=dict)
    global_response: np.ndarray | None = None
    converged: bool = False
    history: list[tuple] | None = None  # selections after each main iteration, if kept

    def note(self, topology: TreeTopology, states: "AgentStates") -> None:
        if self.history is not None:
            self.history.append(tuple(states.selected[p] for p in topology.positions))

    @property
    def costs(self) -> list[float]:
        return [r.global_cost for r in self.records]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def first_cost(self) -> float:
        return self.records[0].global_cost

    @property
    def final_cost(self) -> float:
        return self.records[-1].global_cost

    @property
    def iterations_to_convergence(self) -> int:
        """First main iteration (1-based) at which the final cost was reached."""
        final = self.final_cost
        for r in self.records:
            if abs(r.global_cost - final) < CONVERGENCE_TOL:
                return r.iteration
        return self.records[-1].iteration

    @property
    def total_messages(self) -> int:
        return sum(r.messages for r in self.records)

    @property
    def total_sync_messages(self) -> int:
        return sum(r.sync_messages for r in self.records)


class ConvergenceMonitor:
    """Counts consecutive main iterations whose cost did not move."""

    def __init__(self, window: int):
        self.window = window
        self.last = None
        self.still = 0

    def update(self, cost: float) -> bool:
        if self.last is not None and abs(cost - self.last) < CONVERGENCE_TOL:
            self.still += 1
        else:
            self.still = 0
        self.last = cost
        return self.still >= self.window


def baseline_iterations(topology: TreeTopology, states: AgentStates, cf: CostFunction,
                        network: Network, trace: Trace, T_max: int, conv_window: int,
                        monitor: ConvergenceMonitor | None = None) -> bool:
    """Append whole-tree iterations to ``trace`` until convergence or ``T_max``.

    Returns True when the convergence window was reached.
    """
    monitor = monitor or ConvergenceMonitor(conv_window)
    state = holon_entry_state(topology, states, cf)
    while len(trace) < T_max:
        it = len(trace) + 1
        network.advance(it)
        state, n = learning_iteration(topology, states, state, cf, network)
        trace.records.append(IterationRecord(it, "baseline", state.cost, n, n))
        trace.note(topology, states)
        if monitor.update(state.cost):
            return True
    return False


def run_baseline(topology: TreeTopology, plans: Sequence[PlanSet], cf: CostFunction,
                 T_max: int = 40, conv_window: int = 3,
                 network: Network | None = None, keep_history: bool = False) -> Trace:
    if T_max < 1:
        raise ValueError("T_max must be at least 1")
    states = AgentStates(topology, plans)
    network = network or Network(topology)
    trace = Trace(history=[] if keep_history else None)
    trace.converged = baseline_iterations(topology, states, cf, network, trace, T_max, conv_window)
    trace.selections = states.selections_by_agent(topology)
    trace.global_response = states.response(topology.positions)
    return trace
