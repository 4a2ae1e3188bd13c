"""Simulated parent/child message passing with per-stage accounting.

The network only counts and filters messages; the learning engine computes
payloads itself. Latency is modelled as ordering alone (stage barriers).
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .topology import TreeTopology


class Phase(enum.Enum):
    BOTTOM_UP = "bottom-up"
    TOP_DOWN = "top-down"


class FailureKind(enum.Enum):
    NODE_CRASH = "node-crash"
    LINK_CUT = "link-cut"


@dataclass(frozen=True, slots=True)
class Message:
    sender: int
    receiver: int
    phase: Phase
    stage: int = 0
    payload_dim: int = 0


@dataclass(frozen=True)
class FailureEvent:
    at_iteration: int
    kind: FailureKind
    targets: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(self.targets))


@dataclass
class MessageLedger:
    """Message counts keyed by ``(iteration, stage, holon_root)``.

    ``total`` sums every delivered message. ``sync`` counts each stage once,
    at the size of its busiest holon, since the holons of one stage run in
    parallel.
    """

    counts: dict = field(default_factory=lambda: defaultdict(int))

    def add(self, iteration: int, stage: int, holon: int, n: int) -> None:
        self.counts[(iteration, stage, holon)] += n

    def total(self, iteration: int | None = None) -> int:
        return sum(n for (it, _, _), n in self.counts.items()
                   if iteration is None or it == iteration)

    def sync(self, iteration: int | None = None) -> int:
        per_stage = defaultdict(int)
        for (it, st, _), n in self.counts.items():
            if iteration is None or it == iteration:
                per_stage[(it, st)] = max(per_stage[(it, st)], n)
        return sum(per_stage.values())

    def iterations(self) -> list[int]:
        return sorted({it for it, _, _ in self.counts})

    def merge(self, other: "MessageLedger") -> None:
        for key, n in other.counts.items():
            self.counts[key] += n


class Network:
    """Live overlay: which positions and links can still carry messages."""

    def __init__(self, topology: TreeTopology, ledger: MessageLedger | None = None):
        self.topology = topology
        self.ledger = ledger if ledger is not None else MessageLedger()
        self.crashed: set[int] = set()
        self.cut: set[frozenset] = set()
        self.pending: list[FailureEvent] = []
        self.iteration = 0
        self.listeners = []

    def is_live(self, a: int, b: int) -> bool:
        return (a not in self.crashed and b not in self.crashed
                and frozenset((a, b)) not in self.cut)

    def deliver(self, msgs: Iterable[Message], holon: int = -1) -> list[Message]:
        """Count deliverable messages; return the dropped ones to the senders."""
        dropped = []
        delivered = defaultdict(int)
        for m in msgs:
            if self.is_live(m.sender, m.receiver):
                delivered[m.stage] += 1
            else:
                dropped.append(m)
        for stage, n in delivered.items():
            self.ledger.add(self.iteration, stage, holon, n)
        return dropped

    def inject(self, ev: FailureEvent) -> None:
        """Schedule ``ev``; it takes effect at its iteration boundary."""
        if ev.at_iteration < self.iteration:
            raise ValueError(f"event at iteration {ev.at_iteration} is in the past")
        self.pending.append(ev)
        self.pending.sort(key=lambda e: e.at_iteration)
        self._apply_due()

    def advance(self, iteration: int) -> None:
        self.iteration = iteration
        self._apply_due()

    def _apply_due(self) -> None:
        while self.pending and self.pending[0].at_iteration <= self.iteration:
            ev = self.pending.pop(0)
            if ev.kind is FailureKind.NODE_CRASH:
                self.crashed |= set(ev.targets)
            else:
                self.cut |= {frozenset(e) for e in ev.targets}
            for cb in self.listeners:
                cb(ev)

    def new_roots(self) -> list[int]:
        """Surviving positions that lost their parent link and now lead a holon."""
        t = self.topology
        roots = []
        for p in t.positions:
            if p in self.crashed:
                continue
            up = t.parent[p]
            if up is None or not self.is_live(up, p):
                roots.append(p)
        return roots

    def failed_edges(self) -> list[tuple[int, int]]:
        return [tuple(sorted(e)) for e in self.cut]
