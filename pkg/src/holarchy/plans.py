"""Plans, plan sets and the variance cost function.

A plan is one alternative resource schedule of an agent: a real vector of
dimension ``d`` plus a local (discomfort) cost. Agents pick exactly one plan
each; the element-wise sum of the picks is the global response and its
population variance is the global cost.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when vectors have an invalid or inconsistent dimension."""


@dataclass(frozen=True)
class Plan:
    values: np.ndarray
    local_cost: float = 0.0
    raw_cost: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DimensionError("plan values must be a non-empty 1-d vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("plan values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "local_cost", float(self.local_cost))
        if self.raw_cost is None:
            object.__setattr__(self, "raw_cost", float(self.local_cost))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PlanSet:
    agent_id: int
    plans: tuple[Plan, ...]
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)
    _costs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        plans = tuple(self.plans)
        if not plans:
            raise ValueError(f"agent {self.agent_id}: a plan set needs at least one plan")
        dims = {p.dim for p in plans}
        if len(dims) != 1:
            raise DimensionError(f"agent {self.agent_id}: plans have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "plans", plans)
        matrix = np.vstack([p.values for p in plans])
        costs = np.array([p.local_cost for p in plans], dtype=float)
        matrix.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)
        object.__setattr__(self, "_costs", costs)

    def __len__(self) -> int:
        return len(self.plans)

    @property
    def dim(self) -> int:
        return self.plans[0].dim

    @property
    def matrix(self) -> np.ndarray:
        """Plan vectors stacked as a read-only ``(k, d)`` array."""
        return self._matrix

    @property
    def local_costs(self) -> np.ndarray:
        return self._costs


class CostKind(enum.Enum):
    VARIANCE = "variance"


@dataclass(frozen=True)
class CostFunction:
    kind: CostKind = CostKind.VARIANCE
    lam: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lambda must lie in [0, 1), got {self.lam}")

    def global_cost(self, v) -> float:
        if self.kind is CostKind.VARIANCE:
            return variance(v)
        raise NotImplementedError(self.kind)

    def global_costs(self, candidates: np.ndarray) -> np.ndarray:
        """Row-wise global cost of a ``(k, d)`` stack of candidate responses."""
        if self.kind is CostKind.VARIANCE:
            return _shifted_var(candidates)
        raise NotImplementedError(self.kind)


def _shifted_var(x: np.ndarray) -> np.ndarray:
    # shifting by the first component makes constant vectors exactly zero
    x = np.asarray(x, dtype=float)
    return np.var(x - x[..., :1], axis=-1)


def variance(v) -> float:
    """Population variance of the components of ``v``."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError("variance needs a non-empty 1-d vector")
    return float(_shifted_var(arr))


def normalize_local_costs(ps: PlanSet) -> PlanSet:
    """Min-max normalize the local costs of one agent into [0, 1].

    A degenerate range maps every cost to 0. Raw costs are carried along
    untouched so plan files can be written back out.
    """
    costs = ps.local_costs
    lo, hi = float(costs.min()), float(costs.max())
    if hi > lo:
        scaled = (costs - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(costs)
    plans = tuple(
        Plan(p.values, float(c), p.raw_cost) for p, c in zip(ps.plans, scaled)
    )
    return PlanSet(ps.agent_id, plans)


def weighted_score(candidate_global, plan: Plan, cf: CostFunction) -> float:
    return (1.0 - cf.lam) * cf.global_cost(candidate_global) + cf.lam * plan.local_cost


def weighted_scores(candidates: np.ndarray, local_costs: np.ndarray, cf: CostFunction) -> np.ndarray:
    """Vectorized :func:`weighted_score` over every plan of one agent."""
    return (1.0 - cf.lam) * cf.global_costs(candidates) + cf.lam * local_costs


def make_plan_set(agent_id: int, vectors, raw_costs, normalize: bool = True) -> PlanSet:
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise DimensionError("expected a (k, d) array of plan vectors")
    plans = tuple(Plan(row, c, c) for row, c in zip(vectors, raw_costs))
    ps = PlanSet(agent_id, plans)
    return normalize_local_costs(ps) if normalize else ps
