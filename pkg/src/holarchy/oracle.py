"""Exhaustive enumeration of plan combinations for small instances.

Used as ground truth for optimality rank: every one of the ``k1*k2*...*kN``
combinations is summed and scored. Agents are split into two halves whose
partial sums are enumerated separately and combined block by block, so the
cost of a combination is computed from its own summed vector without ever
touching the learning engine.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .plans import CostFunction, PlanSet

MAX_COMBINATIONS = 2**24
_BLOCK = 1 << 20  # combined vectors materialized per chunk


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Enumeration:
    sorted_costs: np.ndarray
    optimum: float
    best_selection: tuple[int, ...]  # plan index per agent, in input order

    @property
    def total(self) -> int:
        return int(self.sorted_costs.size)


def _half_sums(plan_sets: Sequence[PlanSet], dim: int):
    sums = np.zeros((1, dim))
    for ps in plan_sets:
        sums = (sums[:, None, :] + ps.matrix[None, :, :]).reshape(-1, dim)
    return sums


def _check_size(plans, limit):
    total = int(np.prod([len(ps) for ps in plans], dtype=object))
    if total > limit:
        raise EnumerationTooLarge(
            f"{total} combinations exceed the enumeration bound of {limit}")
    return total


def _blocks(left: np.ndarray, right: np.ndarray, cf: CostFunction):
    """Yield ``(offset, costs)`` chunks of the left-major combination order."""
    rows = max(1, _BLOCK // (right.shape[0] * right.shape[1]))
    for start in range(0, left.shape[0], rows):
        block = left[start:start + rows]
        combined = block[:, None, :] + right[None, :, :]
        yield start * right.shape[0], cf.global_costs(combined).ravel()


def _split(plans):
    dim = plans[0].dim
    half = len(plans) // 2
    return half, _half_sums(plans[:half], dim), _half_sums(plans[half:], dim)


def enumerate_costs(plans: Sequence[PlanSet], cf: CostFunction | None = None,
                    limit: int = MAX_COMBINATIONS) -> Enumeration:
    """Global cost of every plan combination, sorted ascending.

    Only the global cost enters the enumeration; local costs and lambda play
    no part in it.
    """
    cf = cf or CostFunction()
    sizes = [len(ps) for ps in plans]
    _check_size(plans, limit)
    half, left, right = _split(plans)
    costs = np.empty(left.shape[0] * right.shape[0])
    for start, block_costs in _blocks(left, right, cf):
        costs[start:start + block_costs.size] = block_costs
    best = int(np.argmin(costs))
    li, ri = divmod(best, right.shape[0])
    selection = tuple(np.unravel_index(li, sizes[:half])) + tuple(
        np.unravel_index(ri, sizes[half:]))
    costs.sort()
    return Enumeration(costs, float(costs[0]), tuple(int(i) for i in selection))


def brute_force_optimum(plans: Sequence[PlanSet], cf: CostFunction | None = None):
    """Plain ``itertools.product`` search; slow, for cross-checking tiny instances."""
    cf = cf or CostFunction()
    best, arg = np.inf, None
    for combo in itertools.product(*(range(len(ps)) for ps in plans)):
        g = sum(ps.matrix[i] for ps, i in zip(plans, combo))
        c = cf.global_cost(g)
        if c < best:
            best, arg = c, combo
    return best, arg


def streaming_rank(plans: Sequence[PlanSet], cost: float, cf: CostFunction | None = None,
                   rel_tol: float = 1e-9, limit: int = MAX_COMBINATIONS) -> float:
    """:func:`rank_of` computed by counting during enumeration, without storing costs."""
    cf = cf or CostFunction()
    total = _check_size(plans, limit)
    _, left, right = _split(plans)
    threshold = cost - rel_tol * max(1.0, abs(cost))
    below = sum(int(np.count_nonzero(c < threshold)) for _, c in _blocks(left, right, cf))
    return 100.0 * below / total


def rank_of(cost: float, sorted_costs: np.ndarray, rel_tol: float = 1e-9) -> float:
    """Percentage of combinations strictly cheaper than ``cost``.

    Costs within ``rel_tol`` of the query count as ties, which absorbs the
    rounding difference between summation orders.
    """
    threshold = cost - rel_tol * max(1.0, abs(cost))
    below = int(np.searchsorted(sorted_costs, threshold, side="left"))
    return 100.0 * below / sorted_costs.size
