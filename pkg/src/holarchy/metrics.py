"""Evaluation metrics: improvement index, communication cost, standardization.

The communication-cost closed forms assume perfect ``c``-ary trees of height
``h`` (root at level ``h``). For a holarchy, stage ``j`` holds ``c**(h-1-j)``
holons of ``c**0 + ... + c**(j+1)`` agents each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class MetricSample:
    run_id: str
    scheme: str
    C_convergence: float
    C_first: float
    iterations_to_convergence: int
    M_total: int
    M_sync: int


def improvement_index(C_b: float, C_h: float) -> float:
    """Symmetric relative gain of a holarchic cost ``C_h`` over baseline ``C_b``.

    Positive values mean the holarchic scheme ended cheaper. Two zero costs
    give 0.
    """
    if C_b < 0 or C_h < 0:
        raise ValueError("costs must be non-negative")
    if C_b == 0 and C_h == 0:
        return 0.0
    return (C_b - C_h) / (C_b + C_h)


def _geometric(c: int, top: int) -> int:
    return sum(c**i for i in range(top + 1))


def _check(c: int, h: int, tau: int = 1) -> None:
    if c < 2 or h < 1 or tau < 1:
        raise ValueError(f"need c >= 2, h >= 1, tau >= 1 (got c={c}, h={h}, tau={tau})")


def baseline_comm_cost(c: int, h: int) -> int:
    """Messages of one baseline iteration: every link, up and down."""
    _check(c, h)
    return 2 * (_geometric(c, h) - 1)


def total_comm_cost(c: int, h: int, tau: int) -> int:
    """Messages of one full holarchic pass with ``tau`` iterations per holon."""
    _check(c, h, tau)
    return 2 * tau * sum(c ** (h - 1 - j) * (_geometric(c, j + 1) - 1) for j in range(h))


def sync_comm_cost(c: int, h: int, tau: int) -> int:
    """Like :func:`total_comm_cost` but each stage's parallel holons count once."""
    _check(c, h, tau)
    return 2 * tau * sum(_geometric(c, j + 1) - 1 for j in range(h))


def relative_performance(C_h1: float, C_hT: float, C_b1: float, C_bT: float) -> float | None:
    """Holarchic cost drop from first iteration to convergence, relative to baseline's.

    Returns None when the baseline did not move.
    """
    denom = C_b1 - C_bT
    if denom == 0:
        return None
    return (C_h1 - C_hT) / denom


def standardize(costs: Sequence[float]) -> tuple[np.ndarray, bool]:
    """Z-scores with the population standard deviation.

    Returns the scores and a flag that is True when the spread is zero, in
    which case the scores are all zero.
    """
    x = np.asarray(costs, dtype=float)
    if x.size < 2:
        raise ValueError("standardization needs at least two samples")
    sigma = float(np.std(x))
    if sigma == 0.0 or not math.isfinite(sigma):
        return np.zeros_like(x), True
    return (x - x.mean()) / sigma, False
