"""Synthetic plan generation and plan-file IO.

Plan files hold one agent each, one plan per line::

    <local cost>:<v1>,<v2>,...,<vd>

ASCII decimals with ``.`` as radix, LF line endings, no header. A dataset is
a directory of ``agent_<id>.plans`` files.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Sequence

import numpy as np

from .plans import DimensionError, Plan, PlanSet, make_plan_set, normalize_local_costs

_AGENT_FILE = re.compile(r"^agent_(\d+)\.plans$")


class PlanFileError(ValueError):
    pass


def generate_synthetic(N: int, k: int = 16, d: int = 100, seed: int = 0) -> list[PlanSet]:
    """Standard-normal plans; the raw local cost of plan ``i`` is ``i``."""
    if min(N, k, d) < 1:
        raise ValueError("N, k and d must all be positive")
    values = np.random.default_rng(seed).standard_normal((N, k, d))
    costs = np.arange(k, dtype=float)
    return [make_plan_set(i, values[i], costs) for i in range(N)]


def _fmt(x: float) -> str:
    return repr(float(x))


def format_plan_line(plan: Plan) -> str:
    return _fmt(plan.raw_cost) + ":" + ",".join(_fmt(v) for v in plan.values)


def parse_plan_file(path: Path, agent_id: int, normalize: bool = True) -> PlanSet:
    path = Path(path)
    plans = []
    text = path.read_text(encoding="ascii")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            cost_text, values_text = line.split(":", 1)
            cost = float(cost_text)
            values = np.array([float(v) for v in values_text.split(",")])
        except ValueError as exc:
            raise PlanFileError(f"{path}:{lineno}: malformed plan line ({exc})") from None
        if not np.isfinite(cost) or cost < 0 or not np.all(np.isfinite(values)):
            raise PlanFileError(f"{path}:{lineno}: costs must be finite and non-negative, "
                                "values finite")
        plans.append(Plan(values, cost, cost))
    if not plans:
        raise PlanFileError(f"{path}: no plans")
    try:
        ps = PlanSet(agent_id, tuple(plans))
    except DimensionError as exc:
        raise PlanFileError(f"{path}: {exc}") from None
    return normalize_local_costs(ps) if normalize else ps


def load_plans(path, normalize: bool = True) -> list[PlanSet]:
    """Load every ``agent_<id>.plans`` file of a dataset directory, ordered by id.

    Agents may hold different numbers of plans but must share one dimension.
    """
    root = Path(path)
    if not root.is_dir():
        raise PlanFileError(f"{root}: not a dataset directory")
    found = []
    for f in root.iterdir():
        m = _AGENT_FILE.match(f.name)
        if m:
            found.append((int(m.group(1)), f))
    if not found:
        raise PlanFileError(f"{root}: no agent_<id>.plans files")
    found.sort()
    sets = [parse_plan_file(f, aid, normalize) for aid, f in found]
    dims = {ps.agent_id: ps.dim for ps in sets}
    if len(set(dims.values())) > 1:
        raise DimensionError(f"{root}: agents disagree on plan dimension {dims}")
    return sets


def write_plans(path, plan_sets: Sequence[PlanSet]) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for ps in plan_sets:
        body = "".join(format_plan_line(p) + "\n" for p in ps.plans)
        (root / f"agent_{ps.agent_id}.plans").write_bytes(body.encode("ascii"))
