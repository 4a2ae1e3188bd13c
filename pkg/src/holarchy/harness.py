"""Experiment sweeps over schemes, scales, tree fan-out and lambda.

Every grid point is run ``reps`` times. Repetition ``r`` uses the run seed
``base_seed + r``; from it two independent streams are derived with
``numpy.random.default_rng([run_seed, 0])`` for synthetic plan sampling and
``[run_seed, 1]`` for agent placement. Any single run can therefore be
recreated from its row in ``summary.csv`` alone.

Runs sharing ``(c, lambda, rep)`` are grouped into one task so the matched
baseline is computed once. Tasks run in a process pool capped by the
``HOLARCH_THREADS`` environment variable; rows are sorted before writing, so
the output does not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .dataio import generate_synthetic, load_plans
from .engine import Trace
from .metrics import improvement_index, relative_performance
from .plans import CostFunction, PlanSet
from .scheduler import Scheme, SchemeConfig, run_mitigation_scenario, run_scheme
from .topology import ConfigurationError, Scale, build_tree

log = logging.getLogger(__name__)

CURVE_COLUMNS = ["run_id", "scheme", "c", "lambda", "scale", "iteration", "global_cost",
                 "M_total_cum", "M_sync_cum"]
SUMMARY_COLUMNS = ["run_id", "scheme", "c", "lambda", "scale", "branch", "rep", "seed", "agents",
                   "C_first", "C_convergence", "iterations", "converged", "M_total", "M_sync",
                   "improvement_index", "relative_performance", "error"]
COMPARE_COLUMNS = ["budget", "a_cost", "a_runs_reachable", "a_runs", "b_cost",
                   "b_runs_reachable", "b_runs"]

GRID_CHILDREN = (2, 3, 4, 5)
GRID_LAMBDAS = (0.0, 0.25, 0.5, 0.75)
DEFAULT_BUDGETS = (30000, 50000)
SCHEME_ORDER = [s.value for s in Scheme]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic"
    schemes: tuple[str, ...] = ("baseline",)
    scales: tuple[str, ...] = ("full",)
    branch: int | str | None = None  # an index, "all", or None (= 0 under partial scale)
    children: tuple[int, ...] = (2,)
    lambdas: tuple[float, ...] = (0.0,)
    agents: int = 127
    plans: int = 16
    dim: int = 100
    T_max: int = 40
    tau: int = 5
    reps: int = 10
    base_seed: int = 0
    conv_window: int = 3
    init_passes: int = 1
    fail_nodes: tuple[int, ...] = ()
    fail_at: int = 2
    out: str = "results"
    full_grid: bool = False

    def validate(self) -> None:
        if self.agents < 1 or self.reps < 1 or self.T_max < 1 or self.tau < 1:
            raise ConfigurationError("agents, reps, iterations and tau must be positive")
        for s in self.schemes:
            Scheme(s)
        for s in self.scales:
            Scale(s)
        for c in self.children:
            if c < 2:
                raise ConfigurationError(f"children per node must be >= 2, got {c}")
        for lam in self.lambdas:
            if not 0.0 <= lam < 1.0:
                raise ConfigurationError(f"lambda must lie in [0, 1), got {lam}")
        if self.full_grid:
            if not set(self.children) <= set(GRID_CHILDREN):
                raise ConfigurationError(f"full grid needs c in {GRID_CHILDREN}")
            if not set(self.lambdas) <= set(GRID_LAMBDAS):
                raise ConfigurationError(f"full grid needs lambda in {GRID_LAMBDAS}")
        if self.fail_nodes and self.fail_at < 1:
            raise ConfigurationError("--fail-at must be at least 1")

    def with_full_grid(self) -> "ExperimentConfig":
        return replace(self, full_grid=True, schemes=tuple(SCHEME_ORDER),
                       children=GRID_CHILDREN, lambdas=GRID_LAMBDAS, branch="all")


@dataclass(frozen=True)
class RunSpec:
    scheme: str
    scale: str
    branch: int | None

    @property
    def sort_key(self):
        return (SCHEME_ORDER.index(self.scheme), self.scale, -1 if self.branch is None else self.branch)


@dataclass(frozen=True)
class Task:
    c: int
    lam: float
    rep: int
    specs: tuple[RunSpec, ...]


@dataclass
class TaskResult:
    key: tuple
    curves: list[list] = field(default_factory=list)
    summary: list[list] = field(default_factory=list)


def run_id(spec: RunSpec, c: int, lam: float, rep: int) -> str:
    branch = "-" if spec.branch is None else str(spec.branch)
    return f"{spec.scheme}_c{c}_l{lam!r}_{spec.scale}_b{branch}_r{rep}"


def _specs_for(cfg: ExperimentConfig, c: int, N: int) -> list[RunSpec]:
    degree = min(c, N - 1)
    specs = []
    for scheme in cfg.schemes:
        if scheme == Scheme.BASELINE.value:
            specs.append(RunSpec(scheme, Scale.FULL.value, None))
            continue
        for scale in cfg.scales:
            if scale == Scale.FULL.value:
                specs.append(RunSpec(scheme, scale, None))
            elif cfg.branch == "all":
                specs.extend(RunSpec(scheme, scale, b) for b in range(degree))
            else:
                specs.append(RunSpec(scheme, scale, int(cfg.branch or 0)))
    return sorted(set(specs), key=lambda s: s.sort_key)


def plan_tasks(cfg: ExperimentConfig) -> list[Task]:
    tasks = []
    for c in cfg.children:
        specs = tuple(_specs_for(cfg, c, cfg.agents))
        for lam in cfg.lambdas:
            for rep in range(cfg.reps):
                tasks.append(Task(c, float(lam), rep, specs))
    return tasks


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _load_dataset(cfg: ExperimentConfig, run_seed: int) -> list[PlanSet]:
    if cfg.dataset == "synthetic":
        return generate_synthetic(cfg.agents, cfg.plans, cfg.dim, seed=[run_seed, 0])
    plans = load_plans(cfg.dataset)
    if len(plans) < cfg.agents:
        raise ConfigurationError(f"dataset has {len(plans)} agents, {cfg.agents} requested")
    return plans[:cfg.agents]


def _curve_rows(rid: str, spec: RunSpec, c: int, lam: float, trace: Trace) -> list[list]:
    rows, m_tot, m_sync = [], 0, 0
    for rec in trace.records:
        m_tot += rec.messages
        m_sync += rec.sync_messages
        rows.append([rid, spec.scheme, c, _num(lam), spec.scale, rec.iteration,
                     _num(rec.global_cost), m_tot, m_sync])
    return rows


def execute_task(cfg: ExperimentConfig, task: Task) -> TaskResult:
    run_seed = cfg.base_seed + task.rep
    cf = CostFunction(lam=task.lam)
    result = TaskResult((task.c, task.lam, task.rep))
    try:
        plans = _load_dataset(cfg, run_seed)
        topology = build_tree(cfg.agents, task.c, seed=[run_seed, 1])
        baseline = run_scheme(SchemeConfig(Scheme.BASELINE, conv_window=cfg.conv_window),
                              topology, plans, cf, cfg.T_max)
    except Exception as exc:  # recorded, the sweep goes on
        log.warning("task %s failed: %s", result.key, exc)
        for spec in task.specs:
            rid = run_id(spec, task.c, task.lam, task.rep)
            result.summary.append([rid, spec.scheme, task.c, _num(task.lam), spec.scale,
                                   _num(spec.branch), task.rep, run_seed, cfg.agents]
                                  + [""] * 8 + [str(exc)])
        return result

    for spec in task.specs:
        rid = run_id(spec, task.c, task.lam, task.rep)
        head = [rid, spec.scheme, task.c, _num(task.lam), spec.scale, _num(spec.branch),
                task.rep, run_seed, cfg.agents]
        try:
            scfg = SchemeConfig(Scheme(spec.scheme), cfg.tau, Scale(spec.scale), spec.branch,
                                cfg.init_passes, cfg.conv_window)
            if cfg.fail_nodes:
                trace = run_mitigation_scenario(topology, plans, cf, set(cfg.fail_nodes),
                                                cfg.fail_at, scfg, cfg.T_max).trace
            elif spec.scheme == Scheme.BASELINE.value:
                trace = baseline
            else:
                trace = run_scheme(scfg, topology, plans, cf, cfg.T_max)
        except Exception as exc:
            log.warning("run %s failed: %s", rid, exc)
            result.summary.append(head + [""] * 8 + [str(exc)])
            continue
        result.curves.extend(_curve_rows(rid, spec, task.c, task.lam, trace))
        rel = relative_performance(trace.first_cost, trace.final_cost,
                                   baseline.first_cost, baseline.final_cost)
        result.summary.append(head + [
            _num(trace.first_cost), _num(trace.final_cost), trace.iterations_to_convergence,
            int(trace.converged), trace.total_messages, trace.total_sync_messages,
            _num(improvement_index(baseline.final_cost, trace.final_cost)), _num(rel), ""])
    return result


def worker_count() -> int:
    raw = os.environ.get("HOLARCH_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.write_bytes(_csv_text(columns, rows).encode("utf-8"))


def run_experiments(cfg: ExperimentConfig, workers: int | None = None) -> dict[str, Path]:
    """Run the whole sweep and write ``curves.csv`` and ``summary.csv`` under ``cfg.out``."""
    cfg.validate()
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc

    tasks = plan_tasks(cfg)
    workers = workers or worker_count()
    log.info("%d tasks on %d worker(s)", len(tasks), workers)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute_task, [cfg] * len(tasks), tasks))
    else:
        results = [execute_task(cfg, t) for t in tasks]

    order = {(t.c, t.lam, t.rep): i for i, t in enumerate(tasks)}
    results.sort(key=lambda r: order[r.key])
    curves = [row for r in results for row in r.curves]
    summary = [row for r in results for row in r.summary]
    paths = {"curves": out / "curves.csv", "summary": out / "summary.csv"}
    _write_csv(paths["curves"], CURVE_COLUMNS, curves)
    _write_csv(paths["summary"], SUMMARY_COLUMNS, summary)
    return paths


# --- cost at equal message budgets -------------------------------------------

@dataclass(frozen=True)
class Curve:
    run_id: str
    messages: tuple[int, ...]  # cumulative total messages after each iteration
    costs: tuple[float, ...]

    def best_within(self, budget: float) -> float | None:
        """Lowest cost reached by an iteration that fits the budget, or None."""
        best = None
        for m, c in zip(self.messages, self.costs):
            if m > budget:
                break
            best = c if best is None else min(best, c)
        return best


def read_curves(path) -> list[Curve]:
    groups: dict[str, list[tuple[int, int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault(row["run_id"], []).append(
                (int(row["iteration"]), int(row["M_total_cum"]), float(row["global_cost"])))
    curves = []
    for rid, pts in groups.items():
        pts.sort()
        curves.append(Curve(rid, tuple(p[1] for p in pts), tuple(p[2] for p in pts)))
    return curves


def compare(curves_a: Sequence[Curve], curves_b: Sequence[Curve],
            budgets: Sequence[int] = DEFAULT_BUDGETS) -> list[dict]:
    """Mean best cost each side reaches within every message budget.

    Costs are read at iteration granularity. A side whose runs all need more
    messages than the budget for their first iteration is flagged unreachable
    (empty cost, zero reachable runs).
    """
    rows = []
    for budget in budgets:
        row = {"budget": budget}
        for side, curves in (("a", curves_a), ("b", curves_b)):
            got = [c.best_within(budget) for c in curves]
            got = [g for g in got if g is not None]
            row[f"{side}_cost"] = sum(got) / len(got) if got else None
            row[f"{side}_runs_reachable"] = len(got)
            row[f"{side}_runs"] = len(curves)
        rows.append(row)
    return rows


def compare_csv(rows: Sequence[dict]) -> str:
    return _csv_text(COMPARE_COLUMNS, [[_num(r[col]) for col in COMPARE_COLUMNS] for r in rows])
