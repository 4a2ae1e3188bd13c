"""Decentralized collective plan selection over tree overlays, with holarchic
learning schemes, communication accounting, failure injection and an
exhaustive-search oracle."""

from .dataio import generate_synthetic, load_plans, write_plans
from .engine import AgentStates, RunState, Trace, run_baseline
from .metrics import (baseline_comm_cost, improvement_index, relative_performance,
                      standardize, sync_comm_cost, total_comm_cost)
from .netsim import FailureEvent, FailureKind, Message, MessageLedger, Network
from .oracle import enumerate_costs, rank_of
from .plans import CostFunction, Plan, PlanSet, normalize_local_costs, variance, weighted_score
from .scheduler import (Scheme, SchemeConfig, run_holarchic_pass, run_mitigation_scenario,
                        run_scheme)
from .topology import (Holon, HolonStagePlan, Scale, TreeTopology, build_tree,
                       decompose_holarchy, partition_on_failure)

__version__ = "0.1.0"
