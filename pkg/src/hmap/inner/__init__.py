"""Per-pair joint motion and resource optimisation."""

from hmap.inner.context import PROPOSED, InnerVariant, PairContext
from hmap.inner.motion import linearize_rate, solve_motion_block
from hmap.inner.pair import InteractionPlan, infeasible_plan, solve_pair
from hmap.inner.resource import optimal_t1, recover_power, solve_resource_block
from hmap.inner.socp import solve_soc

__all__ = [
    "PROPOSED", "InnerVariant", "PairContext", "InteractionPlan", "infeasible_plan",
    "linearize_rate", "optimal_t1", "recover_power", "solve_motion_block",
    "solve_pair", "solve_resource_block", "solve_soc",
]
