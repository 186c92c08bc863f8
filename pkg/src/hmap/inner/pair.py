"""Joint motion and resource plan for one sender/receiver interaction.

Block coordinate descent alternates the motion block and the resource block;
each accepted step lowers the pair energy. With the transmit power held fixed
the motion block undervalues closing distance, so descent from rest can stall
short of a longer approach. A second descent starts from the cheapest straight
approach whenever that start already beats the first result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from hmap import physics
from hmap.inner.context import PROPOSED, InnerVariant, PairContext
from hmap.inner.motion import solve_motion_block
from hmap.inner.resource import solve_resource_block

BCD_CAP = 20
APPROACH_STEPS = 32  # fractions of the way to the boundary tried for the approach start


@dataclass(frozen=True)
class InteractionPlan:
    sender_id: int
    receiver_id: int
    feasible: bool
    p_start_i: tuple = (math.nan, math.nan)
    p_start_j: tuple = (math.nan, math.nan)
    p_end_i: tuple = (math.nan, math.nan)
    p_end_j: tuple = (math.nan, math.nan)
    v_i: float = 0.0
    v_j: float = 0.0
    p_tx: float = math.nan
    eta_i: float = math.nan
    eta_j: float = math.nan
    t1: float = math.nan
    rho_i: float = math.nan
    rho_j: float = math.nan
    payload_i: float = math.nan
    payload_j: float = math.nan
    breakdown: Optional[physics.EnergyBreakdown] = None
    bcd_iterations: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def energy(self) -> float:
        return self.breakdown.total if self.feasible else math.inf

    @property
    def fused_payload(self) -> float:
        return physics.fuse_payload(self.payload_j, self.payload_i, self.eta_j, self.eta_i)

    def to_dict(self) -> dict:
        out = {
            "sender": self.sender_id, "receiver": self.receiver_id, "feasible": self.feasible,
            "p_start_i": list(self.p_start_i), "p_start_j": list(self.p_start_j),
            "p_end_i": list(self.p_end_i), "p_end_j": list(self.p_end_j),
            "v_i": self.v_i, "v_j": self.v_j, "p_tx": self.p_tx,
            "eta_i": self.eta_i, "eta_j": self.eta_j, "t1": self.t1,
            "rho_i": self.rho_i, "rho_j": self.rho_j,
            "payload_i": self.payload_i, "payload_j": self.payload_j,
            "bcd_iterations": self.bcd_iterations,
        }
        if self.breakdown is not None:
            b = self.breakdown
            out["energy"] = {"e_mob_i": b.e_mob_i, "e_mob_j": b.e_mob_j, "e_comp_i": b.e_comp_i,
                             "e_comp_j": b.e_comp_j, "e_comm": b.e_comm, "total": b.total}
        return out


def infeasible_plan(ctx: PairContext) -> InteractionPlan:
    return InteractionPlan(ctx.sender.id, ctx.receiver.id, False)


def _toward_partner(agent, partner_pos, params, fraction=1.0, speed=None):
    """Move along the connecting segment toward the disk boundary.

    Full speed unless ``speed`` is given; ``fraction`` < 1 stops that share
    of the way to the boundary point.
    """
    p = agent.position
    dx, dy = partner_pos[0] - p[0], partner_pos[1] - p[1]
    d = math.hypot(dx, dy)
    if d == 0.0 or agent.radius <= 0:
        return physics.MobilityPlan.stay(p)
    ux, uy = dx / d, dy / d
    ox, oy = p[0] - agent.center[0], p[1] - agent.center[1]
    b = -(ox * ux + oy * uy)
    disc = b * b - (ox * ox + oy * oy - agent.radius ** 2)
    reach = b + math.sqrt(max(disc, 0.0))
    step = min(fraction * reach, 0.5 * d - 0.5)
    if step <= 0:
        return physics.MobilityPlan.stay(p)
    end = (p[0] + step * ux, p[1] + step * uy)
    # never step outside the disk through rounding
    if math.hypot(end[0] - agent.center[0], end[1] - agent.center[1]) > agent.radius:
        step *= 1 - 1e-12
        end = (p[0] + step * ux, p[1] + step * uy)
    return physics.MobilityPlan.at_speed(p, end, params.v_max if speed is None else speed)


def _approach_start(ctx, variant):
    """Cheapest feasible start moving both agents straight toward each other.

    Tries fractions k / APPROACH_STEPS of the way to the disk boundary and
    returns (label, plan_i, plan_j, res, energy), or None if none is feasible.
    """
    p = ctx.params
    v = variant.speed(p)
    best = None
    for k in range(1, APPROACH_STEPS + 1):
        f = k / APPROACH_STEPS
        plan_i = _toward_partner(ctx.sender, ctx.receiver.position, p, f, v)
        plan_j = _toward_partner(ctx.receiver, ctx.sender.position, p, f, v)
        res = solve_resource_block(ctx, plan_i, plan_j, variant)
        if not res.feasible:
            continue
        energy = sum(_motion_energy(plan_i, plan_j, p)) + res.objective
        if best is None or energy < best[-1]:
            label = "boundary" if k == APPROACH_STEPS else "partial_approach"
            best = (label, plan_i, plan_j, res, energy)
    return best


def _motion_energy(plan_i, plan_j, params):
    return (physics.mobility_energy(plan_i.p_start, plan_i.p_end, plan_i.velocity, params),
            physics.mobility_energy(plan_j.p_start, plan_j.p_end, plan_j.velocity, params))


def _assemble(ctx, variant, plan_i, plan_j, res, iterations, diag):
    p = ctx.params
    rho_i, rho_j = ctx.rhos(variant)
    e_mob_i, e_mob_j = _motion_energy(plan_i, plan_j, p)
    e_comp_i = physics.compute_time_energy(
        physics.compute_load(ctx.sender.payload, rho_i, res.eta_i, p), p)[1]
    e_comp_j = physics.compute_time_energy(
        physics.compute_load(ctx.receiver.payload, rho_j, res.eta_j, p), p)[1]
    breakdown = physics.EnergyBreakdown(e_mob_i, e_mob_j, e_comp_i, e_comp_j, res.p_tx * res.t1)
    return InteractionPlan(
        ctx.sender.id, ctx.receiver.id, True,
        plan_i.p_start, plan_j.p_start, plan_i.p_end, plan_j.p_end,
        plan_i.velocity, plan_j.velocity, res.p_tx, res.eta_i, res.eta_j, res.t1,
        rho_i, rho_j, ctx.sender.payload, ctx.receiver.payload,
        breakdown, iterations, diag)


def _descend(ctx, variant, plan_i, plan_j, res, energy):
    """BCD from a feasible start; returns (plan_i, plan_j, res, iterations, diag)."""
    p = ctx.params
    history = [energy]
    sca_steps, sca_traces = [], []
    iterations = 0
    for it in range(1, BCD_CAP + 1):
        iterations = it
        mot = solve_motion_block(ctx, res, plan_i, plan_j, variant)
        sca_steps.append(mot.iterations)
        sca_traces.append(mot.trace)
        if mot.plan_i == plan_i and mot.plan_j == plan_j:
            break
        new_res = solve_resource_block(ctx, mot.plan_i, mot.plan_j, variant)
        if not new_res.feasible:
            break
        new_energy = sum(_motion_energy(mot.plan_i, mot.plan_j, p)) + new_res.objective
        if not new_energy < energy:
            break
        improvement = energy - new_energy
        plan_i, plan_j, res, energy = mot.plan_i, mot.plan_j, new_res, new_energy
        history.append(energy)
        if improvement < p.bcd_tol:
            break
    diag = {"energy_history": history, "sca_iterations": sca_steps, "sca_trace": sca_traces}
    return plan_i, plan_j, res, iterations, diag


def solve_pair(ctx: PairContext, variant: InnerVariant = PROPOSED) -> InteractionPlan:
    """Energy-minimal plan for ``ctx.sender`` transmitting to ``ctx.receiver``."""
    stay_i = physics.MobilityPlan.stay(ctx.sender.position)
    stay_j = physics.MobilityPlan.stay(ctx.receiver.position)
    best = None
    res = solve_resource_block(ctx, stay_i, stay_j, variant)
    if res.feasible:
        best = ("rest", *_descend(ctx, variant, stay_i, stay_j, res, res.objective))
    if variant.allow_motion:
        start = _approach_start(ctx, variant)
        if start is not None and (best is None or start[-1] < _energy(best)):
            label, plan_i, plan_j, res, energy = start
            other = (label, *_descend(ctx, variant, plan_i, plan_j, res, energy))
            if best is None or _energy(other) < _energy(best):
                best = other
    if best is None:
        return infeasible_plan(ctx)
    init, plan_i, plan_j, res, iterations, diag = best
    diag = {"init": init, **diag}
    return _assemble(ctx, variant, plan_i, plan_j, res, iterations, diag)


def _energy(run):
    return run[-1]["energy_history"][-1]
