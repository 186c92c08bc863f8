"""Motion block: end positions and motion times for fixed resources.

The rate constraint is replaced by its tangent at the current squared
distance, which under-estimates the convex rate curve, so each convexified
problem is a conic program whose solutions stay feasible for the true rate.
The tangent point is then moved to the new squared distance and the
problem re-solved (successive convex approximation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hmap import physics
from hmap.inner.context import PROPOSED, InnerVariant, PairContext
from hmap.inner.resource import ResourceAllocation
from hmap.inner.socp import Constraint, SocProblem, solve_soc

SCA_CAP = 50
MIN_SEPARATION = 0.5  # m, keeps the expansion point away from s = 0
SNAP_TOL = 1e-7  # fraction of the length scale
SAFETY = 1e-9  # relative tightening so solver round-off stays feasible


@dataclass(frozen=True)
class RateBound:
    """Tangent of R(s) at ``s_tilde``: ``value - gradient * (s - s_tilde)``."""

    s_tilde: float
    value: float
    gradient: float

    def __call__(self, s):
        return self.value - self.gradient * (s - self.s_tilde)


def rate_of_squared_distance(s, p_tx, params) -> float:
    xi = p_tx * params.beta0 / (params.bandwidth * params.noise_psd)
    return params.bandwidth * math.log1p(xi * s ** (-params.delta / 2.0)) / physics.LN2


def linearize_rate(s_tilde, params, p_tx) -> RateBound:
    xi = p_tx * params.beta0 / (params.bandwidth * params.noise_psd)
    half = params.delta / 2.0
    grad = params.bandwidth * xi * params.delta / (
        math.log(4.0) * s_tilde * (s_tilde ** half + xi))
    return RateBound(s_tilde, rate_of_squared_distance(s_tilde, p_tx, params), grad)


@dataclass
class MotionSubproblem:
    """Scaled conic program plus the bookkeeping to map its solution back."""

    problem: SocProblem
    index: dict
    origin: np.ndarray
    length: float
    time: float
    energy: float
    movable: dict
    speed: object
    bound: RateBound


def _movable(agent, variant):
    return variant.allow_motion and agent.radius > 1e-9


def build_subproblem(ctx: PairContext, res: ResourceAllocation, bound: RateBound,
                     variant: InnerVariant, t_comp, energy_scale) -> MotionSubproblem:
    p = ctx.params
    agents = {"i": ctx.sender, "j": ctx.receiver}
    starts = {u: np.asarray(a.position, float) for u, a in agents.items()}
    origin = 0.5 * (starts["i"] + starts["j"])
    length = max(1.0, ctx.sender.radius, ctx.receiver.radius,
                 0.5 * float(np.linalg.norm(starts["i"] - starts["j"])))
    T = p.t_max
    speed = variant.speed(p)
    movable = {u: _movable(a, variant) for u, a in agents.items()}
    free_speed = speed is None

    names = []
    for u in ("i", "j"):
        if movable[u]:
            names += [f"dx_{u}", f"dy_{u}", f"r_{u}"]
            if free_speed:
                names.append(f"tm_{u}")
                if p.kappa2 > 0:
                    names.append(f"q_{u}")
    names += ["t2", "s"]
    idx = {name: k for k, name in enumerate(names)}
    n = len(names)

    def e(name, coef=1.0):
        v = np.zeros(n)
        v[idx[name]] = coef
        return v

    def pos_rows(u):
        A = np.zeros((2, n))
        A[0, idx[f"dx_{u}"]] = 1.0
        A[1, idx[f"dy_{u}"]] = 1.0
        return A

    zero = np.zeros(n)
    cons = []
    obj = e("t2", res.p_tx * T)
    v_hat = p.v_max * T / length
    scaled = {u: (starts[u] - origin) / length for u in agents}
    for u, a in agents.items():
        if not movable[u]:
            continue
        A = pos_rows(u)
        c_hat = (np.asarray(a.center, float) - origin) / length
        r_hat = a.radius / length
        # displacement variables keep tiny moves free of cancellation
        cons.append(Constraint("soc", zero, r_hat * (1 - SAFETY), A, scaled[u] - c_hat,
                               name=f"disk_{u}"))
        cons.append(Constraint("soc", e(f"r_{u}"), 0.0, A, np.zeros(2), name=f"travel_{u}"))
        reach = float(np.linalg.norm(scaled[u] - c_hat)) + r_hat
        if free_speed:
            cons.append(Constraint("lin", e(f"tm_{u}", v_hat) - e(f"r_{u}"), 0.0,
                                   name=f"speed_{u}"))
            cons.append(Constraint("lin", -e(f"tm_{u}") - e("t2"), 1.0 - SAFETY,
                                   name=f"latency_{u}"))
            obj = obj + e(f"tm_{u}", p.p_static * T) + e(f"r_{u}", p.kappa1 * length)
            if p.kappa2 > 0:
                cons.append(Constraint("rsoc", e(f"q_{u}"), 0.0, A, np.zeros(2), e(f"tm_{u}"), 0.0,
                                       name=f"drag_{u}"))
                cons.append(Constraint("lin", -e(f"q_{u}"), 2.0 * v_hat * reach + 1.0,
                                       name=f"qbox_{u}"))
                obj = obj + e(f"q_{u}", p.kappa2 * length * length / T)
        else:
            v_bar = speed * T / length
            cons.append(Constraint("lin", -e(f"r_{u}", 1.0 / v_bar) - e("t2"), 1.0 - SAFETY,
                                   name=f"latency_{u}"))
            per_metre = physics.cheapest_move_cost(p, speed=speed)
            obj = obj + e(f"r_{u}", per_metre * length)
            cons.append(Constraint("lin", -e(f"r_{u}"), v_bar + 1.0, name=f"rbox_{u}"))

    cons.append(Constraint("lin", -e("t2"), 1.0 - max(t_comp) / T - SAFETY,
                           name="compute_latency"))

    # ||p_i - p_j||^2 <= s
    Ad = np.zeros((2, n))
    bd = np.zeros(2)
    for u, sign in (("i", 1.0), ("j", -1.0)):
        bd += sign * scaled[u]
        if movable[u]:
            Ad += sign * pos_rows(u)
    L2 = length * length
    cons.append(Constraint("rsoc", e("s"), 0.0, Ad, bd, zero, 1.0, name="distance"))
    cons.append(Constraint("lin", e("s"), -MIN_SEPARATION ** 2 / L2, name="separation"))

    # t2 * tangent(s) >= eta_i L_i, scaled to t2_hat * z >= 1
    D = res.eta_i * ctx.sender.payload
    a_const = bound.value + bound.gradient * bound.s_tilde
    cons.append(Constraint("rsoc", e("t2"), 0.0, np.zeros((1, n)), np.ones(1),
                           e("s", -bound.gradient * L2 * T / D), a_const * T / D, name="rate"))

    scale = max(energy_scale, 1e-12)
    prob = SocProblem(obj / scale, cons, tuple(names))
    return MotionSubproblem(prob, idx, origin, length, T, scale, movable, speed, bound)


def _plans_from(sub: MotionSubproblem, x, ctx):
    p = ctx.params
    plans = {}
    for u, agent in (("i", ctx.sender), ("j", ctx.receiver)):
        start = tuple(map(float, agent.position))
        if not sub.movable[u]:
            plans[u] = physics.MobilityPlan.stay(start)
            continue
        step = sub.length * np.array([x[sub.index[f"dx_{u}"]], x[sub.index[f"dy_{u}"]]])
        end = _into_disk((start[0] + float(step[0]), start[1] + float(step[1])), agent)
        d = physics.distance(start, end)
        if d == 0.0:
            plans[u] = physics.MobilityPlan.stay(start)
            continue
        if sub.speed is not None:
            v = sub.speed
        else:
            t_m = sub.time * x[sub.index[f"tm_{u}"]]
            v = min(d / t_m, p.v_max) if t_m > 0 else p.v_max
        plans[u] = physics.MobilityPlan.at_speed(start, end, v)
    return plans["i"], plans["j"]


def _into_disk(point, agent):
    cx, cy = agent.center
    off = physics.distance(point, agent.center)
    if off <= agent.radius:
        return point
    k = agent.radius / off * (1 - 1e-12)
    return (cx + (point[0] - cx) * k, cy + (point[1] - cy) * k)


def _snap(plan, length):
    if 0.0 < plan.distance <= SNAP_TOL * length:
        return physics.MobilityPlan.stay(plan.p_start)
    return plan


@dataclass
class MotionResult:
    plan_i: physics.MobilityPlan
    plan_j: physics.MobilityPlan
    energy: float  # mobility + fixed-power transmit energy, J
    iterations: int = 0
    trace: list = field(default_factory=list)
    screened: bool = False


def fixed_power_energy(ctx, res, plan_i, plan_j, variant=PROPOSED):
    """(mobility + transmit energy at res.p_tx, feasible flag) for a motion."""
    p = ctx.params
    try:
        gain = physics.channel_gain(plan_i.p_end, plan_j.p_end, p)
    except Exception:
        return math.inf, False
    D = res.eta_i * ctx.sender.payload
    t_comm, e_comm = physics.comm_time_energy(D, res.p_tx, gain, p)
    t_comp = _compute_times(ctx, res, variant)
    busy = max(plan_i.motion_time, plan_j.motion_time, *t_comp)
    ok = busy + t_comm <= p.t_max * (1 + 1e-12)
    e_mob = (physics.mobility_energy(plan_i.p_start, plan_i.p_end, plan_i.velocity, p)
             + physics.mobility_energy(plan_j.p_start, plan_j.p_end, plan_j.velocity, p))
    return e_mob + e_comm, ok


def _compute_times(ctx, res, variant):
    p = ctx.params
    rho_i, rho_j = ctx.rhos(variant)
    ti = physics.compute_time_energy(
        physics.compute_load(ctx.sender.payload, rho_i, res.eta_i, p), p)[0]
    tj = physics.compute_time_energy(
        physics.compute_load(ctx.receiver.payload, rho_j, res.eta_j, p), p)[0]
    return ti, tj


def rest_is_optimal(ctx, res, variant=PROPOSED) -> bool:
    """First-order test that staying put solves the convexified problem.

    Moving one metre toward the partner saves at most
    ``p_tx * D * 2d * grad / R^2`` joules of transmit energy; if that is below
    the cheapest per-metre mobility cost for every movable agent, the rest
    point is optimal for the convex motion problem.
    """
    p = ctx.params
    movable = [a for a in (ctx.sender, ctx.receiver) if _movable(a, variant)]
    if not movable:
        return True
    d = physics.distance(ctx.sender.position, ctx.receiver.position)
    if d == 0.0:
        return False
    s = d * d
    bound = linearize_rate(s, p, res.p_tx)
    D = res.eta_i * ctx.sender.payload
    saving = res.p_tx * D * 2.0 * d * bound.gradient / bound.value ** 2
    cost = physics.cheapest_move_cost(p, speed=variant.speed(p))
    return saving < cost


def solve_motion_block(ctx: PairContext, res: ResourceAllocation, plan_i, plan_j,
                       variant: InnerVariant = PROPOSED) -> MotionResult:
    """SCA over the convexified motion problem with resources held fixed.

    Returns the input motion unchanged when no strictly better feasible
    motion is found.
    """
    p = ctx.params
    current, ok = fixed_power_energy(ctx, res, plan_i, plan_j, variant)
    best = MotionResult(plan_i, plan_j, current)
    at_rest = plan_i.distance == 0.0 and plan_j.distance == 0.0
    if at_rest and rest_is_optimal(ctx, res, variant):
        best.screened = True
        return best
    if not any(_movable(a, variant) for a in (ctx.sender, ctx.receiver)):
        return best

    t_comp = _compute_times(ctx, res, variant)
    s_tilde = physics.distance(plan_i.p_end, plan_j.p_end) ** 2
    prev_obj = None
    for it in range(1, SCA_CAP + 1):
        bound = linearize_rate(s_tilde, p, res.p_tx)
        sub = build_subproblem(ctx, res, bound, variant, t_comp, max(current, 1e-9))
        sol = solve_soc(sub.problem)
        if sol.status != "optimal":
            break
        obj = sub.energy * sol.objective
        s_star = sub.length ** 2 * sol.x[sub.index["s"]]
        new_i, new_j = _plans_from(sub, sol.x, ctx)
        s_act = physics.distance(new_i.p_end, new_j.p_end) ** 2
        best.trace.append({
            "iteration": it, "s_tilde": s_tilde, "s_star": s_star, "objective": obj,
            "rate_true": rate_of_squared_distance(s_star, res.p_tx, p),
            "rate_bound": bound(s_star), "kkt": sol.kkt,
        })
        for cand in ((_snap(new_i, sub.length), _snap(new_j, sub.length)), (new_i, new_j)):
            e_cand, feasible = fixed_power_energy(ctx, res, cand[0], cand[1], variant)
            if feasible and e_cand < best.energy:
                best.plan_i, best.plan_j, best.energy = cand[0], cand[1], e_cand
                break
        best.iterations = it
        if prev_obj is not None and abs(prev_obj - obj) <= p.sca_tol * max(abs(prev_obj), 1e-12):
            break
        prev_obj = obj
        s_tilde = s_star if s_star > 0 else s_act
    return best
