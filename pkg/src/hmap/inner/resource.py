"""Resource block: compression ratios, transmit time and transmit power.

With positions and motion times frozen, the receiver ratio sits at its cap and
the sender ratio solves a one-dimensional convex problem once the transmit
time is replaced by its closed form (the latest slot the deadline allows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from hmap import physics
from hmap.errors import DomainError
from hmap.inner.context import PROPOSED, InnerVariant, PairContext

BISECTION_CAP = 100
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def optimal_t1(eta_i, t_proc_i, t_proc_j, params) -> float:
    """Latest transmit duration the deadline allows."""
    return min(params.t_max - t_proc_i, params.t_max - t_proc_j)


def recover_power(eta_i, t1, gain, payload_i, params) -> float:
    """Power that sends ``eta_i * payload_i`` bits in exactly ``t1`` seconds."""
    if t1 <= 0:
        raise DomainError("transmit time must be positive")
    b = params.bandwidth
    z = eta_i * payload_i / (b * t1)
    try:
        grow = math.expm1(z * physics.LN2)
    except OverflowError:
        return math.inf
    return (b * params.noise_psd / gain) * grow


@dataclass(frozen=True)
class ResourceAllocation:
    feasible: bool
    eta_i: float = math.nan
    eta_j: float = math.nan
    p_tx: float = math.nan
    t1: float = math.nan
    objective: float = math.inf  # E_comp_i + E_comp_j + E_comm, J
    iterations: int = 0


INFEASIBLE = ResourceAllocation(False)


class _SenderProblem:
    """J(eta) and its right derivative for fixed motion."""

    def __init__(self, ctx: PairContext, t_mob_i, t_mob_j, gain, variant, eta_j):
        p = ctx.params
        self.p = p
        self.variant = variant
        self.L = ctx.sender.payload
        rho_i, rho_j = ctx.rhos(variant)
        self.rho_i = rho_i
        self.gain = gain
        self.r_max = physics.max_rate(gain, p)
        self.t_mob_i = t_mob_i
        load_j = physics.compute_load(ctx.receiver.payload, rho_j, eta_j, p)
        t_comp_j, self.e_comp_j = physics.compute_time_energy(load_j, p)
        self.t_proc_j = max(t_mob_j, t_comp_j)
        # d T_comp_i / d eta = -k_gen / eta
        self.k_gen = self.L * p.c_gen * p.gamma * (1.0 - rho_i) / p.cpu_freq
        self.noise = p.bandwidth * p.noise_psd

    def t_comp(self, eta):
        load = physics.compute_load(self.L, self.rho_i, eta, self.p)
        return physics.compute_time_energy(load, self.p)

    def t1(self, eta):
        t_proc_i = max(self.t_mob_i, self.t_comp(eta)[0])
        return optimal_t1(eta, t_proc_i, self.t_proc_j, self.p)

    def slack(self, eta):
        """t1*(eta) - shortest transmit time at full power; concave in eta."""
        return self.t1(eta) - eta * self.L / self.r_max

    def _comp_branch(self, eta):
        # right-derivative regime: generative compute sets the critical path
        return self.k_gen > 0 and self.t_comp(eta)[0] > max(self.t_mob_i, self.t_proc_j)

    def slack_right_derivative(self, eta):
        dt1 = self.k_gen / eta if self._comp_branch(eta) else 0.0
        return dt1 - self.L / self.r_max

    def transmit(self, eta):
        """(t1, E_comm) at ratio eta."""
        if self.variant.max_power:
            t = eta * self.L / self.r_max
            return t, self.p.p_max * t
        t = self.t1(eta)
        return t, physics.comm_energy_timed(eta * self.L, t, self.gain, self.p)

    def objective(self, eta):
        e_comp_i = self.t_comp(eta)[1]
        return e_comp_i + self.transmit(eta)[1]

    def right_derivative(self, eta):
        p = self.p
        d_comp = -p.tau * p.cpu_freq ** 2 * self.L * p.c_gen * p.gamma * (1.0 - self.rho_i) / eta
        if self.variant.max_power:
            return d_comp + p.p_max * self.L / self.r_max
        t = self.t1(eta)
        z = eta * self.L / (p.bandwidth * t)
        two_z = 2.0 ** z
        d_eta = (p.noise_psd / self.gain) * self.L * physics.LN2 * two_z
        d_t = (self.noise / self.gain) * (two_z - 1.0 - z * physics.LN2 * two_z)
        dt1 = self.k_gen / eta if self._comp_branch(eta) else 0.0
        return d_comp + d_eta + d_t * dt1


def _bisect_sign(fn, lo, hi, tol):
    """Shrink [lo, hi] around the sign change of a non-decreasing fn.

    Returns (a, b) with fn(a) < 0 <= fn(b) preserved (b may be the original hi).
    """
    a, b = lo, hi
    it = 0
    while b - a > tol and it < BISECTION_CAP:
        m = 0.5 * (a + b)
        if fn(m) >= 0:
            b = m
        else:
            a = m
        it += 1
    return a, b, it


def _golden(fn, lo, hi, tol):
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    it = 0
    while b - a > tol and it < BISECTION_CAP:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
        it += 1
    return 0.5 * (a + b), it


def feasible_eta_interval(prob: _SenderProblem, lo, hi, tol):
    """Sub-interval of [lo, hi] where the deadline holds at full power, or None."""
    # slack >= 0 already forces t1 >= eta * L / R_max > 0
    if lo == hi:
        return (lo, hi) if prob.slack(lo) >= 0 else None
    # peak of the concave slack
    if prob.slack_right_derivative(lo) <= 0:
        peak = lo
    else:
        _, peak, _ = _bisect_sign(lambda e: -prob.slack_right_derivative(e), lo, hi, tol)
    if prob.slack(peak) < 0:
        return None
    left = lo
    if prob.slack(lo) < 0:
        _, left, _ = _bisect_sign(lambda e: prob.slack(e), lo, peak, tol)
    right = hi
    if prob.slack(hi) < 0:
        right, _, _ = _bisect_sign(lambda e: -prob.slack(e), peak, hi, tol)
    return left, right


def solve_resource_block(ctx: PairContext, plan_i: physics.MobilityPlan,
                         plan_j: physics.MobilityPlan,
                         variant: InnerVariant = PROPOSED) -> ResourceAllocation:
    """Optimal (eta_i, eta_j, p_tx, t1) for frozen motion; INFEASIBLE if none."""
    p = ctx.params
    try:
        gain = physics.channel_gain(plan_i.p_end, plan_j.p_end, p)
    except DomainError:
        return INFEASIBLE
    eta_j = variant.fixed_eta if variant.fixed_eta is not None else p.eta_req
    prob = _SenderProblem(ctx, plan_i.motion_time, plan_j.motion_time, gain, variant, eta_j)
    if prob.t_proc_j >= p.t_max:
        return INFEASIBLE
    tol = p.bisection_tol
    if variant.fixed_eta is not None:
        lo = hi = variant.fixed_eta
    else:
        lo, hi = p.eta_min, 1.0
    interval = feasible_eta_interval(prob, lo, hi, tol)
    if interval is None:
        return INFEASIBLE
    a, b = interval
    iterations = 0
    if a == b:
        eta = a
    else:
        d_lo = prob.right_derivative(a)
        if not math.isfinite(d_lo):
            eta, iterations = _golden(prob.objective, a, b, tol)
        elif d_lo >= 0:
            eta = a
        else:
            lo_m, hi_m, iterations = _bisect_sign(prob.right_derivative, a, b, tol)
            eta = hi_m
            if not math.isfinite(prob.objective(eta)):
                eta, iterations = _golden(prob.objective, a, b, tol)
            # smallest ratio among equal objectives
            if prob.objective(a) <= prob.objective(eta):
                eta = a
    t1, e_comm = prob.transmit(eta)
    if t1 <= 0 or not math.isfinite(e_comm):
        return INFEASIBLE
    if variant.max_power:
        p_tx = p.p_max
    else:
        p_tx = recover_power(eta, t1, gain, ctx.sender.payload, p)
        if p_tx > p.p_max * (1 + 1e-9):
            return INFEASIBLE
    energy = prob.t_comp(eta)[1] + prob.e_comp_j + e_comm
    return ResourceAllocation(True, eta, eta_j, p_tx, t1, energy, iterations)
