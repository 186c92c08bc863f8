"""Closed-form energy and timing models for one move-compute-communicate step.

Units are SI throughout: metres, seconds, watts, joules, bits, FLOPs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from hmap.errors import DomainError

LN2 = math.log(2.0)


def distance(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


@dataclass(frozen=True)
class MobilityPlan:
    p_start: tuple
    p_end: tuple
    velocity: float  # 0 when the agent does not move
    motion_time: float

    @property
    def distance(self):
        return distance(self.p_start, self.p_end)

    @classmethod
    def stay(cls, p):
        p = (float(p[0]), float(p[1]))
        return cls(p, p, 0.0, 0.0)

    @classmethod
    def at_speed(cls, p_start, p_end, v):
        d = distance(p_start, p_end)
        if d == 0.0:
            return cls.stay(p_start)
        return cls(tuple(map(float, p_start)), tuple(map(float, p_end)), float(v), d / v)


@dataclass(frozen=True)
class EnergyBreakdown:
    e_mob_i: float
    e_mob_j: float
    e_comp_i: float
    e_comp_j: float
    e_comm: float

    @property
    def total(self) -> float:
        return self.e_mob_i + self.e_mob_j + self.e_comp_i + self.e_comp_j + self.e_comm

    @property
    def mobility(self):
        return self.e_mob_i + self.e_mob_j

    @property
    def computation(self):
        return self.e_comp_i + self.e_comp_j


def mobility_energy(p_start, p_end, v, params) -> float:
    """Energy of a straight move at constant speed ``v``."""
    d = distance(p_start, p_end)
    if d == 0.0:
        return 0.0
    if not 0.0 < v <= params.v_max * (1 + 1e-12):
        raise DomainError(f"velocity {v} outside (0, v_max={params.v_max}]")
    return d * (params.p_static / v + params.kappa1 + params.kappa2 * v)


def mobility_energy_timed(d, t_m, params) -> float:
    """Same energy written in distance and motion time, jointly convex in both."""
    if d == 0.0:
        return params.p_static * t_m
    return params.p_static * t_m + params.kappa1 * d + params.kappa2 * d * d / t_m


def cheapest_move_cost(params, speed=None) -> float:
    """Least mobility energy per metre over admissible speeds, in J/m."""
    if speed is not None:
        v = speed
    elif params.kappa2 > 0:
        v = min(math.sqrt(params.p_static / params.kappa2), params.v_max)
    else:
        v = params.v_max
    if v <= 0:
        return math.inf
    return params.p_static / v + params.kappa1 + params.kappa2 * v


def compute_load(payload, rho, eta, params) -> float:
    """FLOPs to fuse and compress ``payload`` bits to ratio ``eta``."""
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"compression ratio {eta} outside (0, 1]")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"correlation {rho} outside [0, 1]")
    gen = params.c_gen * params.gamma * (1.0 - rho) * math.log(1.0 / eta)
    return payload * (params.c_base + gen)


def compute_time_energy(load, params):
    f = params.cpu_freq
    return load / f, params.tau * f * f * load


def channel_gain(p_i, p_j, params) -> float:
    d = distance(p_i, p_j)
    if d == 0.0:
        raise DomainError("channel gain undefined for coincident positions")
    return params.beta0 * d ** (-params.delta)


def rate(p_tx, gain, params) -> float:
    """Shannon rate in bits/s."""
    b = params.bandwidth
    return b * math.log1p(p_tx * gain / (b * params.noise_psd)) / LN2


def max_rate(gain, params) -> float:
    return rate(params.p_max, gain, params)


def comm_time_energy(payload_out, p_tx, gain, params):
    t = payload_out / rate(p_tx, gain, params)
    return t, p_tx * t


def comm_energy_timed(payload_out, t, gain, params) -> float:
    """Transmit energy when ``payload_out`` bits take exactly ``t`` seconds."""
    b = params.bandwidth
    z = payload_out / (b * t)
    try:
        grow = math.expm1(z * LN2)
    except OverflowError:
        return math.inf
    return t * (b * params.noise_psd / gain) * grow


def fuse_payload(l_j, l_i, eta_j, eta_i) -> float:
    return eta_j * l_j + eta_i * l_i
