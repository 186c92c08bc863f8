"""Independent reference computations for the tests.

Every formula here is re-typed from the model definitions rather than
imported from ``hmap``, so a shared bug cannot make both sides agree.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from hmap.scenario import AgentState, SystemParams

# cheap movement and a weak channel, so moving actually pays
MOTION_PARAMS = dict(p_static=1e-3, kappa1=1e-4, kappa2=1e-5, beta0_db=-40.0)


def motion_params(**extra):
    return SystemParams(**{**MOTION_PARAMS, **extra})


def random_pair(rng, params, dist=(150.0, 600.0), radius=(80.0, 100.0), rho=(0.0, 1.0)):
    """Sender at the origin, receiver on the +x axis, both at their centres."""
    d = rng.uniform(*dist)
    r = rng.uniform(*radius, size=2)
    L = rng.uniform(params.payload_min, params.payload_max, size=2)
    theta = rng.uniform(0, 2 * np.pi)
    c2 = (float(d * np.cos(theta)), float(d * np.sin(theta)))
    a = AgentState(1, (0.0, 0.0), float(r[0]), (0.0, 0.0), float(L[0]), frozenset({1}))
    b = AgentState(2, c2, float(r[1]), c2, float(L[1]), frozenset({2}))
    return a, b, float(rng.uniform(*rho)), float(rng.uniform(*rho))


# ---------------------------------------------------------------- formulas

def noise_psd(p):
    return 10.0 ** ((p.noise_psd_dbm_hz - 30.0) / 10.0)


def beta0(p):
    return 10.0 ** (p.beta0_db / 10.0)


def p_max(p):
    return 10.0 ** ((p.p_max_dbm - 30.0) / 10.0)


def comp(L, rho, eta, p):
    """(time, energy) of fusing ``L`` bits at ratio ``eta``."""
    load = L * (p.c_base + p.c_gen * p.gamma * (1.0 - rho) * np.log(1.0 / eta))
    f = p.cpu_freq
    return load / f, p.tau * f * f * load  # same rounding order as the library


def mob(d, v, p):
    d = np.asarray(d, float)
    return np.where(d > 0, d * (p.p_static / v + p.kappa1 + p.kappa2 * v), 0.0)


def comm_energy(bits, t, gain, p):
    """Least energy sending ``bits`` in ``t`` seconds (inf past P_max)."""
    nb = p.bandwidth * noise_psd(p)
    z = bits / (p.bandwidth * t)
    with np.errstate(over="ignore"):
        power = nb / gain * np.expm1(z * math.log(2.0))
    return np.where(power <= p_max(p) * (1 + 1e-9), power * t, np.inf)


def shannon(p_tx, gain, p):
    return p.bandwidth * np.log2(1.0 + p_tx * gain / (p.bandwidth * noise_psd(p)))


# ---------------------------------------------------------------- grid oracle

def disk_grid(center, radius, n=21):
    """Points of an n x n grid over the bounding square that fall inside the disk."""
    if radius <= 0:
        return np.array([center], float)
    u = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(u, u)
    keep = X ** 2 + Y ** 2 <= radius ** 2 * (1 + 1e-12)
    return np.column_stack([X[keep] + center[0], Y[keep] + center[1]])


def grid_pair_optimum(sender, receiver, rho_i, rho_j, p, n_pos=21, n_t=50, n_eta=50):
    """Brute-force lower envelope of the pair energy over a coarse decision grid.

    Decisions: end positions on an ``n_pos`` x ``n_pos`` grid inside each disk,
    a shared motion-time budget tau on ``n_t`` points, the sender ratio on
    ``n_eta`` points; receiver ratio at its cap, speeds clipped to the
    energy-optimal speed, transmit time the whole leftover deadline.
    Returns the best total energy found (inf if nothing is feasible).
    """
    T = p.t_max
    Pi = disk_grid(sender.center, sender.radius, n_pos)
    Pj = disk_grid(receiver.center, receiver.radius, n_pos)
    di = np.hypot(*(Pi - np.asarray(sender.position)).T)
    dj = np.hypot(*(Pj - np.asarray(receiver.position)).T)
    dist = np.hypot(Pi[:, None, 0] - Pj[None, :, 0], Pi[:, None, 1] - Pj[None, :, 1])
    with np.errstate(divide="ignore"):
        inv_gain = np.where(dist > 0, dist ** p.delta / beta0(p), np.inf)

    v_star = math.sqrt(p.p_static / p.kappa2) if p.kappa2 > 0 else p.v_max
    taus = np.linspace(T / n_t, T * (1 - 1.0 / n_t), n_t)
    etas = np.linspace(p.eta_min, 1.0, n_eta)
    tc_j, ec_j = comp(receiver.payload, rho_j, p.eta_req, p)
    nb = p.bandwidth * noise_psd(p)
    best = math.inf
    for tau in np.concatenate([[0.0], taus]):
        def leg(d):
            if tau == 0.0:
                return np.where(d > 0, np.inf, 0.0), np.zeros_like(d)
            v = np.clip(np.maximum(v_star, d / tau), None, p.v_max)
            e = np.where(d / tau <= p.v_max * (1 + 1e-12), mob(d, v, p), np.inf)
            return e, np.where(d > 0, d / v, 0.0)
        ei, ti = leg(di)
        ej, tj = leg(dj)
        move = ei[:, None] + ej[None, :]
        busy_move = np.maximum(ti[:, None], tj[None, :])
        for eta in etas:
            tc_i, ec_i = comp(sender.payload, rho_i, eta, p)
            t1 = T - np.maximum(busy_move, max(tc_i, tc_j))
            bits = eta * sender.payload
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                z = bits / (p.bandwidth * t1)
                power = nb * inv_gain * np.expm1(z * math.log(2.0))
                e = move + ec_i + ec_j + power * t1
                e = np.where((t1 > 0) & (power <= p_max(p) * (1 + 1e-9)), e, np.inf)
            best = min(best, float(np.min(e)))
    return best


def sender_objective(eta, sender, receiver, rho_i, rho_j, p, gain, t_mob=(0.0, 0.0)):
    """J(eta) with the deadline-filling transmit time substituted; inf if infeasible."""
    eta = np.asarray(eta, float)
    tc_i, ec_i = comp(sender.payload, rho_i, eta, p)
    tc_j, _ = comp(receiver.payload, rho_j, p.eta_req, p)
    t1 = p.t_max - np.maximum(np.maximum(t_mob[0], tc_i), max(t_mob[1], tc_j))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        e = ec_i + comm_energy(eta * sender.payload, t1, gain, p)
    return np.where(t1 > 0, e, np.inf)


# ---------------------------------------------------------------- matching

def brute_matching_total(n, weights):
    """Min total over perfect matchings of vertices 0..n-1; weights[(a, b)] with a < b.

    Each candidate is summed with ``math.fsum`` so equal matchings give equal floats.
    """
    best = math.inf

    def rec(rest, chosen):
        nonlocal best
        if not rest:
            best = min(best, math.fsum(chosen))
            return
        a = rest[0]
        for k in range(1, len(rest)):
            b = rest[k]
            w = weights.get((a, b), math.inf)
            if math.isfinite(w):
                rec(rest[1:k] + rest[k + 1:], chosen + [w])

    rec(list(range(n)), [])
    return best


def all_perfect_matchings(vertices):
    if not vertices:
        yield []
        return
    a = vertices[0]
    for k in range(1, len(vertices)):
        for tail in all_perfect_matchings(vertices[1:k] + vertices[k + 1:]):
            yield [(a, vertices[k])] + tail


def pairs(seq):
    return list(itertools.combinations(seq, 2))


def motion_grid_optimum(sender, receiver, p_tx, bits, t_comp, p, n_pos=21, n_t=50):
    """Grid lower envelope of the motion block with power and ratios frozen.

    Minimises mobility energy plus ``p_tx * t2`` where ``t2 = bits / R`` is the
    exact transmit time at the end-point distance, subject to
    ``max(motion time, compute time) + t2 <= T_max``. End positions come from
    ``n_pos`` x ``n_pos`` grids in each disk; a shared motion-time budget runs
    over ``n_t`` points (plus zero, i.e. staying put).
    """
    T = p.t_max
    Pi = disk_grid(sender.center, sender.radius, n_pos)
    Pj = disk_grid(receiver.center, receiver.radius, n_pos)
    di = np.hypot(*(Pi - np.asarray(sender.position)).T)
    dj = np.hypot(*(Pj - np.asarray(receiver.position)).T)
    dist = np.hypot(Pi[:, None, 0] - Pj[None, :, 0], Pi[:, None, 1] - Pj[None, :, 1])
    with np.errstate(divide="ignore"):
        gain = np.where(dist > 0, beta0(p) / dist ** p.delta, 0.0)
        rate = shannon(p_tx, gain, p)
        t2 = np.where(rate > 0, bits / rate, np.inf)
    v_star = math.sqrt(p.p_static / p.kappa2) if p.kappa2 > 0 else p.v_max
    busy_comp = max(t_comp)
    best = math.inf
    for tau in np.concatenate([[0.0], np.linspace(T / n_t, T, n_t)]):
        def leg(d):
            if tau == 0.0:
                return np.where(d > 0, np.inf, 0.0), np.zeros_like(d)
            v = np.minimum(np.maximum(v_star, d / tau), p.v_max)
            ok = d <= p.v_max * tau * (1 + 1e-12)
            return np.where(ok, mob(d, v, p), np.inf), np.where(d > 0, d / v, 0.0)
        ei, ti = leg(di)
        ej, tj = leg(dj)
        busy = np.maximum(np.maximum(ti[:, None], tj[None, :]), busy_comp)
        e = ei[:, None] + ej[None, :] + p_tx * t2
        e = np.where(busy + t2 <= T * (1 + 1e-12), e, np.inf)
        best = min(best, float(np.min(e)))
    return best
