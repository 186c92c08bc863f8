"""System parameters, config files and seeded scenario generation.

Config files are flat ``key = value`` text, one key per line, ``#`` starts a
comment. Every key is optional; omitted keys take the defaults below.
Logarithmic inputs (``beta0_db``, ``p_max_dbm``, ``noise_psd_dbm_hz``) are
converted to linear units once, when a :class:`SystemParams` is built.

==================  ==========  ===============  ===============================
key                 unit        default          notes
==================  ==========  ===============  ===============================
num_agents          count       10
arena_side          m           500              square deployment area
patrol_radius_min   m           80
patrol_radius_max   m           100
payload_min         bits        5e6
payload_max         bits        1e7
t_max               s           6                per-interaction deadline
bandwidth           Hz          1e6
beta0_db            dB          -40              gain at 1 m
delta               -           3                path-loss exponent, >= 2
p_max_dbm           dBm         30
noise_psd_dbm_hz    dBm/Hz      -144             assumed, N0 = 10^-17.4 W/Hz
v_max               m/s         5
cpu_freq            FLOP/s      1e9
tau                 -           1e-28            effective capacitance
zeta                -           1e-14            potential-field weight
p_static            W           10               assumed
kappa1              W s/m       1                assumed
kappa2              W s^2/m^2   0.1              assumed
c_base              FLOP/bit    50               assumed
c_gen               FLOP/bit    500              assumed
gamma               -           1                assumed
eta_min             ratio       0.1              assumed
eta_req             ratio       0.9              assumed
bcd_tol             J           1e-3
sca_tol             relative    1e-6
bisection_tol       ratio       1e-7
area_samples        count       200000           Monte Carlo points per overlap
rng_seed            integer     42
==================  ==========  ===============  ===============================
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from hmap.errors import ConfigError
from hmap.geometry import CircleRegion


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


_INT_KEYS = ("num_agents", "area_samples", "rng_seed")


@dataclass(frozen=True)
class SystemParams:
    num_agents: int = 10
    arena_side: float = 500.0
    patrol_radius_min: float = 80.0
    patrol_radius_max: float = 100.0
    payload_min: float = 5e6
    payload_max: float = 1e7
    t_max: float = 6.0
    bandwidth: float = 1e6
    beta0_db: float = -40.0
    delta: float = 3.0
    p_max_dbm: float = 30.0
    noise_psd_dbm_hz: float = -144.0
    v_max: float = 5.0
    cpu_freq: float = 1e9
    tau: float = 1e-28
    zeta: float = 1e-14
    p_static: float = 10.0
    kappa1: float = 1.0
    kappa2: float = 0.1
    c_base: float = 50.0
    c_gen: float = 500.0
    gamma: float = 1.0
    eta_min: float = 0.1
    eta_req: float = 0.9
    bcd_tol: float = 1e-3
    sca_tol: float = 1e-6
    bisection_tol: float = 1e-7
    area_samples: int = 200_000
    rng_seed: int = 42

    # linear-unit views, filled in by __post_init__
    beta0: float = field(init=False, repr=False, compare=False)
    p_max: float = field(init=False, repr=False, compare=False)
    noise_psd: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _validate(self)
        for key in _INT_KEYS:
            object.__setattr__(self, key, int(getattr(self, key)))
        object.__setattr__(self, "beta0", db_to_linear(self.beta0_db))
        object.__setattr__(self, "p_max", dbm_to_watts(self.p_max_dbm))
        object.__setattr__(self, "noise_psd", dbm_to_watts(self.noise_psd_dbm_hz))

    @property
    def patrol_radius_range(self):
        return (self.patrol_radius_min, self.patrol_radius_max)

    @property
    def payload_range(self):
        return (self.payload_min, self.payload_max)

    @property
    def noise_power(self):
        """Receiver noise power B*N0 in W."""
        return self.bandwidth * self.noise_psd

    def replace(self, **overrides) -> "SystemParams":
        unknown = set(overrides) - set(config_keys())
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(key, "unknown parameter")
        return dataclasses.replace(self, **overrides)


def config_keys():
    return [f.name for f in dataclasses.fields(SystemParams) if f.init]


def _validate(p: SystemParams):
    for name in config_keys():
        value = getattr(p, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(name, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(name, "must be finite")
        if name in _INT_KEYS and int(value) != value:
            raise ConfigError(name, "must be an integer")

    def require(ok, key, msg):
        if not ok:
            raise ConfigError(key, msg)

    require(p.num_agents >= 1, "num_agents", "must be >= 1")
    require(p.arena_side > 0, "arena_side", "must be > 0")
    require(p.patrol_radius_min > 0, "patrol_radius_min", "must be > 0")
    require(p.patrol_radius_max >= p.patrol_radius_min, "patrol_radius_max",
            "must be >= patrol_radius_min")
    require(p.payload_min > 0, "payload_min", "must be > 0")
    require(p.payload_max >= p.payload_min, "payload_max", "must be >= payload_min")
    for key in ("t_max", "bandwidth", "v_max", "cpu_freq", "bcd_tol", "sca_tol",
                "bisection_tol"):
        require(getattr(p, key) > 0, key, "must be > 0")
    require(p.delta >= 2, "delta", "path-loss exponent must be >= 2")
    for key in ("tau", "zeta", "p_static", "kappa1", "kappa2", "c_base", "c_gen",
                "gamma"):
        require(getattr(p, key) >= 0, key, "must be >= 0")
    require(0 < p.eta_min <= 1, "eta_min", "must lie in (0, 1]")
    require(p.eta_min <= p.eta_req <= 1, "eta_req", "must lie in [eta_min, 1]")
    require(p.area_samples >= 10_000, "area_samples", "must be >= 10000")


def parse_params(text: str, base: Optional[SystemParams] = None) -> SystemParams:
    """Parse ``key = value`` text on top of ``base`` (defaults if omitted)."""
    known = set(config_keys())
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in known:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "duplicate key")
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(key, f"not a number: {value!r}") from None
        if key in _INT_KEYS:
            if not number.is_integer():
                raise ConfigError(key, "must be an integer")
            number = int(number)
        values[key] = number
    return dataclasses.replace(base or SystemParams(), **values)


def load_params(path) -> SystemParams:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from None
    return parse_params(text)


def format_params(params: SystemParams) -> str:
    lines = [f"{key} = {getattr(params, key)!r}" for key in config_keys()]
    return "\n".join(lines) + "\n"


def save_params(params: SystemParams, path):
    Path(path).write_text(format_params(params))


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for consumer ``name``, derived from ``seed``.

    Adding a new consumer never shifts the draws of existing ones.
    """
    entropy = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode())]
    entropy.extend(int(k) & 0xFFFFFFFF for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class AgentState:
    id: int
    center: tuple
    radius: float
    position: tuple
    payload: float
    sources: frozenset
    predecessor: Optional[int] = None
    active: bool = True

    @property
    def region(self) -> CircleRegion:
        return CircleRegion(self.center, self.radius)

    def evolve(self, **changes) -> "AgentState":
        return dataclasses.replace(self, **changes)


def generate_scenario(params: SystemParams) -> list[AgentState]:
    """Draw a population with ids 1..N from the ``scenario`` substream."""
    rng = substream(params.rng_seed, "scenario")
    n = params.num_agents
    centers = rng.uniform(0.0, params.arena_side, size=(n, 2))
    radii = rng.uniform(params.patrol_radius_min, params.patrol_radius_max, size=n)
    payloads = rng.uniform(params.payload_min, params.payload_max, size=n)
    agents = []
    for k in range(n):
        c = (float(centers[k, 0]), float(centers[k, 1]))
        agents.append(AgentState(
            id=k + 1, center=c, radius=float(radii[k]), position=c,
            payload=float(payloads[k]), sources=frozenset({k + 1})))
    return agents
