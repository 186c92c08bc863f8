from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from hmap.scenario import AgentState, SystemParams


@dataclass(frozen=True)
class InnerVariant:
    """Restrictions pinned onto the pair problem.

    The default instance is the unrestricted solver; benchmark schemes flip
    one field each.
    """

    name: str = "proposed"
    max_power: bool = False
    speed_fraction: Optional[float] = None  # of v_max; None = speed optimised
    fixed_eta: Optional[float] = None  # applied to both sender and receiver
    rho_override: Optional[float] = None
    allow_motion: bool = True

    def speed(self, params) -> Optional[float]:
        if self.speed_fraction is None:
            return None
        return self.speed_fraction * params.v_max


PROPOSED = InnerVariant()


@dataclass(frozen=True)
class PairContext:
    sender: AgentState
    receiver: AgentState
    rho_i: float
    rho_j: float
    params: SystemParams

    def __post_init__(self):
        if self.sender.id == self.receiver.id:
            raise ValueError("sender and receiver must differ")
        if not (self.sender.active and self.receiver.active):
            raise ValueError("both agents must be active")

    def rhos(self, variant: InnerVariant = PROPOSED):
        if variant.rho_override is not None:
            return variant.rho_override, variant.rho_override
        return self.rho_i, self.rho_j
