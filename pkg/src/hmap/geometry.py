"""Patrol-region geometry: membership, Monte Carlo areas, Jaccard overlap."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from hmap.errors import DomainError

MEMBERSHIP_SLACK = 1e-9  # m
DEFAULT_SAMPLES = 200_000
_CHUNK = 65_536


@dataclass(frozen=True)
class CircleRegion:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"circle radius must be > 0, got {self.radius}")


Coverage = Union[Mapping[int, CircleRegion], Iterable[CircleRegion]]


def _regions(cov: Coverage) -> list[CircleRegion]:
    if isinstance(cov, Mapping):
        return [cov[k] for k in sorted(cov)]
    return list(cov)


def in_region(p, region: CircleRegion) -> bool:
    dx = p[0] - region.center[0]
    dy = p[1] - region.center[1]
    return math.hypot(dx, dy) <= region.radius + MEMBERSHIP_SLACK


def _arrays(regions):
    centers = np.array([r.center for r in regions], dtype=float)
    radii = np.array([r.radius for r in regions], dtype=float)
    return centers, radii


def _bbox(centers, radii):
    lo = (centers - radii[:, None]).min(axis=0)
    hi = (centers + radii[:, None]).max(axis=0)
    return lo, hi


def _hits(points, centers, radii):
    # (n_points,) mask: point inside at least one circle
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return (d2 <= (radii ** 2)[None, :]).any(axis=1)


def _sample_masks(groups, samples, seed):
    """Hit masks of each circle group on one shared uniform sample set."""
    arrays = [_arrays(g) for g in groups]
    all_c = np.vstack([a[0] for a in arrays])
    all_r = np.concatenate([a[1] for a in arrays])
    lo, hi = _bbox(all_c, all_r)
    rng = np.random.default_rng(seed)
    masks = [np.empty(samples, dtype=bool) for _ in groups]
    for start in range(0, samples, _CHUNK):
        stop = min(start + _CHUNK, samples)
        pts = lo + (hi - lo) * rng.random((stop - start, 2))
        for m, (c, r) in zip(masks, arrays):
            m[start:stop] = _hits(pts, c, r)
    box_area = float(np.prod(hi - lo))
    return masks, box_area


def union_area(cov: Coverage, samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """Hit-or-miss estimate of the union area. Returns ``(area, stderr)`` in m^2."""
    regions = _regions(cov)
    if not regions:
        raise DomainError("union_area of an empty coverage")
    if samples < 10_000:
        raise DomainError("union_area needs at least 10^4 samples")
    (mask,), box = _sample_masks([regions], samples, seed)
    frac = mask.mean()
    return box * frac, box * math.sqrt(frac * (1.0 - frac) / samples)


def jaccard(cov_a: Coverage, cov_b: Coverage, samples: int = DEFAULT_SAMPLES,
            seed: int = 0) -> float:
    """Area(A & B) / Area(A | B), both areas counted on the same sample set."""
    a, b = _regions(cov_a), _regions(cov_b)
    if not a or not b:
        raise DomainError("jaccard needs two non-empty coverages")
    if sorted(map(_key, a)) == sorted(map(_key, b)):
        return 1.0
    (ma, mb), _ = _sample_masks([a, b], samples, seed)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 0.0
    rho = np.count_nonzero(ma & mb) / union
    return min(1.0, max(0.0, float(rho)))


def _key(r: CircleRegion):
    return (float(r.center[0]), float(r.center[1]), float(r.radius))
