"""Choice-model kernel: distances, attraction, utilities, no-choice utility.

Distances are equirectangular great-circle approximations scaled by a road
factor; the decay term (1 + d)^beta works in kilometers.  Parks beyond the
segment's distance cap are blocked and contribute zero utility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import DemandPoint, Neighborhood, ParkLocation, Segment, SimParams

EARTH_RADIUS_M = 6_371_000.0


@dataclass
class UtilityTable:
    """Dense utilities for one neighborhood.

    u has shape (points, segments, parks, max designs) with zero padding
    for parks offering fewer designs; u0 is constant across points of a
    neighborhood but kept at (points, segments) for uniform indexing.
    """

    u: np.ndarray
    u0: np.ndarray
    blocked: np.ndarray
    dist_km: np.ndarray  # raw effective distance per (point, park), pre-cap
    alpha_offset: float
    point_ids: list[str]
    segment_ids: list[str]
    park_ids: list[str]
    rank_counts: np.ndarray
    weights: np.ndarray  # w_is aligned with (point_ids, segment_ids)


def travel_distance(a: tuple[float, float], b: tuple[float, float],
                    adjust: float = 1.0) -> float:
    """Approximate road distance in meters between two lat/lon pairs."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    x = (lon2 - lon1) * math.cos((lat1 + lat2) / 2.0)
    y = lat2 - lat1
    return EARTH_RADIUS_M * math.hypot(x, y) * adjust


def _cap_m(segment: Segment, park: ParkLocation, params: SimParams) -> float:
    if segment.child_like:
        return params.cap_child_m
    if park.area_m2 < params.large_park_m2:
        return params.cap_small_m
    return params.cap_large_m


def _raw_distance_m(point: DemandPoint, park: ParkLocation, params: SimParams) -> float:
    if park.kind == "candidate":
        same = point.zone is not None and point.zone == park.zone
        return params.candidate_same_zone_m if same else params.candidate_other_zone_m
    return travel_distance((point.lat, point.lon), (park.lat, park.lon),
                           params.distance_adjust)


def effective_distance(point: DemandPoint, park: ParkLocation, segment: Segment,
                       params: SimParams) -> float | None:
    """Distance in km for the decay term, or None when the cap blocks it."""
    meters = _raw_distance_m(point, park, params)
    if meters > _cap_m(segment, park, params):
        return None
    return meters / 1000.0


def shift_alphas(alphas: list[float], eps: float) -> tuple[list[float], float]:
    """Shift attractiveness so every value is at least eps (when needed)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not alphas:
        return [], 0.0
    offset = max(0.0, eps - min(alphas))
    return [a + offset for a in alphas], offset


def utility(point: DemandPoint, segment: Segment, park: ParkLocation,
            rank: int, params: SimParams, alpha: float | None = None) -> float:
    """u for one (point, segment, park, design); alphas must be pre-shifted.

    alpha overrides park.alpha so callers can pass the shifted value without
    mutating the park.
    """
    d = effective_distance(point, park, segment, params)
    if d is None:
        return 0.0
    a = park.alpha if alpha is None else alpha
    option = next((o for o in park.designs if o.rank == rank), None)
    if option is None:
        raise ValueError(f"park {park.id} has no design rank {rank}")
    attraction = a * (1.0 + option.theta.get(segment.id, 0.0))
    return attraction / (1.0 + d) ** segment.beta


def no_choice_utility(segment: Segment, alphas: list[float], params: SimParams) -> float:
    """u0 for a segment: mean shifted attractiveness decayed at d_large."""
    if not alphas:
        raise ValueError("no-choice utility needs at least one park")
    mean_alpha = sum(alphas) / len(alphas)
    return mean_alpha / (1.0 + params.d_large_km) ** segment.beta


def build_utility_table(nbhd: Neighborhood, segments: list[Segment],
                        params: SimParams) -> UtilityTable:
    """Assemble the dense utility table for one neighborhood."""
    points = nbhd.demand_points
    parks = nbhd.parks
    n_i, n_s, n_j = len(points), len(segments), len(parks)
    rank_counts = np.array([len(p.designs) for p in parks], dtype=int)
    n_r = int(rank_counts.max()) if n_j else 0

    shifted, offset = shift_alphas([p.alpha for p in parks], params.alpha_shift_eps)

    dist_km = np.zeros((n_i, n_j))
    for i, pt in enumerate(points):
        for j, park in enumerate(parks):
            dist_km[i, j] = _raw_distance_m(pt, park, params) / 1000.0

    blocked = np.zeros((n_i, n_s, n_j), dtype=bool)
    u = np.zeros((n_i, n_s, n_j, n_r))
    for s, seg in enumerate(segments):
        for j, park in enumerate(parks):
            cap_km = _cap_m(seg, park, params) / 1000.0
            over = dist_km[:, j] > cap_km
            blocked[:, s, j] = over
            decay = (1.0 + dist_km[:, j]) ** seg.beta
            for option in park.designs:
                attraction = shifted[j] * (1.0 + option.theta.get(seg.id, 0.0))
                col = attraction / decay
                col[over] = 0.0
                u[:, s, j, option.rank - 1] = col

    u0 = np.zeros((n_i, n_s))
    for s, seg in enumerate(segments):
        u0[:, s] = no_choice_utility(seg, shifted, params)

    weights = np.zeros((n_i, n_s))
    seg_index = {seg.id: s for s, seg in enumerate(segments)}
    for i, pt in enumerate(points):
        for sid, w in pt.weights.items():
            weights[i, seg_index[sid]] = w

    return UtilityTable(
        u=u, u0=u0, blocked=blocked, dist_km=dist_km, alpha_offset=offset,
        point_ids=[p.id for p in points],
        segment_ids=[s.id for s in segments],
        park_ids=[p.id for p in parks],
        rank_counts=rank_counts,
        weights=weights,
    )
