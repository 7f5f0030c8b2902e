"""Seeded synthetic instance generation.

Produces city instances that pass validation out of the box: neighborhoods
on a coarse lat/lon grid, demand points and existing parks scattered within
walking range, candidate parks snapped to grid-cell centers (their zone),
and budgets derived from the per-capita rule with the maintenance margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import (
    CostParams,
    DemandPoint,
    DesignOption,
    Instance,
    Neighborhood,
    ParkLocation,
    Segment,
    SimParams,
    design_cost,
)

# Default population segments: two stricter-decay groups around one mobile one.
DEFAULT_SEGMENTS = (
    {"id": "children", "beta": 1.5, "child_like": True},
    {"id": "adults", "beta": 1.0, "child_like": False},
    {"id": "seniors", "beta": 1.5, "child_like": False},
)

EXISTING_THETA = (0.0, 0.5, 1.0)
CANDIDATE_THETA = (0.75, 1.5, 3.0)

_ZONE_CELL_DEG = 0.004
_CITY_LAT, _CITY_LON = 45.0, -73.0


@dataclass
class GenConfig:
    seed: int
    n_neighborhoods: int = 2
    demand_points_per_nbhd: int = 10
    parks_per_nbhd: int = 3
    candidates_per_nbhd: int = 2
    segment_spec: list[dict] = field(default_factory=lambda: [dict(s) for s in DEFAULT_SEGMENTS])

    def __post_init__(self) -> None:
        if self.n_neighborhoods < 1 or self.demand_points_per_nbhd < 1 \
                or self.parks_per_nbhd < 1:
            raise ValueError("neighborhood, demand point, and park counts must be >= 1")
        if self.candidates_per_nbhd < 0:
            raise ValueError("candidate count must be >= 0")
        if not self.segment_spec:
            raise ValueError("at least one segment is required")


def _zone_of(lat: float, lon: float) -> str:
    return f"z{math.floor(lat / _ZONE_CELL_DEG)}:{math.floor(lon / _ZONE_CELL_DEG)}"


def _designs(theta_by_rank: tuple[float, ...], segment_ids: list[str]) -> list[DesignOption]:
    return [DesignOption(rank=r + 1, theta={sid: theta_by_rank[r] for sid in segment_ids})
            for r in range(len(theta_by_rank))]


def generate_synthetic(cfg: GenConfig) -> Instance:
    """Deterministically generate a validated instance for cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    segments = [Segment(id=s["id"], beta=float(s["beta"]),
                        child_like=bool(s.get("child_like", False)))
                for s in cfg.segment_spec]
    seg_ids = [s.id for s in segments]
    sim = SimParams()
    costs = CostParams()

    neighborhoods = []
    grid = max(1, math.ceil(math.sqrt(cfg.n_neighborhoods)))
    for n in range(cfg.n_neighborhoods):
        row, col = divmod(n, grid)
        center_lat = _CITY_LAT + 0.05 * row
        center_lon = _CITY_LON + 0.05 * col

        points = []
        weights = rng.random((cfg.demand_points_per_nbhd, len(segments)))
        weights /= weights.sum()
        for i in range(cfg.demand_points_per_nbhd):
            lat = center_lat + rng.uniform(-0.004, 0.004)
            lon = center_lon + rng.uniform(-0.004, 0.004)
            points.append(DemandPoint(
                id=f"p{i}", lat=lat, lon=lon,
                weights={sid: float(weights[i, k]) for k, sid in enumerate(seg_ids)},
                zone=_zone_of(lat, lon),
            ))

        parks = []
        for j in range(cfg.parks_per_nbhd):
            lat = center_lat + rng.uniform(-0.004, 0.004)
            lon = center_lon + rng.uniform(-0.004, 0.004)
            parks.append(ParkLocation(
                id=f"g{j}", kind="existing", lat=lat, lon=lon,
                area_m2=float(rng.uniform(5_000, 80_000)),
                alpha=float(rng.normal(1.0, 0.6)),
                designs=_designs(EXISTING_THETA, seg_ids),
                zone=_zone_of(lat, lon),
            ))
        for j in range(cfg.candidates_per_nbhd):
            # Snap to a zone-cell center near the neighborhood middle.
            cell_lat = math.floor((center_lat + rng.uniform(-0.004, 0.004)) / _ZONE_CELL_DEG)
            cell_lon = math.floor((center_lon + rng.uniform(-0.004, 0.004)) / _ZONE_CELL_DEG)
            lat = (cell_lat + 0.5) * _ZONE_CELL_DEG
            lon = (cell_lon + 0.5) * _ZONE_CELL_DEG
            parks.append(ParkLocation(
                id=f"c{j}", kind="candidate", lat=lat, lon=lon,
                area_m2=costs.new_park_area_m2,
                alpha=float(rng.normal(1.0, 0.6)),
                designs=_designs(CANDIDATE_THETA, seg_ids),
                zone=f"z{cell_lat}:{cell_lon}",
            ))

        population = int(rng.integers(2_000, 120_000))
        floor = sum(design_cost(p, 1, costs) for p in parks if p.kind == "existing")
        baseline = max(costs.per_capita * costs.horizon_years * population,
                       costs.maintenance_margin * floor)
        neighborhoods.append(Neighborhood(
            id=f"n{n}",
            name=f"District {n}",
            population=population,
            demand_points=points,
            parks=parks,
            rho_factors={
                "density": float(rng.uniform(0.9, 1.1)),
                "social": float(rng.uniform(0.95, 1.05)),
                "material": float(rng.uniform(0.95, 1.05)),
                "smoke": float(rng.uniform(0.95, 1.05)),
            },
            baseline_budget=float(baseline),
            min_budget=float(floor),
        ))

    return Instance(
        city=f"synthetic-{cfg.seed}",
        b_total=float(sum(n.baseline_budget for n in neighborhoods)),
        delta=0.30,
        segments=segments,
        sim_params=sim,
        cost_params=costs,
        neighborhoods=neighborhoods,
        seed=cfg.seed,
    )
