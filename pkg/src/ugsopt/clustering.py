"""Demand aggregation: k-means over demand points and cross evaluation.

Clustering works in raw lat/lon degrees, which is fine at city scale.
Aggregated neighborhoods replace their demand points with cluster
centroids carrying the summed segment weights; parks are untouched, so
plans remain comparable across granularities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import CostParams, DemandPoint, Neighborhood, Segment, SimParams
from .simutil import build_utility_table


@dataclass
class Clustering:
    k: int
    assignment: dict[str, int]
    centroids: list[tuple[float, float]]
    inertia: float
    seed: int
    inertia_history: list[float]


def default_k(n_points: int) -> int:
    """Cluster-count heuristic used when the caller does not pick one."""
    return min(n_points, max(25, -(-n_points // 12)))


def _kmeans_pp(coords: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = coords.shape[0]
    centroids = np.empty((k, 2))
    first = int(rng.integers(n))
    centroids[0] = coords[first]
    d2 = ((coords - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            # All remaining mass sits on chosen centroids; reuse points in order.
            centroids[c] = coords[c % n]
            continue
        pick = int(rng.choice(n, p=d2 / total))
        centroids[c] = coords[pick]
        d2 = np.minimum(d2, ((coords - centroids[c]) ** 2).sum(axis=1))
    return centroids


def _assign(coords: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = ((coords[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)  # argmin takes the lowest index on ties


def kmeans(points: list[tuple[float, float]], k: int, seed: int,
           max_iter: int = 300, ids: list[str] | None = None) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding; deterministic per seed."""
    n = len(points)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if ids is None:
        ids = [str(i) for i in range(n)]
    coords = np.asarray(points, dtype=float)

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(coords, k, rng)
    labels = None
    history: list[float] = []
    for _ in range(max_iter):
        new_labels = _assign(coords, centroids)
        # Repair empty clusters by reseeding them at the farthest point.
        for c in range(k):
            if not np.any(new_labels == c):
                d2 = ((coords - centroids[new_labels]) ** 2).sum(axis=1)
                far = int(d2.argmax())
                centroids[c] = coords[far]
                new_labels = _assign(coords, centroids)
        inertia = float(((coords - centroids[new_labels]) ** 2).sum())
        if history:
            assert inertia <= history[-1] + 1e-12, "inertia increased"
        history.append(inertia)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = coords[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    assignment = {pid: int(c) for pid, c in zip(ids, labels)}
    return Clustering(k=k, assignment=assignment,
                      centroids=[(float(a), float(b)) for a, b in centroids],
                      inertia=history[-1], seed=seed, inertia_history=history)


def cluster_neighborhood(nbhd: Neighborhood, k: int, seed: int,
                         max_iter: int = 300) -> Clustering:
    """kmeans over a neighborhood's demand points, keyed by point id."""
    return kmeans([(p.lat, p.lon) for p in nbhd.demand_points], k, seed,
                  max_iter=max_iter, ids=[p.id for p in nbhd.demand_points])


def _majority_zone(members: list[DemandPoint]) -> str | None:
    votes: dict[str, float] = {}
    for pt in members:
        if pt.zone is not None:
            votes[pt.zone] = votes.get(pt.zone, 0.0) + sum(pt.weights.values())
    if not votes:
        return None
    top = max(votes.values())
    return sorted(z for z, v in votes.items() if v >= top - 1e-15)[0]


def aggregate_demand(nbhd: Neighborhood, clustering: Clustering) -> Neighborhood:
    """Replace demand points by cluster centroids with summed weights."""
    point_ids = {p.id for p in nbhd.demand_points}
    if set(clustering.assignment) != point_ids:
        raise ValueError("clustering does not cover exactly this neighborhood's demand points")

    by_cluster: dict[int, list[DemandPoint]] = {}
    for pt in nbhd.demand_points:
        by_cluster.setdefault(clustering.assignment[pt.id], []).append(pt)

    new_points = []
    for c in sorted(by_cluster):
        members = by_cluster[c]
        weights: dict[str, float] = {}
        for pt in members:
            for sid, w in pt.weights.items():
                weights[sid] = weights.get(sid, 0.0) + w
        lat, lon = clustering.centroids[c]
        new_points.append(DemandPoint(
            id=f"cluster{c}", lat=lat, lon=lon, weights=weights,
            zone=_majority_zone(members),
        ))
    return Neighborhood(
        id=nbhd.id, name=nbhd.name, population=nbhd.population,
        demand_points=new_points, parks=nbhd.parks,
        rho_factors=nbhd.rho_factors,
        baseline_budget=nbhd.baseline_budget, min_budget=nbhd.min_budget,
    )


def evaluate_cross(x: dict[str, int], fine_nbhd: Neighborhood,
                   segments: list[Segment], sim_params: SimParams,
                   cost_params: CostParams) -> float:
    """Objective of a fixed design assignment on another granularity."""
    from .planning import evaluate_plan

    table = build_utility_table(fine_nbhd, segments, sim_params)
    plan = evaluate_plan(fine_nbhd, x, table, cost_params)
    return plan.objective
