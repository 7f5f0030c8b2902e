"""k-means and demand-aggregation tests."""

from __future__ import annotations

import numpy as np
import pytest

from ugsopt.clustering import (
    Clustering,
    aggregate_demand,
    cluster_neighborhood,
    default_k,
    kmeans,
)
from ugsopt.generate import GenConfig, generate_synthetic


def two_blobs(rng: np.random.Generator, per_blob: int = 10):
    a = rng.normal([45.50, -73.60], 0.001, size=(per_blob, 2))
    b = rng.normal([45.58, -73.52], 0.001, size=(per_blob, 2))
    return np.vstack([a, b])


def best_two_partition_inertia(coords: np.ndarray) -> float:
    """Exhaustive oracle: best inertia over every 2-partition."""
    coords = coords - coords.mean(axis=0)  # inertia is translation invariant
    n = coords.shape[0]
    masks = np.array([[bool(m >> i & 1) for i in range(n)]
                      for m in range(1, 2 ** (n - 1))], dtype=float)
    sizes_a = masks.sum(axis=1)
    sizes_b = n - sizes_a
    sum_a = masks @ coords
    sum_b = coords.sum(axis=0) - sum_a
    s2_total = float((coords ** 2).sum())
    explained = ((sum_a ** 2).sum(axis=1) / sizes_a
                 + (sum_b ** 2).sum(axis=1) / sizes_b)
    return s2_total - float(explained.max())


def test_kmeans_two_blobs_matches_partition_oracle():
    rng = np.random.default_rng(0)
    coords = two_blobs(rng)
    result = kmeans([tuple(c) for c in coords], k=2, seed=7)
    labels = [result.assignment[str(i)] for i in range(len(coords))]
    assert len(set(labels[:10])) == 1
    assert len(set(labels[10:])) == 1
    assert labels[0] != labels[10]
    oracle = best_two_partition_inertia(coords)
    assert result.inertia == pytest.approx(oracle, rel=1e-9)


def test_kmeans_k_equals_n_and_k_one():
    rng = np.random.default_rng(1)
    coords = [tuple(c) for c in rng.uniform(size=(8, 2))]
    full = kmeans(coords, k=8, seed=3)
    assert full.inertia == pytest.approx(0.0, abs=1e-18)
    assert sorted(full.assignment.values()) == sorted(range(8))
    single = kmeans(coords, k=1, seed=3)
    mean = np.asarray(coords).mean(axis=0)
    assert single.centroids[0] == pytest.approx(tuple(mean))
    assert set(single.assignment.values()) == {0}


def test_kmeans_errors_and_determinism():
    coords = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]
    with pytest.raises(ValueError, match="k must lie"):
        kmeans(coords, k=0, seed=1)
    with pytest.raises(ValueError, match="k must lie"):
        kmeans(coords, k=4, seed=1)
    with pytest.raises(ValueError, match="max_iter"):
        kmeans(coords, k=1, seed=1, max_iter=0)
    a = kmeans(coords, k=2, seed=5)
    b = kmeans(coords, k=2, seed=5)
    assert a.assignment == b.assignment
    assert a.centroids == b.centroids
    assert a.inertia == b.inertia


def test_kmeans_invariants_on_seeded_instances():
    for seed in range(5):
        inst = generate_synthetic(GenConfig(seed=seed, n_neighborhoods=1,
                                            demand_points_per_nbhd=30,
                                            parks_per_nbhd=1, candidates_per_nbhd=0))
        nbhd = inst.neighborhoods[0]
        result = cluster_neighborhood(nbhd, k=6, seed=seed)
        history = result.inertia_history
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))
        coords = np.array([(p.lat, p.lon) for p in nbhd.demand_points])
        cents = np.array(result.centroids)
        labels = np.array([result.assignment[p.id] for p in nbhd.demand_points])
        for c in range(result.k):
            members = coords[labels == c]
            if len(members):
                assert cents[c] == pytest.approx(members.mean(axis=0), rel=1e-12)
        d2 = ((coords[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
        own = d2[np.arange(len(coords)), labels]
        assert np.all(own <= d2.min(axis=1) + 1e-12)


def test_default_k_heuristic():
    assert default_k(10) == 10
    assert default_k(100) == 25
    assert default_k(600) == 50


def test_aggregate_two_points_merge():
    inst = generate_synthetic(GenConfig(seed=2, n_neighborhoods=1,
                                        demand_points_per_nbhd=2, parks_per_nbhd=1,
                                        candidates_per_nbhd=0,
                                        segment_spec=[{"id": "s", "beta": 1.0}]))
    nbhd = inst.neighborhoods[0]
    nbhd.demand_points[0].weights = {"s": 0.3}
    nbhd.demand_points[1].weights = {"s": 0.7}
    clustering = cluster_neighborhood(nbhd, k=1, seed=0)
    merged = aggregate_demand(nbhd, clustering)
    assert len(merged.demand_points) == 1
    point = merged.demand_points[0]
    assert point.weights["s"] == pytest.approx(1.0, abs=1e-12)
    lat_mid = (nbhd.demand_points[0].lat + nbhd.demand_points[1].lat) / 2
    lon_mid = (nbhd.demand_points[0].lon + nbhd.demand_points[1].lon) / 2
    assert (point.lat, point.lon) == pytest.approx((lat_mid, lon_mid))
    assert merged.parks is nbhd.parks


def test_aggregate_identity_when_k_equals_n():
    inst = generate_synthetic(GenConfig(seed=4, n_neighborhoods=1,
                                        demand_points_per_nbhd=6, parks_per_nbhd=2,
                                        candidates_per_nbhd=1))
    nbhd = inst.neighborhoods[0]
    clustering = cluster_neighborhood(nbhd, k=len(nbhd.demand_points), seed=1)
    agg = aggregate_demand(nbhd, clustering)
    original = sorted(tuple(sorted(p.weights.items())) for p in nbhd.demand_points)
    merged = sorted(tuple(sorted(p.weights.items())) for p in agg.demand_points)
    for a, b in zip(original, merged):
        assert dict(a) == pytest.approx(dict(b), rel=1e-12)


def test_aggregate_conserves_weight_on_seeded_instances():
    for seed in range(10):
        inst = generate_synthetic(GenConfig(seed=seed, n_neighborhoods=1,
                                            demand_points_per_nbhd=25,
                                            parks_per_nbhd=2, candidates_per_nbhd=1))
        nbhd = inst.neighborhoods[0]
        clustering = cluster_neighborhood(nbhd, k=5, seed=seed)
        agg = aggregate_demand(nbhd, clustering)
        before = sum(w for p in nbhd.demand_points for w in p.weights.values())
        after = sum(w for p in agg.demand_points for w in p.weights.values())
        assert abs(before - after) <= 1e-12


def test_aggregate_coverage_mismatch():
    inst = generate_synthetic(GenConfig(seed=6, n_neighborhoods=1,
                                        demand_points_per_nbhd=4, parks_per_nbhd=1,
                                        candidates_per_nbhd=0))
    nbhd = inst.neighborhoods[0]
    bad = Clustering(k=1, assignment={"nope": 0}, centroids=[(45.0, -73.0)],
                     inertia=0.0, seed=0, inertia_history=[0.0])
    with pytest.raises(ValueError, match="cover"):
        aggregate_demand(nbhd, bad)
