"""Two-stage orchestration: allocate, cluster, solve, report, persist.

A run turns one validated instance plus one scenario configuration into
a CityRun document: the stage-1 allocation, a per-neighborhood solve
record (optional clustering provenance, plan, metrics), and the city
summary.  Documents are canonical JSON so equal runs serialize to equal
bytes; wall-clock fields are the only nondeterministic content and are
stripped by compare helpers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from .budget import Allocation, allocate_baseline, allocate_fair
from .clustering import aggregate_demand, cluster_neighborhood, default_k
from .instance import Instance, InvariantError, design_cost, serialize_instance, validate
from .metrics import city_report, metric_report, scale_no_choice
from .milp import BbOptions
from .planning import PlanSolution, solve_neighborhood
from .simutil import build_utility_table

_MODES = ("fair", "baseline")


@dataclass
class ScenarioConfig:
    """What-if knobs for one run; the instance itself is never mutated."""

    mode: str = "fair"
    delta: float | None = None
    delta_overrides: dict[str, float] | None = None
    rho_clamps: dict[str, tuple[float, float]] | None = None
    u0_multiplier: float = 1.0
    cluster_k: int | str | dict[str, int] | None = None
    gap_tol: float = 1e-6
    time_limit_s: float | None = 60.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.delta is not None and not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        for value in (self.delta_overrides or {}).values():
            if not 0.0 <= value <= 1.0:
                raise ValueError("delta overrides must lie in [0, 1]")
        if self.u0_multiplier <= 0:
            raise ValueError("u0 multiplier must be positive")
        if self.gap_tol < 0:
            raise ValueError("gap tolerance must be nonnegative")
        if self.time_limit_s is not None and self.time_limit_s <= 0:
            raise ValueError("time limit must be positive when set")
        self._check_cluster_k(self.cluster_k)

    @staticmethod
    def _check_cluster_k(value) -> None:
        if value is None or value == "auto":
            return
        if isinstance(value, bool):
            raise ValueError("cluster_k must be an int, 'auto', or a mapping")
        if isinstance(value, int):
            if value < 1:
                raise ValueError("cluster_k must be >= 1")
            return
        if isinstance(value, dict):
            for k in value.values():
                if isinstance(k, bool) or not isinstance(k, int) or k < 1:
                    raise ValueError("per-neighborhood cluster_k must be ints >= 1")
            return
        raise ValueError("cluster_k must be an int, 'auto', or a mapping")

    def as_document(self) -> dict:
        return {
            "mode": self.mode,
            "delta": self.delta,
            "delta_overrides": self.delta_overrides,
            "rho_clamps": {k: list(v) for k, v in self.rho_clamps.items()}
                          if self.rho_clamps else None,
            "u0_multiplier": self.u0_multiplier,
            "cluster_k": self.cluster_k,
            "gap_tol": self.gap_tol,
            "time_limit_s": self.time_limit_s,
            "seed": self.seed,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ValueError("config must be an object")
        known = {"mode", "delta", "delta_overrides", "rho_clamps", "u0_multiplier",
                 "cluster_k", "gap_tol", "time_limit_s", "seed"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown config key {unknown[0]!r}")
        kwargs: dict[str, Any] = {k: doc[k] for k in known if k in doc and doc[k] is not None}
        if "rho_clamps" in kwargs:
            kwargs["rho_clamps"] = {k: (float(v[0]), float(v[1]))
                                    for k, v in kwargs["rho_clamps"].items()}
        return cls(**kwargs)


@dataclass
class CityRun:
    """One completed (or failed) two-stage run."""

    run_id: str
    instance_id: str
    status: str  # "done" | "failed"
    created_at: str
    finished_at: str
    config: dict
    allocation: dict
    neighborhoods: list[dict] = field(default_factory=list)
    city: dict | None = None
    error: str | None = None


def instance_fingerprint(inst: Instance) -> str:
    digest = hashlib.sha256(serialize_instance(inst).encode()).hexdigest()
    return f"inst-{digest[:12]}"


def _canonical(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def default_run_id(inst: Instance, cfg: ScenarioConfig) -> str:
    payload = instance_fingerprint(inst) + _canonical(cfg.as_document())
    return f"run-{hashlib.sha256(payload.encode()).hexdigest()[:12]}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def plan_document(plan: PlanSolution, weights) -> dict:
    return {
        "chosen": dict(plan.chosen),
        "spend": plan.spend,
        "objective": plan.objective,
        "status": plan.status,
        "gap": plan.gap,
        "wall_time": plan.wall_time,
        "nodes": plan.nodes,
        "park_ids": list(plan.park_ids),
        "point_ids": list(plan.point_ids),
        "segment_ids": list(plan.segment_ids),
        "p": [[[float(v) for v in js] for js in row] for row in plan.p],
        "p0": [[float(v) for v in row] for row in plan.p0],
        "weights": [[float(v) for v in row] for row in weights],
    }


def _resolve_k(cfg: ScenarioConfig, nbhd_id: str, n_points: int) -> int | None:
    value = cfg.cluster_k
    if isinstance(value, dict):
        value = value.get(nbhd_id)
    if value is None:
        return None
    if value == "auto":
        return default_k(n_points)
    return min(int(value), n_points)


def run_two_stage(inst: Instance, cfg: ScenarioConfig,
                  run_id: str | None = None) -> CityRun:
    """Allocate the city budget, then solve every neighborhood.

    Stage-1 infeasibility raises immediately (nothing to record); a
    neighborhood solve failure marks the run failed but keeps the
    completed neighborhoods and the city summary over them.
    """
    report = validate(inst)
    if not report.ok:
        raise InvariantError(report.violations)
    created = _now()
    seed = cfg.seed if cfg.seed is not None else (inst.seed or 0)

    if cfg.mode == "baseline":
        allocation: Allocation = allocate_baseline(inst, clamps=cfg.rho_clamps)
    else:
        allocation = allocate_fair(inst, delta=cfg.delta,
                                   delta_overrides=cfg.delta_overrides,
                                   clamps=cfg.rho_clamps)

    opts = BbOptions(gap_tol=cfg.gap_tol, time_limit_s=cfg.time_limit_s)
    records: list[dict] = []
    plans: dict[str, PlanSolution] = {}
    reports: dict[str, Any] = {}
    failed = False
    for nbhd in inst.neighborhoods:
        budget = allocation.budgets[nbhd.id]
        record: dict[str, Any] = {"id": nbhd.id, "budget": budget}
        try:
            k = _resolve_k(cfg, nbhd.id, len(nbhd.demand_points))
            if k is not None:
                clustering = cluster_neighborhood(nbhd, k, seed)
                working = aggregate_demand(nbhd, clustering)
                record["clustering"] = {
                    "k": clustering.k,
                    "seed": clustering.seed,
                    "inertia": clustering.inertia,
                    "assignment": dict(clustering.assignment),
                    "centroids": [[lat, lon] for lat, lon in clustering.centroids],
                }
            else:
                working = nbhd
                record["clustering"] = None
            table = build_utility_table(working, inst.segments, inst.sim_params)
            if cfg.u0_multiplier != 1.0:
                table = scale_no_choice(table, cfg.u0_multiplier)
            plan = solve_neighborhood(working, budget, table, inst.cost_params, opts)
            metrics = metric_report(plan, table)
            record["status"] = plan.status
            record["plan"] = plan_document(plan, table.weights)
            record["metrics"] = metrics.as_document()
            plans[nbhd.id] = plan
            reports[nbhd.id] = metrics
        except Exception as exc:  # noqa: BLE001  (per-neighborhood isolation)
            record["status"] = "failed"
            record["error"] = str(exc)
            failed = True
        records.append(record)

    city = None
    if plans:
        populations = {n.id: n.population for n in inst.neighborhoods if n.id in plans}
        budgets = {nid: allocation.budgets[nid] for nid in plans}
        city_doc = city_report(plans, reports, populations, budgets)
        city = {"weighted_share_pct": city_doc.weighted_share_pct,
                "rows": city_doc.rows}

    return CityRun(
        run_id=run_id or default_run_id(inst, cfg),
        instance_id=instance_fingerprint(inst),
        status="failed" if failed else "done",
        created_at=created,
        finished_at=_now(),
        config=cfg.as_document(),
        allocation={
            "mode": allocation.mode,
            "budgets": dict(allocation.budgets),
            "objective": allocation.objective,
            "binding": dict(allocation.binding),
        },
        neighborhoods=records,
        city=city,
    )


def run_document(run: CityRun) -> dict:
    return {
        "run_id": run.run_id,
        "instance_id": run.instance_id,
        "status": run.status,
        "created_at": run.created_at,
        "finished_at": run.finished_at,
        "config": run.config,
        "allocation": run.allocation,
        "neighborhoods": run.neighborhoods,
        "city": run.city,
        "error": run.error,
    }


def serialize_run(run: CityRun) -> str:
    return _canonical(run_document(run))


_VOLATILE_KEYS = {"created_at", "finished_at", "wall_time", "runtime_s"}


def strip_volatile(doc):
    """Copy of a document with wall-clock fields removed (for comparisons)."""
    if isinstance(doc, dict):
        return {k: strip_volatile(v) for k, v in doc.items()
                if k not in _VOLATILE_KEYS}
    if isinstance(doc, list):
        return [strip_volatile(v) for v in doc]
    return doc


def export_geojson(run: CityRun | dict, inst: Instance) -> dict[str, dict]:
    """One GeoJSON FeatureCollection per neighborhood of a finished run.

    Demand points come from the instance (fine granularity) and carry
    their cluster assignment when the run aggregated; parks carry the
    chosen design, its spend, and the weight-aggregated visit share.
    """
    doc = run_document(run) if isinstance(run, CityRun) else run
    if doc["status"] != "done":
        raise ValueError(f"run {doc['run_id']} is not done: {doc['status']}")
    by_id = {n.id: n for n in inst.neighborhoods}
    collections: dict[str, dict] = {}
    for record in doc["neighborhoods"]:
        nbhd = by_id.get(record["id"])
        if nbhd is None:
            raise ValueError(f"run references unknown neighborhood {record['id']!r}")
        plan = record["plan"]
        assignment = (record.get("clustering") or {}).get("assignment", {})
        features = []
        for point in nbhd.demand_points:
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [point.lon, point.lat]},
                "properties": {
                    "feature": "demand",
                    "id": point.id,
                    "weights": dict(point.weights),
                    "cluster": assignment.get(point.id),
                },
            })
        weights = plan["weights"]
        total_w = sum(sum(row) for row in weights)
        for j, park in enumerate(nbhd.parks):
            rank = plan["chosen"].get(park.id)
            share = sum(weights[i][s] * plan["p"][i][s][j]
                        for i in range(len(plan["point_ids"]))
                        for s in range(len(plan["segment_ids"]))) / total_w
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [park.lon, park.lat]},
                "properties": {
                    "feature": "park",
                    "id": park.id,
                    "kind": park.kind,
                    "design": rank,
                    "spend": design_cost(park, rank, inst.cost_params) if rank else 0.0,
                    "visit_share": share,
                },
            })
        collections[record["id"]] = {"type": "FeatureCollection",
                                     "features": features}
    return collections
