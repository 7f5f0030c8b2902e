"""Problem instances: domain types, validation, and canonical JSON form.

An instance is one JSON document (version 1).  Parsing is strict: unknown
keys and malformed fields are rejected with the offending path, and every
accepted document round-trips byte-identically through serialize/parse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

FORMAT_VERSION = 1

# Factor names for the stage-one weight product, in canonical order.
RHO_FACTOR_ORDER = ("density", "social", "material", "smoke")


class InstanceError(ValueError):
    """Base class for instance ingestion failures."""


class SchemaError(InstanceError):
    """Structurally malformed document; carries the offending path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantError(InstanceError):
    """Structurally valid document that breaks a named invariant."""

    def __init__(self, violations: list["Violation"]):
        lines = "; ".join(f"{v.path}: {v.message}" for v in violations)
        super().__init__(lines)
        self.violations = violations


@dataclass
class Violation:
    path: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path: str, message: str) -> None:
        self.violations.append(Violation(path, message))


@dataclass
class Segment:
    id: str
    beta: float
    child_like: bool = False


@dataclass
class DemandPoint:
    id: str
    lat: float
    lon: float
    weights: dict[str, float]
    zone: str | None = None


@dataclass
class DesignOption:
    rank: int
    theta: dict[str, float]
    cost_override: float | None = None


@dataclass
class ParkLocation:
    id: str
    kind: str  # "existing" | "candidate"
    lat: float
    lon: float
    area_m2: float
    alpha: float
    designs: list[DesignOption]
    zone: str | None = None


@dataclass
class Neighborhood:
    id: str
    name: str
    population: int
    demand_points: list[DemandPoint]
    parks: list[ParkLocation]
    rho_factors: dict[str, float]
    baseline_budget: float
    min_budget: float


@dataclass
class SimParams:
    d_large_km: float = 1.0
    distance_adjust: float = 1.3
    cap_child_m: float = 500.0
    cap_small_m: float = 500.0
    cap_large_m: float = 800.0
    large_park_m2: float = 50_000.0
    candidate_same_zone_m: float = 500.0
    candidate_other_zone_m: float = 1000.0
    alpha_shift_eps: float = 0.01


@dataclass
class CostParams:
    maintenance_per_m2: float = 3.10
    new_park_per_m2: float = 15.0
    design_step: float = 0.8
    new_park_area_m2: float = 50_000.0
    per_capita: float = 42.0
    horizon_years: int = 5
    maintenance_margin: float = 1.05


@dataclass
class Instance:
    city: str
    b_total: float
    delta: float
    segments: list[Segment]
    sim_params: SimParams
    cost_params: CostParams
    neighborhoods: list[Neighborhood]
    seed: int | None = None


def design_cost(park: ParkLocation, rank: int, costs: CostParams) -> float:
    """Dollar cost of running park at the given design rank.

    Existing parks pay maintenance, candidates pay construction; each rank
    above 1 adds design_step of the base cost.  A cost_override on the
    design wins outright.
    """
    option = next((d for d in park.designs if d.rank == rank), None)
    if option is None:
        raise ValueError(f"park {park.id} has no design rank {rank}")
    if option.cost_override is not None:
        return option.cost_override
    base = costs.maintenance_per_m2 if park.kind == "existing" else costs.new_park_per_m2
    return base * park.area_m2 * (1.0 + costs.design_step * (rank - 1))


# --- strict schema walking -------------------------------------------------

def _check_obj(node: object, path: str, required: dict, optional: dict) -> dict:
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object")
    unknown = set(node) - set(required) - set(optional)
    if unknown:
        raise SchemaError(f"{path}.{sorted(unknown)[0]}", "unknown key")
    missing = set(required) - set(node)
    if missing:
        raise SchemaError(f"{path}.{sorted(missing)[0]}", "missing required key")
    return node


def _number(node: object, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise SchemaError(path, "expected a number")
    if not math.isfinite(node):
        raise SchemaError(path, "number must be finite")
    return float(node)


def _integer(node: object, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise SchemaError(path, "expected an integer")
    return node


def _string(node: object, path: str) -> str:
    if not isinstance(node, str):
        raise SchemaError(path, "expected a string")
    return node


def _boolean(node: object, path: str) -> bool:
    if not isinstance(node, bool):
        raise SchemaError(path, "expected a boolean")
    return node


def _array(node: object, path: str) -> list:
    if not isinstance(node, list):
        raise SchemaError(path, "expected an array")
    return node


def _number_map(node: object, path: str) -> dict[str, float]:
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object of numbers")
    return {k: _number(v, f"{path}.{k}") for k, v in node.items()}


def _parse_segment(node: object, path: str) -> Segment:
    obj = _check_obj(node, path, {"id": str, "beta": float}, {"child_like": bool})
    return Segment(
        id=_string(obj["id"], f"{path}.id"),
        beta=_number(obj["beta"], f"{path}.beta"),
        child_like=_boolean(obj.get("child_like", False), f"{path}.child_like"),
    )


def _parse_demand_point(node: object, path: str) -> DemandPoint:
    obj = _check_obj(node, path,
                     {"id": str, "lat": float, "lon": float, "weights": dict},
                     {"zone": str})
    zone = obj.get("zone")
    return DemandPoint(
        id=_string(obj["id"], f"{path}.id"),
        lat=_number(obj["lat"], f"{path}.lat"),
        lon=_number(obj["lon"], f"{path}.lon"),
        weights=_number_map(obj["weights"], f"{path}.weights"),
        zone=None if zone is None else _string(zone, f"{path}.zone"),
    )


def _parse_design(node: object, path: str) -> DesignOption:
    obj = _check_obj(node, path, {"rank": int, "theta": dict}, {"cost_override": float})
    override = obj.get("cost_override")
    return DesignOption(
        rank=_integer(obj["rank"], f"{path}.rank"),
        theta=_number_map(obj["theta"], f"{path}.theta"),
        cost_override=None if override is None else _number(override, f"{path}.cost_override"),
    )


def _parse_park(node: object, path: str) -> ParkLocation:
    obj = _check_obj(node, path,
                     {"id": str, "kind": str, "lat": float, "lon": float,
                      "area_m2": float, "alpha": float, "designs": list},
                     {"zone": str})
    kind = _string(obj["kind"], f"{path}.kind")
    if kind not in ("existing", "candidate"):
        raise SchemaError(f"{path}.kind", "must be 'existing' or 'candidate'")
    zone = obj.get("zone")
    return ParkLocation(
        id=_string(obj["id"], f"{path}.id"),
        kind=kind,
        lat=_number(obj["lat"], f"{path}.lat"),
        lon=_number(obj["lon"], f"{path}.lon"),
        area_m2=_number(obj["area_m2"], f"{path}.area_m2"),
        alpha=_number(obj["alpha"], f"{path}.alpha"),
        designs=[_parse_design(d, f"{path}.designs[{k}]")
                 for k, d in enumerate(_array(obj["designs"], f"{path}.designs"))],
        zone=None if zone is None else _string(zone, f"{path}.zone"),
    )


def _parse_neighborhood(node: object, path: str) -> Neighborhood:
    obj = _check_obj(node, path,
                     {"id": str, "name": str, "population": int,
                      "demand_points": list, "parks": list, "rho_factors": dict,
                      "baseline_budget": float, "min_budget": float}, {})
    return Neighborhood(
        id=_string(obj["id"], f"{path}.id"),
        name=_string(obj["name"], f"{path}.name"),
        population=_integer(obj["population"], f"{path}.population"),
        demand_points=[_parse_demand_point(d, f"{path}.demand_points[{k}]")
                       for k, d in enumerate(_array(obj["demand_points"], f"{path}.demand_points"))],
        parks=[_parse_park(p, f"{path}.parks[{k}]")
               for k, p in enumerate(_array(obj["parks"], f"{path}.parks"))],
        rho_factors=_number_map(obj["rho_factors"], f"{path}.rho_factors"),
        baseline_budget=_number(obj["baseline_budget"], f"{path}.baseline_budget"),
        min_budget=_number(obj["min_budget"], f"{path}.min_budget"),
    )


_SIM_FIELDS = ("d_large_km", "distance_adjust", "cap_child_m", "cap_small_m",
               "cap_large_m", "large_park_m2", "candidate_same_zone_m",
               "candidate_other_zone_m", "alpha_shift_eps")
_COST_FIELDS = ("maintenance_per_m2", "new_park_per_m2", "design_step",
                "new_park_area_m2", "per_capita", "horizon_years",
                "maintenance_margin")


def _parse_sim_params(node: object, path: str) -> SimParams:
    obj = _check_obj(node, path, {k: float for k in _SIM_FIELDS}, {})
    return SimParams(**{k: _number(obj[k], f"{path}.{k}") for k in _SIM_FIELDS})


def _parse_cost_params(node: object, path: str) -> CostParams:
    obj = _check_obj(node, path, {k: float for k in _COST_FIELDS}, {})
    kwargs = {k: _number(obj[k], f"{path}.{k}") for k in _COST_FIELDS}
    kwargs["horizon_years"] = _integer(obj["horizon_years"], f"{path}.horizon_years")
    return CostParams(**kwargs)


def parse_instance(text: str | bytes) -> Instance:
    """Parse and fully validate one instance document.

    Raises SchemaError for malformed structure (with the field path) and
    InvariantError when the parsed values break a model invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from None
    obj = _check_obj(doc, "$",
                     {"version": int, "city": str, "B_T": float, "delta": float,
                      "segments": list, "sim_params": dict, "cost_params": dict,
                      "neighborhoods": list},
                     {"seed": int})
    version = _integer(obj["version"], "$.version")
    if version != FORMAT_VERSION:
        raise SchemaError("$.version", f"unsupported version {version}")
    seed = obj.get("seed")
    inst = Instance(
        city=_string(obj["city"], "$.city"),
        b_total=_number(obj["B_T"], "$.B_T"),
        delta=_number(obj["delta"], "$.delta"),
        segments=[_parse_segment(s, f"$.segments[{k}]")
                  for k, s in enumerate(_array(obj["segments"], "$.segments"))],
        sim_params=_parse_sim_params(obj["sim_params"], "$.sim_params"),
        cost_params=_parse_cost_params(obj["cost_params"], "$.cost_params"),
        neighborhoods=[_parse_neighborhood(n, f"$.neighborhoods[{k}]")
                       for k, n in enumerate(_array(obj["neighborhoods"], "$.neighborhoods"))],
        seed=None if seed is None else _integer(seed, "$.seed"),
    )
    report = validate(inst)
    if not report.ok:
        raise InvariantError(report.violations)
    return inst


def validate(inst: Instance) -> ValidationReport:
    """Check every model invariant; returns a report instead of raising."""
    rep = ValidationReport()
    seg_ids = [s.id for s in inst.segments]
    if not inst.segments:
        rep.add("$.segments", "at least one segment is required")
    if len(set(seg_ids)) != len(seg_ids):
        rep.add("$.segments", "segment ids must be unique")
    for k, s in enumerate(inst.segments):
        if s.beta <= 0:
            rep.add(f"$.segments[{k}].beta", "beta must be > 0")
    known = set(seg_ids)

    if not 0.0 <= inst.delta <= 1.0:
        rep.add("$.delta", "delta must lie in [0, 1]")

    sp = inst.sim_params
    for name in _SIM_FIELDS:
        if getattr(sp, name) <= 0:
            rep.add(f"$.sim_params.{name}", "must be positive")
    if sp.cap_small_m > sp.cap_large_m:
        rep.add("$.sim_params.cap_small_m", "small-park cap cannot exceed large-park cap")

    cp = inst.cost_params
    for name in _COST_FIELDS:
        if getattr(cp, name) <= 0:
            rep.add(f"$.cost_params.{name}", "must be positive")

    nbhd_ids = [n.id for n in inst.neighborhoods]
    if len(set(nbhd_ids)) != len(nbhd_ids):
        rep.add("$.neighborhoods", "neighborhood ids must be unique")
    if not inst.neighborhoods:
        rep.add("$.neighborhoods", "at least one neighborhood is required")

    for ni, nbhd in enumerate(inst.neighborhoods):
        base = f"$.neighborhoods[{ni}]"
        if nbhd.population <= 0:
            rep.add(f"{base}.population", "population must be positive")
        if not nbhd.parks:
            rep.add(f"{base}.parks", "at least one park location is required "
                                     "(the no-choice utility needs a park average)")

        point_ids = [p.id for p in nbhd.demand_points]
        if len(set(point_ids)) != len(point_ids):
            rep.add(f"{base}.demand_points", "demand point ids must be unique")
        if not nbhd.demand_points:
            rep.add(f"{base}.demand_points", "at least one demand point is required")
        total_w = 0.0
        for pi, pt in enumerate(nbhd.demand_points):
            for sid, w in pt.weights.items():
                if sid not in known:
                    rep.add(f"{base}.demand_points[{pi}].weights.{sid}",
                            "weight references an unknown segment")
                if w < 0:
                    rep.add(f"{base}.demand_points[{pi}].weights.{sid}",
                            "weights must be non-negative")
                total_w += w
        if nbhd.demand_points and abs(total_w - 1.0) > 1e-9:
            rep.add(f"{base}.demand_points", "weights must sum to 1 over all "
                                             f"(point, segment) pairs (got {total_w!r})")

        park_ids = [p.id for p in nbhd.parks]
        if len(set(park_ids)) != len(park_ids):
            rep.add(f"{base}.parks", "park ids must be unique")
        floor = 0.0
        for pj, park in enumerate(nbhd.parks):
            ppath = f"{base}.parks[{pj}]"
            if park.area_m2 <= 0:
                rep.add(f"{ppath}.area_m2", "area must be positive")
            if not park.designs:
                rep.add(f"{ppath}.designs", "at least one design option is required")
                continue
            ranks = sorted(d.rank for d in park.designs)
            if ranks != list(range(1, len(ranks) + 1)):
                rep.add(f"{ppath}.designs", "ranks must form the sequence 1..R")
                continue
            ordered = sorted(park.designs, key=lambda d: d.rank)
            for d in ordered:
                for sid, th in d.theta.items():
                    if sid not in known:
                        rep.add(f"{ppath}.designs[{d.rank - 1}].theta.{sid}",
                                "theta references an unknown segment")
                    if th < 0:
                        rep.add(f"{ppath}.designs[{d.rank - 1}].theta.{sid}",
                                "attraction increase must be non-negative")
                if d.cost_override is not None and d.cost_override <= 0:
                    rep.add(f"{ppath}.designs[{d.rank - 1}].cost_override",
                            "cost override must be positive")
            for sid in known:
                prev = -math.inf
                for d in ordered:
                    th = d.theta.get(sid, 0.0)
                    if th < prev - 1e-12:
                        rep.add(f"{ppath}.designs", f"theta for segment {sid} "
                                                    "must be non-decreasing in rank")
                        break
                    prev = th
            if park.kind == "existing":
                first = ordered[0]
                if any(first.theta.get(sid, 0.0) != 0.0 for sid in known):
                    rep.add(f"{ppath}.designs[0]",
                            "baseline design must have zero attraction increase")
                if park.area_m2 > 0 and ranks == list(range(1, len(ranks) + 1)):
                    floor += design_cost(park, 1, cp)

        tol = 1e-6 * max(1.0, abs(floor))
        if abs(nbhd.min_budget - floor) > tol:
            rep.add(f"{base}.min_budget",
                    f"must equal the sum of rank-1 maintenance costs of existing parks "
                    f"(expected {floor!r}, got {nbhd.min_budget!r})")
        if nbhd.baseline_budget < nbhd.min_budget - 1e-9:
            rep.add(f"{base}.baseline_budget",
                    "baseline budget is below the maintenance floor; apply the "
                    "margin adjustment when deriving baselines")

        for name, value in nbhd.rho_factors.items():
            if name not in RHO_FACTOR_ORDER:
                rep.add(f"{base}.rho_factors.{name}", "unknown weight factor")
            elif value <= 0:
                rep.add(f"{base}.rho_factors.{name}", "factors must be positive")

    total_baseline = sum(n.baseline_budget for n in inst.neighborhoods)
    if abs(inst.b_total - total_baseline) > max(1e-6, 1e-9 * abs(inst.b_total)):
        rep.add("$.B_T", f"total budget must equal the sum of baseline budgets "
                         f"(expected {total_baseline!r}, got {inst.b_total!r})")
    return rep


# --- canonical serialization ------------------------------------------------

def _design_doc(d: DesignOption) -> dict:
    doc: dict = {"rank": d.rank, "theta": dict(sorted(d.theta.items()))}
    if d.cost_override is not None:
        doc["cost_override"] = d.cost_override
    return doc


def _park_doc(p: ParkLocation) -> dict:
    doc: dict = {
        "id": p.id, "kind": p.kind, "lat": p.lat, "lon": p.lon,
        "area_m2": p.area_m2, "alpha": p.alpha,
        "designs": [_design_doc(d) for d in sorted(p.designs, key=lambda d: d.rank)],
    }
    if p.zone is not None:
        doc["zone"] = p.zone
    return doc


def _point_doc(p: DemandPoint) -> dict:
    doc: dict = {"id": p.id, "lat": p.lat, "lon": p.lon,
                 "weights": dict(sorted(p.weights.items()))}
    if p.zone is not None:
        doc["zone"] = p.zone
    return doc


def instance_document(inst: Instance) -> dict:
    """The canonical plain-dict form of an instance."""
    doc: dict = {
        "version": FORMAT_VERSION,
        "city": inst.city,
        "B_T": inst.b_total,
        "delta": inst.delta,
        "segments": [
            {"id": s.id, "beta": s.beta, "child_like": s.child_like}
            for s in inst.segments
        ],
        "sim_params": {k: getattr(inst.sim_params, k) for k in _SIM_FIELDS},
        "cost_params": {k: getattr(inst.cost_params, k) for k in _COST_FIELDS},
        "neighborhoods": [
            {
                "id": n.id, "name": n.name, "population": n.population,
                "demand_points": [_point_doc(p) for p in n.demand_points],
                "parks": [_park_doc(p) for p in n.parks],
                "rho_factors": dict(sorted(n.rho_factors.items())),
                "baseline_budget": n.baseline_budget,
                "min_budget": n.min_budget,
            }
            for n in inst.neighborhoods
        ],
    }
    if inst.seed is not None:
        doc["seed"] = inst.seed
    return doc


def serialize_instance(inst: Instance) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(instance_document(inst), indent=2, sort_keys=True) + "\n"
