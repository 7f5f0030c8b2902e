"""Instance parsing, validation, serialization, and generation."""

from __future__ import annotations

import dataclasses
import json

import pytest

from ugsopt.generate import GenConfig, generate_synthetic
from ugsopt.instance import (
    InvariantError,
    SchemaError,
    design_cost,
    instance_document,
    parse_instance,
    serialize_instance,
    validate,
)


def minimal_document() -> dict:
    area = 10_000.0
    floor = 3.10 * area
    baseline = max(42.0 * 5 * 1_000, 1.05 * floor)
    return {
        "version": 1,
        "city": "single",
        "B_T": baseline,
        "delta": 0.3,
        "segments": [{"id": "all", "beta": 1.0, "child_like": False}],
        "sim_params": {
            "d_large_km": 1.0, "distance_adjust": 1.3, "cap_child_m": 500.0,
            "cap_small_m": 500.0, "cap_large_m": 800.0, "large_park_m2": 50_000.0,
            "candidate_same_zone_m": 500.0, "candidate_other_zone_m": 1000.0,
            "alpha_shift_eps": 0.01,
        },
        "cost_params": {
            "maintenance_per_m2": 3.10, "new_park_per_m2": 15.0, "design_step": 0.8,
            "new_park_area_m2": 50_000.0, "per_capita": 42.0, "horizon_years": 5,
            "maintenance_margin": 1.05,
        },
        "neighborhoods": [{
            "id": "n0", "name": "Only", "population": 1_000,
            "demand_points": [{
                "id": "p0", "lat": 45.0, "lon": -73.0, "weights": {"all": 1.0},
            }],
            "parks": [{
                "id": "g0", "kind": "existing", "lat": 45.001, "lon": -73.0,
                "area_m2": area, "alpha": 1.0,
                "designs": [{"rank": 1, "theta": {"all": 0.0}}],
            }],
            "rho_factors": {"density": 1.0, "social": 1.0, "material": 1.0, "smoke": 1.0},
            "baseline_budget": baseline, "min_budget": floor,
        }],
    }


def test_minimal_document_parses():
    inst = parse_instance(json.dumps(minimal_document()))
    assert inst.city == "single"
    assert inst.b_total == inst.neighborhoods[0].baseline_budget
    assert validate(inst).ok


def test_weights_must_sum_to_one():
    doc = minimal_document()
    doc["neighborhoods"][0]["demand_points"][0]["weights"]["all"] = 0.9
    with pytest.raises(InvariantError, match="weights must sum to 1"):
        parse_instance(json.dumps(doc))


def test_unknown_key_rejected_with_path():
    doc = minimal_document()
    doc["neighborhoods"][0]["parks"][0]["surprise"] = 1
    with pytest.raises(SchemaError, match=r"parks\[0\].surprise"):
        parse_instance(json.dumps(doc))


def test_missing_key_and_bad_types_rejected():
    doc = minimal_document()
    del doc["delta"]
    with pytest.raises(SchemaError, match=r"\$\.delta"):
        parse_instance(json.dumps(doc))
    doc = minimal_document()
    doc["neighborhoods"][0]["population"] = "many"
    with pytest.raises(SchemaError, match="expected an integer"):
        parse_instance(json.dumps(doc))
    doc = minimal_document()
    doc["version"] = 2
    with pytest.raises(SchemaError, match="unsupported version"):
        parse_instance(json.dumps(doc))


def test_existing_park_baseline_design_must_be_neutral():
    doc = minimal_document()
    doc["neighborhoods"][0]["parks"][0]["designs"][0]["theta"]["all"] = 0.2
    with pytest.raises(InvariantError, match="zero attraction increase"):
        parse_instance(json.dumps(doc))


def test_baseline_budget_below_maintenance_floor():
    doc = minimal_document()
    nb = doc["neighborhoods"][0]
    nb["baseline_budget"] = nb["min_budget"] - 1.0
    doc["B_T"] = nb["baseline_budget"]
    with pytest.raises(InvariantError, match="maintenance floor"):
        parse_instance(json.dumps(doc))


def test_min_budget_must_match_rank1_costs():
    doc = minimal_document()
    doc["neighborhoods"][0]["min_budget"] = 1.0
    with pytest.raises(InvariantError, match="rank-1 maintenance costs"):
        parse_instance(json.dumps(doc))


def test_total_budget_must_match_baselines():
    doc = minimal_document()
    doc["B_T"] = doc["B_T"] + 10.0
    with pytest.raises(InvariantError, match="sum of baseline budgets"):
        parse_instance(json.dumps(doc))


def test_theta_must_be_monotone_in_rank():
    doc = minimal_document()
    doc["neighborhoods"][0]["parks"][0]["designs"] = [
        {"rank": 1, "theta": {"all": 0.0}},
        {"rank": 2, "theta": {"all": 0.5}},
        {"rank": 3, "theta": {"all": 0.25}},
    ]
    with pytest.raises(InvariantError, match="non-decreasing in rank"):
        parse_instance(json.dumps(doc))


def test_design_cost_formula():
    inst = parse_instance(json.dumps(minimal_document()))
    park = inst.neighborhoods[0].parks[0]
    assert design_cost(park, 1, inst.cost_params) == pytest.approx(31_000.0)
    park.designs.append(dataclasses.replace(park.designs[0], rank=2))
    assert design_cost(park, 2, inst.cost_params) == pytest.approx(31_000.0 * 1.8)
    park.designs[1].cost_override = 123.0
    assert design_cost(park, 2, inst.cost_params) == 123.0
    with pytest.raises(ValueError, match="no design rank"):
        design_cost(park, 9, inst.cost_params)


def test_generation_is_deterministic():
    cfg = GenConfig(seed=1, n_neighborhoods=2, demand_points_per_nbhd=10,
                    parks_per_nbhd=3, candidates_per_nbhd=2)
    a = generate_synthetic(cfg)
    b = generate_synthetic(GenConfig(seed=1, n_neighborhoods=2, demand_points_per_nbhd=10,
                                     parks_per_nbhd=3, candidates_per_nbhd=2))
    assert serialize_instance(a) == serialize_instance(b)
    c = generate_synthetic(dataclasses.replace(cfg, seed=2))
    assert serialize_instance(a) != serialize_instance(c)


def test_generated_candidate_rank1_cost():
    inst = generate_synthetic(GenConfig(seed=3))
    candidates = [p for n in inst.neighborhoods for p in n.parks if p.kind == "candidate"]
    assert candidates
    for park in candidates:
        assert design_cost(park, 1, inst.cost_params) == pytest.approx(750_000.0)


def test_generated_instances_validate_and_round_trip():
    for seed in range(100):
        inst = generate_synthetic(GenConfig(seed=seed, n_neighborhoods=1 + seed % 3,
                                            demand_points_per_nbhd=4 + seed % 5,
                                            parks_per_nbhd=1 + seed % 3,
                                            candidates_per_nbhd=seed % 3))
        assert validate(inst).ok
        text = serialize_instance(inst)
        again = parse_instance(text)
        assert serialize_instance(again) == text
        assert instance_document(again) == instance_document(inst)
        total = sum(n.baseline_budget for n in inst.neighborhoods)
        assert abs(inst.b_total - total) <= 1e-6


def test_round_trip_is_byte_identical_for_reparsed_documents():
    inst = generate_synthetic(GenConfig(seed=11))
    text = serialize_instance(inst)
    assert json.loads(text) == instance_document(inst)
    assert serialize_instance(parse_instance(text)) == text
