"""Stage-one allocation tests: greedy vs LP oracle parity."""

from __future__ import annotations

import pytest

from ugsopt.budget import (
    InfeasibleAllocationError,
    allocate_baseline,
    allocate_fair,
    allocate_lp_oracle,
    compose_weights,
    derive_baseline_budget,
)
from ugsopt.generate import GenConfig, generate_synthetic
from ugsopt.instance import CostParams, Instance, Neighborhood, Segment, SimParams

WIDE = {"density": (0.1, 3.0)}  # clamp override to pin exact rho values


def alloc_instance(baselines, mins, rho_density, delta=0.3, b_total=None) -> Instance:
    """Instance with only the stage-one fields populated."""
    nbhds = []
    for k, (bb, mb, rho) in enumerate(zip(baselines, mins, rho_density)):
        nbhds.append(Neighborhood(
            id=f"n{k}", name=f"N{k}", population=1000,
            demand_points=[], parks=[],
            rho_factors={"density": rho, "social": 1.0, "material": 1.0, "smoke": 1.0},
            baseline_budget=float(bb), min_budget=float(mb),
        ))
    return Instance(
        city="alloc", b_total=float(sum(baselines) if b_total is None else b_total),
        delta=delta, segments=[Segment(id="s", beta=1.0)],
        sim_params=SimParams(), cost_params=CostParams(), neighborhoods=nbhds,
    )


def test_compose_weights_reference_rows():
    # Frozen products for the two reference factor rows.
    rhos = compose_weights([
        (1.10, 1.03, 1.05, 1.01),
        (1.0, 1.0, 1.0, 1.0),
        (0.90, 0.95, 0.95, 0.96),
    ])
    assert rhos[0] == pytest.approx(1.2015465, rel=1e-12)
    assert abs(rhos[0] - 1.19) < 0.02
    assert rhos[1] == 1.0
    assert rhos[2] == pytest.approx(0.77976, rel=1e-12)
    assert abs(rhos[2] - 0.78) < 0.02


def test_compose_weights_accepts_named_maps():
    rhos = compose_weights([{"density": 1.05, "social": 0.99,
                             "material": 1.0, "smoke": 1.02}])
    assert rhos[0] == pytest.approx(1.05 * 0.99 * 1.02)


def test_compose_weights_rejects_out_of_clamp_by_name():
    with pytest.raises(ValueError, match="density"):
        compose_weights([(1.2, 1.0, 1.0, 1.0)])
    with pytest.raises(ValueError, match="smoke"):
        compose_weights([(1.0, 1.0, 1.0, 0.5)])
    with pytest.raises(ValueError, match="positive"):
        compose_weights([(1.0, 1.0, 1.0, -1.0)], clamps={"smoke": (-2.0, 2.0)})
    # Widened clamps admit what the defaults reject.
    assert compose_weights([(1.2, 1.0, 1.0, 1.0)], clamps=WIDE)[0] == pytest.approx(1.2)


def test_derive_baseline_budget():
    cp = CostParams()
    assert derive_baseline_budget(100_000, cp, 1_000_000.0) == pytest.approx(21_000_000.0)
    assert derive_baseline_budget(1_000, cp, 1_000_000.0) == pytest.approx(1_050_000.0)
    with pytest.raises(ValueError):
        derive_baseline_budget(0, cp, 1.0)


def test_fair_allocation_worked_example():
    inst = alloc_instance([100, 100, 100], [0, 0, 0], [1.2, 1.0, 0.8], delta=0.3)
    fair = allocate_fair(inst, clamps=WIDE)
    assert fair.budgets["n0"] == pytest.approx(130.0, rel=1e-12)
    assert fair.budgets["n1"] == pytest.approx(100.0, rel=1e-12)
    assert fair.budgets["n2"] == pytest.approx(70.0, rel=1e-12)
    assert fair.objective == pytest.approx(312.0, rel=1e-12)
    assert fair.binding["n0"] == "at-upper"
    assert fair.binding["n1"] == "interior"
    assert fair.binding["n2"] == "at-lower"

    oracle = allocate_lp_oracle(inst, clamps=WIDE)
    assert oracle.objective == pytest.approx(fair.objective, rel=1e-9)
    for nid in fair.budgets:
        assert oracle.budgets[nid] == pytest.approx(fair.budgets[nid], abs=1e-6)


def test_equal_weights_tie_broken_by_id():
    inst = alloc_instance([100, 100, 100], [0, 0, 0], [1.0, 1.0, 1.0])
    fair = allocate_fair(inst)
    assert fair.budgets["n0"] == pytest.approx(130.0)
    assert fair.budgets["n2"] == pytest.approx(70.0)
    oracle = allocate_lp_oracle(inst)
    assert fair.objective == pytest.approx(oracle.objective, rel=1e-9)
    assert fair.objective == pytest.approx(300.0)


def test_zero_delta_collapses_to_baseline():
    inst = alloc_instance([120, 80], [0, 0], [1.05, 0.95], delta=0.0)
    fair = allocate_fair(inst)
    assert fair.budgets == {"n0": 120.0, "n1": 80.0}


def test_baseline_mode_returns_baselines():
    inst = alloc_instance([120, 80], [10, 10], [1.05, 0.95])
    alloc = allocate_baseline(inst)
    assert alloc.mode == "baseline"
    assert alloc.budgets == {"n0": 120.0, "n1": 80.0}
    assert alloc.objective == pytest.approx(1.05 * 120 + 0.95 * 80)


def test_infeasible_total_budget():
    inst = alloc_instance([100, 100], [95, 95], [1.0, 1.0], delta=0.02, b_total=150)
    with pytest.raises(InfeasibleAllocationError, match="total budget"):
        allocate_fair(inst)
    with pytest.raises(InfeasibleAllocationError, match="total budget"):
        allocate_lp_oracle(inst)


def test_infeasible_floor_above_upper_bound():
    inst = alloc_instance([100], [150], [1.0], delta=0.3)
    with pytest.raises(InfeasibleAllocationError, match="maintenance floor"):
        allocate_fair(inst)


def test_delta_override_per_neighborhood():
    inst = alloc_instance([100, 100], [0, 0], [1.1, 0.9])
    # Lower bounds (50, 70) leave a residual of 80, all of it going to n0.
    fair = allocate_fair(inst, delta_overrides={"n0": 0.5})
    assert fair.budgets["n0"] == pytest.approx(130.0)
    assert fair.budgets["n1"] == pytest.approx(70.0)
    with pytest.raises(ValueError, match="unknown neighborhood"):
        allocate_fair(inst, delta_overrides={"nope": 0.1})
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        allocate_fair(inst, delta=1.5)


def test_greedy_matches_lp_on_seeded_instances():
    for seed in range(50):
        inst = generate_synthetic(GenConfig(seed=seed, n_neighborhoods=2 + seed % 4,
                                            demand_points_per_nbhd=3,
                                            parks_per_nbhd=1 + seed % 2,
                                            candidates_per_nbhd=0))
        fair = allocate_fair(inst)
        oracle = allocate_lp_oracle(inst)
        scale = max(1.0, abs(fair.objective))
        assert abs(fair.objective - oracle.objective) <= 1e-9 * scale
        total = sum(fair.budgets.values())
        assert total <= inst.b_total + 1e-6
        interior = [nid for nid, status in fair.binding.items() if status == "interior"]
        assert len(interior) <= 1
        for nbhd in inst.neighborhoods:
            lower = max(nbhd.min_budget, (1 - inst.delta) * nbhd.baseline_budget)
            upper = (1 + inst.delta) * nbhd.baseline_budget
            b = fair.budgets[nbhd.id]
            assert lower - 1e-6 <= b <= upper + 1e-6


def test_weight_scaling_leaves_allocation_unchanged():
    inst_a = alloc_instance([100, 90, 80], [5, 5, 5], [1.2, 0.9, 0.6])
    inst_b = alloc_instance([100, 90, 80], [5, 5, 5], [1.2 * 1.7, 0.9 * 1.7, 0.6 * 1.7])
    a = allocate_fair(inst_a, clamps=WIDE)
    b = allocate_fair(inst_b, clamps=WIDE)
    assert a.budgets == b.budgets
    assert b.objective == pytest.approx(1.7 * a.objective, rel=1e-12)


def test_raising_one_weight_never_lowers_its_budget():
    for seed in range(20):
        inst = generate_synthetic(GenConfig(seed=100 + seed, n_neighborhoods=3,
                                            demand_points_per_nbhd=3,
                                            parks_per_nbhd=1, candidates_per_nbhd=0))
        before = allocate_fair(inst)
        target = inst.neighborhoods[seed % 3]
        bumped = dict(target.rho_factors)
        bumped["density"] = min(1.1, bumped["density"] * 1.05)
        target.rho_factors = bumped
        after = allocate_fair(inst)
        assert after.budgets[target.id] >= before.budgets[target.id] - 1e-9
