"""Stage one: fair allocation of the city budget across neighborhoods.

The allocation problem maximizes the weight-scaled budget sum subject to
the city total and per-neighborhood deviation bounds around the baseline.
It is a box-constrained LP with a single coupling row, so a greedy fill in
descending weight order is exactly optimal; an LP formulation of the same
problem is kept as a cross-checking oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, Neighborhood, RHO_FACTOR_ORDER
from .milp import LE, LinearProgram, lp_solve

# Documented clamp ranges for the four weight factors.
RHO_CLAMPS: dict[str, tuple[float, float]] = {
    "density": (0.9, 1.1),
    "social": (0.95, 1.05),
    "material": (0.95, 1.05),
    "smoke": (0.95, 1.05),
}

_BOUND_TOL = 1e-9


class InfeasibleAllocationError(ValueError):
    """Stage-one constraints admit no allocation; names the condition."""


@dataclass
class Allocation:
    budgets: dict[str, float]
    mode: str  # "baseline" | "fair"
    objective: float
    binding: dict[str, str]  # neighborhood id -> at-lower | at-upper | interior


def _as_factor_map(factors) -> dict[str, float]:
    if isinstance(factors, dict):
        unknown = set(factors) - set(RHO_FACTOR_ORDER)
        if unknown:
            raise ValueError(f"unknown weight factor {sorted(unknown)[0]!r}")
        missing = set(RHO_FACTOR_ORDER) - set(factors)
        if missing:
            raise ValueError(f"missing weight factor {sorted(missing)[0]!r}")
        return dict(factors)
    values = list(factors)
    if len(values) != len(RHO_FACTOR_ORDER):
        raise ValueError(f"expected {len(RHO_FACTOR_ORDER)} factors, got {len(values)}")
    return dict(zip(RHO_FACTOR_ORDER, values))


def compose_weights(factors_per_nbhd, clamps: dict[str, tuple[float, float]] | None = None
                    ) -> list[float]:
    """Product of the four clamped factors for each neighborhood.

    Accepts mappings keyed by factor name or sequences in canonical order
    (density, social, material, smoke).  A factor outside its clamp range
    is rejected by name.
    """
    limits = dict(RHO_CLAMPS)
    if clamps:
        for name, rng in clamps.items():
            if name not in limits:
                raise ValueError(f"unknown weight factor {name!r}")
            limits[name] = (float(rng[0]), float(rng[1]))
    out = []
    for k, factors in enumerate(factors_per_nbhd):
        fmap = _as_factor_map(factors)
        rho = 1.0
        for name in RHO_FACTOR_ORDER:
            value = fmap[name]
            lo, hi = limits[name]
            if value <= 0:
                raise ValueError(f"factor {name!r} must be positive (entry {k})")
            if not (lo - 1e-12 <= value <= hi + 1e-12):
                raise ValueError(
                    f"factor {name!r} = {value} outside clamp range [{lo}, {hi}] (entry {k})")
            rho *= value
        out.append(rho)
    return out


def derive_baseline_budget(population: int, cost_params, min_budget: float) -> float:
    """Per-capita budget over the horizon, floored by margined maintenance."""
    if population <= 0:
        raise ValueError("population must be positive")
    per_capita_total = cost_params.per_capita * cost_params.horizon_years * population
    return max(per_capita_total, cost_params.maintenance_margin * min_budget)


def _bounds(nbhd: Neighborhood, delta: float) -> tuple[float, float]:
    lower = max(nbhd.min_budget, (1.0 - delta) * nbhd.baseline_budget)
    upper = (1.0 + delta) * nbhd.baseline_budget
    return lower, upper


def _resolve_deltas(inst: Instance, delta: float | None,
                    delta_overrides: dict[str, float] | None) -> dict[str, float]:
    base = inst.delta if delta is None else delta
    out = {n.id: base for n in inst.neighborhoods}
    for nid, value in (delta_overrides or {}).items():
        if nid not in out:
            raise ValueError(f"delta override for unknown neighborhood {nid!r}")
        out[nid] = value
    for nid, value in out.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"delta for neighborhood {nid!r} must lie in [0, 1]")
    return out


def _check_feasible(inst: Instance, deltas: dict[str, float]) -> None:
    total_lower = 0.0
    for nbhd in inst.neighborhoods:
        lower, upper = _bounds(nbhd, deltas[nbhd.id])
        if lower > upper + _BOUND_TOL:
            raise InfeasibleAllocationError(
                f"neighborhood {nbhd.id}: maintenance floor {nbhd.min_budget} exceeds "
                f"the upper deviation bound {upper}")
        total_lower += lower
    if total_lower > inst.b_total + 1e-6:
        raise InfeasibleAllocationError(
            f"sum of lower bounds {total_lower} exceeds the total budget {inst.b_total}")


def _binding(value: float, lower: float, upper: float) -> str:
    scale = max(1.0, abs(upper))
    if abs(value - upper) <= 1e-9 * scale:
        return "at-upper"
    if abs(value - lower) <= 1e-9 * scale:
        return "at-lower"
    return "interior"


def _rho_by_id(inst: Instance, clamps=None) -> dict[str, float]:
    rhos = compose_weights([n.rho_factors for n in inst.neighborhoods], clamps)
    return {n.id: rho for n, rho in zip(inst.neighborhoods, rhos)}


def allocate_baseline(inst: Instance, clamps=None) -> Allocation:
    """Status-quo allocation: every neighborhood keeps its baseline."""
    rho = _rho_by_id(inst, clamps)
    deltas = _resolve_deltas(inst, None, None)
    budgets = {n.id: n.baseline_budget for n in inst.neighborhoods}
    binding = {}
    for nbhd in inst.neighborhoods:
        lower, upper = _bounds(nbhd, deltas[nbhd.id])
        binding[nbhd.id] = _binding(nbhd.baseline_budget, lower, upper)
    objective = sum(rho[nid] * b for nid, b in budgets.items())
    return Allocation(budgets=budgets, mode="baseline", objective=objective,
                      binding=binding)


def allocate_fair(inst: Instance, delta: float | None = None,
                  delta_overrides: dict[str, float] | None = None,
                  clamps=None) -> Allocation:
    """Optimal fair allocation by greedy fill in descending weight order.

    Every neighborhood starts at its lower bound; the residual city budget
    then fills neighborhoods to their upper bounds in strictly descending
    rho (ties by ascending id).  Optimal because the objective is linear
    and the feasible set is a box cut by one budget row.
    """
    rho = _rho_by_id(inst, clamps)
    deltas = _resolve_deltas(inst, delta, delta_overrides)
    _check_feasible(inst, deltas)

    bounds = {n.id: _bounds(n, deltas[n.id]) for n in inst.neighborhoods}
    budgets = {nid: lo for nid, (lo, hi) in bounds.items()}
    residual = inst.b_total - sum(budgets.values())
    for nid in sorted(budgets, key=lambda nid: (-rho[nid], nid)):
        if residual <= 0:
            break
        lo, hi = bounds[nid]
        take = min(hi - lo, residual)
        budgets[nid] = lo + take
        residual -= take

    binding = {nid: _binding(budgets[nid], *bounds[nid]) for nid in budgets}
    objective = sum(rho[nid] * b for nid, b in budgets.items())
    return Allocation(budgets=budgets, mode="fair", objective=objective, binding=binding)


def allocate_lp_oracle(inst: Instance, delta: float | None = None,
                       delta_overrides: dict[str, float] | None = None,
                       clamps=None) -> Allocation:
    """The same problem solved as an explicit LP (cross-checking oracle)."""
    rho = _rho_by_id(inst, clamps)
    deltas = _resolve_deltas(inst, delta, delta_overrides)
    _check_feasible(inst, deltas)

    ids = [n.id for n in inst.neighborhoods]
    lower = np.empty(len(ids))
    upper = np.empty(len(ids))
    for k, nbhd in enumerate(inst.neighborhoods):
        lower[k], upper[k] = _bounds(nbhd, deltas[nbhd.id])
    lp = LinearProgram(
        c=np.array([rho[nid] for nid in ids]),
        A=np.ones((1, len(ids))),
        relations=[LE],
        rhs=np.array([inst.b_total]),
        lower=lower,
        upper=upper,
    )
    sol = lp_solve(lp)
    if sol.status == "infeasible":
        raise InfeasibleAllocationError("stage-one LP reported infeasible")
    if sol.status != "optimal":
        raise RuntimeError(f"stage-one LP failed: {sol.status} {sol.message}")
    budgets = {nid: float(sol.x[k]) for k, nid in enumerate(ids)}
    binding = {nid: _binding(budgets[nid], lower[k], upper[k])
               for k, nid in enumerate(ids)}
    return Allocation(budgets=budgets, mode="fair", objective=float(sol.objective),
                      binding=binding)
