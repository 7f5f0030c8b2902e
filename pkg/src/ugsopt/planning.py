"""Second stage: park design selection under a neighborhood budget.

The fractional visit-share objective is linearized with auxiliary inverse
variables (v per demand cell, z per active design) and solved as a mixed
binary program.  A brute-force enumerator over design assignments serves
as the exactness oracle at test scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .instance import CostParams, Neighborhood, design_cost  # noqa: F401  (re-export)
from .milp import EQ, LE, BbOptions, LinearProgram, MipSolution, MixedProgram, bb_solve
from .simutil import UtilityTable


class InfeasibleBudgetError(ValueError):
    """Budget cannot cover the mandatory maintenance of existing parks."""


@dataclass
class PlanVariables:
    """Column layout of the linearized program."""

    x_index: dict[tuple[str, int], int]
    v_index: dict[tuple[str, str], int]
    z_index: dict[tuple[str, str, str, int], int]
    k_value: dict[tuple[str, str], float]  # big-M per (point, segment): 1/u0
    n_vars: int


@dataclass
class PlanSolution:
    """A decoded park plan with its exact visit probabilities."""

    chosen: dict[str, int | None]
    spend: float
    objective: float
    p: np.ndarray   # (points, segments, parks): probability of the chosen design
    p0: np.ndarray  # (points, segments): no-choice probability
    status: str
    gap: float = 0.0
    wall_time: float = 0.0
    nodes: int = 0
    park_ids: list[str] = field(default_factory=list)
    point_ids: list[str] = field(default_factory=list)
    segment_ids: list[str] = field(default_factory=list)


def _check_budget(nbhd: Neighborhood, budget: float) -> None:
    tol = 1e-6 * max(1.0, abs(nbhd.min_budget))
    if budget < nbhd.min_budget - tol:
        raise InfeasibleBudgetError(
            f"budget {budget} is below the maintenance floor {nbhd.min_budget} "
            f"of neighborhood {nbhd.id}")


def build_milp(nbhd: Neighborhood, budget: float, table: UtilityTable,
               cost_params: CostParams) -> tuple[MixedProgram, PlanVariables]:
    """Assemble the linearized program for one neighborhood.

    Variables: one binary x per (park, rank); one v per (point, segment)
    bounded by [1/(u0 + total u), 1/u0]; one z per (point, segment, park,
    rank) with positive utility, in [0, 1/u0].  Designs with zero utility
    (blocked or padded) need no z column: their objective and linking
    coefficients are zero and their side rows are satisfiable for every
    (v, x) in bounds, so the program is unchanged without them.
    """
    _check_budget(nbhd, budget)
    points = table.point_ids
    segs = table.segment_ids
    parks = nbhd.parks
    if [p.id for p in parks] != table.park_ids:
        raise ValueError("utility table does not match this neighborhood's parks")

    x_index: dict[tuple[str, int], int] = {}
    col = 0
    for park in parks:
        for option in sorted(park.designs, key=lambda d: d.rank):
            x_index[(park.id, option.rank)] = col
            col += 1
    v_index = {}
    for i, pid in enumerate(points):
        for s, sid in enumerate(segs):
            v_index[(pid, sid)] = col
            col += 1
    z_index = {}
    k_value = {}
    for i, pid in enumerate(points):
        for s, sid in enumerate(segs):
            k_value[(pid, sid)] = 1.0 / table.u0[i, s]
            for j, park in enumerate(parks):
                for option in park.designs:
                    if table.u[i, s, j, option.rank - 1] > 0.0:
                        z_index[(pid, sid, park.id, option.rank)] = col
                        col += 1
    n = col

    point_pos = {pid: i for i, pid in enumerate(points)}
    seg_pos = {sid: s for s, sid in enumerate(segs)}
    park_pos = {pid: j for j, pid in enumerate(table.park_ids)}
    lower = np.zeros(n)
    upper = np.ones(n)
    c = np.zeros(n)
    for (pid, sid), k in v_index.items():
        i, s = point_pos[pid], seg_pos[sid]
        total_u = float(table.u[i, s].sum())
        lower[k] = 1.0 / (table.u0[i, s] + total_u)
        upper[k] = 1.0 / table.u0[i, s]
    for (pid, sid, park_id, rank), k in z_index.items():
        lower[k] = 0.0
        upper[k] = k_value[(pid, sid)]
        i, s = point_pos[pid], seg_pos[sid]
        j = park_pos[park_id]
        c[k] = table.weights[i, s] * table.u[i, s, j, rank - 1]

    n_rows = 1 + len(parks) + len(points) * len(segs) + 3 * len(z_index)
    A = np.zeros((n_rows, n))
    relations: list[str] = []
    rhs = np.zeros(n_rows)
    row = 0

    # (8b) budget.
    for park in parks:
        for option in park.designs:
            A[row, x_index[(park.id, option.rank)]] = design_cost(park, option.rank,
                                                                  cost_params)
    relations.append(LE)
    rhs[row] = budget
    row += 1

    # (8c)/(8d) one design per location; mandatory for existing parks.
    for park in parks:
        for option in park.designs:
            A[row, x_index[(park.id, option.rank)]] = 1.0
        relations.append(EQ if park.kind == "existing" else LE)
        rhs[row] = 1.0
        row += 1

    # Linking equality per demand cell: u0 v + sum u z = 1.
    for i, pid in enumerate(points):
        for s, sid in enumerate(segs):
            A[row, v_index[(pid, sid)]] = table.u0[i, s]
            for j, park in enumerate(parks):
                for option in park.designs:
                    key = (pid, sid, park.id, option.rank)
                    if key in z_index:
                        A[row, z_index[key]] = table.u[i, s, j, option.rank - 1]
            relations.append(EQ)
            rhs[row] = 1.0
            row += 1

    # Per-z side rows: z <= v; z <= K x; z >= v + K (x - 1).
    for (pid, sid, park_id, rank), zk in z_index.items():
        vk = v_index[(pid, sid)]
        xk = x_index[(park_id, rank)]
        big_m = k_value[(pid, sid)]
        A[row, zk] = 1.0
        A[row, vk] = -1.0
        relations.append(LE)
        rhs[row] = 0.0
        row += 1
        A[row, zk] = 1.0
        A[row, xk] = -big_m
        relations.append(LE)
        rhs[row] = 0.0
        row += 1
        A[row, vk] = 1.0
        A[row, zk] = -1.0
        A[row, xk] = big_m
        relations.append(LE)
        rhs[row] = big_m
        row += 1

    lp = LinearProgram(c=c, A=A, relations=relations, rhs=rhs, lower=lower, upper=upper)
    mp = MixedProgram(lp, binary=sorted(x_index.values()))
    return mp, PlanVariables(x_index=x_index, v_index=v_index, z_index=z_index,
                             k_value=k_value, n_vars=n)


def _normalize_assignment(nbhd: Neighborhood, x: dict[str, int | None]
                          ) -> dict[str, int | None]:
    known = {p.id: p for p in nbhd.parks}
    unknown = set(x) - set(known)
    if unknown:
        raise ValueError(f"assignment references unknown park {sorted(unknown)[0]!r}")
    chosen: dict[str, int | None] = {}
    for park in nbhd.parks:
        rank = x.get(park.id)
        if rank is None:
            if park.kind == "existing":
                raise ValueError(f"existing park {park.id} must carry exactly one design")
            chosen[park.id] = None
            continue
        if not any(d.rank == rank for d in park.designs):
            raise ValueError(f"park {park.id} has no design rank {rank}")
        chosen[park.id] = int(rank)
    return chosen


def evaluate_plan(nbhd: Neighborhood, x: dict[str, int | None], table: UtilityTable,
                  cost_params: CostParams) -> PlanSolution:
    """Exact probabilities, objective, and spend of a fixed assignment."""
    chosen = _normalize_assignment(nbhd, x)
    n_i, n_s = table.u0.shape
    n_j = len(table.park_ids)
    u_chosen = np.zeros((n_i, n_s, n_j))
    for j, park in enumerate(nbhd.parks):
        rank = chosen[park.id]
        if rank is not None:
            u_chosen[:, :, j] = table.u[:, :, j, rank - 1]
    denom = table.u0 + u_chosen.sum(axis=2)
    p = u_chosen / denom[:, :, None]
    p0 = table.u0 / denom
    objective = float((table.weights * p.sum(axis=2)).sum())
    spend = sum(design_cost(park, chosen[park.id], cost_params)
                for park in nbhd.parks if chosen[park.id] is not None)
    return PlanSolution(
        chosen=chosen, spend=float(spend), objective=objective, p=p, p0=p0,
        status="evaluated", park_ids=list(table.park_ids),
        point_ids=list(table.point_ids), segment_ids=list(table.segment_ids),
    )


def decode_assignment(sol_x: np.ndarray, nbhd: Neighborhood,
                      pv: PlanVariables) -> dict[str, int | None]:
    """Read the chosen rank per park out of a solver point."""
    chosen: dict[str, int | None] = {}
    for park in nbhd.parks:
        picked = [option.rank for option in park.designs
                  if sol_x[pv.x_index[(park.id, option.rank)]] > 0.5]
        if len(picked) > 1:
            raise ValueError(f"park {park.id} carries {len(picked)} designs")
        if park.kind == "existing" and not picked:
            raise ValueError(f"existing park {park.id} lost its mandatory design")
        chosen[park.id] = picked[0] if picked else None
    return chosen


def solve_neighborhood(nbhd: Neighborhood, budget: float, table: UtilityTable,
                       cost_params: CostParams,
                       opts: BbOptions | None = None) -> PlanSolution:
    """Solve the neighborhood design problem; statuses propagate from B&B."""
    mp, pv = build_milp(nbhd, budget, table, cost_params)
    sol: MipSolution = bb_solve(mp, opts)
    if sol.x is None:
        raise RuntimeError(
            f"second-stage solver returned {sol.status} for neighborhood {nbhd.id}")
    chosen = decode_assignment(sol.x, nbhd, pv)
    plan = evaluate_plan(nbhd, chosen, table, cost_params)
    plan.status = sol.status
    plan.gap = sol.gap
    plan.wall_time = sol.wall_time
    plan.nodes = sol.nodes
    return plan


def brute_force_optimum(nbhd: Neighborhood, budget: float, table: UtilityTable,
                        cost_params: CostParams) -> PlanSolution:
    """Exhaustive search over design assignments (verification oracle)."""
    _check_budget(nbhd, budget)
    option_sets: list[list[int | None]] = []
    combos = 1
    for park in nbhd.parks:
        ranks = sorted(d.rank for d in park.designs)
        options: list[int | None] = ([None] if park.kind == "candidate" else []) + ranks
        option_sets.append(options)
        combos *= len(options)
        if combos > 10 ** 6:
            raise ValueError("instance too large for enumeration")

    costs = {}
    u_slices = {}
    for j, park in enumerate(nbhd.parks):
        for d in park.designs:
            costs[(j, d.rank)] = design_cost(park, d.rank, cost_params)
            u_slices[(j, d.rank)] = table.u[:, :, j, d.rank - 1]

    best: tuple[float, tuple[int | None, ...]] | None = None
    for combo in itertools.product(*option_sets):
        spend = sum(costs[(j, r)] for j, r in enumerate(combo) if r is not None)
        if spend > budget + 1e-9:
            continue
        total_u = table.u0.copy()
        for j, r in enumerate(combo):
            if r is not None:
                total_u = total_u + u_slices[(j, r)]
        objective = float((table.weights * (1.0 - table.u0 / total_u)).sum())
        if best is None or objective > best[0] + 1e-15:
            best = (objective, combo)
    if best is None:
        raise InfeasibleBudgetError(
            f"no design assignment fits budget {budget} in neighborhood {nbhd.id}")
    assignment = {park.id: rank for park, rank in zip(nbhd.parks, best[1])}
    plan = evaluate_plan(nbhd, assignment, table, cost_params)
    plan.status = "optimal"
    return plan


def total_upgrade_cost(nbhd: Neighborhood, cost_params: CostParams) -> float:
    """Spend of the most expensive assignment (useful for budget draws)."""
    total = 0.0
    for park in nbhd.parks:
        top = max(d.rank for d in park.designs)
        total += design_cost(park, top, cost_params)
    return total
