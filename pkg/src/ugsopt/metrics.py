"""Evaluation metrics for solved plans: visit shares, distance fairness.

All distance metrics reuse the kernel's effective-distance convention
(km, fixed distances for candidate sites).  Weighted statistics divide
by the total weight, so they are invariant to weight scaling; per
neighborhood the segment weights sum to the demand point count, not 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import CostParams, Neighborhood
from .milp import BbOptions
from .planning import PlanSolution, solve_neighborhood
from .simutil import UtilityTable

DEFAULT_U0_MULTIPLIERS = (1.1, 1.0, 0.9, 0.8, 0.7)


@dataclass
class MetricReport:
    """Evaluation quantities for one solved neighborhood."""

    visit_share_pct: float
    l1_norm: float
    minmax_distance: float
    expected_distance: np.ndarray  # (points, segments) mean visited distance, km
    mean_distance: float

    def as_document(self) -> dict:
        return {
            "visit_share_pct": self.visit_share_pct,
            "l1_norm": self.l1_norm,
            "minmax_distance": self.minmax_distance,
            "mean_distance": self.mean_distance,
            "expected_distance": [[float(v) for v in row]
                                  for row in self.expected_distance],
        }


@dataclass
class SensitivityPoint:
    multiplier: float
    objective: float
    share_pct: float


@dataclass
class CityReport:
    """Per-neighborhood rows plus the population-weighted share."""

    rows: list[dict] = field(default_factory=list)
    weighted_share_pct: float = 0.0


def expected_distances(plan: PlanSolution, table: UtilityTable) -> np.ndarray:
    """Probability-weighted visit distance per (point, segment), in km."""
    return np.einsum("isj,ij->is", plan.p, table.dist_km)


def _weighted_mean_abs_dev(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    total = float(weights.sum())
    if total <= 0:
        raise ValueError("metrics need positive total weight")
    mean = float((weights * values).sum()) / total
    mad = float((weights * np.abs(values - mean)).sum()) / total
    return mad, mean


def l1_norm(plan: PlanSolution, table: UtilityTable) -> float:
    """Weighted mean absolute deviation of expected distance from its mean."""
    mad, _ = _weighted_mean_abs_dev(expected_distances(plan, table), table.weights)
    return mad


def l2_norm(plan: PlanSolution, table: UtilityTable) -> float:
    """Root of the weighted mean squared deviation (optional analogue).

    Reported tables use the L1 variant; this stays available for callers
    who prefer a quadratic fairness reading.
    """
    d_bar = expected_distances(plan, table)
    total = float(table.weights.sum())
    if total <= 0:
        raise ValueError("metrics need positive total weight")
    mean = float((table.weights * d_bar).sum()) / total
    return float(np.sqrt((table.weights * (d_bar - mean) ** 2).sum() / total))


def minmax_distance(plan: PlanSolution, table: UtilityTable) -> float:
    """Largest expected distance among cells carrying positive weight."""
    d_bar = expected_distances(plan, table)
    supported = table.weights > 0
    if not supported.any():
        raise ValueError("metrics need positive total weight")
    return float(d_bar[supported].max())


def visit_share(plan: PlanSolution, table: UtilityTable) -> float:
    """Objective normalized to a fraction of the total demand weight."""
    return plan.objective / float(table.weights.sum())


def metric_report(plan: PlanSolution, table: UtilityTable) -> MetricReport:
    d_bar = expected_distances(plan, table)
    mad, mean = _weighted_mean_abs_dev(d_bar, table.weights)
    return MetricReport(
        visit_share_pct=100.0 * visit_share(plan, table),
        l1_norm=mad,
        minmax_distance=minmax_distance(plan, table),
        expected_distance=d_bar,
        mean_distance=mean,
    )


def city_report(plans: dict[str, PlanSolution], metrics: dict[str, MetricReport],
                populations: dict[str, int], budgets: dict[str, float]) -> CityReport:
    """Population-weighted share plus one table row per neighborhood."""
    missing = sorted(set(populations) - set(plans))
    if missing:
        raise ValueError(f"missing neighborhood run: {missing[0]!r}")
    extra = sorted(set(plans) - set(populations))
    if extra:
        raise ValueError(f"missing neighborhood population: {extra[0]!r}")
    rows = []
    share_acc = 0.0
    pop_acc = 0
    for nbhd_id in sorted(plans):
        plan = plans[nbhd_id]
        report = metrics[nbhd_id]
        rows.append({
            "neighborhood": nbhd_id,
            "budget": budgets[nbhd_id],
            "gap_pct": 100.0 * plan.gap,
            "runtime_s": plan.wall_time,
            "share_pct": report.visit_share_pct,
            "l1_norm": report.l1_norm,
        })
        share_acc += populations[nbhd_id] * report.visit_share_pct
        pop_acc += populations[nbhd_id]
    return CityReport(rows=rows, weighted_share_pct=share_acc / pop_acc)


_COLUMNS = (
    ("neighborhood", "Neighborhood", "{}"),
    ("budget", "Budget", "{:.2f}"),
    ("gap_pct", "GAP (%)", "{:.4f}"),
    ("runtime_s", "RunTime (s)", "{:.3f}"),
    ("share_pct", "ObjVal (%)", "{:.2f}"),
    ("l1_norm", "L1-norm", "{:.4f}"),
)


def format_city_table(report: CityReport) -> str:
    """Fixed-width text table with the reporting column names."""
    cells = [[fmt.format(row[key]) for key, _, fmt in _COLUMNS]
             for row in report.rows]
    cells.append(["weighted", "", "", "", f"{report.weighted_share_pct:.2f}", ""])
    headers = [header for _, header, _ in _COLUMNS]
    widths = [max(len(headers[k]), *(len(r[k]) for r in cells))
              for k in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for r in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def scale_no_choice(table: UtilityTable, multiplier: float) -> UtilityTable:
    """Copy of the table with every no-choice utility scaled."""
    if multiplier <= 0:
        raise ValueError("u0 multiplier must be positive")
    return UtilityTable(
        u=table.u, u0=table.u0 * multiplier, blocked=table.blocked,
        dist_km=table.dist_km, alpha_offset=table.alpha_offset,
        point_ids=table.point_ids, segment_ids=table.segment_ids,
        park_ids=table.park_ids, rank_counts=table.rank_counts,
        weights=table.weights,
    )


def u0_sensitivity(nbhd: Neighborhood, budget: float, table: UtilityTable,
                   cost_params: CostParams,
                   multipliers: tuple[float, ...] = DEFAULT_U0_MULTIPLIERS,
                   opts: BbOptions | None = None) -> list[SensitivityPoint]:
    """Re-solve with the no-choice utility scaled by each multiplier.

    Solver failures propagate; with every point solved to optimality the
    share is non-increasing in the multiplier.
    """
    points = []
    for multiplier in multipliers:
        scaled = scale_no_choice(table, multiplier)
        plan = solve_neighborhood(nbhd, budget, scaled, cost_params, opts)
        points.append(SensitivityPoint(
            multiplier=float(multiplier),
            objective=plan.objective,
            share_pct=100.0 * plan.objective / float(table.weights.sum()),
        ))
    return points
