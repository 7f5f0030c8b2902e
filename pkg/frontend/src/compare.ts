/**
 * Side-by-side comparison of two finished runs.
 *
 * Every number is read straight off the two run documents; the only
 * client-side arithmetic is the subtraction itself, so each delta is
 * traceable to payload fields.  Runs from different instances never
 * compare: their neighborhoods are different objects.
 */

import type { FeatureCollection, RunDocument } from "./types.js";

export interface DeltaRow {
  id: string;
  budgetA: number;
  budgetB: number;
  budgetDelta: number;
  sharePctA: number;
  sharePctB: number;
  shareDelta: number;
  l1A: number;
  l1B: number;
  l1Delta: number;
}

export interface ComparisonView {
  runA: string;
  runB: string;
  instanceId: string;
  rows: DeltaRow[];
  weightedShareA: number;
  weightedShareB: number;
}

function requireDone(run: RunDocument): void {
  if (run.status !== "done") {
    throw new Error(`run ${run.run_id} is not done: ${run.status}`);
  }
}

export function compareRuns(a: RunDocument, b: RunDocument): ComparisonView {
  requireDone(a);
  requireDone(b);
  if (a.instance_id !== b.instance_id) {
    throw new Error(
      `runs ${a.run_id} and ${b.run_id} solve different instances ` +
        `(${a.instance_id} vs ${b.instance_id})`,
    );
  }
  const cityA = a.city;
  const cityB = b.city;
  if (!cityA || !cityB || !a.allocation || !b.allocation) {
    throw new Error("finished runs must carry allocation and city summaries");
  }
  const rowsB = new Map(cityB.rows.map((row) => [row.neighborhood, row]));
  const rows: DeltaRow[] = cityA.rows.map((rowA) => {
    const rowB = rowsB.get(rowA.neighborhood);
    if (!rowB) {
      throw new Error(`run ${b.run_id} has no row for ${rowA.neighborhood}`);
    }
    return {
      id: rowA.neighborhood,
      budgetA: rowA.budget,
      budgetB: rowB.budget,
      budgetDelta: rowA.budget - rowB.budget,
      sharePctA: rowA.share_pct,
      sharePctB: rowB.share_pct,
      shareDelta: rowA.share_pct - rowB.share_pct,
      l1A: rowA.l1_norm,
      l1B: rowB.l1_norm,
      l1Delta: rowA.l1_norm - rowB.l1_norm,
    };
  });
  return {
    runA: a.run_id,
    runB: b.run_id,
    instanceId: a.instance_id,
    rows,
    weightedShareA: cityA.weighted_share_pct,
    weightedShareB: cityB.weighted_share_pct,
  };
}

/** Per-neighborhood budget differences straight off the allocations. */
export function allocationDeltas(
  a: RunDocument,
  b: RunDocument,
): Record<string, number> {
  if (!a.allocation || !b.allocation) {
    throw new Error("both runs need allocation payloads");
  }
  const deltas: Record<string, number> = {};
  for (const [id, budget] of Object.entries(a.allocation.budgets)) {
    const other = b.allocation.budgets[id];
    if (other === undefined) {
      throw new Error(`allocation of run ${b.run_id} is missing ${id}`);
    }
    deltas[id] = budget - other;
  }
  return deltas;
}

/** Design-rank palette; rank 1 is maintenance-only, null is unbuilt. */
const RANK_COLORS = ["#2b8cbe", "#7bccc4", "#a8ddb5", "#f0e442", "#e66101"];

export function parkColor(rank: number | null): string {
  if (rank === null) return "#9e9e9e";
  return RANK_COLORS[Math.min(rank - 1, RANK_COLORS.length - 1)] ?? "#9e9e9e";
}

export interface MapLayer {
  neighborhoodId: string;
  collection: FeatureCollection;
  /** Park id to fill color, keyed by the chosen design rank. */
  parkColors: Record<string, string>;
}

/** Layers for one run's map, colors keyed off the geojson properties. */
export function buildLayers(
  geojson: Record<string, FeatureCollection>,
): MapLayer[] {
  return Object.entries(geojson)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([neighborhoodId, collection]) => {
      const parkColors: Record<string, string> = {};
      for (const feature of collection.features) {
        if (feature.properties.feature === "park") {
          parkColors[feature.properties.id] = parkColor(feature.properties.design);
        }
      }
      return { neighborhoodId, collection, parkColors };
    });
}

export interface LayerPair {
  neighborhoodId: string;
  a: MapLayer;
  b: MapLayer;
}

/** Dual-map pairing for the comparison view; ids must line up. */
export function pairLayers(a: MapLayer[], b: MapLayer[]): LayerPair[] {
  const byId = new Map(b.map((layer) => [layer.neighborhoodId, layer]));
  return a.map((layer) => {
    const other = byId.get(layer.neighborhoodId);
    if (!other) {
      throw new Error(`no matching layer for ${layer.neighborhoodId}`);
    }
    return { neighborhoodId: layer.neighborhoodId, a: layer, b: other };
  });
}
