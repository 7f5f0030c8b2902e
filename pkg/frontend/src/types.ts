/**
 * Document shapes served by the planning service.
 *
 * Only the fields the UI reads are typed; unknown fields pass through
 * untouched so the client never has to re-serialize a document.
 */

export interface InstanceNeighborhood {
  id: string;
  name: string;
  population: number;
  baseline_budget: number;
  min_budget: number;
  demand_points: unknown[];
  parks: unknown[];
}

export interface InstanceDocument {
  city: string;
  b_total: number;
  delta: number;
  neighborhoods: InstanceNeighborhood[];
  [key: string]: unknown;
}

/** Body of POST /solve, mirrored verbatim from the form. */
export interface ScenarioConfigPayload {
  mode?: "fair" | "baseline";
  delta?: number;
  u0_multiplier?: number;
  cluster_k?: number | "auto" | Record<string, number>;
  gap_tol?: number;
  time_limit_s?: number;
  seed?: number;
}

export interface AllocationDocument {
  mode: string;
  budgets: Record<string, number>;
  objective: number;
  binding: Record<string, string>;
}

export interface NeighborhoodPlan {
  chosen: Record<string, number | null>;
  spend: number;
  objective: number;
  status: string;
  park_ids: string[];
  [key: string]: unknown;
}

export interface NeighborhoodMetrics {
  visit_share_pct: number;
  l1_norm: number;
  minmax_distance: number;
  mean_distance: number;
  [key: string]: unknown;
}

export interface NeighborhoodRecord {
  id: string;
  budget: number;
  status: string;
  plan?: NeighborhoodPlan;
  metrics?: NeighborhoodMetrics;
  clustering?: unknown;
  error?: string;
}

export interface CityRow {
  neighborhood: string;
  budget: number;
  gap_pct: number;
  runtime_s: number;
  share_pct: number;
  l1_norm: number;
}

export interface CitySummary {
  weighted_share_pct: number;
  rows: CityRow[];
}

/** Terminal run document; while queued/running only the header exists. */
export interface RunDocument {
  run_id: string;
  instance_id: string;
  status: "queued" | "running" | "done" | "failed";
  config?: ScenarioConfigPayload;
  allocation?: AllocationDocument;
  neighborhoods?: NeighborhoodRecord[];
  city?: CitySummary | null;
  error?: string | null;
}

export interface RunSummary {
  run_id: string;
  instance_id: string;
  status: string;
  [key: string]: unknown;
}

export interface DemandProperties {
  feature: "demand";
  id: string;
  weights: Record<string, number>;
  cluster: number | null;
}

export interface ParkProperties {
  feature: "park";
  id: string;
  kind: "existing" | "candidate";
  design: number | null;
  spend: number;
  visit_share: number;
}

export interface PointFeature<P> {
  type: "Feature";
  geometry: { type: "Point"; coordinates: [number, number] };
  properties: P;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: PointFeature<DemandProperties | ParkProperties>[];
}

/** Every service error body carries these three fields. */
export interface ApiErrorBody {
  code: string;
  message: string;
  path: string;
}
