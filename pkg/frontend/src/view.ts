/**
 * State machine behind the scenario explorer.
 *
 * Holds the selected instance, the editable config form, the run list
 * with live statuses, map layers, and the comparison pair.  All truth
 * comes from service payloads; edits only ever touch the local form,
 * and a form that fails validation never produces a request.
 */

import { ApiError, ServiceClient } from "./api.js";
import {
  allocationDeltas,
  buildLayers,
  compareRuns,
  pairLayers,
  type ComparisonView,
  type LayerPair,
  type MapLayer,
} from "./compare.js";
import { defaultForm, toConfigPayload, validateForm, type ScenarioForm } from "./config.js";
import { pollRun, type PollOptions } from "./poll.js";
import type { InstanceDocument, RunDocument } from "./types.js";

export interface RunRow {
  runId: string;
  status: string;
  visitSharePct?: number;
  error?: string;
}

export class PlannerView {
  readonly client: ServiceClient;
  form: ScenarioForm = defaultForm();
  errors: string[] = [];
  instanceId: string | null = null;
  instance: InstanceDocument | null = null;
  runs: RunRow[] = [];
  documents = new Map<string, RunDocument>();
  layers: MapLayer[] = [];
  comparison: ComparisonView | null = null;
  comparisonLayers: LayerPair[] = [];

  private readonly pollOptions: PollOptions;

  constructor(client: ServiceClient, pollOptions: PollOptions = {}) {
    this.client = client;
    this.pollOptions = pollOptions;
  }

  /** Store an instance document and select it. */
  async loadInstance(documentText: string): Promise<string> {
    const { id } = await this.client.postInstance(documentText);
    this.instanceId = id;
    this.instance = await this.client.getInstance(id);
    this.runs = [];
    this.layers = [];
    this.comparison = null;
    return id;
  }

  private row(runId: string): RunRow {
    const row = this.runs.find((r) => r.runId === runId);
    if (!row) throw new Error(`run ${runId} is not tracked`);
    return row;
  }

  /**
   * Validate the form, send it verbatim, and poll to a terminal state.
   *
   * Returns the run id, or null when inline validation failed (in
   * which case no request was made and this.errors explains why).
   */
  async submitScenario(): Promise<string | null> {
    this.errors = validateForm(this.form);
    if (this.errors.length > 0) return null;
    if (!this.instanceId) {
      this.errors = ["select an instance before solving"];
      return null;
    }
    let runId: string;
    try {
      const response = await this.client.postSolve(
        this.instanceId,
        toConfigPayload(this.form),
      );
      runId = response.run_id;
    } catch (err) {
      this.errors = [describeError(err)];
      return null;
    }
    this.runs.push({ runId, status: "queued" });
    const terminal = await pollRun(this.client, runId, {
      ...this.pollOptions,
      onUpdate: (run) => {
        this.row(runId).status = run.status;
        this.pollOptions.onUpdate?.(run);
      },
    });
    this.documents.set(runId, terminal);
    const row = this.row(runId);
    row.status = terminal.status;
    if (terminal.status === "done") {
      row.visitSharePct = terminal.city?.weighted_share_pct;
    } else {
      row.error = terminal.error ?? "run failed";
    }
    return runId;
  }

  /** Fetch the run's overlay and make it the active map. */
  async showOnMap(runId: string): Promise<MapLayer[]> {
    const geojson = await this.client.getRunGeojson(runId);
    this.layers = buildLayers(geojson);
    return this.layers;
  }

  private document(runId: string): RunDocument {
    const doc = this.documents.get(runId);
    if (!doc) throw new Error(`run ${runId} has no stored document`);
    return doc;
  }

  /** Build the side-by-side view for two finished runs. */
  async compare(runA: string, runB: string): Promise<ComparisonView> {
    this.comparison = compareRuns(this.document(runA), this.document(runB));
    const [layersA, layersB] = await Promise.all([
      this.client.getRunGeojson(runA).then(buildLayers),
      this.client.getRunGeojson(runB).then(buildLayers),
    ]);
    this.comparisonLayers = pairLayers(layersA, layersB);
    return this.comparison;
  }

  /** Budget differences read straight off the two allocation payloads. */
  budgetDeltas(runA: string, runB: string): Record<string, number> {
    return allocationDeltas(this.document(runA), this.document(runB));
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code} at ${err.path}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
