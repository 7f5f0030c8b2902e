/**
 * Editable mirror of the solve configuration.
 *
 * The form holds every knob a planner can turn; validation happens
 * here, before any request, so a bad value never reaches the wire.
 * toConfigPayload maps the form onto the document format verbatim and
 * drops untouched knobs so server defaults stay in charge.
 */

import type { ScenarioConfigPayload } from "./types.js";

export interface ScenarioForm {
  mode: "fair" | "baseline";
  /** Budget deviation slider; null leaves the instance default. */
  delta: number | null;
  u0Multiplier: number;
  /** Demand aggregation: cluster count, "auto", per-neighborhood, or off. */
  clusterK: number | "auto" | Record<string, number> | null;
  gapTol: number | null;
  timeLimitS: number | null;
  seed: number | null;
}

export function defaultForm(): ScenarioForm {
  return {
    mode: "fair",
    delta: null,
    u0Multiplier: 1.0,
    clusterK: null,
    gapTol: null,
    timeLimitS: null,
    seed: null,
  };
}

function validK(value: number): boolean {
  return Number.isInteger(value) && value >= 1;
}

/** Inline error messages; an empty list means the form may be sent. */
export function validateForm(form: ScenarioForm): string[] {
  const errors: string[] = [];
  if (form.delta !== null && (!Number.isFinite(form.delta) || form.delta < 0 || form.delta > 1)) {
    errors.push(`delta must lie in [0, 1], got ${form.delta}`);
  }
  if (!Number.isFinite(form.u0Multiplier) || form.u0Multiplier <= 0) {
    errors.push(`u0 multiplier must be positive, got ${form.u0Multiplier}`);
  }
  const k = form.clusterK;
  if (typeof k === "number" && !validK(k)) {
    errors.push(`cluster count must be a positive integer, got ${k}`);
  } else if (k !== null && typeof k === "object") {
    for (const [nbhd, value] of Object.entries(k)) {
      if (!validK(value)) {
        errors.push(`cluster count for ${nbhd} must be a positive integer, got ${value}`);
      }
    }
  }
  if (form.gapTol !== null && (!Number.isFinite(form.gapTol) || form.gapTol <= 0)) {
    errors.push(`gap tolerance must be positive, got ${form.gapTol}`);
  }
  if (form.timeLimitS !== null && (!Number.isFinite(form.timeLimitS) || form.timeLimitS <= 0)) {
    errors.push(`time limit must be positive, got ${form.timeLimitS}`);
  }
  if (form.seed !== null && !Number.isInteger(form.seed)) {
    errors.push(`seed must be an integer, got ${form.seed}`);
  }
  return errors;
}

/** The exact body for POST /solve; null knobs are omitted, not sent. */
export function toConfigPayload(form: ScenarioForm): ScenarioConfigPayload {
  const payload: ScenarioConfigPayload = { mode: form.mode };
  if (form.delta !== null) payload.delta = form.delta;
  if (form.u0Multiplier !== 1.0) payload.u0_multiplier = form.u0Multiplier;
  if (form.clusterK !== null) payload.cluster_k = form.clusterK;
  if (form.gapTol !== null) payload.gap_tol = form.gapTol;
  if (form.timeLimitS !== null) payload.time_limit_s = form.timeLimitS;
  if (form.seed !== null) payload.seed = form.seed;
  return payload;
}
