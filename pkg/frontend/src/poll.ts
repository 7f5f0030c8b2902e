/**
 * Poll a run until it reaches a terminal state (done or failed).
 *
 * The interval starts at one second and backs off geometrically; both
 * the clock and the sleeper are injectable so tests run instantly.
 */

import type { ServiceClient } from "./api.js";
import type { RunDocument } from "./types.js";

export interface PollOptions {
  intervalMs?: number;
  backoffFactor?: number;
  maxIntervalMs?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
  /** Called with every fetched document, terminal one included. */
  onUpdate?: (run: RunDocument) => void;
}

const wait = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export async function pollRun(
  client: ServiceClient,
  runId: string,
  options: PollOptions = {},
): Promise<RunDocument> {
  const {
    intervalMs = 1000,
    backoffFactor = 1.5,
    maxIntervalMs = 5000,
    timeoutMs = 120_000,
    sleep = wait,
    onUpdate,
  } = options;
  let interval = intervalMs;
  let waited = 0;
  for (;;) {
    const run = await client.getRun(runId);
    onUpdate?.(run);
    if (run.status === "done" || run.status === "failed") {
      return run;
    }
    if (waited >= timeoutMs) {
      throw new Error(`run ${runId} still ${run.status} after ${timeoutMs} ms`);
    }
    await sleep(interval);
    waited += interval;
    interval = Math.min(interval * backoffFactor, maxIntervalMs);
  }
}
