/**
 * Thin typed client over the planning service HTTP API.
 *
 * Every method maps to exactly one endpoint and returns the parsed
 * document; non-2xx responses become ApiError carrying the service's
 * own code/message/path verbatim.
 */

import type {
  ApiErrorBody,
  FeatureCollection,
  InstanceDocument,
  RunDocument,
  RunSummary,
  ScenarioConfigPayload,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly path: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.path = body.path;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const text = await res.text();
    let body: unknown;
    try {
      body = JSON.parse(text);
    } catch {
      throw new ApiError(res.status, {
        code: "bad_payload",
        message: `non-JSON response: ${text.slice(0, 120)}`,
        path,
      });
    }
    if (!res.ok) {
      throw new ApiError(res.status, body as ApiErrorBody);
    }
    return body as T;
  }

  /** POST /instances with the document text; returns the content id. */
  postInstance(documentText: string): Promise<{ id: string }> {
    return this.request("/instances", { method: "POST", body: documentText });
  }

  getInstance(instanceId: string): Promise<InstanceDocument> {
    return this.request(`/instances/${instanceId}`);
  }

  /** POST /solve; the config payload is sent verbatim, never reshaped. */
  postSolve(
    instanceId: string,
    config: ScenarioConfigPayload,
  ): Promise<{ run_id: string }> {
    return this.request("/solve", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ instance_id: instanceId, config }),
    });
  }

  getRun(runId: string): Promise<RunDocument> {
    return this.request(`/runs/${runId}`);
  }

  listRuns(instanceId?: string): Promise<{ runs: RunSummary[] }> {
    const query = instanceId ? `?instance_id=${instanceId}` : "";
    return this.request(`/runs${query}`);
  }

  getRunGeojson(runId: string): Promise<Record<string, FeatureCollection>> {
    return this.request(`/runs/${runId}/geojson`);
  }

  deleteRun(runId: string): Promise<{ deleted: string }> {
    return this.request(`/runs/${runId}`, { method: "DELETE" });
  }
}
