export { ApiError, ServiceClient } from "./api.js";
export {
  allocationDeltas,
  buildLayers,
  compareRuns,
  pairLayers,
  parkColor,
  type ComparisonView,
  type DeltaRow,
  type LayerPair,
  type MapLayer,
} from "./compare.js";
export {
  defaultForm,
  toConfigPayload,
  validateForm,
  type ScenarioForm,
} from "./config.js";
export { pollRun, type PollOptions } from "./poll.js";
export {
  escapeHtml,
  renderDeltaTable,
  renderRunList,
  renderRunRow,
} from "./render.js";
export * from "./types.js";
export { PlannerView, type RunRow } from "./view.js";
