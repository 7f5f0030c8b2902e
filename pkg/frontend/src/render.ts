/**
 * HTML fragment rendering for the explorer panels.
 *
 * Pure string builders so the view logic stays testable without a
 * browser; the host page drops these fragments into its containers.
 */

import type { ComparisonView } from "./compare.js";
import type { RunRow } from "./view.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const pct = (value: number) => `${value.toFixed(2)}%`;
const signed = (value: number, digits = 2) =>
  `${value >= 0 ? "+" : ""}${value.toFixed(digits)}`;

/** Status line with the visit-share badge once a run finishes. */
export function renderRunRow(row: RunRow): string {
  const badge =
    row.visitSharePct !== undefined
      ? ` <span class="badge share">${pct(row.visitSharePct)}</span>`
      : "";
  const error = row.error ? ` <span class="error">${escapeHtml(row.error)}</span>` : "";
  return (
    `<li class="run ${row.status}" data-run="${escapeHtml(row.runId)}">` +
    `${escapeHtml(row.runId)} <span class="status">${row.status}</span>` +
    `${badge}${error}</li>`
  );
}

export function renderRunList(rows: RunRow[]): string {
  return `<ul class="runs">${rows.map(renderRunRow).join("")}</ul>`;
}

/** Per-neighborhood delta table of the comparison view. */
export function renderDeltaTable(view: ComparisonView): string {
  const header =
    "<tr><th>Neighborhood</th><th>Budget Δ</th><th>Share Δ (pp)</th>" +
    "<th>L1 Δ (km)</th></tr>";
  const body = view.rows
    .map(
      (row) =>
        `<tr data-neighborhood="${escapeHtml(row.id)}">` +
        `<td>${escapeHtml(row.id)}</td>` +
        `<td>${signed(row.budgetDelta, 0)}</td>` +
        `<td>${signed(row.shareDelta)}</td>` +
        `<td>${signed(row.l1Delta, 4)}</td></tr>`,
    )
    .join("");
  const summary =
    `<tr class="summary"><td>weighted</td><td></td>` +
    `<td>${signed(view.weightedShareA - view.weightedShareB)}</td><td></td></tr>`;
  return `<table class="deltas">${header}${body}${summary}</table>`;
}
