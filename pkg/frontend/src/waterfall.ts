/**
 * Waterfall pane helpers. The dashboard does no attribution math of its
 * own: rows come from the service verbatim; this module only lays them out
 * and checks that the running totals telescope from base to margin, which
 * the pane surfaces as a sum check.
 */

import { SampleExplainResponse, WaterfallRow } from "./types.js";

export interface WaterfallBar {
  label: string;
  contribution: number;
  /** Bar occupies [from, to] on the margin axis. */
  from: number;
  to: number;
}

export interface WaterfallLayout {
  baseValue: number;
  margin: number;
  bars: WaterfallBar[];
  /** |base + sum(contributions) - margin| as reported to the user. */
  sumCheck: number;
  telescopes: boolean;
}

export function layoutWaterfall(payload: SampleExplainResponse, tolerance = 1e-6): WaterfallLayout {
  const { base_value, margin, rows } = payload.waterfall;
  const bars: WaterfallBar[] = [];
  let running = base_value;
  for (const row of rows) {
    bars.push({
      label: row.feature ?? "(base)",
      contribution: row.contribution,
      from: running,
      to: row.running_total,
    });
    running = row.running_total;
  }
  const sumCheck = Math.abs(running - margin);
  return {
    baseValue: base_value,
    margin,
    bars,
    sumCheck,
    telescopes: sumCheck <= tolerance && barsAreContiguous(bars, base_value, tolerance),
  };
}

function barsAreContiguous(bars: WaterfallBar[], base: number, tolerance: number): boolean {
  let previous = base;
  for (const bar of bars) {
    if (Math.abs(bar.from - previous) > tolerance) return false;
    if (Math.abs(bar.to - (bar.from + bar.contribution)) > tolerance) return false;
    previous = bar.to;
  }
  return true;
}

/** Empty-state guidance shown when no history point is selected. */
export const EMPTY_STATE_MESSAGE = "Select a history point on the chart to see which variables drove that week's prediction.";

export function describeRow(row: WaterfallRow): string {
  const sign = row.contribution >= 0 ? "+" : "";
  return `${row.feature ?? "base"}: ${sign}${row.contribution.toFixed(4)}`;
}
