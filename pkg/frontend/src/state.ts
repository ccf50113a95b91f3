/**
 * Scenario state: what the user has dialled in, independent of any view.
 *
 * Invariants: weights are non-negative and renormalised to sum to 1 after
 * every slider move; band edges stay ordered inside (0, 1). The whole state
 * round-trips through a URL query string so a link reproduces the view.
 */

import { ForecastOverrides, ForecastRequest, Thresholds, TRIGGER_NAMES, TriggerName, Weights } from "./types.js";

export const HORIZON_PRESETS = [4, 12, 52] as const;

export interface ScenarioState {
  horizon: number;
  weights: Weights;
  thresholds: Thresholds;
  bandEdges: [number, number];
  /** ISO week-start of the history point selected for the waterfall pane. */
  selectedSample: string | null;
}

export const DEFAULT_STATE: ScenarioState = {
  horizon: 12,
  weights: { aod: 0.35, temperature: 0.25, humidity: 0.2, wind_speed: 0.15, irr_var: 0.05 },
  thresholds: { aod: 0.9, temperature: 35, humidity: 70, wind_speed: 5, irr_var: 90 },
  bandEdges: [0.3, 0.6],
  selectedSample: null,
};

export function weightSum(weights: Weights): number {
  return TRIGGER_NAMES.reduce((total, name) => total + weights[name], 0);
}

/**
 * Set one slider and renormalise the rest so the total is exactly 1.
 *
 * The moved slider keeps its requested value (clamped to [0, 1]); the other
 * four scale proportionally into the remainder. When they are all zero the
 * remainder is spread evenly.
 */
export function setWeight(weights: Weights, name: TriggerName, value: number): Weights {
  const pinned = Math.min(1, Math.max(0, value));
  const remainder = 1 - pinned;
  const others = TRIGGER_NAMES.filter((n) => n !== name);
  const othersTotal = others.reduce((total, n) => total + weights[n], 0);
  const next = { ...weights, [name]: pinned };
  for (const n of others) {
    next[n] = othersTotal > 0 ? (weights[n] / othersTotal) * remainder : remainder / others.length;
  }
  // pin the largest remaining weight so the float sum is exactly 1
  const drift = 1 - weightSum(next);
  if (drift !== 0) {
    const anchor = others.reduce((a, b) => (next[a] >= next[b] ? a : b));
    next[anchor] = Math.max(0, next[anchor] + drift);
  }
  return next;
}

/** Displayed sum, formatted the way the weight panel shows it. */
export function displayedWeightSum(weights: Weights): string {
  return weightSum(weights).toFixed(3);
}

export function setBandEdges(state: ScenarioState, low: number, high: number): [number, number] {
  const lo = Math.min(Math.max(low, 0.001), 0.999);
  const hi = Math.min(Math.max(high, lo), 0.999);
  return [lo, hi];
}

/** Overrides payload; omitted entirely when the state matches the defaults. */
export function toOverrides(state: ScenarioState): ForecastOverrides | undefined {
  const overrides: ForecastOverrides = {};
  if (TRIGGER_NAMES.some((n) => state.weights[n] !== DEFAULT_STATE.weights[n])) {
    overrides.weights = { ...state.weights };
  }
  if (TRIGGER_NAMES.some((n) => state.thresholds[n] !== DEFAULT_STATE.thresholds[n])) {
    overrides.thresholds = {};
    for (const name of TRIGGER_NAMES) {
      if (name === "irr_var") continue; // percentile rank handled below
      if (state.thresholds[name] !== DEFAULT_STATE.thresholds[name]) {
        overrides.thresholds[name] = state.thresholds[name];
      }
    }
    if (state.thresholds.irr_var !== DEFAULT_STATE.thresholds.irr_var) {
      (overrides.thresholds as Record<string, number>)["irr_var_percentile"] = state.thresholds.irr_var;
    }
    if (Object.keys(overrides.thresholds).length === 0) delete overrides.thresholds;
  }
  if (state.bandEdges[0] !== DEFAULT_STATE.bandEdges[0] || state.bandEdges[1] !== DEFAULT_STATE.bandEdges[1]) {
    overrides.band_edges = [state.bandEdges[0], state.bandEdges[1]];
  }
  return Object.keys(overrides).length ? overrides : undefined;
}

export function toForecastRequest(state: ScenarioState): ForecastRequest {
  const overrides = toOverrides(state);
  return overrides ? { horizon: state.horizon, overrides } : { horizon: state.horizon };
}

/** Full-precision query string; String(number) round-trips float64 exactly. */
export function encodeState(state: ScenarioState): string {
  const params = new URLSearchParams();
  params.set("h", String(state.horizon));
  params.set("w", TRIGGER_NAMES.map((n) => String(state.weights[n])).join(","));
  params.set("t", TRIGGER_NAMES.map((n) => String(state.thresholds[n])).join(","));
  params.set("b", `${state.bandEdges[0]},${state.bandEdges[1]}`);
  if (state.selectedSample) params.set("s", state.selectedSample);
  return params.toString();
}

export function decodeState(query: string): ScenarioState {
  const params = new URLSearchParams(query);
  const state: ScenarioState = structuredClone(DEFAULT_STATE);
  const horizon = Number(params.get("h"));
  if (Number.isInteger(horizon) && horizon >= 1 && horizon <= 520) state.horizon = horizon;
  const weights = params.get("w")?.split(",").map(Number);
  if (weights?.length === TRIGGER_NAMES.length && weights.every((w) => Number.isFinite(w) && w >= 0)) {
    TRIGGER_NAMES.forEach((name, i) => (state.weights[name] = weights[i]));
  }
  const thresholds = params.get("t")?.split(",").map(Number);
  if (thresholds?.length === TRIGGER_NAMES.length && thresholds.every(Number.isFinite)) {
    TRIGGER_NAMES.forEach((name, i) => (state.thresholds[name] = thresholds[i]));
  }
  const bands = params.get("b")?.split(",").map(Number);
  if (bands?.length === 2 && bands.every(Number.isFinite) && bands[0] <= bands[1]) {
    state.bandEdges = [bands[0], bands[1]];
  }
  state.selectedSample = params.get("s");
  return state;
}
