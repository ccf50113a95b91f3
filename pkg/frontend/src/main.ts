/**
 * Scenario Builder wiring: sliders and inputs mutate the scenario state,
 * the state round-trips through the URL, and every number on screen comes
 * from a service response. A failed request raises a toast and keeps the
 * previous view.
 */

import { ApiClient } from "./api.js";
import { forecastChartSvg, rankingSvg, buildWaterfallBars } from "./charts.js";
import {
  DEFAULT_STATE,
  HORIZON_PRESETS,
  ScenarioState,
  decodeState,
  displayedWeightSum,
  encodeState,
  setBandEdges,
  setWeight,
  toForecastRequest,
} from "./state.js";
import { ForecastResponse, SampleExplainResponse, TRIGGER_NAMES, TriggerName } from "./types.js";
import { EMPTY_STATE_MESSAGE, layoutWaterfall } from "./waterfall.js";

const api = new ApiClient("");

let state: ScenarioState = decodeState(window.location.search);
let lastForecast: ForecastResponse | null = null;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function toast(message: string) {
  const el = $("toast");
  el.textContent = message;
  el.classList.add("visible");
  setTimeout(() => el.classList.remove("visible"), 4000);
}

function syncUrl() {
  const query = encodeState(state);
  window.history.replaceState(null, "", `${window.location.pathname}?${query}`);
}

function renderControls() {
  for (const name of TRIGGER_NAMES) {
    const slider = $(`w-${name}`) as HTMLInputElement;
    slider.value = String(state.weights[name]);
    $(`wv-${name}`).textContent = state.weights[name].toFixed(3);
    const threshold = $(`t-${name}`) as HTMLInputElement;
    threshold.value = String(state.thresholds[name]);
  }
  $("weight-sum").textContent = displayedWeightSum(state.weights);
  ($("band-low") as HTMLInputElement).value = String(state.bandEdges[0]);
  ($("band-high") as HTMLInputElement).value = String(state.bandEdges[1]);
  for (const preset of HORIZON_PRESETS) {
    $(`h-${preset}`).classList.toggle("active", state.horizon === preset);
  }
  ($("h-custom") as HTMLInputElement).value = String(state.horizon);
}

function renderForecast(response: ForecastResponse) {
  lastForecast = response;
  $("forecast-chart").innerHTML = forecastChartSvg(response);
  $("forecast-meta").textContent =
    `${response.history.length} weeks of history, ${response.horizon}-week forecast, ` +
    `${Math.round(response.interval_level * 100)}% interval, bands at ` +
    `${response.band_edges[0].toFixed(2)}/${response.band_edges[1].toFixed(2)}`;
  for (const dot of $("forecast-chart").querySelectorAll<SVGCircleElement>("circle[data-week]")) {
    dot.addEventListener("click", () => selectSample(dot.dataset.week!));
  }
}

function renderWaterfall(payload: SampleExplainResponse | null) {
  const pane = $("waterfall");
  if (!payload) {
    pane.innerHTML = `<p class="empty">${EMPTY_STATE_MESSAGE}</p>`;
    return;
  }
  const layout = layoutWaterfall(payload);
  const bars = buildWaterfallBars(layout.bars);
  const rows = layout.bars
    .map((bar, i) => {
      const geometry = bars[i];
      const cls = geometry.positive ? "pos" : "neg";
      return (
        `<div class="wf-row"><span class="wf-label">${bar.label}</span>` +
        `<span class="wf-track"><span class="wf-bar ${cls}" style="margin-left:${geometry.x.toFixed(1)}px;` +
        `width:${Math.max(geometry.width, 1).toFixed(1)}px"></span></span>` +
        `<span class="wf-value">${bar.contribution >= 0 ? "+" : ""}${bar.contribution.toFixed(4)}</span></div>`
      );
    })
    .join("");
  pane.innerHTML =
    `<p>Predicted <strong>${payload.predicted_label}</strong> ` +
    `(margin ${layout.margin.toFixed(4)}, base ${layout.baseValue.toFixed(4)})</p>` +
    rows +
    `<p class="sum-check ${layout.telescopes ? "ok" : "bad"}">sum check: base + contributions - margin = ` +
    `${layout.sumCheck.toExponential(2)}</p>`;
}

async function refreshForecast() {
  syncUrl();
  try {
    const response = await api.forecastDebounced(toForecastRequest(state));
    if (response) renderForecast(response);
  } catch (error) {
    toast(`forecast failed: ${(error as Error).message}`);
  }
}

async function selectSample(week: string) {
  state.selectedSample = week;
  syncUrl();
  if (!lastForecast) return;
  const index = lastForecast.history.findIndex((h) => h.week_start === week);
  if (index < 0) return;
  // ask the service to explain the representative day of that week
  try {
    const payload = await api.explainSampleForWeek(week);
    renderWaterfall(payload);
  } catch (error) {
    toast(`explanation failed: ${(error as Error).message}`);
  }
}

async function loadRanking() {
  try {
    const body = await api.explainGlobal();
    $("ranking").innerHTML = rankingSvg(body.ranking);
  } catch (error) {
    toast(`ranking failed: ${(error as Error).message}`);
  }
}

function bindControls() {
  for (const name of TRIGGER_NAMES) {
    ($(`w-${name}`) as HTMLInputElement).addEventListener("input", (ev) => {
      const value = Number((ev.target as HTMLInputElement).value);
      state.weights = setWeight(state.weights, name as TriggerName, value);
      renderControls();
      void refreshForecast();
    });
    ($(`t-${name}`) as HTMLInputElement).addEventListener("change", (ev) => {
      state.thresholds[name as TriggerName] = Number((ev.target as HTMLInputElement).value);
      void refreshForecast();
    });
  }
  $("band-low").addEventListener("change", () => {
    state.bandEdges = setBandEdges(
      state,
      Number(($("band-low") as HTMLInputElement).value),
      Number(($("band-high") as HTMLInputElement).value),
    );
    renderControls();
    void refreshForecast();
  });
  $("band-high").addEventListener("change", () => {
    state.bandEdges = setBandEdges(
      state,
      Number(($("band-low") as HTMLInputElement).value),
      Number(($("band-high") as HTMLInputElement).value),
    );
    renderControls();
    void refreshForecast();
  });
  for (const preset of HORIZON_PRESETS) {
    $(`h-${preset}`).addEventListener("click", () => {
      state.horizon = preset;
      renderControls();
      void refreshForecast();
    });
  }
  $("h-custom").addEventListener("change", (ev) => {
    const value = Number((ev.target as HTMLInputElement).value);
    if (Number.isInteger(value) && value >= 1 && value <= 520) {
      state.horizon = value;
      renderControls();
      void refreshForecast();
    }
  });
  $("reset").addEventListener("click", () => {
    state = structuredClone(DEFAULT_STATE);
    renderControls();
    void refreshForecast();
  });
}

async function boot() {
  renderControls();
  renderWaterfall(null);
  bindControls();
  if (!(await api.health())) {
    toast("service unreachable; showing controls only");
    return;
  }
  await Promise.all([refreshForecast(), loadRanking()]);
}

void boot();
