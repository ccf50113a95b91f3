import { describe, expect, it } from "vitest";

import { buildForecastChart, buildRankingBars, buildWaterfallBars, forecastChartSvg, rankingSvg } from "../src/charts.js";
import { ForecastResponse } from "../src/types.js";

function response(): ForecastResponse {
  const history = Array.from({ length: 10 }, (_, i) => ({
    week_start: `2024-01-${String(i + 1).padStart(2, "0")}`,
    score: 0.1 + 0.05 * i,
    label: "Low" as const,
  }));
  const weeks = Array.from({ length: 6 }, (_, i) => ({
    week_start: `2024-04-${String(i + 1).padStart(2, "0")}`,
    yhat: 0.5 + 0.02 * i,
    lower: 0.4,
    upper: 0.7,
    trend: 0.5,
    seasonal: 0.0,
    regressors: 0.02 * i,
  }));
  return { horizon: 6, interval_level: 0.8, band_edges: [0.3, 0.6], weeks, history };
}

describe("forecast chart", () => {
  it("renders one history dot per history week", () => {
    const model = buildForecastChart(response());
    expect(model.historyPoints).toHaveLength(10);
    const xs = model.historyPoints.map((p) => p.x);
    expect([...xs].sort((a, b) => a - b)).toEqual(xs); // time runs left to right
  });

  it("draws three stacked risk bands covering the plot", () => {
    const model = buildForecastChart(response());
    expect(model.bandRects.map((b) => b.label)).toEqual(["High", "Medium", "Low"]);
    const total = model.bandRects.reduce((s, b) => s + b.height, 0);
    const fullHeight = Math.abs(model.bandRects[2].y + model.bandRects[2].height - model.bandRects[0].y);
    expect(total).toBeCloseTo(fullHeight, 6);
  });

  it("band and forecast paths are well-formed", () => {
    const model = buildForecastChart(response());
    expect(model.forecastPath.startsWith("M")).toBe(true);
    expect(model.forecastPath.split("L")).toHaveLength(6);
    expect(model.uncertaintyPath.endsWith("Z")).toBe(true);
  });

  it("svg carries band, forecast, and history roles", () => {
    const svg = forecastChartSvg(response());
    expect(svg).toContain('data-band="High"');
    expect(svg).toContain('data-role="forecast"');
    expect((svg.match(/data-role="history"/g) ?? []).length).toBe(10);
  });

  it("copes with an empty forecast", () => {
    const r = response();
    r.weeks = [];
    const model = buildForecastChart(r);
    expect(model.forecastPath).toBe("");
    expect(model.uncertaintyPath).toBe("");
  });
});

describe("ranking chart", () => {
  const ranking = [
    { name: "humidity", mean_abs_phi: 0.8 },
    { name: "temperature", mean_abs_phi: 0.4 },
    { name: "month", mean_abs_phi: 0.0 },
  ];

  it("scales bars to the leader", () => {
    const bars = buildRankingBars(ranking, 300);
    expect(bars[0].width).toBe(300);
    expect(bars[1].width).toBe(150);
    expect(bars[2].width).toBe(0);
  });

  it("svg lists every feature in order", () => {
    const svg = rankingSvg(ranking);
    const order = [...svg.matchAll(/data-name="([^"]+)"/g)].map((m) => m[1]);
    expect(order).toEqual(["humidity", "temperature", "month"]);
  });
});

describe("waterfall bars", () => {
  it("positions bars by their interval on the margin axis", () => {
    const bars = buildWaterfallBars(
      [
        { label: "base", from: -1, to: -1 },
        { label: "humidity", from: -1, to: 0.4 },
        { label: "temperature", from: 0.4, to: 0.1 },
      ],
      400,
    );
    expect(bars[1].positive).toBe(true);
    expect(bars[2].positive).toBe(false);
    expect(bars[1].width).toBeGreaterThan(bars[2].width);
  });

  it("empty input yields no bars", () => {
    expect(buildWaterfallBars([])).toEqual([]);
  });
});
