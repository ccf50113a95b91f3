/**
 * SVG chart builders. Pure functions from service payloads to markup: the
 * forecast chart draws the risk-band background at the current edges, the
 * uncertainty band, the forecast line, and history as dots; the ranking
 * chart draws mean-|phi| bars. No DOM access here, so layout is testable.
 */

import { ForecastResponse, RankingEntry } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const FORECAST_GEOMETRY: ChartGeometry = {
  width: 860,
  height: 360,
  padLeft: 48,
  padRight: 16,
  padTop: 12,
  padBottom: 28,
};

export interface ScorePoint {
  week: string;
  value: number;
  x: number;
  y: number;
}

export interface ForecastChartModel {
  bandRects: { label: "Low" | "Medium" | "High"; y: number; height: number }[];
  historyPoints: ScorePoint[];
  forecastPath: string;
  uncertaintyPath: string;
  yMin: number;
  yMax: number;
}

function scaleLinear(domainMin: number, domainMax: number, rangeMin: number, rangeMax: number) {
  const span = domainMax - domainMin || 1;
  return (v: number) => rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

export function buildForecastChart(
  response: ForecastResponse,
  geometry: ChartGeometry = FORECAST_GEOMETRY,
): ForecastChartModel {
  const history = response.history;
  const weeks = response.weeks;
  const values = [
    ...history.map((h) => h.score),
    ...weeks.flatMap((w) => [w.lower, w.upper, w.yhat]),
    0,
    1,
  ];
  const yMin = Math.min(...values);
  const yMax = Math.max(...values);
  const n = history.length + weeks.length;
  const x = scaleLinear(0, Math.max(n - 1, 1), geometry.padLeft, geometry.width - geometry.padRight);
  const y = scaleLinear(yMin, yMax, geometry.height - geometry.padBottom, geometry.padTop);

  const [lowEdge, highEdge] = response.band_edges;
  const bandRects = [
    { label: "High" as const, y: y(yMax), height: Math.max(0, y(highEdge) - y(yMax)) },
    { label: "Medium" as const, y: y(highEdge), height: Math.max(0, y(lowEdge) - y(highEdge)) },
    { label: "Low" as const, y: y(lowEdge), height: Math.max(0, y(yMin) - y(lowEdge)) },
  ];

  const historyPoints = history.map((h, i) => ({
    week: h.week_start,
    value: h.score,
    x: x(i),
    y: y(h.score),
  }));

  const forecastCoords = weeks.map((w, i) => `${x(history.length + i).toFixed(2)},${y(w.yhat).toFixed(2)}`);
  const forecastPath = forecastCoords.length ? `M${forecastCoords.join(" L")}` : "";

  const upper = weeks.map((w, i) => `${x(history.length + i).toFixed(2)},${y(w.upper).toFixed(2)}`);
  const lower = weeks
    .map((w, i) => `${x(history.length + i).toFixed(2)},${y(w.lower).toFixed(2)}`)
    .reverse();
  const uncertaintyPath = weeks.length ? `M${upper.join(" L")} L${lower.join(" L")} Z` : "";

  return { bandRects, historyPoints, forecastPath, uncertaintyPath, yMin, yMax };
}

const BAND_FILL: Record<string, string> = {
  Low: "#e8f5e9",
  Medium: "#fff8e1",
  High: "#ffebee",
};

export function forecastChartSvg(response: ForecastResponse, geometry: ChartGeometry = FORECAST_GEOMETRY): string {
  const model = buildForecastChart(response, geometry);
  const plotLeft = geometry.padLeft;
  const plotWidth = geometry.width - geometry.padLeft - geometry.padRight;
  const parts: string[] = [
    `<svg viewBox="0 0 ${geometry.width} ${geometry.height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (const band of model.bandRects) {
    parts.push(
      `<rect x="${plotLeft}" y="${band.y.toFixed(2)}" width="${plotWidth}" height="${band.height.toFixed(2)}"` +
        ` fill="${BAND_FILL[band.label]}" data-band="${band.label}"/>`,
    );
  }
  if (model.uncertaintyPath) {
    parts.push(`<path d="${model.uncertaintyPath}" fill="#90caf9" fill-opacity="0.45" stroke="none" data-role="band"/>`);
  }
  if (model.forecastPath) {
    parts.push(`<path d="${model.forecastPath}" fill="none" stroke="#1565c0" stroke-width="2" data-role="forecast"/>`);
  }
  for (const p of model.historyPoints) {
    parts.push(
      `<circle cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="3" fill="#263238"` +
        ` data-role="history" data-week="${p.week}" data-value="${p.value}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export interface RankingBar {
  name: string;
  value: number;
  width: number;
}

export function buildRankingBars(ranking: RankingEntry[], maxWidth = 300): RankingBar[] {
  const top = ranking[0]?.mean_abs_phi || 1;
  return ranking.map((entry) => ({
    name: entry.name,
    value: entry.mean_abs_phi,
    width: top > 0 ? (entry.mean_abs_phi / top) * maxWidth : 0,
  }));
}

export function rankingSvg(ranking: RankingEntry[], maxWidth = 300, rowHeight = 22): string {
  const bars = buildRankingBars(ranking, maxWidth);
  const height = bars.length * rowHeight + 8;
  const parts = [
    `<svg viewBox="0 0 ${maxWidth + 260} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  bars.forEach((bar, i) => {
    const yTop = 4 + i * rowHeight;
    parts.push(
      `<text x="0" y="${yTop + 14}" font-size="12" data-role="label">${bar.name}</text>`,
      `<rect x="200" y="${yTop}" width="${bar.width.toFixed(2)}" height="${rowHeight - 6}"` +
        ` fill="#5c6bc0" data-role="bar" data-name="${bar.name}"/>`,
      `<text x="${(204 + bar.width).toFixed(2)}" y="${yTop + 14}" font-size="11">${bar.value.toExponential(2)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export interface WaterfallChartBar {
  label: string;
  x: number;
  width: number;
  positive: boolean;
}

export function buildWaterfallBars(
  bars: { label: string; from: number; to: number }[],
  axisWidth = 420,
): WaterfallChartBar[] {
  if (!bars.length) return [];
  const lo = Math.min(...bars.flatMap((b) => [b.from, b.to]));
  const hi = Math.max(...bars.flatMap((b) => [b.from, b.to]));
  const scale = scaleLinear(lo, hi, 0, axisWidth);
  return bars.map((b) => {
    const a = scale(b.from);
    const z = scale(b.to);
    return {
      label: b.label,
      x: Math.min(a, z),
      width: Math.abs(z - a),
      positive: b.to >= b.from,
    };
  });
}
