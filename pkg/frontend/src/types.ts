/** Wire types mirroring the service's published JSON Schemas. */

export const TRIGGER_NAMES = ["aod", "temperature", "humidity", "wind_speed", "irr_var"] as const;
export type TriggerName = (typeof TRIGGER_NAMES)[number];

export type Weights = Record<TriggerName, number>;
export type Thresholds = Record<TriggerName, number>;

export interface ForecastOverrides {
  weights?: Weights;
  thresholds?: Partial<Thresholds>;
  band_edges?: [number, number];
}

export interface ForecastRequest {
  horizon: number;
  overrides?: ForecastOverrides;
}

export interface WeekPoint {
  week_start: string;
  yhat: number;
  lower: number;
  upper: number;
  trend: number;
  seasonal: number;
  regressors: number;
}

export interface HistoryPoint {
  week_start: string;
  score: number;
  label: "Low" | "Medium" | "High";
}

export interface ForecastResponse {
  horizon: number;
  interval_level: number;
  band_edges: [number, number];
  weeks: WeekPoint[];
  history: HistoryPoint[];
}

export interface RankingEntry {
  name: string;
  mean_abs_phi: number;
}

export interface GlobalExplainResponse {
  ranking: RankingEntry[];
}

export interface WaterfallRow {
  feature: string | null;
  contribution: number;
  running_total: number;
}

export interface SampleExplainResponse {
  feature_values: number[];
  base_values: number[];
  features: { name: string; phi_per_class: number[] }[];
  margins: number[];
  predicted_class: number;
  predicted_label: string;
  waterfall: {
    class_index: number;
    base_value: number;
    margin: number;
    rows: WaterfallRow[];
  };
}

export interface ServiceError {
  code: string;
  message: string;
  detail?: unknown;
}
