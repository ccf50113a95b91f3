/**
 * Service client with the request discipline the scenario builder needs:
 * slider input is debounced (250 ms), at most one forecast request is in
 * flight, and responses that arrive for a superseded scenario are discarded
 * by sequence number.
 */

import { ForecastRequest, ForecastResponse, GlobalExplainResponse, SampleExplainResponse } from "./types.js";

export const DEBOUNCE_MS = 250;

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function readJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "error";
    let message = `HTTP ${response.status}`;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status message
    }
    throw new ApiError(response.status, code, message);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  private seq = 0;
  private delivered = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private queuedResolve: ((value: ForecastResponse | null) => void) | null = null;
  private inFlight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async forecast(request: ForecastRequest, signal?: AbortSignal): Promise<ForecastResponse> {
    return readJson<ForecastResponse>(
      await this.fetchImpl(`${this.baseUrl}/v1/forecast`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
        signal,
      }),
    );
  }

  /**
   * Debounced forecast: rapid successive calls collapse into one request
   * once input settles. At most one request is in flight: dispatching a new
   * one aborts its predecessor, and a response belonging to a superseded
   * call resolves to null instead of clobbering newer state.
   */
  forecastDebounced(request: ForecastRequest): Promise<ForecastResponse | null> {
    this.seq += 1;
    const mySeq = this.seq;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
      this.queuedResolve?.(null); // settle the superseded call
      this.queuedResolve = null;
    }
    return new Promise((resolve, reject) => {
      this.queuedResolve = resolve;
      this.timer = setTimeout(() => {
        this.timer = null;
        this.queuedResolve = null;
        this.inFlight?.abort();
        const controller = new AbortController();
        this.inFlight = controller;
        this.forecast(request, controller.signal).then(
          (response) => {
            if (this.inFlight === controller) this.inFlight = null;
            if (mySeq < this.delivered || mySeq !== this.seq) {
              resolve(null); // a newer scenario already rendered
              return;
            }
            this.delivered = mySeq;
            resolve(response);
          },
          (error) => {
            if (this.inFlight === controller) this.inFlight = null;
            if (controller.signal.aborted) {
              resolve(null); // aborted in favour of a newer scenario
              return;
            }
            reject(error);
          },
        );
      }, DEBOUNCE_MS);
    });
  }

  async explainGlobal(): Promise<GlobalExplainResponse> {
    return readJson<GlobalExplainResponse>(await this.fetchImpl(`${this.baseUrl}/v1/explain/global`));
  }

  async explainSample(features: number[]): Promise<SampleExplainResponse> {
    return readJson<SampleExplainResponse>(
      await this.fetchImpl(`${this.baseUrl}/v1/explain/sample`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ features }),
      }),
    );
  }

  /** Explain the stored history week a chart point refers to. */
  async explainSampleForWeek(weekStart: string): Promise<SampleExplainResponse> {
    return readJson<SampleExplainResponse>(
      await this.fetchImpl(`${this.baseUrl}/v1/explain/sample`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ week_start: weekStart }),
      }),
    );
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/v1/health`);
      return response.ok;
    } catch {
      return false;
    }
  }
}
