/**
 * Typed client for the logqlite HTTP API.
 *
 * The playground is a thin client: every semantic judgment (parsing,
 * execution, scoring) happens server-side, and every latency shown in the
 * UI is the server-reported one.  `fetch` is injectable for tests.
 */

export interface MetricSample {
  labels: Record<string, string>;
  value: number;
}

export interface LogRow {
  ts: number;
  labels: Record<string, string>;
  line: string;
}

export type QueryResult =
  | { type: 'metric'; evaluated_at?: number; samples: MetricSample[] }
  | { type: 'log'; truncated?: boolean; rows: LogRow[] };

export interface Diagnostic {
  code: string;
  span: [number, number];
  message: string;
}

export interface Score {
  query_type: 'LOG' | 'METRIC';
  parse_ok: boolean;
  validate_ok: boolean;
  exec_ok: boolean;
  exact_match: boolean;
  metric_correct?: boolean | null;
  log_precision?: number | null;
  log_recall?: number | null;
  log_f1?: number | null;
}

export interface GenerateResult {
  model: string;
  raw_text: string;
  query: string;
  latency_ms: number;
  error: string | null;
}

export interface ExecuteResponse {
  now: string;
  result: QueryResult | null;
  error: string | null;
  diagnostics?: Diagnostic[];
  score?: Score;
}

export interface CorpusInfo {
  name: string;
  application: string;
  n_streams: number;
  n_entries: number;
  anchor: string;
  labels: Record<string, string[]>;
}

export interface ModelInfo {
  name: string;
  model: string;
  base_url: string;
}

export interface FeedbackRecord {
  nl: string;
  chosen_query: string;
  verdict: 'up' | 'down';
  corrected_query?: string | null;
  model?: string | null;
}

type Fetch = typeof globalThis.fetch;

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly detail?: unknown) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchFn: Fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      headers: { 'content-type': 'application/json' },
      ...init,
    });
    if (!response.ok) {
      let detail: unknown;
      try {
        detail = (await response.json()).detail;
      } catch {
        detail = undefined;
      }
      throw new ApiError(`${path} failed (${response.status})`, response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request('/api/health');
  }

  corpora(): Promise<CorpusInfo[]> {
    return this.request('/api/corpora');
  }

  models(): Promise<ModelInfo[]> {
    return this.request('/api/models');
  }

  generate(corpus: string, nl: string, models: string[]): Promise<{ results: GenerateResult[] }> {
    return this.request('/api/generate', {
      method: 'POST',
      body: JSON.stringify({ corpus, nl, models }),
    });
  }

  executeCandidate(corpus: string, query: string, tupleId?: string): Promise<ExecuteResponse> {
    return this.request('/api/execute_candidate', {
      method: 'POST',
      body: JSON.stringify({ corpus, query, tuple_id: tupleId || null }),
    });
  }

  feedback(record: FeedbackRecord): Promise<{ ok: boolean }> {
    return this.request('/api/feedback', { method: 'POST', body: JSON.stringify(record) });
  }
}
