/**
 * Pure panel state transitions; main.ts owns the array and re-renders.
 * One panel per requested model; editing a query invalidates the previous
 * execution so a stale result can never sit under fresh text.
 */

import type { ExecuteResponse, GenerateResult } from './api.js';

export interface PanelState {
  model: string;
  query: string;
  latencyMs: number | null; // server-reported generation latency
  genError: string | null;
  execution: ExecuteResponse | null;
  running: boolean;
}

export function panelsFromGenerate(results: GenerateResult[]): PanelState[] {
  return results.map((r) => ({
    model: r.model,
    query: r.query,
    latencyMs: r.error ? null : r.latency_ms,
    genError: r.error,
    execution: null,
    running: false,
  }));
}

export function editQuery(panel: PanelState, query: string): PanelState {
  if (query === panel.query) {
    return panel;
  }
  return { ...panel, query, execution: null };
}

export function startRun(panel: PanelState): PanelState {
  return { ...panel, running: true };
}

export function finishRun(panel: PanelState, execution: ExecuteResponse): PanelState {
  return { ...panel, running: false, execution };
}

export function failRun(panel: PanelState, message: string): PanelState {
  return {
    ...panel,
    running: false,
    execution: { now: '', result: null, error: message },
  };
}

export function canSubmit(nl: string, models: string[]): boolean {
  return nl.trim().length > 0 && models.length > 0;
}
