/** HTML builders for panels and results. Pure string functions. */

import type { Diagnostic, ExecuteResponse, QueryResult, Score } from './api.js';
import type { PanelState } from './state.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Server latencies display like the demo's "2.9 s" badges. */
export function fmtLatency(ms: number | null): string {
  if (ms === null) {
    return '';
  }
  if (ms < 1000) {
    return `${Math.round(ms)} ms`;
  }
  return `${(ms / 1000).toFixed(2)} s`;
}

/** Wrap the diagnostic span of the query text in <mark>. */
export function highlightSpan(query: string, span: [number, number]): string {
  const [start, end] = span;
  if (start < 0 || end < start || start > query.length) {
    return escapeHtml(query);
  }
  const stop = Math.min(end, query.length);
  return (
    escapeHtml(query.slice(0, start)) +
    '<mark>' +
    escapeHtml(query.slice(start, stop) || ' ') +
    '</mark>' +
    escapeHtml(query.slice(stop))
  );
}

export function labelsText(labels: Record<string, string>): string {
  const parts = Object.keys(labels)
    .sort()
    .map((k) => `${k}="${labels[k]}"`);
  return `{${parts.join(', ')}}`;
}

function resultTable(result: QueryResult): string {
  if (result.type === 'metric') {
    if (result.samples.length === 0) {
      return '<p class="empty">empty vector</p>';
    }
    const rows = result.samples
      .map(
        (s) =>
          `<tr><td class="labels">${escapeHtml(labelsText(s.labels))}</td>` +
          `<td class="value">${s.value}</td></tr>`,
      )
      .join('');
    return `<table><thead><tr><th>labels</th><th>value</th></tr></thead><tbody>${rows}</tbody></table>`;
  }
  if (result.rows.length === 0) {
    return '<p class="empty">no log lines</p>';
  }
  const rows = result.rows
    .map(
      (r) =>
        `<tr><td class="ts">${new Date(r.ts / 1e6).toISOString()}</td>` +
        `<td class="line">${escapeHtml(r.line)}</td></tr>`,
    )
    .join('');
  const note = result.truncated ? '<p class="note">truncated to the newest rows</p>' : '';
  return `<table><thead><tr><th>time</th><th>line</th></tr></thead><tbody>${rows}</tbody></table>${note}`;
}

function scoreBadges(score: Score): string {
  const badges: string[] = [];
  const flag = (label: string, ok: boolean) =>
    `<span class="badge ${ok ? 'ok' : 'bad'}">${label}</span>`;
  badges.push(flag('executes', score.exec_ok));
  badges.push(flag('exact match', score.exact_match));
  if (score.query_type === 'METRIC') {
    badges.push(flag('output correct', score.metric_correct === true));
  } else {
    const f1 = score.log_f1 ?? 0;
    badges.push(`<span class="badge ${f1 === 1 ? 'ok' : ''}">F1 ${f1.toFixed(2)}</span>`);
  }
  return `<div class="score">${badges.join(' ')}</div>`;
}

function diagnosticsHtml(query: string, diagnostics: Diagnostic[]): string {
  const blocks = diagnostics
    .map(
      (d) =>
        `<div class="diagnostic"><code>${highlightSpan(query, d.span)}</code>` +
        `<p>${escapeHtml(d.code)}: ${escapeHtml(d.message)}</p></div>`,
    )
    .join('');
  return `<div class="diagnostics">${blocks}</div>`;
}

export function executionHtml(query: string, execution: ExecuteResponse): string {
  const parts: string[] = [];
  if (execution.score) {
    parts.push(scoreBadges(execution.score));
  }
  if (execution.diagnostics && execution.diagnostics.length > 0) {
    parts.push(diagnosticsHtml(query, execution.diagnostics));
  } else if (execution.error) {
    parts.push(`<p class="error">${escapeHtml(execution.error)}</p>`);
  }
  if (execution.result) {
    parts.push(resultTable(execution.result));
  }
  if (execution.now) {
    parts.push(`<p class="note">evaluated at ${escapeHtml(execution.now)}</p>`);
  }
  return parts.join('');
}

export function panelHtml(panel: PanelState, index: number): string {
  const latency = panel.latencyMs === null ? '' : `<span class="latency">${fmtLatency(panel.latencyMs)}</span>`;
  const genError = panel.genError
    ? `<p class="error">generation failed: ${escapeHtml(panel.genError)}</p>`
    : '';
  const body = panel.execution ? executionHtml(panel.query, panel.execution) : '';
  const runLabel = panel.running ? 'Running…' : 'Run';
  return `
  <section class="panel" data-index="${index}">
    <header><strong>${escapeHtml(panel.model)}</strong>${latency}</header>
    ${genError}
    <textarea data-role="query" rows="4" spellcheck="false">${escapeHtml(panel.query)}</textarea>
    <div class="controls">
      <button data-role="run" ${panel.running ? 'disabled' : ''}>${runLabel}</button>
      <button data-role="up" title="good query">&#128077;</button>
      <button data-role="down" title="bad query">&#128078;</button>
    </div>
    <div class="result" data-role="result">${body}</div>
  </section>`;
}
