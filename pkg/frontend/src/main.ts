/** DOM wiring: state lives here, rendering goes through view.ts. */

import { ApiClient } from './api.js';
import { FeedbackQueue } from './feedback.js';
import {
  PanelState,
  canSubmit,
  editQuery,
  failRun,
  finishRun,
  panelsFromGenerate,
  startRun,
} from './state.js';
import { panelHtml } from './view.js';

const api = new ApiClient();
const feedbackQueue = new FeedbackQueue(
  (record) => api.feedback(record),
  3000,
  (pending) => setBanner(pending > 0 ? `feedback queued (${pending}) — retrying` : null),
);

let panels: PanelState[] = [];
let lastQuestion = '';

const el = {
  corpus: document.querySelector<HTMLSelectElement>('#corpus')!,
  models: document.querySelector<HTMLDivElement>('#models')!,
  question: document.querySelector<HTMLInputElement>('#question')!,
  tupleId: document.querySelector<HTMLInputElement>('#tuple-id')!,
  submit: document.querySelector<HTMLButtonElement>('#submit')!,
  banner: document.querySelector<HTMLDivElement>('#banner')!,
  panels: document.querySelector<HTMLDivElement>('#panels')!,
};

function setBanner(message: string | null): void {
  el.banner.textContent = message ?? '';
  el.banner.hidden = message === null;
}

function selectedModels(): string[] {
  return Array.from(el.models.querySelectorAll<HTMLInputElement>('input:checked')).map(
    (input) => input.value,
  );
}

function refreshSubmit(): void {
  el.submit.disabled = !canSubmit(el.question.value, selectedModels());
}

function renderPanels(): void {
  el.panels.innerHTML = panels.map((panel, i) => panelHtml(panel, i)).join('\n');
}

function updatePanel(index: number, panel: PanelState): void {
  panels = panels.map((p, i) => (i === index ? panel : p));
  renderPanels();
}

async function submitQuestion(): Promise<void> {
  const models = selectedModels();
  const nl = el.question.value.trim();
  lastQuestion = nl;
  el.submit.disabled = true;
  setBanner(null);
  try {
    const response = await api.generate(el.corpus.value, nl, models);
    panels = panelsFromGenerate(response.results);
    renderPanels();
  } catch (error) {
    // Keep whatever panels are on screen; just surface the failure.
    setBanner(`generation failed: ${error instanceof Error ? error.message : error}`);
  } finally {
    refreshSubmit();
  }
}

async function runPanel(index: number): Promise<void> {
  updatePanel(index, startRun(panels[index]));
  const panel = panels[index];
  try {
    const execution = await api.executeCandidate(
      el.corpus.value,
      panel.query,
      el.tupleId.value.trim() || undefined,
    );
    updatePanel(index, finishRun(panels[index], execution));
  } catch (error) {
    updatePanel(index, failRun(panels[index], error instanceof Error ? error.message : String(error)));
  }
}

async function sendFeedback(index: number, verdict: 'up' | 'down'): Promise<void> {
  const panel = panels[index];
  const delivered = await feedbackQueue.send({
    nl: lastQuestion,
    chosen_query: panel.query,
    verdict,
    model: panel.model,
  });
  if (delivered) {
    setBanner(`feedback recorded for ${panel.model}`);
    setTimeout(() => setBanner(null), 1500);
  }
}

function onPanelEvent(event: Event): void {
  const target = event.target as HTMLElement;
  const section = target.closest<HTMLElement>('.panel');
  if (!section) {
    return;
  }
  const index = Number(section.dataset.index);
  const role = target.dataset.role ?? (target.closest('[data-role]') as HTMLElement)?.dataset.role;
  if (event.type === 'input' && role === 'query') {
    panels = panels.map((p, i) =>
      i === index ? editQuery(p, (target as HTMLTextAreaElement).value) : p,
    );
    // Re-render only the result area so the textarea keeps focus.
    const resultDiv = section.querySelector<HTMLElement>('[data-role="result"]');
    if (resultDiv && panels[index].execution === null) {
      resultDiv.innerHTML = '';
    }
    return;
  }
  if (event.type === 'click' && role === 'run') {
    void runPanel(index);
  } else if (event.type === 'click' && (role === 'up' || role === 'down')) {
    void sendFeedback(index, role);
  }
}

async function boot(): Promise<void> {
  try {
    const [corpora, models] = await Promise.all([api.corpora(), api.models()]);
    el.corpus.innerHTML = corpora
      .map((c) => `<option value="${c.name}">${c.name} (${c.n_entries} entries)</option>`)
      .join('');
    el.models.innerHTML = models
      .map(
        (m) =>
          `<label><input type="checkbox" value="${m.name}" checked> ${m.name}</label>`,
      )
      .join('');
  } catch (error) {
    setBanner(`backend unreachable: ${error instanceof Error ? error.message : error}`);
  }
  refreshSubmit();
}

el.submit.addEventListener('click', () => void submitQuestion());
el.question.addEventListener('input', refreshSubmit);
el.models.addEventListener('change', refreshSubmit);
el.panels.addEventListener('click', onPanelEvent);
el.panels.addEventListener('input', onPanelEvent);

void boot();
