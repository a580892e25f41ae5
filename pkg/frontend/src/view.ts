/**
 * Pure view: SessionResult in, HTML string out. No DOM access, no
 * network, no globals — the whole UI under this node is a function of
 * its argument, which is what makes snapshot-testing it trivial.
 */

import type { PanelResult, SessionResult } from "./types.js";
import { SEVERITY_KEYS } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Format a probability for display; null when it cannot be shown safely. */
export function formatUnit(value: number): string | null {
  if (!Number.isFinite(value) || value < 0 || value > 1) return null;
  return value.toFixed(3);
}

function errorPanel(title: string, message: string): string {
  return (
    `<section class="panel panel-error"><h2>${escapeHtml(title)}</h2>` +
    `<p class="error">${escapeHtml(message)}</p></section>`
  );
}

function panelOr<T>(
  title: string,
  result: PanelResult<T> | undefined,
  render: (value: T) => string | null,
): string {
  if (result === undefined) return "";
  if (!result.ok) return errorPanel(title, result.error);
  const markup = render(result.value);
  if (markup === null) {
    return errorPanel(title, "service sent values that cannot be displayed");
  }
  return `<section class="panel"><h2>${escapeHtml(title)}</h2>${markup}</section>`;
}

function gauge(probability: number, label: string): string | null {
  const text = formatUnit(probability);
  if (text === null) return null;
  const percent = (probability * 100).toFixed(1);
  const tone = probability >= 0.5 ? "positive" : "negative";
  return (
    `<div class="gauge ${tone}">` +
    `<div class="gauge-fill" style="width:${percent}%"></div></div>` +
    `<p class="reading">${escapeHtml(label)} &middot; p = ${text}</p>`
  );
}

function severityBars(
  probabilities: Record<string, number>,
  label: string,
): string | null {
  const rows: string[] = [];
  for (const key of SEVERITY_KEYS) {
    const value = probabilities[key] ?? NaN;
    const text = formatUnit(value);
    if (text === null) return null;
    const percent = (value * 100).toFixed(1);
    const highlight = key === label ? " bar-top" : "";
    rows.push(
      `<div class="bar-row"><span class="bar-name">${escapeHtml(key)}</span>` +
        `<div class="bar${highlight}" style="width:${percent}%"></div>` +
        `<span class="bar-value">${text}</span></div>`,
    );
  }
  return (
    rows.join("") + `<p class="reading">grade: ${escapeHtml(label)}</p>`
  );
}

/** Render one finished analysis run. Panels absent from the result render nothing. */
export function renderSession(result: SessionResult): string {
  const seconds = Number.isFinite(result.clipSeconds)
    ? `${result.clipSeconds.toFixed(1)} s`
    : "unknown length";
  const elapsed = Math.max(0, result.finishedAt - result.startedAt);
  const header =
    `<header class="session-header"><h1>${escapeHtml(result.clipName)}</h1>` +
    `<p class="meta">${seconds} &middot; analyzed in ${(elapsed / 1000).toFixed(1)} s</p></header>`;

  const detect = panelOr("Detection", result.detect, (d) =>
    gauge(d.probability, d.label),
  );
  const severity = panelOr("Severity", result.severity, (s) =>
    severityBars(s.probabilities, s.label),
  );
  const gradcam = panelOr("Saliency", result.gradcam, (g) =>
    [
      `<img class="heatmap" alt="class activation overlay" src="${g.overlayDataUri}">`,
      `<p class="reading">class ${escapeHtml(g.targetClass)} &middot; layer ${escapeHtml(g.sourceLayer)}</p>`,
    ].join(""),
  );
  const translate = panelOr("Clean speech", result.translate, (t) =>
    [
      `<img class="spectrogram" alt="translated spectrogram" src="${t.spectrogramDataUri}">`,
      `<audio controls src="${t.audioDataUri}"></audio>`,
    ].join(""),
  );

  return `${header}<div class="panels">${detect}${severity}${gradcam}${translate}</div>`;
}
