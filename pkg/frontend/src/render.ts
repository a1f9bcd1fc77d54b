/** HTML renderers. Each returns a markup string; the bootstrap assigns
 * them to innerHTML and wires events by data attributes. Strings keep the
 * renderers testable without a browser. */

import type {
  AnalysisBody,
  EmailDetail,
  Finding,
  Thread,
  Verdict,
} from "./types.js";
import {
  backgroundStyle,
  type Chip,
  highlightSegments,
  visibleFindings,
  type FindingOrder,
} from "./viewmodel.js";
import { featureColor } from "./palette.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const CATEGORY_TEXT: Record<Verdict["category"], string> = {
  unlikely: "Unlikely to be phishing",
  possibly: "Possibly phishing",
  likely: "Likely phishing",
  almost_certainly: "Almost certainly phishing",
};

export function renderHeader(email: EmailDetail): string {
  const from = email.sender_name
    ? `${email.sender_name} &lt;${escapeHtml(email.sender_address)}&gt;`
    : escapeHtml(email.sender_address);
  const badge = email.sender_in_contacts
    ? '<span class="badge contact">in contacts</span>'
    : "";
  return (
    `<header class="email-header">` +
    `<h2>${escapeHtml(email.subject)}</h2>` +
    `<p class="from">From: ${from} ${badge}</p>` +
    `<p class="date">${escapeHtml(email.received_at)}</p>` +
    `</header>`
  );
}

export function renderVerdictBanner(analysis: AnalysisBody): string {
  const verdict = analysis.analysis.verdict;
  const text =
    verdict.label === "safe"
      ? `Safe (${verdict.percentage}%)`
      : `${CATEGORY_TEXT[verdict.category]} (${verdict.percentage}%)`;
  // nothing to read aloud -> control stays disabled
  const mute = analysis.analysis.explanation.trim() ? "" : " disabled";
  return (
    `<div class="verdict ${verdict.label}" data-speak-target>` +
    `<strong>${text}</strong>` +
    `<button class="speak" data-action="speak" title="read aloud"${mute}>&#128266;</button>` +
    `</div>`
  );
}

export function renderBody(
  bodyText: string,
  findings: Finding[],
  excluded: ReadonlySet<string>,
): string {
  const parts = highlightSegments(bodyText, findings, excluded).map(
    (segment) => {
      const text = escapeHtml(segment.text);
      if (!segment.feature) return text;
      return (
        `<mark data-feature="${escapeHtml(segment.feature)}"` +
        ` style="background-color: ${segment.color}">${text}</mark>`
      );
    },
  );
  return `<pre class="email-body">${parts.join("")}</pre>`;
}

export function renderChips(chips: Chip[]): string {
  const buttons = chips.map((chip) => {
    const state = chip.active ? "active" : "excluded";
    const swatch = chip.active
      ? ` style="background-color: ${chip.color}"`
      : "";
    return (
      `<button class="chip ${state}" data-action="toggle-feature"` +
      ` data-feature="${escapeHtml(chip.feature)}"${swatch}>` +
      `${escapeHtml(chip.feature)}</button>`
    );
  });
  return `<div class="chips">${buttons.join("")}</div>`;
}

export function renderFindings(
  findings: Finding[],
  excluded: ReadonlySet<string>,
  order: FindingOrder,
  weights: ReadonlyMap<string, number>,
  activeIndex = -1,
): string {
  const rows = visibleFindings(findings, excluded, order, weights).map(
    (finding, index) => {
      const flag =
        finding.span_location === null
          ? ' <span class="unlocated">(not found in body)</span>'
          : "";
      const state = index === activeIndex ? "finding active" : "finding";
      return (
        `<li class="${state}" data-action="goto-finding" data-index="${index}">` +
        `<span class="dot" style="background-color: ${featureColor(finding.feature)}"></span>` +
        `<strong>${escapeHtml(finding.feature)}</strong>${flag}<br>` +
        `<q>${escapeHtml(finding.quoted_span)}</q> ` +
        `${escapeHtml(finding.rationale)}</li>`
      );
    },
  );
  if (rows.length === 0) return '<p class="muted">No findings to show.</p>';
  return `<ol class="findings">${rows.join("")}</ol>`;
}

/** Span navigation controls: step through findings, flip the order. */
export function renderToolbar(order: FindingOrder): string {
  const label = order === "document" ? "document order" : "severity order";
  return (
    `<div class="toolbar">` +
    `<button data-action="next-finding">Next finding</button>` +
    `<button data-action="toggle-order">${label}</button>` +
    `</div>`
  );
}

export function renderCountermeasures(items: string[]): string {
  if (items.length === 0) return "";
  const rows = items.map((item) => `<li>${escapeHtml(item)}</li>`);
  return (
    `<section class="countermeasures"><h3>What to do</h3>` +
    `<ul>${rows.join("")}</ul></section>`
  );
}

export function renderWarnings(warnings: string[]): string {
  if (warnings.length === 0) return "";
  const rows = warnings.map((w) => `<li>${escapeHtml(w)}</li>`);
  return `<aside class="warnings"><ul>${rows.join("")}</ul></aside>`;
}

export function renderThread(
  thread: Thread | null,
  inflight: boolean,
  pendingInput = "",
  error: string | null = null,
): string {
  const turns = thread?.turns ?? [];
  const bubbles = turns.map(
    (turn) =>
      `<div class="bubble ${turn.role}">${escapeHtml(turn.text)}</div>`,
  );
  if (inflight) bubbles.push('<div class="bubble assistant pending">...</div>');
  const body =
    bubbles.length > 0
      ? bubbles.join("")
      : '<p class="muted">No questions asked yet.</p>';
  const inline = error ? `<p class="error">${escapeHtml(error)}</p>` : "";
  return (
    `<div class="thread">${body}</div>` +
    inline +
    `<form class="ask" data-action="submit-query">` +
    `<input name="query" placeholder="Ask about this email"` +
    ` value="${escapeHtml(pendingInput)}"${inflight ? " disabled" : ""}>` +
    `<button type="submit"${inflight ? " disabled" : ""}>Ask</button>` +
    `</form>`
  );
}

export interface AnalyzedViewState {
  email: EmailDetail;
  analysis: AnalysisBody;
  excluded: ReadonlySet<string>;
  order: FindingOrder;
  weights: ReadonlyMap<string, number>;
  thread: Thread | null;
  inflight: boolean;
  /** Query text to restore after a failed submit. */
  pendingInput?: string;
  error?: string | null;
  notice?: string | null;
  activeFinding?: number;
}

/** Full page for an email with a completed analysis. The verdict tint is
 * an overlay so text keeps contrast at any intensity. */
export function renderAnalyzedView(state: AnalyzedViewState): string {
  const { email, analysis, excluded, order, weights } = state;
  const background = backgroundStyle(analysis.intensity);
  const report = analysis.analysis;
  const chips = report.features_found.map((feature) => ({
    feature,
    color: featureColor(feature),
    active: !excluded.has(feature),
  }));
  const notice = state.notice
    ? `<p class="notice">${escapeHtml(state.notice)}</p>`
    : "";
  return (
    `<div class="triage" data-hue="${background.hue}"` +
    ` style="background-color: ${background.css}">` +
    renderHeader(email) +
    renderVerdictBanner(analysis) +
    notice +
    renderWarnings(report.warnings) +
    `<p class="explanation">${escapeHtml(report.explanation)}</p>` +
    renderChips(chips) +
    renderBody(email.body_text, report.findings, excluded) +
    renderToolbar(order) +
    renderFindings(
      report.findings,
      excluded,
      order,
      weights,
      state.activeFinding ?? -1,
    ) +
    renderCountermeasures(report.countermeasures) +
    renderThread(
      state.thread,
      state.inflight,
      state.pendingInput ?? "",
      state.error ?? null,
    ) +
    `</div>`
  );
}

/** Degraded view when the email has no analysis yet. */
export function renderUnanalyzedView(email: EmailDetail): string {
  return (
    `<div class="triage" data-hue="none">` +
    renderHeader(email) +
    `<aside class="warnings"><ul><li>No analysis yet.</li></ul></aside>` +
    `<button data-action="analyze">Analyze</button>` +
    `<pre class="email-body">${escapeHtml(email.body_text)}</pre>` +
    `</div>`
  );
}
