/** Pure view-model functions. Everything here is deterministic data in,
 * data out; the render layer turns the results into markup. */

import type { Finding, IntensitySignal } from "./types.js";
import { featureColor } from "./palette.js";

const HUE_RGB: Record<"red" | "blue", [number, number, number]> = {
  red: [220, 38, 38],
  blue: [37, 99, 235],
};

export interface BackgroundStyle {
  hue: "red" | "blue";
  /** Overlay alpha over the neutral base; equals the service's intensity
   * signal (clamped), which the UI contract requires within 0.01. */
  alpha: number;
  css: string;
}

export function backgroundStyle(signal: IntensitySignal): BackgroundStyle {
  const alpha = Math.min(1, Math.max(0, signal.intensity));
  const [r, g, b] = HUE_RGB[signal.hue];
  return {
    hue: signal.hue,
    alpha,
    css: `rgba(${r}, ${g}, ${b}, ${round3(alpha)})`,
  };
}

function round3(value: number): number {
  return Math.round(value * 1000) / 1000;
}

export interface BodySegment {
  text: string;
  /** Set when the segment is an inline highlight. */
  feature?: string;
  color?: string;
}

/** Split the body into plain and highlighted segments.
 *
 * Span offsets from the service count codepoints, not UTF-16 units, so
 * the body is segmented over its codepoint array. Findings without a
 * location, with an excluded feature, or overlapping an earlier span are
 * skipped (first finding wins on overlap, matching document order).
 */
export function highlightSegments(
  body: string,
  findings: Finding[],
  excluded: ReadonlySet<string> = new Set(),
): BodySegment[] {
  const points = Array.from(body);
  const located = findings
    .filter((f) => f.span_location !== null && !excluded.has(f.feature))
    .map((f) => ({
      feature: f.feature,
      start: f.span_location![0],
      end: f.span_location![1],
    }))
    .filter((s) => s.start >= 0 && s.end <= points.length && s.start < s.end)
    .sort((a, b) => a.start - b.start || a.end - b.end);

  const segments: BodySegment[] = [];
  let cursor = 0;
  for (const span of located) {
    if (span.start < cursor) continue; // overlap: keep the earlier span
    if (span.start > cursor) {
      segments.push({ text: points.slice(cursor, span.start).join("") });
    }
    segments.push({
      text: points.slice(span.start, span.end).join(""),
      feature: span.feature,
      color: featureColor(span.feature),
    });
    cursor = span.end;
  }
  if (cursor < points.length) {
    segments.push({ text: points.slice(cursor).join("") });
  }
  return segments;
}

export interface Chip {
  feature: string;
  color: string;
  /** False when the user has toggled the feature off the display. */
  active: boolean;
}

export function featureChips(
  features: string[],
  excluded: ReadonlySet<string>,
): Chip[] {
  return features.map((feature) => ({
    feature,
    color: featureColor(feature),
    active: !excluded.has(feature),
  }));
}

export type FindingOrder = "document" | "severity";

/** Findings in navigation order: document position, or weight-descending
 * when ordered by severity. Unlocated findings sort last either way. */
export function orderFindings(
  findings: Finding[],
  order: FindingOrder,
  weights: ReadonlyMap<string, number>,
): Finding[] {
  const position = (f: Finding) =>
    f.span_location === null ? Number.MAX_SAFE_INTEGER : f.span_location[0];
  const sorted = [...findings];
  if (order === "document") {
    sorted.sort((a, b) => position(a) - position(b));
  } else {
    const weight = (f: Finding) => weights.get(f.feature) ?? 0;
    sorted.sort((a, b) => weight(b) - weight(a) || position(a) - position(b));
  }
  return sorted;
}

/** Visible findings under the current exclusions, in navigation order. */
export function visibleFindings(
  findings: Finding[],
  excluded: ReadonlySet<string>,
  order: FindingOrder,
  weights: ReadonlyMap<string, number>,
): Finding[] {
  return orderFindings(
    findings.filter((f) => !excluded.has(f.feature)),
    order,
    weights,
  );
}
