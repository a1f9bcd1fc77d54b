/** One stable highlight color per catalog feature.
 *
 * The mapping must be a pure function of the canonical name so colors
 * survive reloads and stay consistent between the findings list and the
 * inline body highlights. */

export const PALETTE = [
  "#fde68a", "#fca5a5", "#a7f3d0", "#bfdbfe", "#ddd6fe", "#fbcfe8",
  "#fed7aa", "#d9f99d", "#99f6e4", "#c7d2fe", "#f5d0fe", "#fecdd3",
  "#e9d5ff", "#bae6fd", "#bbf7d0", "#fef08a", "#fecaca", "#a5f3fc",
  "#e2e8f0", "#f1c4a3", "#d1fae5",
] as const;

/** djb2 over the name's codepoints; small, fast, and stable. */
function hashName(name: string): number {
  let hash = 5381;
  for (const ch of name) {
    hash = ((hash * 33) ^ ch.codePointAt(0)!) >>> 0;
  }
  return hash;
}

export function featureColor(name: string): string {
  return PALETTE[hashName(name) % PALETTE.length];
}
