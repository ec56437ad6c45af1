/** Shared formatting: the fixed severity scale and small helpers. */

/** Fixed 0..4 severity colors (cosmetic .. catastrophic), same scale as reports. */
export const SEVERITY_COLORS = ["#9e9e9e", "#8bc34a", "#ffc107", "#ff7043", "#e53935"] as const;

export const SEVERITY_LABELS = [
  "0 - not a problem",
  "1 - cosmetic",
  "2 - minor",
  "3 - major",
  "4 - catastrophe",
] as const;

export function severityColor(severity: number): string {
  if (!Number.isInteger(severity) || severity < 0 || severity > 4) {
    throw new Error(`severity ${severity} outside the 0-4 scale`);
  }
  return SEVERITY_COLORS[severity];
}

export function severityLabel(severity: number): string {
  if (!Number.isInteger(severity) || severity < 0 || severity > 4) {
    throw new Error(`severity ${severity} outside the 0-4 scale`);
  }
  return SEVERITY_LABELS[severity];
}

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function percent(ratio: number): string {
  return `${Math.round(ratio * 100)}%`;
}

export function describeAction(action: Record<string, unknown>): string {
  const kind = String(action.kind ?? "?");
  const parts = [kind];
  if (action.target_index !== undefined) parts.push(`#${action.target_index}`);
  if (action.payload !== undefined) parts.push(JSON.stringify(action.payload));
  if (action.success_flag !== undefined) parts.push(`success=${action.success_flag}`);
  return parts.join(" ");
}
