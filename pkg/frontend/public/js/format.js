/** Shared formatting: the fixed severity scale and small helpers. */
/** Fixed 0..4 severity colors (cosmetic .. catastrophic), same scale as reports. */
export const SEVERITY_COLORS = ["#9e9e9e", "#8bc34a", "#ffc107", "#ff7043", "#e53935"];
export const SEVERITY_LABELS = [
    "0 - not a problem",
    "1 - cosmetic",
    "2 - minor",
    "3 - major",
    "4 - catastrophe",
];
export function severityColor(severity) {
    if (!Number.isInteger(severity) || severity < 0 || severity > 4) {
        throw new Error(`severity ${severity} outside the 0-4 scale`);
    }
    return SEVERITY_COLORS[severity];
}
export function severityLabel(severity) {
    if (!Number.isInteger(severity) || severity < 0 || severity > 4) {
        throw new Error(`severity ${severity} outside the 0-4 scale`);
    }
    return SEVERITY_LABELS[severity];
}
export function escapeHtml(value) {
    return value
        .replaceAll("&", "&amp;")
        .replaceAll("<", "&lt;")
        .replaceAll(">", "&gt;")
        .replaceAll('"', "&quot;");
}
export function percent(ratio) {
    return `${Math.round(ratio * 100)}%`;
}
export function describeAction(action) {
    const kind = String(action.kind ?? "?");
    const parts = [kind];
    if (action.target_index !== undefined)
        parts.push(`#${action.target_index}`);
    if (action.payload !== undefined)
        parts.push(JSON.stringify(action.payload));
    if (action.success_flag !== undefined)
        parts.push(`success=${action.success_flag}`);
    return parts.join(" ");
}
