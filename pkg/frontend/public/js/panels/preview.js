/** Evaluation panel: before/after actions of the replayed step. */
import { describeAction, escapeHtml } from "../format.js";
export function renderPreview(report) {
    const changed = report.action_changed
        ? '<span class="badge changed">action changed</span>'
        : '<span class="badge unchanged">action unchanged</span>';
    const resolved = report.issue_resolved
        ? '<span class="badge resolved">issue resolved</span>'
        : '<span class="badge unresolved">issue not resolved</span>';
    return `
  <div class="preview" data-issue="${escapeHtml(report.issue_id)}"
       data-action-changed="${report.action_changed}"
       data-issue-resolved="${report.issue_resolved}">
    <div class="preview-badges">${changed} ${resolved}</div>
    <table class="action-diff">
      <tr><th>before</th><td><code>${escapeHtml(describeAction(report.original_action))}</code></td></tr>
      <tr><th>after</th><td><code>${escapeHtml(describeAction(report.new_action))}</code></td></tr>
    </table>
    <p class="preview-summary">${escapeHtml(report.summary)}</p>
  </div>`;
}
export function renderImpacted(entries) {
    if (!entries.length) {
        return '<p class="empty">No other personas interacted with this element.</p>';
    }
    const rows = entries
        .map((entry) => `
    <li class="impacted-row" data-run="${escapeHtml(entry.run_id)}">
      ${escapeHtml(entry.persona_id)} (step ${entry.step})
    </li>`)
        .join("");
    return `<ul class="impacted-list">${rows}</ul>`;
}
