/** Issue list (server-sorted by severity) and the expanded issue detail. */
import { describeAction, escapeHtml, severityColor, severityLabel } from "../format.js";
export function renderIssueList(issues) {
    if (!issues.length) {
        return '<p class="empty">No issues for this selection.</p>';
    }
    // order comes from the API (severity desc); never re-sorted client-side
    const items = issues
        .map((issue) => `
    <li class="issue-row" data-issue="${escapeHtml(issue.issue_id)}">
      <span class="severity-dot" style="background:${severityColor(issue.issue_severity)}"
            title="${escapeHtml(severityLabel(issue.issue_severity))}">${issue.issue_severity}</span>
      <span class="issue-type">${escapeHtml(issue.type)}</span>
      <span class="issue-element">${escapeHtml(issue.element)}</span>
      <span class="issue-persona">${escapeHtml(issue.persona_id)}</span>
    </li>`)
        .join("");
    return `<ul class="issue-list">${items}</ul>`;
}
/** Inject a highlight rule for the affected element into the snapshot markup.
 * When the selector no longer resolves the UI falls back to the textual
 * anchor rendered next to the snapshot. */
export function highlightSnapshot(html, selector) {
    const rule = `<style>${selector} { outline: 3px solid #e53935; outline-offset: 2px; }</style>`;
    if (html.includes("</head>")) {
        return html.replace("</head>", `${rule}</head>`);
    }
    return rule + html;
}
export function renderIssueDetail(detail, snapshotHtml) {
    const issue = detail.issue;
    const window = detail.reasoning_window
        .map((step) => `
    <div class="trace-step${step.is_issue_step ? " issue-step" : ""}">
      <div class="trace-head">step ${step.step} on ${escapeHtml(step.url)}
        <code>${escapeHtml(describeAction(step.action))}</code></div>
      <div class="trace-intent">${escapeHtml(step.intent)}</div>
      <blockquote class="trace-reasoning">${escapeHtml(step.reasoning)}</blockquote>
      <div class="trace-result">${escapeHtml(step.result)}${step.error ? ` <span class="error">${escapeHtml(step.error)}</span>` : ""}</div>
    </div>`)
        .join("");
    const timeline = detail.timeline
        .map((step) => `
    <button class="timeline-step${step.step === issue.step ? " current" : ""}"
            data-step="${step.step}" title="${escapeHtml(step.intent)}">
      ${step.step}
    </button>`)
        .join("");
    const snapshot = snapshotHtml
        ? `<iframe class="snapshot-frame" sandbox="" srcdoc="${escapeHtml(highlightSnapshot(snapshotHtml, issue.element))}"></iframe>`
        : '<p class="empty">No snapshot available.</p>';
    return `
  <div class="issue-detail" data-issue="${escapeHtml(issue.issue_id)}">
    <h3>
      <span class="severity-dot" style="background:${severityColor(issue.issue_severity)}">
        ${issue.issue_severity}</span>
      ${escapeHtml(issue.type)}
    </h3>
    <p class="anchor">Affected element: <code>${escapeHtml(issue.element)}</code>
      <span class="anchor-fallback">(highlighted in the snapshot when resolvable)</span></p>
    <p>${escapeHtml(issue.reason)}</p>
    <p class="fix">Suggested fix: ${escapeHtml(issue.fix)}</p>
    <p class="upt">UPT: ${issue.upt_codes.map(escapeHtml).join(", ")} -
      ${escapeHtml(issue.upt_explanation)}</p>
    <div class="timeline">${timeline}</div>
    <div class="trace-window">${window}</div>
    ${snapshot}
    <div class="issue-actions">
      <button data-action="open-editor" data-ref="${escapeHtml(detail.snapshot_ref ?? "")}">
        Fix this issue
      </button>
    </div>
  </div>`;
}
