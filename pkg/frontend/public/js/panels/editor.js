/** Snapshot editor: natural-language instructions, history with revert. */
import { escapeHtml } from "../format.js";
export function renderEditor(baseRef, session, snapshotHtml) {
    const history = session
        ? session.history
            .map((entry, index) => `
      <li class="history-entry${index < session.cursor ? " active" : " undone"}">
        <span class="history-instruction">${escapeHtml(entry.instruction)}</span>
        <code class="history-status">${escapeHtml(entry.patchset.status)}</code>
        <button data-action="revert" data-cursor="${index + 1}">to here</button>
      </li>`)
            .join("")
        : "";
    const message = session
        ? `<pre class="edit-message" data-status="${escapeHtml(session.status)}">${escapeHtml(session.message)}</pre>`
        : "";
    return `
  <div class="editor" data-base-ref="${escapeHtml(baseRef)}"
       data-session="${escapeHtml(session?.session_id ?? "")}"
       data-current-ref="${escapeHtml(session?.snapshot_ref ?? baseRef)}">
    <form class="edit-form">
      <input type="text" name="instruction" placeholder="Describe the change in plain language" required>
      <button type="submit">Apply edit</button>
    </form>
    ${message}
    <ol class="edit-history">
      <li class="history-entry base">
        <span class="history-instruction">original snapshot</span>
        <button data-action="revert" data-cursor="0">to here</button>
      </li>
      ${history}
    </ol>
    <iframe class="snapshot-frame" sandbox="" srcdoc="${escapeHtml(snapshotHtml)}"></iframe>
    <button data-action="preview" data-ref="${escapeHtml(session?.snapshot_ref ?? baseRef)}">
      Evaluate this fix
    </button>
  </div>`;
}
