/** Trait analysis: per-trait bars or composite persona ranking. */
import { escapeHtml, percent } from "../format.js";
export function renderTraits(body) {
    const max = Math.max(1, ...body.entries.map((e) => e.issue_count));
    const bars = body.entries
        .map((entry) => {
        const width = Math.round((entry.issue_count / max) * 100);
        const failure = entry.failure_rate !== undefined
            ? `<span class="failure">fail ${percent(entry.failure_rate)}</span>`
            : "";
        const filterKey = body.mode === "trait_centric" && entry.dimension
            ? `data-trait="${escapeHtml(entry.key)}"`
            : `data-persona-combo="${escapeHtml(entry.key)}"`;
        return `
      <div class="trait-row" ${filterKey}>
        <span class="trait-key">${escapeHtml(entry.key)}</span>
        <span class="trait-bar"><span class="trait-fill" style="width:${width}%"></span></span>
        <span class="trait-count">${entry.issue_count}</span>
        ${failure}
      </div>`;
    })
        .join("");
    const other = body.mode === "trait_centric" ? "composite_persona" : "trait_centric";
    return `
  <div class="traits" data-mode="${escapeHtml(body.mode)}">
    <button class="mode-toggle" data-action="toggle-trait-mode">
      switch to ${other.replace("_", " ")}
    </button>
    ${bars}
  </div>`;
}
