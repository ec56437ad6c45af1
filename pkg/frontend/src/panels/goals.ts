/** Goal-level summary table: the entry point of the analysis drill-down. */

import type { GoalsResponse } from "../api.js";
import { escapeHtml, percent } from "../format.js";

export function renderGoals(body: GoalsResponse, goalTexts: Record<string, string>): string {
  const rows = body.goals
    .map((goal) => {
      const text = goalTexts[goal.goal_id] ?? goal.goal_id;
      return `
      <tr class="goal-row" data-goal="${escapeHtml(goal.goal_id)}">
        <td class="goal-text">${escapeHtml(text)}</td>
        <td class="num">${goal.agents_attempting}</td>
        <td class="num">${goal.agents_with_issues}</td>
        <td class="num">${percent(goal.success_ratio)}</td>
      </tr>`;
    })
    .join("");
  const excluded = body.excluded_runs.length
    ? `<p class="warn">${body.excluded_runs.length} unannotated run(s) excluded: ${escapeHtml(
        body.excluded_runs.join(", "),
      )}</p>`
    : "";
  return `
  <table class="goals-table">
    <thead>
      <tr><th>Goal</th><th>Agents</th><th>With issues</th><th>Success</th></tr>
    </thead>
    <tbody>${rows}</tbody>
  </table>
  <button class="all-issues-entry" data-action="all-issues">See all issues first</button>
  ${excluded}`;
}
