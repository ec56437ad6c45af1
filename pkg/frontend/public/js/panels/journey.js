/** Agent journey sankey; nodes click through to the issue-level analysis. */
import { escapeHtml } from "../format.js";
import { layoutSankey } from "../sankey.js";
export function renderJourney(body) {
    const layout = layoutSankey(body.nodes.map((n) => ({ id: n.id, label: n.label })), body.links);
    const issuesByNode = new Map(body.nodes.map((n) => [n.id, n.issues]));
    const endpoints = new Map(body.nodes.map((n) => [n.id, n]));
    const ribbons = layout.links
        .map((link) => `
    <path class="sankey-link" d="${link.path}" fill="none"
          stroke-width="${link.thickness.toFixed(2)}"
          data-source="${escapeHtml(link.source)}" data-target="${escapeHtml(link.target)}">
      <title>${escapeHtml(link.source)} to ${escapeHtml(link.target)}: ${link.count}</title>
    </path>`)
        .join("");
    const boxes = layout.nodes
        .map((node) => {
        const issues = issuesByNode.get(node.id) ?? [];
        const endpoint = endpoints.get(node.id);
        const title = `${node.label}: ${node.throughput} through, ` +
            `${endpoint?.starts ?? 0} starts, ${endpoint?.terminations ?? 0} ends, ` +
            `${issues.length} issue(s)`;
        return `
    <g class="sankey-node${issues.length ? " has-issues" : ""}" data-node="${escapeHtml(node.id)}">
      <rect x="${node.x0.toFixed(2)}" y="${node.y0.toFixed(2)}"
            width="${(node.x1 - node.x0).toFixed(2)}" height="${(node.y1 - node.y0).toFixed(2)}">
        <title>${escapeHtml(title)}</title>
      </rect>
      <text x="${(node.x1 + 4).toFixed(2)}" y="${((node.y0 + node.y1) / 2).toFixed(2)}">
        ${escapeHtml(node.label)}</text>
    </g>`;
    })
        .join("");
    const loops = layout.selfLoops
        .map((loop) => `<span class="self-loop" data-node="${escapeHtml(loop.id)}">${escapeHtml(loop.id)} stayed x${loop.count}</span>`)
        .join(" ");
    const other = body.mode === "page_level" ? "goal_level" : "page_level";
    return `
  <div class="journey" data-mode="${escapeHtml(body.mode)}">
    <button class="mode-toggle" data-action="toggle-journey-mode">
      switch to ${other.replace("_", " ")}
    </button>
    <svg viewBox="0 0 ${layout.width} ${layout.height}" class="sankey">
      ${ribbons}
      ${boxes}
    </svg>
    <div class="self-loops">${loops}</div>
  </div>`;
}
