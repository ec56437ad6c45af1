/** Small self-contained sankey layout for the journey view.
 *
 * Pure function: deterministic output for a given graph, no DOM. Self-loops
 * (a step staying on the same node) are reported separately as badges
 * rather than drawn as ribbons.
 */
const NODE_WIDTH = 14;
const NODE_GAP = 10;
export function layoutSankey(inputNodes, inputLinks, width = 720, height = 360) {
    const nodes = [...inputNodes].sort((a, b) => a.id.localeCompare(b.id));
    const selfLoops = inputLinks
        .filter((l) => l.source === l.target)
        .map((l) => ({ id: l.source, count: l.count }));
    const links = inputLinks
        .filter((l) => l.source !== l.target)
        .sort((a, b) => a.source.localeCompare(b.source) || b.target.localeCompare(a.target));
    // column assignment by bounded relaxation (tolerates cycles)
    const column = new Map(nodes.map((n) => [n.id, 0]));
    for (let round = 0; round < nodes.length; round++) {
        let changed = false;
        for (const link of links) {
            const src = column.get(link.source) ?? 0;
            const dst = column.get(link.target) ?? 0;
            if (dst < src + 1 && src + 1 < nodes.length) {
                column.set(link.target, src + 1);
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    const maxColumn = Math.max(0, ...column.values());
    // throughput drives node height
    const inflow = new Map();
    const outflow = new Map();
    for (const link of links) {
        outflow.set(link.source, (outflow.get(link.source) ?? 0) + link.count);
        inflow.set(link.target, (inflow.get(link.target) ?? 0) + link.count);
    }
    const throughput = (id) => Math.max(inflow.get(id) ?? 0, outflow.get(id) ?? 0, 1);
    const byColumn = new Map();
    for (const node of nodes) {
        const col = column.get(node.id) ?? 0;
        const bucket = byColumn.get(col) ?? [];
        bucket.push(node);
        byColumn.set(col, bucket);
    }
    // vertical scale: the busiest column must fit
    let scale = Infinity;
    for (const [, bucket] of byColumn) {
        const total = bucket.reduce((sum, n) => sum + throughput(n.id), 0);
        const free = height - NODE_GAP * (bucket.length + 1);
        scale = Math.min(scale, free / total);
    }
    if (!Number.isFinite(scale) || scale <= 0)
        scale = 1;
    const layoutNodes = [];
    const position = new Map();
    const columnSpan = maxColumn > 0 ? (width - NODE_WIDTH) / maxColumn : 0;
    for (const [col, bucket] of [...byColumn.entries()].sort((a, b) => a[0] - b[0])) {
        let y = NODE_GAP;
        for (const node of bucket) {
            const h = Math.max(4, throughput(node.id) * scale);
            const x0 = col * columnSpan;
            const laid = {
                id: node.id,
                label: node.label,
                column: col,
                x0,
                y0: y,
                x1: x0 + NODE_WIDTH,
                y1: y + h,
                throughput: throughput(node.id),
            };
            layoutNodes.push(laid);
            position.set(node.id, laid);
            y += h + NODE_GAP;
        }
    }
    // slot links along each node edge, deterministic order
    const outOffsets = new Map();
    const inOffsets = new Map();
    const layoutLinks = [];
    for (const link of [...links].sort((a, b) => a.source.localeCompare(b.source) || a.target.localeCompare(b.target))) {
        const src = position.get(link.source);
        const dst = position.get(link.target);
        if (!src || !dst)
            continue;
        const thickness = Math.max(1, link.count * scale);
        const yOut = src.y0 + (outOffsets.get(link.source) ?? 0) + thickness / 2;
        const yIn = dst.y0 + (inOffsets.get(link.target) ?? 0) + thickness / 2;
        outOffsets.set(link.source, (outOffsets.get(link.source) ?? 0) + thickness);
        inOffsets.set(link.target, (inOffsets.get(link.target) ?? 0) + thickness);
        const x0 = src.x1;
        const x1 = dst.x0;
        const mid = (x0 + x1) / 2;
        layoutLinks.push({
            source: link.source,
            target: link.target,
            count: link.count,
            thickness,
            path: `M ${x0} ${yOut} C ${mid} ${yOut}, ${mid} ${yIn}, ${x1} ${yIn}`,
        });
    }
    return { width, height, nodes: layoutNodes, links: layoutLinks, selfLoops };
}
