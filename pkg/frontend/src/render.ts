/** Nested-header grid rendering with embedded insight charts and
 * relation cue layers. Pure string -> string rendering: the same snapshot
 * always produces the identical markup. */

import { renderChart } from "./charts.js";
import type {
  HeadingNode,
  InsightWire,
  RelationWire,
  SessionSnapshot,
  TableStateWire,
} from "./types.js";

export interface Footprint {
  rows: [number, number];
  cols: [number, number];
}

function isPrefix(prefix: string[], path: string[]): boolean {
  return (
    prefix.length <= path.length &&
    prefix.every((label, i) => label === path[i])
  );
}

export function leafNodes(nodes: HeadingNode[]): HeadingNode[] {
  return nodes.filter((n) => n.leaf);
}

/** Leaf index range [start, end) covered by a heading entry path. */
function leafRange(nodes: HeadingNode[], entry: string[]): [number, number] {
  const leaves = leafNodes(nodes);
  let start = -1;
  let end = -1;
  leaves.forEach((leaf, i) => {
    if (isPrefix(entry, leaf.path)) {
      if (start < 0) start = i;
      end = i + 1;
    }
  });
  if (start < 0) throw new Error(`entry not found: ${entry.join("/")}`);
  return [start, end];
}

export function blockFootprint(
  state: TableStateWire,
  rowEntry: string[],
  colEntry: string[],
): Footprint {
  return {
    rows: leafRange(state.rowNodes, rowEntry),
    cols: leafRange(state.colNodes, colEntry),
  };
}

export function blockValues(
  state: TableStateWire,
  rowEntry: string[],
  colEntry: string[],
): (number | null)[][] {
  const fp = blockFootprint(state, rowEntry, colEntry);
  return state.values
    .slice(fp.rows[0], fp.rows[1])
    .map((row) => row.slice(fp.cols[0], fp.cols[1]));
}

function span(nodes: HeadingNode[], node: HeadingNode): number {
  if (node.leaf) return 1;
  return leafNodes(nodes).filter((leaf) => isPrefix(node.path, leaf.path))
    .length;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const STYLE = `<style>
.hiertab-grid { border-collapse: collapse; font: 12px sans-serif; }
.hiertab-grid th, .hiertab-grid td { border: 1px solid #bbb; padding: 2px 6px; position: relative; }
.hiertab-grid tbody tr:hover td { background: #ffffcc; }
.cue-name { background: #e8e8e8; }
.cue-differs { background: #ffe0e0; }
.corner-marker { position: absolute; width: 5px; height: 5px; background: #4c72b0; }
.corner-marker.tl { top: 0; left: 0; }
.corner-marker.tr { top: 0; right: 0; }
.corner-marker.bl { bottom: 0; left: 0; }
.corner-marker.br { bottom: 0; right: 0; }
.cell-chart { display: block; }
</style>`;

interface CellDecoration {
  classes: Set<string>;
  corners: Set<"tl" | "tr" | "bl" | "br">;
  insightId?: string;
  chart?: string;
}

function decorations(
  state: TableStateWire,
  insights: InsightWire[],
  relations: RelationWire[],
): Map<string, CellDecoration> {
  const cells = new Map<string, CellDecoration>();
  const at = (r: number, c: number): CellDecoration => {
    const key = `${r}:${c}`;
    let deco = cells.get(key);
    if (!deco) {
      deco = { classes: new Set(), corners: new Set() };
      cells.set(key, deco);
    }
    return deco;
  };
  const eachCell = (fp: Footprint, fn: (d: CellDecoration, r: number, c: number) => void) => {
    for (let r = fp.rows[0]; r < fp.rows[1]; r += 1) {
      for (let c = fp.cols[0]; c < fp.cols[1]; c += 1) {
        fn(at(r, c), r, c);
      }
    }
  };

  for (const insight of insights) {
    const fp = blockFootprint(state, insight.rowEntry, insight.colEntry);
    eachCell(fp, (deco, r, c) => {
      deco.classes.add("covered");
      deco.insightId = insight.id;
      if (r === fp.rows[0] && c === fp.cols[0]) {
        deco.chart = renderChart(
          insight.chart,
          blockValues(state, insight.rowEntry, insight.colEntry),
          { width: 60, height: 26 },
        );
      }
    });
  }

  for (const relation of relations) {
    relation.blocks.forEach((block, index) => {
      const fp = blockFootprint(state, block.rowEntry, block.colEntry);
      if (relation.mechanism === "name-based") {
        eachCell(fp, (deco) => deco.classes.add("cue-name"));
      } else {
        eachCell(fp, (deco, r, c) => {
          deco.classes.add("cue-topology");
          if (r === fp.rows[0] && c === fp.cols[0]) deco.corners.add("tl");
          if (r === fp.rows[0] && c === fp.cols[1] - 1) deco.corners.add("tr");
          if (r === fp.rows[1] - 1 && c === fp.cols[0]) deco.corners.add("bl");
          if (r === fp.rows[1] - 1 && c === fp.cols[1] - 1) deco.corners.add("br");
        });
      }
      if (
        relation.pattern?.kind === "one_differs" &&
        relation.pattern.params.differingBlock === index
      ) {
        eachCell(fp, (deco) => deco.classes.add("cue-differs"));
      }
    });
  }
  return cells;
}

function headerRows(state: TableStateWire, rowLevels: number): string {
  const colLevels = Math.max(
    0,
    ...state.colNodes.map((n) => n.depth + 1),
  );
  const out: string[] = [];
  for (let depth = 0; depth < colLevels; depth += 1) {
    const cells = state.colNodes
      .filter((n) => n.depth === depth)
      .map(
        (n) =>
          `<th colspan="${span(state.colNodes, n)}" data-path="${escapeHtml(
            n.path.join("/"),
          )}">${escapeHtml(n.label)}</th>`,
      )
      .join("");
    const corner =
      depth === 0
        ? `<th rowspan="${colLevels}" colspan="${rowLevels}" class="corner"></th>`
        : "";
    out.push(`<tr>${corner}${cells}</tr>`);
  }
  return out.join("");
}

export function renderTable(snapshot: SessionSnapshot): string {
  const state = snapshot.state;
  const rowLeaves = leafNodes(state.rowNodes);
  const rowLevels = Math.max(1, ...state.rowNodes.map((n) => n.depth + 1));
  const cells = decorations(state, snapshot.insights, snapshot.relations);

  const bodyRows = rowLeaves.map((leaf, r) => {
    const headers: string[] = [];
    // emit a rowspan header cell for each ancestor whose subtree starts here
    for (let depth = 0; depth < rowLevels; depth += 1) {
      const node = state.rowNodes.find(
        (n) =>
          n.depth === depth &&
          isPrefix(n.path, leaf.path) &&
          leafRange(state.rowNodes, n.path)[0] === r,
      );
      if (node) {
        headers.push(
          `<th rowspan="${span(state.rowNodes, node)}" data-path="${escapeHtml(
            node.path.join("/"),
          )}">${escapeHtml(node.label)}</th>`,
        );
      }
    }
    const tds = state.values[r]
      .map((value, c) => {
        const deco = cells.get(`${r}:${c}`);
        const classAttr = deco && deco.classes.size
          ? ` class="${[...deco.classes].sort().join(" ")}"`
          : "";
        const insightAttr = deco?.insightId
          ? ` data-insight="${deco.insightId}"`
          : "";
        const corners = deco
          ? [...deco.corners]
              .sort()
              .map((pos) => `<i class="corner-marker ${pos}"></i>`)
              .join("")
          : "";
        const chart = deco?.chart ? `<span class="cell-chart">${deco.chart}</span>` : "";
        const text = value === null ? "" : String(value);
        return `<td${classAttr}${insightAttr} data-row="${r}" data-col="${c}">${corners}${chart}${text}</td>`;
      })
      .join("");
    return `<tr data-row="${r}">${headers.join("")}${tds}</tr>`;
  });

  return (
    STYLE +
    `<table class="hiertab-grid" data-revision="${snapshot.revision}">` +
    `<thead>${headerRows(state, rowLevels)}</thead>` +
    `<tbody>${bodyRows.join("")}</tbody>` +
    `</table>`
  );
}
