/** Inline SVG mini-charts, one renderer per chart tag.
 *
 * Embedded minis carry no axes or legends; the alternatives drawer requests
 * `detail: true` to get axes and a legend strip. Unknown tags render a
 * placeholder with a warning badge instead of throwing.
 */

export const CHART_TAGS = [
  "box",
  "bar",
  "pie",
  "radial",
  "line",
  "horizon",
  "density",
  "stacked-bar-normalized",
  "multi-line",
  "scatter",
] as const;

export type ChartTag = (typeof CHART_TAGS)[number];

export interface ChartOptions {
  width?: number;
  height?: number;
  detail?: boolean;
}

type Matrix = (number | null)[][];

const PALETTE = ["#4c72b0", "#55a868", "#c44e52", "#8172b2", "#ccb974"];

function flatten(matrix: Matrix): number[] {
  const out: number[] = [];
  for (const row of matrix) {
    for (const v of row) {
      if (v !== null && Number.isFinite(v)) out.push(v);
    }
  }
  return out;
}

function extent(values: number[]): [number, number] {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  return hi === lo ? [lo - 1, hi + 1] : [lo, hi];
}

function scale(v: number, [lo, hi]: [number, number], size: number): number {
  return ((v - lo) / (hi - lo)) * size;
}

function fmt(n: number): string {
  return Number.isInteger(n) ? String(n) : n.toFixed(2);
}

function svgOpen(w: number, h: number, tag: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${w} ${h}" ` +
    `width="${w}" height="${h}" class="chart chart-${tag}" data-chart="${tag}">`
  );
}

function axes(w: number, h: number, [lo, hi]: [number, number]): string {
  return (
    `<g class="axes">` +
    `<line x1="0" y1="${h}" x2="${w}" y2="${h}" stroke="#444"/>` +
    `<line x1="0" y1="0" x2="0" y2="${h}" stroke="#444"/>` +
    `<text x="2" y="10" font-size="8" fill="#444">${fmt(hi)}</text>` +
    `<text x="2" y="${h - 2}" font-size="8" fill="#444">${fmt(lo)}</text>` +
    `</g>`
  );
}

function legend(labels: string[], w: number): string {
  const items = labels
    .slice(0, PALETTE.length)
    .map(
      (label, i) =>
        `<g class="legend-item">` +
        `<rect x="${4 + i * 50}" y="2" width="8" height="8" fill="${PALETTE[i % PALETTE.length]}"/>` +
        `<text x="${14 + i * 50}" y="10" font-size="8" fill="#444">${label}</text>` +
        `</g>`,
    )
    .join("");
  return `<g class="legend" data-width="${w}">${items}</g>`;
}

function barLike(values: number[], w: number, h: number): string {
  const ext = extent([0, ...values]);
  const bw = w / values.length;
  return values
    .map((v, i) => {
      const y0 = h - scale(Math.max(v, 0), ext, h);
      const y1 = h - scale(Math.min(v, 0), ext, h);
      return (
        `<rect x="${(i * bw + 1).toFixed(1)}" y="${y0.toFixed(1)}" ` +
        `width="${Math.max(bw - 2, 1).toFixed(1)}" ` +
        `height="${Math.max(y1 - y0, 0.5).toFixed(1)}" ` +
        `fill="${PALETTE[0]}"/>`
      );
    })
    .join("");
}

function polyline(values: number[], w: number, h: number, color: string): string {
  const ext = extent(values);
  const pts = values
    .map(
      (v, i) =>
        `${((i / Math.max(values.length - 1, 1)) * w).toFixed(1)},` +
        `${(h - scale(v, ext, h)).toFixed(1)}`,
    )
    .join(" ");
  return `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"/>`;
}

function pieSlices(values: number[], cx: number, cy: number, r: number): string {
  const total = values.reduce((a, b) => a + Math.max(b, 0), 0) || 1;
  let angle = -Math.PI / 2;
  return values
    .map((v, i) => {
      const frac = Math.max(v, 0) / total;
      const a0 = angle;
      angle += frac * 2 * Math.PI;
      const x0 = cx + r * Math.cos(a0);
      const y0 = cy + r * Math.sin(a0);
      const x1 = cx + r * Math.cos(angle);
      const y1 = cy + r * Math.sin(angle);
      const large = frac > 0.5 ? 1 : 0;
      return (
        `<path d="M${cx},${cy} L${x0.toFixed(1)},${y0.toFixed(1)} ` +
        `A${r},${r} 0 ${large} 1 ${x1.toFixed(1)},${y1.toFixed(1)} Z" ` +
        `fill="${PALETTE[i % PALETTE.length]}"/>`
      );
    })
    .join("");
}

function quantile(sorted: number[], q: number): number {
  const h = (sorted.length - 1) * q;
  const lo = Math.floor(h);
  const hi = Math.min(lo + 1, sorted.length - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

function renderBody(tag: ChartTag, matrix: Matrix, w: number, h: number): string {
  const flat = flatten(matrix);
  if (flat.length === 0) return `<text x="4" y="${h / 2}" font-size="8">no data</text>`;
  switch (tag) {
    case "bar":
      return barLike(flat, w, h);
    case "line":
      return polyline(flat, w, h, PALETTE[0]);
    case "horizon": {
      const ext = extent(flat);
      const mid = (ext[0] + ext[1]) / 2;
      const pts = flat
        .map(
          (v, i) =>
            `${((i / Math.max(flat.length - 1, 1)) * w).toFixed(1)},` +
            `${(h - scale(v, ext, h)).toFixed(1)}`,
        )
        .join(" ");
      return (
        `<polygon points="0,${h} ${pts} ${w},${h}" fill="${PALETTE[0]}" opacity="0.5"/>` +
        `<line x1="0" y1="${(h - scale(mid, ext, h)).toFixed(1)}" x2="${w}" ` +
        `y2="${(h - scale(mid, ext, h)).toFixed(1)}" stroke="${PALETTE[2]}" stroke-dasharray="2,2"/>`
      );
    }
    case "pie":
      return pieSlices(flat, w / 2, h / 2, Math.min(w, h) / 2 - 2);
    case "radial": {
      const cx = w / 2;
      const cy = h / 2;
      const rMax = Math.min(w, h) / 2 - 2;
      const ext = extent([0, ...flat]);
      return flat
        .map((v, i) => {
          const a = (i / flat.length) * 2 * Math.PI - Math.PI / 2;
          const r = scale(v, ext, rMax);
          return (
            `<line x1="${cx}" y1="${cy}" ` +
            `x2="${(cx + r * Math.cos(a)).toFixed(1)}" ` +
            `y2="${(cy + r * Math.sin(a)).toFixed(1)}" ` +
            `stroke="${PALETTE[i % PALETTE.length]}" stroke-width="2"/>`
          );
        })
        .join("");
    }
    case "box": {
      const sorted = [...flat].sort((a, b) => a - b);
      const ext = extent(sorted);
      const q1 = quantile(sorted, 0.25);
      const q2 = quantile(sorted, 0.5);
      const q3 = quantile(sorted, 0.75);
      const x = (v: number) => scale(v, ext, w).toFixed(1);
      const mid = h / 2;
      return (
        `<line x1="${x(sorted[0])}" y1="${mid}" x2="${x(sorted[sorted.length - 1])}" y2="${mid}" stroke="#444"/>` +
        `<rect x="${x(q1)}" y="${mid - h / 4}" width="${Math.max(
          scale(q3, ext, w) - scale(q1, ext, w),
          1,
        ).toFixed(1)}" height="${h / 2}" fill="${PALETTE[0]}" opacity="0.6"/>` +
        `<line x1="${x(q2)}" y1="${mid - h / 4}" x2="${x(q2)}" y2="${mid + h / 4}" stroke="#222" stroke-width="1.5"/>`
      );
    }
    case "density": {
      const sorted = [...flat].sort((a, b) => a - b);
      const ext = extent(sorted);
      const bins = Math.min(10, Math.max(3, Math.floor(flat.length / 2)));
      const counts = new Array<number>(bins).fill(0);
      for (const v of sorted) {
        const b = Math.min(bins - 1, Math.floor(scale(v, ext, bins)));
        counts[b] += 1;
      }
      const cExt = extent([0, ...counts]);
      const pts = counts
        .map(
          (c, i) =>
            `${(((i + 0.5) / bins) * w).toFixed(1)},` +
            `${(h - scale(c, cExt, h)).toFixed(1)}`,
        )
        .join(" ");
      return `<polygon points="0,${h} ${pts} ${w},${h}" fill="${PALETTE[3]}" opacity="0.6"/>`;
    }
    case "stacked-bar-normalized": {
      const rows = matrix.map((row) => row.map((v) => (v === null ? 0 : v)));
      const cols = rows[0]?.length ?? 0;
      const bw = w / Math.max(cols, 1);
      const out: string[] = [];
      for (let j = 0; j < cols; j += 1) {
        const column = rows.map((row) => Math.max(row[j], 0));
        const total = column.reduce((a, b) => a + b, 0) || 1;
        let y = h;
        column.forEach((v, i) => {
          const seg = (v / total) * h;
          y -= seg;
          out.push(
            `<rect x="${(j * bw + 1).toFixed(1)}" y="${y.toFixed(1)}" ` +
              `width="${Math.max(bw - 2, 1).toFixed(1)}" height="${seg.toFixed(1)}" ` +
              `fill="${PALETTE[i % PALETTE.length]}"/>`,
          );
        });
      }
      return out.join("");
    }
    case "multi-line":
      return matrix
        .map((row, i) =>
          polyline(
            row.filter((v): v is number => v !== null),
            w,
            h,
            PALETTE[i % PALETTE.length],
          ),
        )
        .join("");
    case "scatter": {
      const xs = (matrix[0] ?? []).filter((v): v is number => v !== null);
      const ys = (matrix[1] ?? []).filter((v): v is number => v !== null);
      if (xs.length === 0 || ys.length === 0) return "";
      const ex = extent(xs);
      const ey = extent(ys);
      return xs
        .map((x, i) =>
          i < ys.length
            ? `<circle cx="${scale(x, ex, w).toFixed(1)}" ` +
              `cy="${(h - scale(ys[i], ey, h)).toFixed(1)}" r="2" fill="${PALETTE[0]}"/>`
            : "",
        )
        .join("");
    }
  }
}

export function renderChart(
  tag: string,
  matrix: Matrix,
  options: ChartOptions = {},
): string {
  const w = options.width ?? 80;
  const h = options.height ?? 40;
  if (!(CHART_TAGS as readonly string[]).includes(tag)) {
    return (
      svgOpen(w, h, "unknown") +
      `<rect x="0" y="0" width="${w}" height="${h}" fill="#eee" stroke="#c44e52"/>` +
      `<text x="4" y="${h / 2}" font-size="8" class="warning-badge">unknown chart: ${tag}</text>` +
      `</svg>`
    );
  }
  const body = renderBody(tag as ChartTag, matrix, w, h);
  let extras = "";
  if (options.detail) {
    extras =
      axes(w, h, extent(flatten(matrix).length ? flatten(matrix) : [0, 1])) +
      legend(
        matrix.map((_, i) => `series ${i + 1}`),
        w,
      );
  }
  return svgOpen(w, h, tag) + body + extras + `</svg>`;
}
