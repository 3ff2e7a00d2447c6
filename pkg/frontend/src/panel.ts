/** Insight list panel, alternatives drawer, and recommend button markup. */

import { renderChart } from "./charts.js";
import { blockValues } from "./render.js";
import type { InsightWire, SessionSnapshot } from "./types.js";

const AGENT_ICON =
  `<span class="icon icon-agent" title="recommended by the agent">&#9881;</span>`;
const MANUAL_ICON =
  `<span class="icon icon-manual" title="added manually">&#9998;</span>`;

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderInsightList(insights: InsightWire[]): string {
  const items = insights
    .map(
      (insight) =>
        `<li class="insight-card" data-insight="${insight.id}">` +
        (insight.provenance === "manual" ? MANUAL_ICON : AGENT_ICON) +
        `<span class="kind">${escapeHtml(insight.kind)}</span>` +
        `<span class="score">${insight.score.toFixed(3)}</span>` +
        `<button data-action="goto" data-insight="${insight.id}">show</button>` +
        `<button data-action="alternatives" data-insight="${insight.id}">alternatives</button>` +
        `<button data-action="remove" data-insight="${insight.id}">remove</button>` +
        `</li>`,
    )
    .join("");
  return (
    `<nav class="insight-nav">` +
    `<button data-action="prev">previous</button>` +
    `<button data-action="next">next</button>` +
    `</nav>` +
    `<ul class="insight-list">${items}</ul>`
  );
}

export function renderAlternativesDrawer(
  snapshot: SessionSnapshot,
  insightId: string,
  alternatives: InsightWire[],
): string {
  if (alternatives.length === 0) {
    return (
      `<aside class="alternatives-drawer disabled" data-insight="${insightId}">` +
      `<p>no alternative insights for this block</p></aside>`
    );
  }
  const previews = alternatives
    .map((alt) => {
      const chart = renderChart(
        alt.chart,
        blockValues(snapshot.state, alt.rowEntry, alt.colEntry),
        { width: 160, height: 80, detail: true },
      );
      return (
        `<figure class="alternative" data-kind="${escapeHtml(alt.kind)}">` +
        chart +
        `<figcaption>${escapeHtml(alt.kind)} (${alt.score.toFixed(3)})` +
        `<button data-action="replace" data-insight="${insightId}" ` +
        `data-kind="${escapeHtml(alt.kind)}">use</button>` +
        `</figcaption></figure>`
      );
    })
    .join("");
  return (
    `<aside class="alternatives-drawer" data-insight="${insightId}">` +
    previews +
    `</aside>`
  );
}

export function renderRecommendButton(inFlight: boolean): string {
  const disabled = inFlight ? " disabled" : "";
  return (
    `<button class="recommend" data-action="recommend"${disabled}>` +
    (inFlight ? "recommending…" : "recommend insights") +
    `</button>`
  );
}

export function renderMetrics(snapshot: SessionSnapshot): string {
  const m = snapshot.metrics;
  return (
    `<dl class="metrics">` +
    `<dt>AR</dt><dd>${m.ar.toFixed(3)}</dd>` +
    `<dt>IR</dt><dd>${m.ir.toFixed(3)}</dd>` +
    `<dt>ER</dt><dd>${m.er.toFixed(3)}</dd>` +
    `</dl>`
  );
}
