export { ApiError, HiertabClient } from "./api.js";
export type { FetchLike } from "./api.js";
export { App } from "./app.js";
export { CHART_TAGS, renderChart } from "./charts.js";
export type { ChartTag } from "./charts.js";
export {
  renderAlternativesDrawer,
  renderInsightList,
  renderMetrics,
  renderRecommendButton,
} from "./panel.js";
export { blockFootprint, blockValues, leafNodes, renderTable } from "./render.js";
export type * from "./types.js";
