export { loadBundle, SUPPORTED_SCHEMA_VERSION } from "./bundle.js";
export type {
  PassRow,
  PathRow,
  RankingRow,
  ReportBundle,
  TransitionCell,
} from "./bundle.js";
export { renderPassCurves } from "./charts/pass.js";
export { nodeLabel, renderSankey } from "./charts/sankey.js";
export { cellAnnotations, renderTransitionHeatmap } from "./charts/heatmap.js";
export { renderRankingCurves } from "./charts/ranking.js";
export { binDifficulties, renderDifficultyDistributions } from "./charts/difficulty.js";
