/** Ranking-quality curves: one line per metric across cutoff k. */

import type { RankingRow, ReportBundle } from "../bundle.js";
import {
  color,
  el,
  fmt,
  frame,
  legend,
  linearScale,
  polyline,
  svgDocument,
  textEl,
  ticks,
  xAxis,
  yAxis,
} from "../svg.js";

type MetricName = "precision" | "recall" | "f1" | "ndcg" | "map";

const METRICS: MetricName[] = ["precision", "recall", "f1", "ndcg", "map"];

export function renderRankingCurves(bundle: ReportBundle): string {
  if (bundle.ranking.length === 0) {
    throw new Error("ranking table is empty; nothing to plot");
  }
  const rows = [...bundle.ranking].sort((a, b) => a.k - b.k);
  const maxK = Math.max(...rows.map((r) => r.k), 1);

  const f = frame(720, 440, { top: 48, right: 130, bottom: 48, left: 60 });
  const x = linearScale([0, maxK], f.plotX);
  const y = linearScale([0, 1], f.plotY);

  const parts: string[] = [
    textEl(f.width / 2, 24, "Target-ranking quality by cutoff", {
      "font-size": 16,
      "text-anchor": "middle",
      fill: "#111",
    }),
    yAxis(f, y, ticks([0, 1], 5), "score"),
    xAxis(f, x, rows.map((r) => r.k), "k"),
  ];

  METRICS.forEach((metric, index) => {
    const points: [number, number][] = [];
    for (const row of rows) {
      const value: number | null = row[metric];
      if (value === null) {
        continue;
      }
      points.push([x(row.k), y(value)]);
    }
    if (points.length === 0) {
      return;
    }
    parts.push(polyline(points, color(index)));
    for (const [px, py] of points) {
      parts.push(el("circle", { cx: fmt(px), cy: fmt(py), r: 3, fill: color(index) }));
    }
  });

  parts.push(legend(f, METRICS.map((metric, index) => [metric, color(index)])));

  return svgDocument(f.width, f.height, parts);
}
