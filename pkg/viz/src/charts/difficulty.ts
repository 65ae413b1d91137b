/** Difficulty distributions: paired histogram of bug difficulty, fixed vs
 * unfixed, sharing one set of bins. */

import type { ReportBundle } from "../bundle.js";
import { el, fmt, frame, legend, linearScale, svgDocument, textEl, ticks, xAxis, yAxis } from "../svg.js";

const FIXED_COLOR = "#4269d0";
const UNFIXED_COLOR = "#efb118";

export interface Bin {
  lo: number;
  hi: number;
  fixed: number;
  unfixed: number;
}

export function binDifficulties(
  values: { difficulty: number; fixed: boolean }[],
  binCount: number
): Bin[] {
  const lo = Math.min(...values.map((v) => v.difficulty));
  const hi = Math.max(...values.map((v) => v.difficulty));
  const span = hi > lo ? hi - lo : 1;
  const bins: Bin[] = [];
  for (let i = 0; i < binCount; i++) {
    bins.push({
      lo: lo + (span * i) / binCount,
      hi: lo + (span * (i + 1)) / binCount,
      fixed: 0,
      unfixed: 0,
    });
  }
  for (const v of values) {
    const index = Math.min(Math.floor(((v.difficulty - lo) / span) * binCount), binCount - 1);
    const bin = bins[index] as Bin;
    if (v.fixed) {
      bin.fixed += 1;
    } else {
      bin.unfixed += 1;
    }
  }
  return bins;
}

export function renderDifficultyDistributions(bundle: ReportBundle): string {
  if (bundle.paths.length === 0) {
    throw new Error("path table is empty; nothing to plot");
  }
  const values = bundle.paths.map((row) => ({ difficulty: row.difficulty, fixed: row.fixed }));
  const binCount = Math.min(12, Math.max(4, Math.ceil(Math.sqrt(values.length))));
  const bins = binDifficulties(values, binCount);
  const maxCount = Math.max(...bins.map((b) => Math.max(b.fixed, b.unfixed)), 1);
  const first = bins[0] as Bin;
  const last = bins[bins.length - 1] as Bin;

  const f = frame(720, 440, { top: 48, right: 130, bottom: 48, left: 60 });
  const x = linearScale([first.lo, last.hi], f.plotX);
  const y = linearScale([0, maxCount], f.plotY);

  const parts: string[] = [
    textEl(f.width / 2, 24, "Difficulty of fixed vs unfixed bugs", {
      "font-size": 16,
      "text-anchor": "middle",
      fill: "#111",
    }),
    yAxis(f, y, ticks([0, maxCount], Math.min(5, maxCount)), "bugs"),
    xAxis(f, x, ticks([first.lo, last.hi], 6), "difficulty"),
  ];

  for (const bin of bins) {
    const left = x(bin.lo);
    const right = x(bin.hi);
    const half = (right - left) / 2;
    if (bin.fixed > 0) {
      parts.push(
        el("rect", {
          x: fmt(left + 1),
          y: fmt(y(bin.fixed)),
          width: fmt(Math.max(half - 2, 1)),
          height: fmt(y(0) - y(bin.fixed)),
          fill: FIXED_COLOR,
          "fill-opacity": "0.85",
        })
      );
    }
    if (bin.unfixed > 0) {
      parts.push(
        el("rect", {
          x: fmt(left + half + 1),
          y: fmt(y(bin.unfixed)),
          width: fmt(Math.max(half - 2, 1)),
          height: fmt(y(0) - y(bin.unfixed)),
          fill: UNFIXED_COLOR,
          "fill-opacity": "0.85",
        })
      );
    }
  }

  parts.push(
    legend(f, [
      ["fixed", FIXED_COLOR],
      ["unfixed", UNFIXED_COLOR],
    ])
  );

  return svgDocument(f.width, f.height, parts);
}
