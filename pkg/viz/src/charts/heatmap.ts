/** Outcome-transition heatmap: pre-translation outcome rows, post-translation
 * columns, one cell per transition count. Cells tracking test agreement
 * (the PASSED/WRONG_ANSWER pairs) carry U/C annotations that must equal the
 * table values exactly. */

import type { ReportBundle, TransitionCell } from "../bundle.js";
import { el, fmt, heatColor, svgDocument, textEl } from "../svg.js";

const SHORT_NAMES: Record<string, string> = {
  COMPILATION_ERROR: "CE",
  RUNTIME_ERROR: "RE",
  MEMORY_LIMIT_EXCEEDED: "MLE",
  TIME_LIMIT_EXCEEDED: "TLE",
  WRONG_ANSWER: "WA",
  PASSED: "PASS",
};

function shortName(outcome: string): string {
  return SHORT_NAMES[outcome] ?? outcome;
}

export function cellAnnotations(cell: TransitionCell): string[] {
  const lines = [String(cell.count)];
  if (cell.testsUnchanged !== null && cell.testsChanged !== null) {
    lines.push(`U=${cell.testsUnchanged}`, `C=${cell.testsChanged}`);
  }
  return lines;
}

export function renderTransitionHeatmap(bundle: ReportBundle): string {
  if (bundle.transitions.length === 0) {
    throw new Error("transition matrix is empty; nothing to plot");
  }
  const pres = [...new Set(bundle.transitions.map((c) => c.pre))];
  const posts = [...new Set(bundle.transitions.map((c) => c.post))];
  const maxCount = Math.max(...bundle.transitions.map((c) => c.count), 1);

  const cellSize = 72;
  const margin = { top: 84, right: 24, bottom: 24, left: 96 };
  const width = margin.left + cellSize * posts.length + margin.right;
  const height = margin.top + cellSize * pres.length + margin.bottom;

  const parts: string[] = [
    textEl(width / 2, 24, "Outcome transitions under translation", {
      "font-size": 16,
      "text-anchor": "middle",
      fill: "#111",
    }),
    textEl(width / 2, 46, "rows: before; columns: after", {
      "font-size": 11,
      "text-anchor": "middle",
      fill: "#666",
    }),
  ];

  posts.forEach((post, j) => {
    parts.push(
      textEl(margin.left + cellSize * (j + 0.5), margin.top - 10, shortName(post), {
        "font-size": 11,
        "text-anchor": "middle",
        fill: "#333",
      })
    );
  });
  pres.forEach((pre, i) => {
    parts.push(
      textEl(margin.left - 8, margin.top + cellSize * (i + 0.5) + 4, shortName(pre), {
        "font-size": 11,
        "text-anchor": "end",
        fill: "#333",
      })
    );
  });

  for (const cell of bundle.transitions) {
    const i = pres.indexOf(cell.pre);
    const j = posts.indexOf(cell.post);
    const x = margin.left + cellSize * j;
    const y = margin.top + cellSize * i;
    const shade = cell.count / maxCount;
    parts.push(
      el("rect", {
        x: fmt(x),
        y: fmt(y),
        width: cellSize,
        height: cellSize,
        fill: heatColor(shade),
        stroke: "#999",
      })
    );
    const lines = cellAnnotations(cell);
    const textFill = shade > 0.55 ? "#ffffff" : "#1a1a1a";
    lines.forEach((line, lineIndex) => {
      const offset = (lineIndex - (lines.length - 1) / 2) * 14;
      parts.push(
        textEl(x + cellSize / 2, y + cellSize / 2 + 4 + offset, line, {
          "font-size": 12,
          "text-anchor": "middle",
          fill: textFill,
        })
      );
    });
  }

  return svgDocument(width, height, parts);
}
