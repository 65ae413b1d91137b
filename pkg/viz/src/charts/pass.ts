/** Per-language Pass@k curves across iterations, iteration 0 included. */

import type { ReportBundle } from "../bundle.js";
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

export function renderPassCurves(bundle: ReportBundle): string {
  if (bundle.passAtK.length === 0) {
    throw new Error("pass_at_k table is empty; nothing to plot");
  }
  const languages = [...new Set(bundle.passAtK.map((r) => r.language))];
  const maxIteration = Math.max(...bundle.passAtK.map((r) => r.iteration));

  const f = frame(720, 440, { top: 48, right: 150, bottom: 48, left: 60 });
  const x = linearScale([0, Math.max(maxIteration, 1)], f.plotX);
  const y = linearScale([0, 1], f.plotY);

  const parts: string[] = [
    textEl(f.width / 2, 24, "Pass@k by iteration", {
      "font-size": 16,
      "text-anchor": "middle",
      fill: "#111",
    }),
    yAxis(f, y, ticks([0, 1], 5), "Pass@k"),
    xAxis(f, x, Array.from({ length: maxIteration + 1 }, (_, i) => i), "iteration"),
  ];

  languages.forEach((language, i) => {
    const rows = bundle.passAtK
      .filter((r) => r.language === language)
      .sort((a, b) => a.iteration - b.iteration);
    const stroke = color(i);
    parts.push(polyline(rows.map((r) => [x(r.iteration), y(r.value)]), stroke));
    for (const r of rows) {
      parts.push(
        el("circle", { cx: fmt(x(r.iteration)), cy: fmt(y(r.value)), r: 3, fill: stroke })
      );
    }
  });
  parts.push(legend(f, languages.map((language, i) => [language, color(i)])));

  return svgDocument(f.width, f.height, parts);
}
