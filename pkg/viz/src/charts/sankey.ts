/** Translation-path Sankey for fixed bugs. Column = iteration; node label
 * follows the "iteration - language (count)" convention; ribbon thickness
 * is the number of bugs taking that hop. */

import type { PathRow, ReportBundle } from "../bundle.js";
import { color, el, fmt, svgDocument, textEl } from "../svg.js";

interface Node {
  iteration: number;
  language: string;
  count: number;
  x: number;
  y: number;
  height: number;
  outCursor: number;
  inCursor: number;
}

interface Link {
  source: string;
  target: string;
  value: number;
}

function chain(row: PathRow): [number, string][] {
  const steps: [number, string][] = [[0, row.sourceLanguage]];
  row.path.forEach((language, i) => steps.push([i + 1, language]));
  return steps;
}

function nodeKey(iteration: number, language: string): string {
  return `${iteration}:${language}`;
}

export function renderSankey(bundle: ReportBundle): string {
  const fixedRows = bundle.paths.filter((row) => row.fixed);
  if (fixedRows.length === 0) {
    throw new Error("no fixed bugs in path table; nothing to draw");
  }

  const counts = new Map<string, Node>();
  const linkValues = new Map<string, Link>();
  for (const row of fixedRows) {
    const steps = chain(row);
    // a fixed bug's chain ends at the iteration that fixed it
    const reach = row.fixedIteration ?? steps.length - 1;
    for (let i = 0; i <= reach && i < steps.length; i++) {
      const [iteration, language] = steps[i] as [number, string];
      const key = nodeKey(iteration, language);
      const node = counts.get(key);
      if (node) {
        node.count += 1;
      } else {
        counts.set(key, {
          iteration,
          language,
          count: 1,
          x: 0,
          y: 0,
          height: 0,
          outCursor: 0,
          inCursor: 0,
        });
      }
      if (i > 0) {
        const [prevIteration, prevLanguage] = steps[i - 1] as [number, string];
        const linkKey = `${nodeKey(prevIteration, prevLanguage)}->${key}`;
        const link = linkValues.get(linkKey);
        if (link) {
          link.value += 1;
        } else {
          linkValues.set(linkKey, { source: nodeKey(prevIteration, prevLanguage), target: key, value: 1 });
        }
      }
    }
  }

  const iterations = [...new Set([...counts.values()].map((n) => n.iteration))].sort(
    (a, b) => a - b
  );
  const columns = iterations.map((iteration) =>
    [...counts.values()]
      .filter((n) => n.iteration === iteration)
      .sort((a, b) => a.language.localeCompare(b.language))
  );

  const width = 760;
  const height = 460;
  const margin = { top: 48, right: 160, bottom: 24, left: 24 };
  const plotHeight = height - margin.top - margin.bottom;
  const nodeWidth = 16;
  const gap = 14;
  const unit = Math.min(
    ...columns.map((column) => {
      const total = column.reduce((acc, n) => acc + n.count, 0);
      return (plotHeight - gap * (column.length - 1)) / total;
    })
  );
  const columnSpan =
    iterations.length > 1
      ? (width - margin.left - margin.right - nodeWidth) / (iterations.length - 1)
      : 0;

  columns.forEach((column, columnIndex) => {
    const totalHeight =
      column.reduce((acc, n) => acc + n.count * unit, 0) + gap * (column.length - 1);
    let y = margin.top + (plotHeight - totalHeight) / 2;
    for (const node of column) {
      node.x = margin.left + columnIndex * columnSpan;
      node.y = y;
      node.height = node.count * unit;
      y += node.height + gap;
    }
  });

  const languages = [...new Set([...counts.values()].map((n) => n.language))].sort();
  const fill = (language: string) => color(languages.indexOf(language));

  const parts: string[] = [
    textEl(width / 2, 24, "Translation paths of fixed bugs", {
      "font-size": 16,
      "text-anchor": "middle",
      fill: "#111",
    }),
  ];

  const ordered = [...linkValues.values()].sort((a, b) =>
    a.source === b.source ? a.target.localeCompare(b.target) : a.source.localeCompare(b.source)
  );
  for (const link of ordered) {
    const source = counts.get(link.source) as Node;
    const target = counts.get(link.target) as Node;
    const thickness = link.value * unit;
    const x0 = source.x + nodeWidth;
    const x1 = target.x;
    const sy = source.y + source.outCursor;
    const ty = target.y + target.inCursor;
    source.outCursor += thickness;
    target.inCursor += thickness;
    const mid = (x0 + x1) / 2;
    const d =
      `M ${fmt(x0)} ${fmt(sy)} ` +
      `C ${fmt(mid)} ${fmt(sy)} ${fmt(mid)} ${fmt(ty)} ${fmt(x1)} ${fmt(ty)} ` +
      `L ${fmt(x1)} ${fmt(ty + thickness)} ` +
      `C ${fmt(mid)} ${fmt(ty + thickness)} ${fmt(mid)} ${fmt(sy + thickness)} ` +
      `${fmt(x0)} ${fmt(sy + thickness)} Z`;
    parts.push(el("path", { d, fill: fill(target.language), opacity: 0.45 }));
  }

  for (const column of columns) {
    for (const node of column) {
      parts.push(
        el("rect", {
          x: fmt(node.x),
          y: fmt(node.y),
          width: nodeWidth,
          height: fmt(node.height),
          fill: fill(node.language),
        }),
        textEl(node.x + nodeWidth + 6, node.y + node.height / 2 + 4, nodeLabel(node), {
          "font-size": 11,
          fill: "#333",
        })
      );
    }
  }

  return svgDocument(width, height, parts);
}

export function nodeLabel(node: { iteration: number; language: string; count: number }): string {
  return `${node.iteration} - ${node.language} (${node.count})`;
}
