/** Minimal SVG assembly: plain string building, no DOM. */

export interface Attrs {
  [name: string]: string | number;
}

export function escapeText(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function el(tag: string, attrs: Attrs, children: string[] = []): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${escapeText(String(v))}"`);
  const open = parts.length > 0 ? `<${tag} ${parts.join(" ")}>` : `<${tag}>`;
  if (children.length === 0) {
    return open.replace(/>$/, "/>");
  }
  return `${open}${children.join("")}</${tag}>`;
}

export function textEl(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return el("text", { x: fmt(x), y: fmt(y), "font-family": "sans-serif", ...attrs }, [
    escapeText(content),
  ]);
}

export function svgDocument(width: number, height: number, children: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">` +
    el("rect", { x: 0, y: 0, width, height, fill: "#ffffff" }) +
    children.join("") +
    "</svg>\n"
  );
}

/** Fixed-precision coordinates keep output byte-stable across platforms. */
export function fmt(value: number): string {
  const rounded = value.toFixed(2);
  return rounded === "-0.00" ? "0.00" : rounded;
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  const scale = ((value: number) =>
    span === 0 ? (r0 + r1) / 2 : r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

export function ticks(domain: [number, number], count: number): number[] {
  const [lo, hi] = domain;
  if (lo === hi) {
    return [lo];
  }
  const rawStep = (hi - lo) / Math.max(count, 1);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3]!;
  const start = Math.ceil(lo / step) * step;
  const result: number[] = [];
  for (let v = start; v <= hi + step / 1e6; v += step) {
    result.push(Number(v.toPrecision(12)));
  }
  return result;
}

export const PALETTE = [
  "#4269d0",
  "#efb118",
  "#ff725c",
  "#6cc5b0",
  "#3ca951",
  "#ff8ab7",
  "#a463f2",
  "#97bbf5",
  "#9c6b4e",
  "#9498a0",
  "#41b6c4",
];

export function color(index: number): string {
  return PALETTE[index % PALETTE.length] as string;
}

/** White-to-blue ramp for count cells; t in [0, 1]. */
export function heatColor(t: number): string {
  const clamp = Math.max(0, Math.min(1, t));
  const from = [247, 251, 255];
  const to = [8, 48, 107];
  const channel = (i: number) =>
    Math.round((from[i] as number) + ((to[i] as number) - (from[i] as number)) * clamp);
  return `rgb(${channel(0)},${channel(1)},${channel(2)})`;
}

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  plotX: [number, number];
  plotY: [number, number];
}

export function frame(
  width: number,
  height: number,
  margin: { top: number; right: number; bottom: number; left: number }
): Frame {
  return {
    width,
    height,
    margin,
    plotX: [margin.left, width - margin.right],
    plotY: [height - margin.bottom, margin.top],
  };
}

export function xAxis(f: Frame, scale: Scale, values: number[], label: string): string {
  const y = f.plotY[0];
  const parts = [
    el("line", {
      x1: fmt(f.plotX[0]),
      y1: fmt(y),
      x2: fmt(f.plotX[1]),
      y2: fmt(y),
      stroke: "#333",
    }),
  ];
  for (const v of values) {
    const x = scale(v);
    parts.push(
      el("line", { x1: fmt(x), y1: fmt(y), x2: fmt(x), y2: fmt(y + 5), stroke: "#333" }),
      textEl(x, y + 18, String(v), { "font-size": 11, "text-anchor": "middle", fill: "#333" })
    );
  }
  parts.push(
    textEl((f.plotX[0] + f.plotX[1]) / 2, f.height - 8, label, {
      "font-size": 12,
      "text-anchor": "middle",
      fill: "#333",
    })
  );
  return parts.join("");
}

export function yAxis(f: Frame, scale: Scale, values: number[], label: string): string {
  const x = f.plotX[0];
  const parts = [
    el("line", {
      x1: fmt(x),
      y1: fmt(f.plotY[0]),
      x2: fmt(x),
      y2: fmt(f.plotY[1]),
      stroke: "#333",
    }),
  ];
  for (const v of values) {
    const y = scale(v);
    parts.push(
      el("line", { x1: fmt(x - 5), y1: fmt(y), x2: fmt(x), y2: fmt(y), stroke: "#333" }),
      el("line", {
        x1: fmt(x),
        y1: fmt(y),
        x2: fmt(f.plotX[1]),
        y2: fmt(y),
        stroke: "#ddd",
        "stroke-dasharray": "3,3",
      }),
      textEl(x - 8, y + 4, String(v), { "font-size": 11, "text-anchor": "end", fill: "#333" })
    );
  }
  parts.push(
    el(
      "g",
      { transform: `translate(14 ${fmt((f.plotY[0] + f.plotY[1]) / 2)}) rotate(-90)` },
      [textEl(0, 0, label, { "font-size": 12, "text-anchor": "middle", fill: "#333" })]
    )
  );
  return parts.join("");
}

export function polyline(points: [number, number][], stroke: string): string {
  const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return el("polyline", {
    points: coords,
    fill: "none",
    stroke,
    "stroke-width": 2,
  });
}

export function legend(f: Frame, entries: [string, string][]): string {
  const parts: string[] = [];
  entries.forEach(([name, stroke], i) => {
    const y = f.margin.top + 16 * i;
    const x = f.plotX[1] + 12;
    parts.push(
      el("line", { x1: fmt(x), y1: fmt(y), x2: fmt(x + 18), y2: fmt(y), stroke, "stroke-width": 2 }),
      textEl(x + 24, y + 4, name, { "font-size": 11, fill: "#333" })
    );
  });
  return parts.join("");
}
