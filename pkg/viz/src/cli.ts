#!/usr/bin/env node
/** Render report-bundle figures to static SVG files. */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { loadBundle, type ReportBundle } from "./bundle.js";
import { renderDifficultyDistributions } from "./charts/difficulty.js";
import { renderTransitionHeatmap } from "./charts/heatmap.js";
import { renderPassCurves } from "./charts/pass.js";
import { renderRankingCurves } from "./charts/ranking.js";
import { renderSankey } from "./charts/sankey.js";

const FIGURES: Record<string, (bundle: ReportBundle) => string> = {
  pass: renderPassCurves,
  sankey: renderSankey,
  heatmap: renderTransitionHeatmap,
  ranking: renderRankingCurves,
  difficulty: renderDifficultyDistributions,
};

const USAGE = "usage: viz <bundle-dir> --out <dir> [--which pass|sankey|heatmap|ranking|difficulty|all]";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        which: { type: "string", default: "all" },
        help: { type: "boolean", default: false },
      },
    });
  } catch (error) {
    process.stderr.write(`error: ${(error as Error).message}\n${USAGE}\n`);
    return 1;
  }

  if (parsed.values.help) {
    process.stdout.write(`${USAGE}\n`);
    return 0;
  }
  const bundleDir = parsed.positionals[0];
  if (bundleDir === undefined || parsed.positionals.length !== 1) {
    process.stderr.write(`error: expected exactly one bundle directory\n${USAGE}\n`);
    return 1;
  }
  const outDir = parsed.values.out;
  if (outDir === undefined) {
    process.stderr.write(`error: --out is required\n${USAGE}\n`);
    return 1;
  }
  const which = parsed.values.which ?? "all";
  if (which !== "all" && !(which in FIGURES)) {
    process.stderr.write(`error: unknown figure '${which}'\n${USAGE}\n`);
    return 1;
  }

  let bundle: ReportBundle;
  try {
    bundle = loadBundle(bundleDir);
  } catch (error) {
    process.stderr.write(`error: ${(error as Error).message}\n`);
    return 1;
  }

  const names = which === "all" ? Object.keys(FIGURES) : [which];
  mkdirSync(outDir, { recursive: true });
  for (const name of names) {
    const render = FIGURES[name];
    if (render === undefined) {
      continue;
    }
    let svg: string;
    try {
      svg = render(bundle);
    } catch (error) {
      process.stderr.write(`error: ${name}: ${(error as Error).message}\n`);
      return 1;
    }
    const path = join(outDir, `${name}.svg`);
    writeFileSync(path, svg, "utf8");
    process.stdout.write(`wrote ${path}\n`);
  }
  return 0;
}

if (import.meta.url === pathToFileURL(process.argv[1] ?? "").href) {
  process.exitCode = main(process.argv.slice(2));
}
