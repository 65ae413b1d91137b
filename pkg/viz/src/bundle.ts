/** Report-bundle loader. A bundle directory is the only interface to the
 * repair engine: flat CSV tables plus a summary, listed in bundle.json.
 * Figures are derived from these files alone, never from run internals. */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { asRecords, parseCsv, toNumber } from "./csv.js";

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface PassRow {
  language: string;
  iteration: number;
  value: number;
  bugs: number;
  fixed: number;
}

export interface RankingRow {
  k: number;
  precision: number;
  recall: number;
  f1: number;
  ndcg: number;
  map: number | null;
}

export interface TransitionCell {
  pre: string;
  post: string;
  count: number;
  testsUnchanged: number | null;
  testsChanged: number | null;
}

export interface PathRow {
  bugId: string;
  sourceLanguage: string;
  difficulty: number;
  initialOutcome: string;
  fixed: boolean;
  fixedIteration: number | null;
  path: string[];
  pathLength: number;
}

export interface ReportBundle {
  dir: string;
  schemaVersion: number;
  passAtK: PassRow[];
  ranking: RankingRow[];
  transitions: TransitionCell[];
  paths: PathRow[];
  summary: string[];
}

function readText(dir: string, name: string): string {
  try {
    return readFileSync(join(dir, name), "utf-8");
  } catch {
    throw new Error(`missing bundle file '${name}' in ${dir}`);
  }
}

function parseBool(value: string, context: string): boolean {
  if (value === "True") return true;
  if (value === "False") return false;
  throw new Error(`${context}: expected True or False, got '${value}'`);
}

export function loadBundle(dir: string): ReportBundle {
  const manifest = JSON.parse(readText(dir, "bundle.json")) as {
    schema_version?: number;
    files?: string[];
  };
  if (manifest.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    throw new Error(
      `bundle schema version ${manifest.schema_version} is not supported ` +
        `(expected ${SUPPORTED_SCHEMA_VERSION})`
    );
  }

  const passTable = asRecords(parseCsv(readText(dir, "pass_at_k.csv"), "pass_at_k.csv"));
  const passAtK: PassRow[] = passTable.map((r, i) => ({
    language: r["language"] as string,
    iteration: toNumber(r["iteration"] as string, `pass_at_k.csv:${i + 2}`),
    value: toNumber(r["value"] as string, `pass_at_k.csv:${i + 2}`),
    bugs: toNumber(r["bugs"] as string, `pass_at_k.csv:${i + 2}`),
    fixed: toNumber(r["fixed"] as string, `pass_at_k.csv:${i + 2}`),
  }));

  const rankingTable = asRecords(
    parseCsv(readText(dir, "ranking_metrics.csv"), "ranking_metrics.csv")
  );
  const ranking: RankingRow[] = rankingTable.map((r, i) => ({
    k: toNumber(r["k"] as string, `ranking_metrics.csv:${i + 2}`),
    precision: toNumber(r["precision"] as string, `ranking_metrics.csv:${i + 2}`),
    recall: toNumber(r["recall"] as string, `ranking_metrics.csv:${i + 2}`),
    f1: toNumber(r["f1"] as string, `ranking_metrics.csv:${i + 2}`),
    ndcg: toNumber(r["ndcg"] as string, `ranking_metrics.csv:${i + 2}`),
    map: r["map"] === "" ? null : toNumber(r["map"] as string, `ranking_metrics.csv:${i + 2}`),
  }));

  const matrixTable = asRecords(
    parseCsv(readText(dir, "transition_matrix.csv"), "transition_matrix.csv")
  );
  const transitions: TransitionCell[] = matrixTable.map((r, i) => ({
    pre: r["pre"] as string,
    post: r["post"] as string,
    count: toNumber(r["count"] as string, `transition_matrix.csv:${i + 2}`),
    testsUnchanged:
      r["tests_unchanged"] === ""
        ? null
        : toNumber(r["tests_unchanged"] as string, `transition_matrix.csv:${i + 2}`),
    testsChanged:
      r["tests_changed"] === ""
        ? null
        : toNumber(r["tests_changed"] as string, `transition_matrix.csv:${i + 2}`),
  }));

  const pathTable = asRecords(parseCsv(readText(dir, "path_stats.csv"), "path_stats.csv"));
  const paths: PathRow[] = pathTable.map((r, i) => ({
    bugId: r["bug_id"] as string,
    sourceLanguage: r["source_language"] as string,
    difficulty: toNumber(r["difficulty"] as string, `path_stats.csv:${i + 2}`),
    initialOutcome: r["initial_outcome"] as string,
    fixed: parseBool(r["fixed"] as string, `path_stats.csv:${i + 2}`),
    fixedIteration:
      r["fixed_iteration"] === ""
        ? null
        : toNumber(r["fixed_iteration"] as string, `path_stats.csv:${i + 2}`),
    path: r["path"] === "" ? [] : (r["path"] as string).split("|"),
    pathLength: toNumber(r["path_length"] as string, `path_stats.csv:${i + 2}`),
  }));

  const summary = readText(dir, "summary.txt").split("\n").filter((line) => line !== "");

  return { dir, schemaVersion: manifest.schema_version, passAtK, ranking, transitions, paths, summary };
}
