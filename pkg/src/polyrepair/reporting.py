"""Run-directory persistence and report emission.

A run directory is the unit of reproducibility: it snapshots the config,
campaign state, ledger, history, bug index, and log, so metrics and analyze
never need the original inputs. Metrics emits one structured report plus flat
tables; everything is deterministic down to float formatting, so re-running
any reader is byte-idempotent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from polyrepair.analytics import (
    OUTCOME_ORDER,
    TransitionMatrix,
    back_translation_account,
    cliffs_delta,
    f1_at_k,
    map_at_k,
    mww_test,
    ndcg_at_k,
    pass_at_k_table,
    precision_at_k,
    recall_at_k,
    transition_matrix,
    validity_lists,
)
from polyrepair.core import BugInstance, CampaignState, LanguageSet
from polyrepair.history import HistoryStore
from polyrepair.ledger import RunLedger
from polyrepair.orchestrator import (
    RunConfig,
    RunResult,
    corpus_digest,
    mean_path_length,
    translation_path,
)

SCHEMA_VERSION = 1

CONFIG_FILE = "config.json"
STATE_FILE = "state.json"
LEDGER_FILE = "ledger.jsonl"
HISTORY_FILE = "history.jsonl"
BUG_INDEX_FILE = "bug_index.jsonl"
LOG_FILE = "run.log"
SUMMARY_FILE = "summary.txt"
REPORT_FILE = "report.json"


class RunDirectoryError(Exception):
    """Missing or malformed run-directory contents."""


def format_float(value: float) -> str:
    return f"{value:.12g}"


def _dump_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _csv_line(cells: Sequence[Any]) -> str:
    rendered = []
    for cell in cells:
        if cell is None:
            rendered.append("")
        elif isinstance(cell, float):
            rendered.append(format_float(cell))
        else:
            rendered.append(str(cell))
    return ",".join(rendered)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    lines = [_csv_line(header)] + [_csv_line(row) for row in rows]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def summary_lines(result: RunResult) -> list[str]:
    total, fixed = result.bugs_total(), result.bugs_fixed()
    mean = mean_path_length(result.state, result.ledger)
    lines = [
        f"{total}/{total} bugs evaluated",
        f"fixed: {fixed}/{total}",
        f"strategy: {result.config.strategy.value}",
        f"seed: {result.config.seed}",
        f"iterations_run: {result.iterations_run}",
        f"mean_path_length: {format_float(mean) if mean is not None else 'n/a'}",
    ]
    return lines


def write_run_directory(
    run_dir: str | Path,
    result: RunResult,
    bugs: Sequence[BugInstance],
    history_store: HistoryStore | None = None,
) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config.to_dict(),
        "resolved_max_iterations": result.config.resolved_max_iterations(result.languages),
        "languages": list(result.languages),
        "corpus_digest": corpus_digest(bugs),
        "initial_table": result.initial_table,
        "iterations_run": result.iterations_run,
    }
    (run_dir / CONFIG_FILE).write_text(_dump_json(snapshot), encoding="utf-8")
    (run_dir / STATE_FILE).write_text(_dump_json(result.state.to_dict()), encoding="utf-8")
    (run_dir / LEDGER_FILE).write_text(result.ledger.to_jsonl(), encoding="utf-8")
    if history_store is not None and result.config.history_enabled:
        (run_dir / HISTORY_FILE).write_text(history_store.export_jsonl(), encoding="utf-8")
    index_lines = [
        json.dumps(
            {
                "bug_id": bug.bug_id,
                "source_language": bug.source_language,
                "problem_id": bug.problem.problem_id,
                "difficulty": bug.problem.difficulty,
                "initial_outcome": bug.initial_outcome.value,
                "error_type": bug.error_type,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        for bug in bugs
    ]
    (run_dir / BUG_INDEX_FILE).write_text(
        "".join(line + "\n" for line in index_lines), encoding="utf-8"
    )
    (run_dir / LOG_FILE).write_text(
        "".join(line + "\n" for line in result.log), encoding="utf-8"
    )
    (run_dir / SUMMARY_FILE).write_text(
        "".join(line + "\n" for line in summary_lines(result)), encoding="utf-8"
    )
    return run_dir


@dataclass(slots=True)
class LoadedRun:
    run_dir: Path
    snapshot: dict[str, Any]
    config: RunConfig
    languages: LanguageSet
    state: CampaignState
    ledger: RunLedger
    bug_index: list[dict[str, Any]]

    @property
    def corpus_digest(self) -> str:
        return self.snapshot["corpus_digest"]

    @property
    def iterations_run(self) -> int:
        return self.snapshot["iterations_run"]

    def label(self) -> str:
        return self.run_dir.name


def load_run(run_dir: str | Path) -> LoadedRun:
    run_dir = Path(run_dir)
    for name in (CONFIG_FILE, STATE_FILE, LEDGER_FILE, BUG_INDEX_FILE):
        if not (run_dir / name).exists():
            raise RunDirectoryError(f"{run_dir} is not a completed run directory: missing {name}")
    snapshot = json.loads((run_dir / CONFIG_FILE).read_text(encoding="utf-8"))
    if snapshot.get("schema_version") != SCHEMA_VERSION:
        raise RunDirectoryError(
            f"{run_dir}: schema_version {snapshot.get('schema_version')!r} unsupported, "
            f"expected {SCHEMA_VERSION}"
        )
    config = RunConfig.from_dict(snapshot["config"])
    languages = LanguageSet(tuple(snapshot["languages"]))
    state = CampaignState.from_dict(
        json.loads((run_dir / STATE_FILE).read_text(encoding="utf-8"))
    )
    ledger = RunLedger.from_jsonl((run_dir / LEDGER_FILE).read_text(encoding="utf-8"))
    bug_index = [
        json.loads(line)
        for line in (run_dir / BUG_INDEX_FILE).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return LoadedRun(run_dir, snapshot, config, languages, state, ledger, bug_index)


# ---------------------------------------------------------------------------
# Metrics report


def _ranking_rows(
    state: CampaignState, languages: LanguageSet, k_values: Sequence[int]
) -> list[dict[str, Any]]:
    """Aggregate ranking metrics per k over per-language validity lists.

    Lists are zero-padded to the largest requested k: iterations past
    termination cannot be valid, so padding is exact rather than a guess.
    """
    horizon = max(k_values)
    lists = validity_lists(state, languages, horizon)
    rows = []
    for k in k_values:
        precisions, recalls, f1s, ndcgs = [], [], [], []
        for rel in lists.values():
            precisions.append(precision_at_k(rel, k))
            f1s.append(f1_at_k(rel, k))
            ndcgs.append(ndcg_at_k(rel, k))
            recall = recall_at_k(rel, k)
            if recall is not None:
                recalls.append(recall)
        rows.append(
            {
                "k": k,
                "precision": sum(precisions) / len(precisions) if precisions else None,
                "recall": sum(recalls) / len(recalls) if recalls else None,
                "f1": sum(f1s) / len(f1s) if f1s else None,
                "ndcg": sum(ndcgs) / len(ndcgs) if ndcgs else None,
                "map": map_at_k(lists, k) if lists else None,
            }
        )
    return rows


def _matrix_payload(matrix: TransitionMatrix) -> dict[str, Any]:
    def cell_key(pre, post) -> str:
        return f"{pre.value}->{post.value}"

    return {
        "order": [o.value for o in OUTCOME_ORDER],
        "counts": [list(row) for row in matrix.counts],
        "tests_unchanged": {
            cell_key(pre, post): count for (pre, post), count in sorted(matrix.test_unchanged.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value))
        },
        "tests_changed": {
            cell_key(pre, post): count for (pre, post), count in sorted(matrix.test_changed.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value))
        },
        "total": matrix.total(),
    }


def _path_rows(loaded: LoadedRun) -> list[dict[str, Any]]:
    meta = {entry["bug_id"]: entry for entry in loaded.bug_index}
    rows = []
    for entry in loaded.bug_index:
        bug_id = entry["bug_id"]
        camp = loaded.state.campaign(bug_id)
        path = translation_path(loaded.state, loaded.ledger, bug_id)
        rows.append(
            {
                "bug_id": bug_id,
                "source_language": camp.source_language,
                "difficulty": meta[bug_id]["difficulty"],
                "initial_outcome": meta[bug_id]["initial_outcome"],
                "fixed": camp.fixed,
                "fixed_iteration": camp.fixed_iteration,
                "path": path,
                "path_length": len(path),
            }
        )
    return rows


def build_report(loaded: LoadedRun, k_values: Sequence[int]) -> dict[str, Any]:
    if not k_values or any(k < 1 for k in k_values):
        raise ValueError(f"k values must be positive, got {list(k_values)}")
    k_values = sorted(set(k_values))
    pass_rows = pass_at_k_table(
        loaded.state, loaded.languages, loaded.config.pass_k, loaded.iterations_run
    )
    matrix = transition_matrix(loaded.ledger.events())
    accounts = back_translation_account(loaded.ledger.records)
    mean = mean_path_length(loaded.state, loaded.ledger)
    mean_translated = mean_path_length(
        loaded.state, loaded.ledger, include_direct_fixes=False
    )
    total = len(loaded.state.bug_ids())
    fixed = sum(1 for b in loaded.state.bug_ids() if loaded.state.campaign(b).fixed)
    return {
        "schema_version": SCHEMA_VERSION,
        "run": {
            "strategy": loaded.config.strategy.value,
            "seed": loaded.config.seed,
            "pass_k": loaded.config.pass_k,
            "sample_count": loaded.config.sample_count,
            "translation_enabled": loaded.config.translation_enabled,
            "history_enabled": loaded.config.history_enabled,
            "iterations_run": loaded.iterations_run,
            "corpus_digest": loaded.corpus_digest,
            "languages": list(loaded.languages),
        },
        "summary": {
            "bugs_total": total,
            "bugs_fixed": fixed,
            "mean_path_length": mean,
            "mean_path_length_translated_only": mean_translated,
        },
        "pass_at_k": [
            {
                "language": row.language,
                "iteration": row.iteration,
                "value": row.value,
                "bugs": row.bugs,
                "fixed": row.fixed,
            }
            for row in pass_rows
        ],
        "ranking": _ranking_rows(loaded.state, loaded.languages, k_values),
        "transition_matrix": _matrix_payload(matrix),
        "paths": _path_rows(loaded),
        "back_translation": [
            {
                "language": language,
                "bugs_preserved": account.bugs_preserved,
                "bugs_lost": account.bugs_lost,
                "samples_before": account.samples_before,
                "samples_after": account.samples_after,
            }
            for language, account in accounts.items()
        ],
    }


def write_metrics(
    run_dir: str | Path, out_dir: str | Path | None = None, k_values: Sequence[int] = (1, 3, 5)
) -> Path:
    loaded = load_run(run_dir)
    out = Path(out_dir) if out_dir is not None else Path(run_dir) / "metrics"
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(loaded, k_values)
    (out / REPORT_FILE).write_text(_dump_json(report), encoding="utf-8")
    write_csv(
        out / "pass_at_k.csv",
        ("language", "iteration", "value", "bugs", "fixed"),
        [
            (r["language"], r["iteration"], r["value"], r["bugs"], r["fixed"])
            for r in report["pass_at_k"]
        ],
    )
    write_csv(
        out / "ranking_metrics.csv",
        ("k", "precision", "recall", "f1", "ndcg", "map"),
        [
            (r["k"], r["precision"], r["recall"], r["f1"], r["ndcg"], r["map"])
            for r in report["ranking"]
        ],
    )
    matrix = report["transition_matrix"]
    matrix_rows = []
    for i, pre in enumerate(matrix["order"]):
        for j, post in enumerate(matrix["order"]):
            key = f"{pre}->{post}"
            matrix_rows.append(
                (
                    pre,
                    post,
                    matrix["counts"][i][j],
                    matrix["tests_unchanged"].get(key),
                    matrix["tests_changed"].get(key),
                )
            )
    write_csv(
        out / "transition_matrix.csv",
        ("pre", "post", "count", "tests_unchanged", "tests_changed"),
        matrix_rows,
    )
    write_csv(
        out / "path_stats.csv",
        (
            "bug_id",
            "source_language",
            "difficulty",
            "initial_outcome",
            "fixed",
            "fixed_iteration",
            "path",
            "path_length",
        ),
        [
            (
                r["bug_id"],
                r["source_language"],
                r["difficulty"],
                r["initial_outcome"],
                r["fixed"],
                r["fixed_iteration"],
                "|".join(r["path"]),
                r["path_length"],
            )
            for r in report["paths"]
        ],
    )
    write_csv(
        out / "back_translation.csv",
        ("language", "bugs_preserved", "bugs_lost", "samples_before", "samples_after"),
        [
            (
                r["language"],
                r["bugs_preserved"],
                r["bugs_lost"],
                r["samples_before"],
                r["samples_after"],
            )
            for r in report["back_translation"]
        ],
    )
    return out


# ---------------------------------------------------------------------------
# Cross-run analysis


def final_pass_by_language(loaded: LoadedRun) -> dict[str, float]:
    """Per-language Pass@k at each run's last executed iteration."""
    rows = pass_at_k_table(
        loaded.state, loaded.languages, loaded.config.pass_k, loaded.iterations_run
    )
    final = loaded.iterations_run - 1
    return {row.language: row.value for row in rows if row.iteration == final}


def analyze_runs(run_dirs: Sequence[str | Path], out_dir: str | Path) -> Path:
    if not 2 <= len(run_dirs) <= 3:
        raise ValueError(f"analyze compares 2 or 3 runs, got {len(run_dirs)}")
    runs = [load_run(d) for d in run_dirs]
    digests = {run.corpus_digest for run in runs}
    if len(digests) != 1:
        raise ValueError(
            "runs cover different corpora: " + ", ".join(sorted(digests))
        )
    labels = [run.label() for run in runs]
    if len(set(labels)) != len(labels):
        labels = [f"run{i + 1}-{label}" for i, label in enumerate(labels)]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_run = []
    finals = []
    for label, run in zip(labels, runs):
        final = final_pass_by_language(run)
        finals.append(final)
        per_run.append(
            {
                "label": label,
                "run_dir": str(run.run_dir),
                "strategy": run.config.strategy.value,
                "seed": run.config.seed,
                "translation_enabled": run.config.translation_enabled,
                "history_enabled": run.config.history_enabled,
                "iterations_run": run.iterations_run,
                "bugs_total": len(run.state.bug_ids()),
                "bugs_fixed": sum(
                    1 for b in run.state.bug_ids() if run.state.campaign(b).fixed
                ),
                "mean_path_length": mean_path_length(run.state, run.ledger),
                "final_pass_at_k": final,
            }
        )
    pairwise = []
    for i in range(len(runs)):
        for j in range(i + 1, len(runs)):
            shared = sorted(set(finals[i]) & set(finals[j]))
            x = [finals[i][language] for language in shared]
            y = [finals[j][language] for language in shared]
            u, p = mww_test(x, y)
            pairwise.append(
                {
                    "a": labels[i],
                    "b": labels[j],
                    "languages": shared,
                    "u_statistic": u,
                    "p_value": p,
                    "cliffs_delta": cliffs_delta(x, y),
                }
            )
    comparison = {
        "schema_version": SCHEMA_VERSION,
        "corpus_digest": runs[0].corpus_digest,
        "runs": per_run,
        "pairwise": pairwise,
    }
    (out / "comparison.json").write_text(_dump_json(comparison), encoding="utf-8")
    curve_rows = []
    for label, run in zip(labels, runs):
        rows = pass_at_k_table(
            run.state, run.languages, run.config.pass_k, run.iterations_run
        )
        for row in rows:
            curve_rows.append((label, row.language, row.iteration, row.value))
    write_csv(out / "curves.csv", ("run", "language", "iteration", "value"), curve_rows)
    write_csv(
        out / "comparison.csv",
        (
            "run",
            "strategy",
            "seed",
            "bugs_fixed",
            "bugs_total",
            "mean_path_length",
            "iterations_run",
        ),
        [
            (
                r["label"],
                r["strategy"],
                r["seed"],
                r["bugs_fixed"],
                r["bugs_total"],
                r["mean_path_length"],
                r["iterations_run"],
            )
            for r in per_run
        ],
    )
    return out
