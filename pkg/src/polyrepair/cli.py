"""Operator entry point.

Subcommands: ingest (validate a corpus), run (execute a campaign into a run
directory), metrics (emit report files from a run directory), analyze
(compare 2-3 runs over the same corpus), report (metrics plus a bundle
manifest for external plotting).

Exit codes: 0 on success (a completed campaign counts as success even with
unfixed bugs), 1 on configuration or infrastructure failure, 2 on bad flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from polyrepair.corpus import CorpusError, load_corpus
from polyrepair.gateway import (
    Backend,
    HttpBackend,
    HttpConfig,
    ModelGateway,
    ScriptedBackend,
    StochasticBackend,
)
from polyrepair.harness import (
    MockToolchain,
    SubprocessToolchain,
    Toolchain,
    ToolchainConfigError,
    available_real_languages,
)
from polyrepair.history import CharacteristicsEncoder, HistoryStore
from polyrepair.orchestrator import RunConfig, run_campaign
from polyrepair.reporting import (
    RunDirectoryError,
    analyze_runs,
    summary_lines,
    write_metrics,
    write_run_directory,
)
from polyrepair.strategy import StrategyKind

BUNDLE_FILE = "bundle.json"


class CliError(Exception):
    """Operator-facing failure: bad config, missing files, unusable toolchain."""


def _load_json(path: Path, what: str) -> Any:
    if not path.exists():
        raise CliError(f"{what} file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} file {path} is not valid JSON: {exc}") from exc


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config_file(path: str | None) -> tuple[dict[str, Any], Path]:
    """Config payload plus the directory its relative paths resolve against."""
    if path is None:
        return {}, Path.cwd()
    config_path = Path(path)
    data = _load_json(config_path, "config")
    if not isinstance(data, dict):
        raise CliError(f"config file {config_path} must hold a JSON object")
    return data, config_path.parent


def build_backend(kind: str, spec: dict[str, Any], base: Path, seed: int) -> Backend:
    if kind == "scripted":
        path = spec.get("path")
        if not path:
            raise CliError("scripted backend requires a responses file (backend path)")
        return ScriptedBackend.from_file(_resolve(base, path))
    if kind == "stochastic":
        path = spec.get("path")
        if path:
            return StochasticBackend.from_file(_resolve(base, path), seed)
        return StochasticBackend({}, seed)
    if kind == "http":
        missing = [key for key in ("endpoint", "model") if not spec.get(key)]
        if missing:
            raise CliError(f"http backend config missing {missing}")
        return HttpBackend(
            HttpConfig(
                endpoint=spec["endpoint"],
                model=spec["model"],
                auth_env=spec.get("auth_env", HttpConfig.auth_env),
                temperature=float(spec.get("temperature", HttpConfig.temperature)),
                timeout_s=float(spec.get("timeout_s", HttpConfig.timeout_s)),
            )
        )
    raise CliError(f"unknown backend kind {kind!r}")


def build_toolchain(
    kind: str, spec: dict[str, Any], base: Path, corpus_languages: Sequence[str]
) -> Toolchain:
    if kind == "mock":
        path = spec.get("path")
        verdicts = None
        if path:
            raw = _load_json(_resolve(base, path), "mock verdicts")
            verdicts = {code: list(categories) for code, categories in raw.items()}
        return MockToolchain(verdicts)
    if kind == "real":
        path = spec.get("path")
        try:
            toolchain = (
                SubprocessToolchain.from_config_file(_resolve(base, path))
                if path
                else SubprocessToolchain()
            )
        except (ToolchainConfigError, OSError) as exc:
            raise CliError(f"toolchain config unusable: {exc}") from exc
        available = set(
            available_real_languages(toolchain.configs)  # type: ignore[arg-type]
        )
        missing = [lang for lang in corpus_languages if lang not in available]
        if missing:
            raise CliError(
                "no working toolchain for corpus language(s): " + ", ".join(missing)
            )
        return toolchain
    raise CliError(f"unknown toolchain kind {kind!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyrepair",
        description="Cross-language program-repair campaigns: translate stubborn "
        "bugs into a better-suited language, repair there, and translate back.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="validate a corpus and print its manifest")
    ingest.add_argument("--corpus", required=True, help="corpus root directory")
    ingest.add_argument(
        "--languages", nargs="*", default=None, help="restrict to these language names"
    )

    run = sub.add_parser("run", help="execute a repair campaign into a run directory")
    run.add_argument("--config", help="JSON config file; flags below override it")
    run.add_argument("--corpus", help="corpus root directory")
    run.add_argument(
        "--strategy",
        choices=[kind.value for kind in StrategyKind],
        help="target-language selection policy",
    )
    run.add_argument("--seed", type=int, help="run seed for all per-bug randomness")
    run.add_argument(
        "--backend",
        choices=["scripted", "stochastic", "http"],
        help="model backend kind",
    )
    run.add_argument("--backend-config", help="backend spec file (responses, bands, endpoint)")
    run.add_argument(
        "--toolchain", choices=["mock", "real"], help="execution toolchain kind"
    )
    run.add_argument("--toolchain-config", help="toolchain spec file")
    run.add_argument(
        "--no-translation",
        action="store_true",
        help="ablation: repeat direct repair instead of translating",
    )
    run.add_argument(
        "--no-history",
        action="store_true",
        help="ablation: disable history retrieval and writes",
    )
    run.add_argument("--parallel", type=int, metavar="N", help="bug-level parallelism cap")
    run.add_argument("--out", help="run directory to create")
    run.add_argument("--samples", type=int, help="repair samples per (bug, iteration)")
    run.add_argument("--pass-k", type=int, help="k used for Pass@k")
    run.add_argument("--max-iterations", type=int, help="iteration cap including iteration 0")
    run.add_argument("--retrieval-k", type=int, help="history neighbors per partition")
    run.add_argument("--history-file", help="persistent history store (JSONL)")
    run.add_argument("--initial-table", help="JSON file language->Pass@k overriding the measured table")

    metrics = sub.add_parser("metrics", help="compute report files for a run directory")
    metrics.add_argument("--run", required=True, help="completed run directory")
    metrics.add_argument(
        "--k", type=int, nargs="+", default=[1, 3, 5], help="ranking-metric cutoffs"
    )
    metrics.add_argument("--out", help="output directory (default: RUN/metrics)")

    analyze = sub.add_parser("analyze", help="compare 2-3 runs over the same corpus")
    analyze.add_argument(
        "--runs", nargs="+", required=True, help="run directories to compare"
    )
    analyze.add_argument("--out", required=True, help="comparison output directory")

    report = sub.add_parser(
        "report", help="emit the full report bundle for external plotting"
    )
    report.add_argument("--run", required=True, help="completed run directory")
    report.add_argument(
        "--k", type=int, nargs="+", default=[1, 3, 5], help="ranking-metric cutoffs"
    )
    report.add_argument("--out", help="bundle directory (default: RUN/bundle)")
    return parser


def _merge_run_settings(args: argparse.Namespace) -> tuple[dict[str, Any], Path]:
    config, base = load_config_file(args.config)
    run_cfg = dict(config.get("run", {}))
    if args.seed is not None:
        run_cfg["seed"] = args.seed
    if args.strategy is not None:
        run_cfg["strategy"] = args.strategy
    if args.samples is not None:
        run_cfg["sample_count"] = args.samples
    if args.pass_k is not None:
        run_cfg["pass_k"] = args.pass_k
    if args.max_iterations is not None:
        run_cfg["max_iterations"] = args.max_iterations
    if args.retrieval_k is not None:
        run_cfg["retrieval_k"] = args.retrieval_k
    if args.parallel is not None:
        run_cfg["parallelism"] = args.parallel
    if args.no_translation:
        run_cfg["translation_enabled"] = False
    if args.no_history:
        run_cfg["history_enabled"] = False
    merged = {
        "corpus": args.corpus or config.get("corpus"),
        "out": args.out or config.get("out"),
        "backend_kind": args.backend or config.get("backend", {}).get("kind", "stochastic"),
        "backend_spec": dict(config.get("backend", {})),
        "toolchain_kind": args.toolchain or config.get("toolchain", {}).get("kind", "mock"),
        "toolchain_spec": dict(config.get("toolchain", {})),
        "history_file": args.history_file or config.get("history_file"),
        "initial_table": args.initial_table,
        "run": run_cfg,
    }
    if args.backend_config:
        merged["backend_spec"]["path"] = args.backend_config
        merged["backend_spec"]["_cli_path"] = True
    if args.toolchain_config:
        merged["toolchain_spec"]["path"] = args.toolchain_config
        merged["toolchain_spec"]["_cli_path"] = True
    return merged, base


def cmd_ingest(args: argparse.Namespace) -> int:
    languages = tuple(args.languages) if args.languages else None
    try:
        _bugs, _problems, manifest, _language_set = load_corpus(args.corpus, languages)
    except CorpusError as exc:
        print(f"corpus invalid:\n{exc}", file=sys.stderr)
        return 1
    print(manifest.to_text(), end="")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    merged, base = _merge_run_settings(args)
    if not merged["corpus"]:
        raise CliError("no corpus given: pass --corpus or set it in the config file")
    if not merged["out"]:
        raise CliError("no output directory given: pass --out or set it in the config file")
    corpus_root = _resolve(base, merged["corpus"])
    try:
        bugs, _problems, manifest, languages = load_corpus(corpus_root)
    except CorpusError as exc:
        raise CliError(f"corpus invalid:\n{exc}") from exc
    if merged["initial_table"]:
        table = _load_json(_resolve(Path.cwd(), merged["initial_table"]), "initial table")
        merged["run"]["initial_table"] = {str(k): float(v) for k, v in table.items()}
    try:
        config = RunConfig.from_dict(merged["run"])
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid run settings: {exc}") from exc
    backend_base = Path.cwd() if merged["backend_spec"].pop("_cli_path", False) else base
    toolchain_base = Path.cwd() if merged["toolchain_spec"].pop("_cli_path", False) else base
    backend = build_backend(
        merged["backend_kind"], merged["backend_spec"], backend_base, config.seed
    )
    toolchain = build_toolchain(
        merged["toolchain_kind"], merged["toolchain_spec"], toolchain_base, list(languages)
    )
    history_path = merged["history_file"]
    store = HistoryStore(
        CharacteristicsEncoder(languages),
        _resolve(Path.cwd(), history_path) if history_path else None,
    )
    gateway = ModelGateway(backend, max_in_flight=max(8, config.parallelism))
    result = run_campaign(bugs, languages, config, gateway, toolchain, store)
    run_dir = write_run_directory(_resolve(Path.cwd(), merged["out"]), result, bugs, store)
    print(manifest.to_text(), end="")
    for line in summary_lines(result):
        print(line)
    print(f"run directory: {run_dir}")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    out = write_metrics(args.run, args.out, args.k)
    print(f"metrics written to {out}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    if not 2 <= len(args.runs) <= 3:
        raise CliError(f"analyze compares 2 or 3 runs, got {len(args.runs)}")
    try:
        out = analyze_runs(args.runs, args.out)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    print(f"comparison written to {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    out = Path(args.out) if args.out else run_dir / "bundle"
    write_metrics(run_dir, out, args.k)
    summary = run_dir / "summary.txt"
    if summary.exists():
        (out / "summary.txt").write_bytes(summary.read_bytes())
    files = sorted(p.name for p in out.iterdir() if p.is_file() and p.name != BUNDLE_FILE)
    bundle = {
        "schema_version": 1,
        "source_run": run_dir.name,  # bundles travel; keep the label machine-free
        "files": files,
    }
    (out / BUNDLE_FILE).write_text(
        json.dumps(bundle, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"report bundle written to {out}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "ingest": cmd_ingest,
        "run": cmd_run,
        "metrics": cmd_metrics,
        "analyze": cmd_analyze,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (CliError, RunDirectoryError, ToolchainConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
