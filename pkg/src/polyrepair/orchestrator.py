"""Campaign control loop.

Iteration 0 repairs every bug directly in its source language. Each later
iteration takes every unfixed bug with remaining targets through decide ->
translate -> repair-in-target -> back-translate -> validate-in-source. State,
ledger, and history mutations happen only at iteration barriers, in corpus
order, so the schedule of the worker pool cannot change any output.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
from dataclasses import dataclass, field
from typing import Any, Sequence

from polyrepair.analytics import pass_at_k_table
from polyrepair.core import (
    BugInstance,
    CampaignState,
    CodeSample,
    LanguageSet,
    Outcome,
    Provenance,
    TestCase,
)
from polyrepair.gateway import GatewayError, ModelGateway, Task, TaskRequest
from polyrepair.harness import ExecutionReport, InfrastructureError, Toolchain, is_correct
from polyrepair.history import CharacteristicsEncoder, HistoryEntry, HistorySource, HistoryStore
from polyrepair.ledger import IterationRecord, RunLedger, TranslationEvent
from polyrepair.strategy import Strategy, StrategyKind


@dataclass(slots=True)
class RunConfig:
    strategy: StrategyKind = StrategyKind.GREEDY
    sample_count: int = 20
    pass_k: int = 10
    max_iterations: int | None = None  # None resolves to |language set|
    retrieval_k: int = 5
    seed: int = 0
    translation_enabled: bool = True
    history_enabled: bool = True
    parallelism: int = 1
    time_limit_ms: int | None = None
    memory_limit_mib: int | None = None
    initial_table: dict[str, float] | None = None  # overrides the measured table

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if not 1 <= self.pass_k <= self.sample_count:
            raise ValueError(
                f"pass_k must satisfy 1 <= pass_k <= sample_count, got {self.pass_k}"
            )
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.retrieval_k < 1:
            raise ValueError(f"retrieval_k must be >= 1, got {self.retrieval_k}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")

    def resolved_max_iterations(self, languages: LanguageSet) -> int:
        return self.max_iterations if self.max_iterations is not None else len(languages)

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "sample_count": self.sample_count,
            "pass_k": self.pass_k,
            "max_iterations": self.max_iterations,
            "retrieval_k": self.retrieval_k,
            "seed": self.seed,
            "translation_enabled": self.translation_enabled,
            "history_enabled": self.history_enabled,
            "parallelism": self.parallelism,
            "time_limit_ms": self.time_limit_ms,
            "memory_limit_mib": self.memory_limit_mib,
            "initial_table": self.initial_table,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "strategy" in kwargs:
            kwargs["strategy"] = StrategyKind(kwargs["strategy"])
        return cls(**kwargs)


@dataclass(slots=True)
class RunResult:
    state: CampaignState
    ledger: RunLedger
    languages: LanguageSet
    config: RunConfig
    initial_table: dict[str, float]
    iterations_run: int
    log: list[str] = field(default_factory=list)

    def bugs_total(self) -> int:
        return len(self.state.bug_ids())

    def bugs_fixed(self) -> int:
        return sum(
            1 for bug_id in self.state.bug_ids() if self.state.campaign(bug_id).fixed
        )


def corpus_digest(bugs: Sequence[BugInstance]) -> str:
    """Identity of the bug set, used to refuse cross-corpus comparisons."""
    material = "\n".join(
        sorted(f"{b.bug_id}:{b.source_language}:{b.problem.problem_id}" for b in bugs)
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:16]


@dataclass(slots=True)
class _RoundPlan:
    """Worker output for one (bug, iteration); applied at the barrier."""

    bug: BugInstance
    record: IterationRecord
    target: str | None
    history_entry: HistoryEntry | None
    baseline: ExecutionReport | None  # source buggy-code execution, cached


class Orchestrator:
    def __init__(
        self,
        bugs: Sequence[BugInstance],
        languages: LanguageSet,
        config: RunConfig,
        gateway: ModelGateway,
        toolchain: Toolchain,
        history_store: HistoryStore | None = None,
    ):
        self.bugs = list(bugs)
        self.languages = languages
        self.config = config
        self.gateway = gateway
        self.toolchain = toolchain
        if history_store is None and config.history_enabled:
            history_store = HistoryStore(CharacteristicsEncoder(languages))
        self.history = history_store
        self.strategy = Strategy(config.strategy, languages, config.seed, gateway)
        if config.initial_table:
            self.strategy.set_table(config.initial_table)
        self.state = CampaignState()
        self.ledger = RunLedger()
        self.log: list[str] = []
        self._baselines: dict[str, ExecutionReport] = {}
        seen: set[str] = set()
        for bug in self.bugs:
            if bug.bug_id in seen:
                raise ValueError(f"duplicate bug_id {bug.bug_id!r}")
            seen.add(bug.bug_id)
            languages.require(bug.source_language)

    # -- worker-side rounds -------------------------------------------------

    def _tests(self, bug: BugInstance) -> tuple[TestCase, ...]:
        cfg = self.config
        if cfg.time_limit_ms is None and cfg.memory_limit_mib is None:
            return bug.problem.tests
        return tuple(
            TestCase(
                input=t.input,
                expected_output=t.expected_output,
                time_limit_ms=cfg.time_limit_ms or t.time_limit_ms,
                memory_limit_mib=cfg.memory_limit_mib or t.memory_limit_mib,
            )
            for t in bug.problem.tests
        )

    def _repair_request(
        self, bug: BugInstance, iteration: int, language: str, code: str
    ) -> TaskRequest:
        return TaskRequest(
            task=Task.REPAIR,
            bug_id=bug.bug_id,
            iteration=iteration,
            language=language,
            source_language=bug.source_language,
            description=bug.problem.description,
            input_spec=bug.problem.input_spec,
            output_spec=bug.problem.output_spec,
            error_type=bug.error_type,
            difficulty=bug.problem.difficulty,
            initial_outcome=bug.initial_outcome,
            code=code,
            sample_count=self.config.sample_count,
        )

    def _execute(
        self, bug: BugInstance, iteration: int, kind: str, language: str,
        provenance: Provenance, codes: Sequence[str],
    ) -> list[ExecutionReport]:
        tests = self._tests(bug)
        reports = []
        for j, code in enumerate(codes):
            sample = CodeSample(
                sample_id=f"{bug.bug_id}:i{iteration}:{kind}:{j}",
                bug_id=bug.bug_id,
                iteration=iteration,
                language=language,
                code=code,
                provenance=provenance,
            )
            reports.append(self.toolchain.execute(sample, tests))
        return reports

    def _history_entry(
        self, bug: BugInstance, iteration: int, n: int, c: int, target: str | None
    ) -> HistoryEntry | None:
        if self.history is None or not self.config.history_enabled:
            return None
        if iteration == 0:
            source, targets = HistorySource.INITIAL_DIRECT, ()
        else:
            source = HistorySource.TRANSLATION_BASED
            targets = (target,) if (target is not None and c > 0) else ()
        return HistoryEntry(
            bug_id=bug.bug_id,
            source=source,
            source_language=bug.source_language,
            difficulty=bug.problem.difficulty,
            initial_outcome=bug.initial_outcome,
            error_type=bug.error_type,
            fixed=c > 0,
            successful_target_languages=targets,
            n=n,
            c=c,
            vector=self.history.encoder.encode_bug(bug),
            iteration_written=iteration,
        )

    def _error_plan(
        self, bug: BugInstance, iteration: int, target: str | None,
        rationale: str, candidates: tuple[str, ...], exc: Exception,
    ) -> _RoundPlan:
        n = self.config.sample_count
        record = IterationRecord(
            bug_id=bug.bug_id,
            iteration=iteration,
            strategy=self.config.strategy.value,
            target_language=target,
            decision_rationale=rationale,
            candidates=candidates,
            translation=None,
            sample_outcomes=(),
            back_translation_outcomes=None,
            n=n,
            c=0,
            error=f"{type(exc).__name__}: {exc}",
        )
        return _RoundPlan(bug, record, target, self._history_entry(bug, iteration, n, 0, target), None)

    def _direct_round(self, bug: BugInstance, iteration: int) -> _RoundPlan:
        try:
            codes = self.gateway.generate_samples(
                self._repair_request(bug, iteration, bug.source_language, bug.code)
            )
            reports = self._execute(
                bug, iteration, "direct", bug.source_language, Provenance.DIRECT_REPAIR, codes
            )
        except (GatewayError, InfrastructureError) as exc:
            return self._error_plan(bug, iteration, None, "", (), exc)
        outcomes = tuple(r.aggregate for r in reports)
        n, c = len(reports), sum(1 for r in reports if is_correct(r))
        record = IterationRecord(
            bug_id=bug.bug_id,
            iteration=iteration,
            strategy=self.config.strategy.value,
            target_language=None,
            decision_rationale="",
            candidates=(),
            translation=None,
            sample_outcomes=outcomes,
            back_translation_outcomes=None,
            n=n,
            c=c,
        )
        return _RoundPlan(bug, record, None, self._history_entry(bug, iteration, n, c, None), None)

    def _baseline_report(self, bug: BugInstance) -> tuple[ExecutionReport, ExecutionReport | None]:
        cached = self._baselines.get(bug.bug_id)
        if cached is not None:
            return cached, None
        fresh = self._execute(
            bug, 0, "baseline", bug.source_language, Provenance.DIRECT_REPAIR, [bug.code]
        )[0]
        return fresh, fresh

    def _translation_round(self, bug: BugInstance, iteration: int) -> _RoundPlan:
        candidates = tuple(self.state.remaining_targets(bug.bug_id, self.languages))
        retrieval = (
            self.history.retrieve(bug, self.config.retrieval_k)
            if self.history is not None and self.config.history_enabled
            else None
        )
        target, rationale = self.strategy.select(bug, candidates, retrieval, iteration)
        try:
            translate = TaskRequest(
                task=Task.TRANSLATE,
                bug_id=bug.bug_id,
                iteration=iteration,
                source_language=bug.source_language,
                target_language=target,
                error_type=bug.error_type,
                initial_outcome=bug.initial_outcome,
                code=bug.code,
            )
            translated = self.gateway.generate_samples(translate)[0]
            baseline, fresh_baseline = self._baseline_report(bug)
            post = self._execute(
                bug, iteration, "translated", target, Provenance.TRANSLATED_BUG, [translated]
            )[0]
            pairs = tuple(
                (a.category, b.category) for a, b in zip(baseline.per_test, post.per_test)
            )
            event = TranslationEvent(
                bug_id=bug.bug_id,
                iteration=iteration,
                source_language=bug.source_language,
                target_language=target,
                pre_outcome=baseline.aggregate,
                post_outcome=post.aggregate,
                per_test=pairs,
            )
            codes = self.gateway.generate_samples(
                self._repair_request(bug, iteration, target, translated)
            )
            reports = self._execute(
                bug, iteration, "repair", target, Provenance.TARGET_REPAIR, codes
            )
            outcomes = tuple(r.aggregate for r in reports)
            back_outcomes: list[Outcome] = []
            c = 0
            for j, (code, report) in enumerate(zip(codes, reports)):
                if not is_correct(report):
                    continue
                back = TaskRequest(
                    task=Task.BACK_TRANSLATE,
                    bug_id=bug.bug_id,
                    iteration=iteration,
                    source_language=bug.source_language,
                    target_language=target,
                    code=code,
                )
                back_code = self.gateway.generate_samples(back)[0]
                back_report = self._execute(
                    bug, iteration, f"back{j}", bug.source_language,
                    Provenance.BACK_TRANSLATED, [back_code],
                )[0]
                back_outcomes.append(back_report.aggregate)
                if is_correct(back_report):
                    c += 1
        except (GatewayError, InfrastructureError) as exc:
            return self._error_plan(bug, iteration, target, rationale, candidates, exc)
        n = len(reports)
        record = IterationRecord(
            bug_id=bug.bug_id,
            iteration=iteration,
            strategy=self.config.strategy.value,
            target_language=target,
            decision_rationale=rationale,
            candidates=candidates,
            translation=event,
            sample_outcomes=outcomes,
            back_translation_outcomes=tuple(back_outcomes),
            n=n,
            c=c,
        )
        return _RoundPlan(
            bug, record, target, self._history_entry(bug, iteration, n, c, target), fresh_baseline
        )

    # -- barrier ------------------------------------------------------------

    def _run_rounds(self, entrants: list[BugInstance], iteration: int) -> None:
        worker = self._direct_round
        if iteration > 0 and self.config.translation_enabled:
            worker = self._translation_round
        if self.config.parallelism == 1 or len(entrants) <= 1:
            plans = [worker(bug, iteration) for bug in entrants]
        else:
            with concurrent.futures.ThreadPoolExecutor(self.config.parallelism) as pool:
                plans = list(pool.map(lambda b: worker(b, iteration), entrants))
        entries = []
        for plan in plans:
            if plan.baseline is not None:
                self._baselines[plan.bug.bug_id] = plan.baseline
            if plan.target is not None:
                self.state.record_attempt(plan.bug.bug_id, plan.target)
            self.state.mark_iteration_result(
                plan.bug.bug_id, iteration, plan.record.n, plan.record.c
            )
            self.ledger.append(plan.record)
            if plan.history_entry is not None:
                entries.append(plan.history_entry)
        if entries and self.history is not None:
            self.history.upsert_batch(entries)
        fixed = sum(1 for p in plans if p.record.c > 0)
        self.log.append(
            f"iteration {iteration}: {len(plans)} bugs evaluated, {fixed} newly fixed"
        )

    def run(self) -> RunResult:
        for bug in self.bugs:
            self.state.register(bug.bug_id, bug.source_language)
        max_iterations = self.config.resolved_max_iterations(self.languages)
        self._run_rounds(self.bugs, 0)
        if not self.config.initial_table:
            rows = pass_at_k_table(self.state, self.languages, self.config.pass_k, 1)
            self.strategy.set_table({row.language: row.value for row in rows})
        iterations_run = 1
        for iteration in range(1, max_iterations):
            unfixed = [
                bug for bug in self.bugs if not self.state.campaign(bug.bug_id).fixed
            ]
            if not unfixed:
                self.log.append(f"iteration {iteration}: all bugs fixed, stopping")
                break
            if self.config.translation_enabled:
                entrants = [
                    bug
                    for bug in unfixed
                    if self.state.remaining_targets(bug.bug_id, self.languages)
                ]
                if not entrants:
                    self.log.append(
                        f"iteration {iteration}: no remaining targets, stopping"
                    )
                    break
            else:
                entrants = unfixed
            self._run_rounds(entrants, iteration)
            iterations_run += 1
        return RunResult(
            state=self.state,
            ledger=self.ledger,
            languages=self.languages,
            config=self.config,
            initial_table=dict(self.strategy.table),
            iterations_run=iterations_run,
            log=self.log,
        )


def run_campaign(
    bugs: Sequence[BugInstance],
    languages: LanguageSet,
    config: RunConfig,
    gateway: ModelGateway,
    toolchain: Toolchain,
    history_store: HistoryStore | None = None,
) -> RunResult:
    return Orchestrator(bugs, languages, config, gateway, toolchain, history_store).run()


def translation_path(state: CampaignState, ledger: RunLedger, bug_id: str) -> list[str]:
    """Targets attempted in iteration order; for fixed bugs, truncated at the
    fixing iteration. A direct fix at iteration 0 yields the empty path."""
    camp = state.campaign(bug_id)  # raises KeyError for unknown bugs
    rows = sorted(
        (r for r in ledger.for_bug(bug_id) if r.target_language is not None),
        key=lambda r: r.iteration,
    )
    if camp.fixed and camp.fixed_iteration is not None:
        rows = [r for r in rows if r.iteration <= camp.fixed_iteration]
    return [r.target_language for r in rows]


def mean_path_length(
    state: CampaignState, ledger: RunLedger, include_direct_fixes: bool = True
) -> float | None:
    """Mean translation-hop count over fixed bugs; None when nothing is fixed.

    include_direct_fixes=False restricts the mean to bugs that needed at
    least one translation iteration.
    """
    lengths = []
    for bug_id in state.bug_ids():
        camp = state.campaign(bug_id)
        if not camp.fixed:
            continue
        if not include_direct_fixes and camp.fixed_iteration == 0:
            continue
        lengths.append(len(translation_path(state, ledger, bug_id)))
    if not lengths:
        return None
    return sum(lengths) / len(lengths)
