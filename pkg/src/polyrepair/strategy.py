"""Target-language selection policies.

All selectors draw from the bug's remaining candidates only, so no policy
can repeat a target or pick the source language. The reasoning policy asks
the model via a decision prompt and falls back deterministically when the
reply is unusable.
"""

from __future__ import annotations

import enum
import hashlib
import random
from typing import Sequence

from polyrepair.core import BugInstance, LanguageSet
from polyrepair.gateway import (
    ModelGateway,
    Task,
    TaskRequest,
    render_history_initial,
    render_history_translation,
)
from polyrepair.history import RetrievalResult


class StrategyKind(str, enum.Enum):
    GREEDY = "greedy"
    RANDOM = "random"
    REASONING = "reasoning"
    REASONING_NO_HISTORY = "reasoning_no_history"

    def __str__(self) -> str:
        return self.value


# Per-language Pass@k measured on iteration-0 direct repair.
InitialPerformanceTable = dict[str, float]


def validate_table(table: InitialPerformanceTable) -> None:
    for language, value in table.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"table value for {language!r} outside [0, 1]: {value}")


def select_greedy(
    candidates: Sequence[str],
    table: InitialPerformanceTable,
    languages: LanguageSet,
) -> str:
    """Best initial-repair language still available; ties go to set order."""
    if not candidates:
        raise ValueError("no remaining target candidates")
    return min(candidates, key=lambda L: (-table.get(L, 0.0), languages.index(L)))


def _stream_seed(run_seed: int, bug_id: str) -> int:
    material = f"{run_seed}:{bug_id}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def select_random(
    candidates: Sequence[str], run_seed: int, bug_id: str, iteration: int
) -> str:
    """Uniform choice from the bug's own seeded stream.

    The stream is keyed by (run seed, bug_id) alone and advanced once per
    iteration, so scheduling order across bugs cannot change any draw.
    """
    if not candidates:
        raise ValueError("no remaining target candidates")
    rng = random.Random(_stream_seed(run_seed, bug_id))
    u = rng.random()
    for _ in range(max(0, iteration - 1)):
        u = rng.random()
    return candidates[min(int(u * len(candidates)), len(candidates) - 1)]


def fallback_choice(
    candidates: Sequence[str],
    history: RetrievalResult | None,
    table: InitialPerformanceTable,
    languages: LanguageSet,
) -> str:
    """Deterministic chain: historical translation-success counts, then the
    greedy table, then set order (greedy over an empty table)."""
    if not candidates:
        raise ValueError("no remaining target candidates")
    if history is not None:
        counts: dict[str, int] = {}
        for entry, _similarity in history.translation_neighbors:
            for language in entry.successful_target_languages:
                if language in candidates:
                    counts[language] = counts.get(language, 0) + 1
        if counts:
            best = max(counts.values())
            tied = [L for L in candidates if counts.get(L) == best]
            return select_greedy(tied, table, languages)
    return select_greedy(candidates, table, languages)


def select_reasoning(
    bug: BugInstance,
    candidates: Sequence[str],
    history: RetrievalResult | None,
    gateway: ModelGateway,
    table: InitialPerformanceTable,
    languages: LanguageSet,
    iteration: int,
    include_history: bool = True,
) -> tuple[str, str]:
    """Decision-prompt selection with validated parsing and fallback."""
    if not candidates:
        raise ValueError("no remaining target candidates")
    neighbors = history if include_history else None
    initial_block = (
        render_history_initial(neighbors.initial_neighbors) if neighbors else None
    )
    translation_block = (
        render_history_translation(neighbors.translation_neighbors) if neighbors else None
    )
    fallback = fallback_choice(candidates, neighbors, table, languages)
    request = TaskRequest(
        task=Task.DECIDE_TARGET,
        bug_id=bug.bug_id,
        iteration=iteration,
        source_language=bug.source_language,
        error_type=bug.error_type,
        difficulty=bug.problem.difficulty,
        initial_outcome=bug.initial_outcome,
        candidates=tuple(candidates),
        history_initial=initial_block,
        history_translation=translation_block,
    )
    decision = gateway.decide_target(request, fallback=fallback)
    return decision.chosen_language, decision.rationale


class Strategy:
    """Dispatches one configured policy over per-bug selections."""

    def __init__(
        self,
        kind: StrategyKind,
        languages: LanguageSet,
        run_seed: int,
        gateway: ModelGateway | None = None,
    ):
        self.kind = kind
        self.languages = languages
        self.run_seed = run_seed
        self.gateway = gateway
        self.table: InitialPerformanceTable = {}

    def set_table(self, table: InitialPerformanceTable) -> None:
        validate_table(table)
        self.table = dict(table)

    def select(
        self,
        bug: BugInstance,
        candidates: Sequence[str],
        history: RetrievalResult | None,
        iteration: int,
    ) -> tuple[str, str]:
        """(target language, rationale) for one unfixed bug."""
        if self.kind is StrategyKind.GREEDY:
            return select_greedy(candidates, self.table, self.languages), ""
        if self.kind is StrategyKind.RANDOM:
            return select_random(candidates, self.run_seed, bug.bug_id, iteration), ""
        if self.gateway is None:
            raise ValueError(f"{self.kind} strategy requires a model gateway")
        return select_reasoning(
            bug,
            candidates,
            history,
            self.gateway,
            self.table,
            self.languages,
            iteration,
            include_history=self.kind is StrategyKind.REASONING,
        )
