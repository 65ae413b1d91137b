"""Run ledger: per-(bug, iteration) records emitted by the campaign loop.

The ledger is the durable trace of a run. Analytics consumes it read-only;
serialization is line-delimited JSON with sorted keys so identical campaigns
produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from polyrepair.core import Outcome


@dataclass(frozen=True, slots=True)
class TranslationEvent:
    """Outcome change of the buggy code itself under translation."""

    bug_id: str
    iteration: int
    source_language: str
    target_language: str
    pre_outcome: Outcome
    post_outcome: Outcome
    per_test: tuple[tuple[Outcome, Outcome], ...]

    def __post_init__(self) -> None:
        if self.target_language == self.source_language:
            raise ValueError(f"bug {self.bug_id!r}: translation target equals source")

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "iteration": self.iteration,
            "source_language": self.source_language,
            "target_language": self.target_language,
            "pre_outcome": self.pre_outcome.value,
            "post_outcome": self.post_outcome.value,
            "per_test": [[a.value, b.value] for a, b in self.per_test],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TranslationEvent:
        return cls(
            bug_id=d["bug_id"],
            iteration=int(d["iteration"]),
            source_language=d["source_language"],
            target_language=d["target_language"],
            pre_outcome=Outcome(d["pre_outcome"]),
            post_outcome=Outcome(d["post_outcome"]),
            per_test=tuple((Outcome(a), Outcome(b)) for a, b in d["per_test"]),
        )


@dataclass(frozen=True, slots=True)
class IterationRecord:
    """Everything that happened to one bug during one iteration.

    Direct-repair rounds carry target_language=None and no translation event.
    For translation rounds, sample_outcomes are target-language aggregates and
    back_translation_outcomes align one-to-one with the target-correct samples.
    """

    bug_id: str
    iteration: int
    strategy: str
    target_language: str | None
    decision_rationale: str
    candidates: tuple[str, ...]
    translation: TranslationEvent | None
    sample_outcomes: tuple[Outcome, ...]
    back_translation_outcomes: tuple[Outcome, ...] | None
    n: int
    c: int
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "iteration": self.iteration,
            "strategy": self.strategy,
            "target_language": self.target_language,
            "decision_rationale": self.decision_rationale,
            "candidates": list(self.candidates),
            "translation": self.translation.to_dict() if self.translation else None,
            "sample_outcomes": [o.value for o in self.sample_outcomes],
            "back_translation_outcomes": (
                None
                if self.back_translation_outcomes is None
                else [o.value for o in self.back_translation_outcomes]
            ),
            "n": self.n,
            "c": self.c,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> IterationRecord:
        return cls(
            bug_id=d["bug_id"],
            iteration=int(d["iteration"]),
            strategy=d["strategy"],
            target_language=d["target_language"],
            decision_rationale=d["decision_rationale"],
            candidates=tuple(d["candidates"]),
            translation=(
                TranslationEvent.from_dict(d["translation"]) if d["translation"] else None
            ),
            sample_outcomes=tuple(Outcome(o) for o in d["sample_outcomes"]),
            back_translation_outcomes=(
                None
                if d["back_translation_outcomes"] is None
                else tuple(Outcome(o) for o in d["back_translation_outcomes"])
            ),
            n=int(d["n"]),
            c=int(d["c"]),
            error=d.get("error"),
        )


class RunLedger:
    """Ordered collection of IterationRecords for one campaign."""

    def __init__(self, records: list[IterationRecord] | None = None):
        self.records: list[IterationRecord] = list(records or [])

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def extend(self, records) -> None:
        self.records.extend(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def for_bug(self, bug_id: str) -> list[IterationRecord]:
        return [r for r in self.records if r.bug_id == bug_id]

    def events(self) -> list[TranslationEvent]:
        return [r.translation for r in self.records if r.translation is not None]

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":"))
            for r in self.records
        ]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> RunLedger:
        records = [
            IterationRecord.from_dict(json.loads(line))
            for line in text.splitlines()
            if line.strip()
        ]
        return cls(records)
