"""Historical repair storage and similarity retrieval.

Evaluated bugs are encoded into fixed-length vectors and kept in two
partitions (initial direct repairs, translation-based repairs). Retrieval is
an exact linear cosine scan; stores stay small enough that approximate
indexing would only add failure modes.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from polyrepair.core import OUTCOME_ORDER, BugInstance, LanguageSet, Outcome

ERROR_TYPE_BUCKETS = 8


class HistorySource(str, enum.Enum):
    INITIAL_DIRECT = "INITIAL_DIRECT"
    TRANSLATION_BASED = "TRANSLATION_BASED"

    def __str__(self) -> str:
        return self.value


class CharacteristicsEncoder:
    """Deterministic bug-characteristics embedding.

    Layout: one-hot source language | normalized difficulty | one-hot
    initial outcome | hashed error-type token buckets.
    """

    def __init__(self, languages: LanguageSet):
        self.languages = languages
        self.dimension = len(languages) + 1 + len(OUTCOME_ORDER) + ERROR_TYPE_BUCKETS

    def encode(
        self,
        source_language: str,
        difficulty: int,
        initial_outcome: Outcome,
        error_type: str,
    ) -> tuple[float, ...]:
        vector = [0.0] * self.dimension
        vector[self.languages.index(source_language)] = 1.0
        offset = len(self.languages)
        normalized = (difficulty - 800) / 2700
        vector[offset] = min(1.0, max(0.0, normalized))
        offset += 1
        vector[offset + OUTCOME_ORDER.index(initial_outcome)] = 1.0
        offset += len(OUTCOME_ORDER)
        for token in re.findall(r"[a-z0-9]+", error_type.lower()):
            digest = hashlib.sha256(token.encode("utf-8")).hexdigest()
            vector[offset + int(digest, 16) % ERROR_TYPE_BUCKETS] += 1.0
        return tuple(vector)

    def encode_bug(self, bug: BugInstance) -> tuple[float, ...]:
        return self.encode(
            bug.source_language, bug.problem.difficulty, bug.initial_outcome, bug.error_type
        )


def cosine_similarity(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(x * x for x in b))
    return dot / (norm_a * norm_b)


@dataclass(frozen=True, slots=True)
class HistoryEntry:
    bug_id: str
    source: HistorySource
    source_language: str
    difficulty: int
    initial_outcome: Outcome
    error_type: str
    fixed: bool
    successful_target_languages: tuple[str, ...]
    n: int
    c: int
    vector: tuple[float, ...]
    iteration_written: int

    def __post_init__(self) -> None:
        if self.source is HistorySource.INITIAL_DIRECT:
            if self.iteration_written != 0:
                raise ValueError(
                    f"entry {self.bug_id!r}: initial-direct entries are written at iteration 0"
                )
            extra = set(self.successful_target_languages) - {self.source_language}
            if extra:
                raise ValueError(
                    f"entry {self.bug_id!r}: initial-direct success cannot name targets {extra}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "source": self.source.value,
            "source_language": self.source_language,
            "difficulty": self.difficulty,
            "initial_outcome": self.initial_outcome.value,
            "error_type": self.error_type,
            "fixed": self.fixed,
            "successful_target_languages": list(self.successful_target_languages),
            "n": self.n,
            "c": self.c,
            "vector": list(self.vector),
            "iteration_written": self.iteration_written,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> HistoryEntry:
        return cls(
            bug_id=d["bug_id"],
            source=HistorySource(d["source"]),
            source_language=d["source_language"],
            difficulty=int(d["difficulty"]),
            initial_outcome=Outcome(d["initial_outcome"]),
            error_type=d["error_type"],
            fixed=bool(d["fixed"]),
            successful_target_languages=tuple(d["successful_target_languages"]),
            n=int(d["n"]),
            c=int(d["c"]),
            vector=tuple(float(v) for v in d["vector"]),
            iteration_written=int(d["iteration_written"]),
        )


@dataclass(frozen=True)
class RetrievalResult:
    query_bug_id: str
    initial_neighbors: tuple[tuple[HistoryEntry, float], ...]
    translation_neighbors: tuple[tuple[HistoryEntry, float], ...]

    def is_empty(self) -> bool:
        return not self.initial_neighbors and not self.translation_neighbors


EMPTY_RETRIEVAL = RetrievalResult("", (), ())


class HistoryStore:
    """Keyed by (bug_id, iteration_written); re-upserting a key replaces it.

    Persistence is an append-only record file; the in-memory index is rebuilt
    on open with last-write-wins per key. Writes happen only at iteration
    barriers under a single writer; reads snapshot under the same lock.
    """

    def __init__(self, encoder: CharacteristicsEncoder, path: str | Path | None = None):
        self.encoder = encoder
        self.path = Path(path) if path is not None else None
        self._entries: dict[tuple[str, int], HistoryEntry] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for line_no, line in enumerate(
                self.path.read_text(encoding="utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                try:
                    entry = HistoryEntry.from_dict(json.loads(line))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ValueError(f"{self.path}:{line_no}: bad history record: {exc}") from exc
                self._check_dimension(entry)
                self._entries[(entry.bug_id, entry.iteration_written)] = entry

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def _check_dimension(self, entry: HistoryEntry) -> None:
        if len(entry.vector) != self.encoder.dimension:
            raise ValueError(
                f"entry {entry.bug_id!r}: vector dimension {len(entry.vector)} != "
                f"encoder dimension {self.encoder.dimension}"
            )

    def upsert_batch(self, entries: list[HistoryEntry]) -> None:
        for entry in entries:
            self._check_dimension(entry)
        # canonical order makes the store file independent of the order bugs
        # finished within the iteration
        ordered = sorted(entries, key=lambda e: (e.bug_id, e.iteration_written))
        with self._lock:
            for entry in ordered:
                self._entries[(entry.bug_id, entry.iteration_written)] = entry
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    for entry in ordered:
                        fh.write(
                            json.dumps(entry.to_dict(), sort_keys=True, separators=(",", ":"))
                        )
                        fh.write("\n")

    def entries(self) -> list[HistoryEntry]:
        with self._lock:
            return [self._entries[key] for key in sorted(self._entries)]

    def export_jsonl(self) -> str:
        return "".join(
            json.dumps(e.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
            for e in self.entries()
        )

    def retrieve(self, query: BugInstance, k: int) -> RetrievalResult:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        query_vector = self.encoder.encode_bug(query)
        partitions: dict[HistorySource, list[tuple[HistoryEntry, float]]] = {
            HistorySource.INITIAL_DIRECT: [],
            HistorySource.TRANSLATION_BASED: [],
        }
        for entry in self.entries():
            if entry.bug_id == query.bug_id:
                continue
            similarity = cosine_similarity(query_vector, entry.vector)
            partitions[entry.source].append((entry, similarity))
        for scored in partitions.values():
            scored.sort(key=lambda pair: (-pair[1], pair[0].bug_id, pair[0].iteration_written))
        return RetrievalResult(
            query_bug_id=query.bug_id,
            initial_neighbors=tuple(partitions[HistorySource.INITIAL_DIRECT][:k]),
            translation_neighbors=tuple(partitions[HistorySource.TRANSLATION_BASED][:k]),
        )
