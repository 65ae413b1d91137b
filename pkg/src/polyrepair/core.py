"""Domain vocabulary: languages, outcomes, bugs, samples, and campaign state."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

DEFAULT_LANGUAGES = (
    "C",
    "C#",
    "C++",
    "Go",
    "Java",
    "JavaScript",
    "Kotlin",
    "PHP",
    "Python",
    "Ruby",
    "Rust",
)

MIN_DIFFICULTY = 800
MAX_DIFFICULTY = 3500


class Outcome(str, enum.Enum):
    """Execution outcome of one code sample against a test suite.

    Declaration order is the canonical axis order for transition matrices.
    """

    COMPILATION_ERROR = "COMPILATION_ERROR"
    RUNTIME_ERROR = "RUNTIME_ERROR"
    MEMORY_LIMIT_EXCEEDED = "MEMORY_LIMIT_EXCEEDED"
    TIME_LIMIT_EXCEEDED = "TIME_LIMIT_EXCEEDED"
    WRONG_ANSWER = "WRONG_ANSWER"
    PASSED = "PASSED"

    def __str__(self) -> str:  # so f-strings print the bare category name
        return self.value


OUTCOME_ORDER = tuple(Outcome)


class Provenance(str, enum.Enum):
    """How a code sample came to exist within a repair campaign."""

    DIRECT_REPAIR = "DIRECT_REPAIR"
    TRANSLATED_BUG = "TRANSLATED_BUG"
    TARGET_REPAIR = "TARGET_REPAIR"
    BACK_TRANSLATED = "BACK_TRANSLATED"

    def __str__(self) -> str:
        return self.value


class LanguageSet:
    """Fixed, ordered set of language names valid for one campaign.

    Declaration order is the stable tie-break order used everywhere a
    deterministic choice among languages is needed.
    """

    def __init__(self, names: tuple[str, ...] | list[str] = DEFAULT_LANGUAGES):
        names = tuple(names)
        if not names:
            raise ValueError("language set must not be empty")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate language names: {names}")
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __iter__(self):
        return iter(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LanguageSet) and self._names == other._names

    def __repr__(self) -> str:
        return f"LanguageSet({list(self._names)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown language {name!r}; set is {list(self._names)}") from None

    def require(self, name: str) -> str:
        if name not in self._index:
            raise ValueError(f"unknown language {name!r}; set is {list(self._names)}")
        return name

    def sorted(self, names) -> list[str]:
        """Return the given names in declaration order."""
        return sorted(names, key=self.index)


@dataclass(frozen=True, slots=True)
class TestCase:
    __test__ = False  # domain type, not a pytest class

    input: bytes
    expected_output: bytes
    time_limit_ms: int = 2000
    memory_limit_mib: int = 256

    def __post_init__(self) -> None:
        if self.time_limit_ms <= 0:
            raise ValueError(f"time_limit_ms must be positive, got {self.time_limit_ms}")
        if self.memory_limit_mib <= 0:
            raise ValueError(f"memory_limit_mib must be positive, got {self.memory_limit_mib}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "input": self.input.decode("utf-8"),
            "expected_output": self.expected_output.decode("utf-8"),
            "time_limit_ms": self.time_limit_ms,
            "memory_limit_mib": self.memory_limit_mib,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TestCase:
        return cls(
            input=d["input"].encode("utf-8"),
            expected_output=d["expected_output"].encode("utf-8"),
            time_limit_ms=int(d.get("time_limit_ms", 2000)),
            memory_limit_mib=int(d.get("memory_limit_mib", 256)),
        )


@dataclass(frozen=True, slots=True)
class ProblemSpec:
    problem_id: str
    description: str
    input_spec: str
    output_spec: str
    difficulty: int
    tests: tuple[TestCase, ...]

    def __post_init__(self) -> None:
        if not (MIN_DIFFICULTY <= self.difficulty <= MAX_DIFFICULTY):
            raise ValueError(
                f"difficulty {self.difficulty} outside [{MIN_DIFFICULTY}, {MAX_DIFFICULTY}]"
            )
        if not self.tests:
            raise ValueError(f"problem {self.problem_id!r} has no tests")

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "description": self.description,
            "input_spec": self.input_spec,
            "output_spec": self.output_spec,
            "difficulty": self.difficulty,
            "tests": [t.to_dict() for t in self.tests],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ProblemSpec:
        return cls(
            problem_id=d["problem_id"],
            description=d["description"],
            input_spec=d["input_spec"],
            output_spec=d["output_spec"],
            difficulty=int(d["difficulty"]),
            tests=tuple(TestCase.from_dict(t) for t in d["tests"]),
        )


@dataclass(frozen=True, slots=True)
class BugInstance:
    bug_id: str
    source_language: str
    code: str
    problem: ProblemSpec
    initial_outcome: Outcome
    error_type: str

    def __post_init__(self) -> None:
        if self.initial_outcome is Outcome.PASSED:
            raise ValueError(f"bug {self.bug_id!r}: a passing submission is not a bug")

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "source_language": self.source_language,
            "code": self.code,
            "problem_id": self.problem.problem_id,
            "initial_outcome": self.initial_outcome.value,
            "error_type": self.error_type,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], problems: dict[str, ProblemSpec]) -> BugInstance:
        return cls(
            bug_id=d["bug_id"],
            source_language=d["source_language"],
            code=d["code"],
            problem=problems[d["problem_id"]],
            initial_outcome=Outcome(d["initial_outcome"]),
            error_type=d["error_type"],
        )


@dataclass(frozen=True, slots=True)
class CodeSample:
    sample_id: str
    bug_id: str
    iteration: int
    language: str
    code: str
    provenance: Provenance

    def __post_init__(self) -> None:
        if self.iteration < 0:
            raise ValueError(f"sample {self.sample_id!r}: iteration must be >= 0")
        if self.provenance is Provenance.BACK_TRANSLATED and self.iteration < 1:
            raise ValueError(
                f"sample {self.sample_id!r}: back-translated samples only exist from iteration 1"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "bug_id": self.bug_id,
            "iteration": self.iteration,
            "language": self.language,
            "code": self.code,
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CodeSample:
        return cls(
            sample_id=d["sample_id"],
            bug_id=d["bug_id"],
            iteration=int(d["iteration"]),
            language=d["language"],
            code=d["code"],
            provenance=Provenance(d["provenance"]),
        )


@dataclass(slots=True)
class BugCampaign:
    """Mutable per-bug record of a repair campaign."""

    bug_id: str
    source_language: str
    fixed: bool = False
    fixed_iteration: int | None = None
    attempted_targets: list[str] = field(default_factory=list)
    tallies: dict[int, tuple[int, int]] = field(default_factory=dict)  # iteration -> (n, c)

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "source_language": self.source_language,
            "fixed": self.fixed,
            "fixed_iteration": self.fixed_iteration,
            "attempted_targets": list(self.attempted_targets),
            "tallies": {str(i): [n, c] for i, (n, c) in sorted(self.tallies.items())},
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> BugCampaign:
        return cls(
            bug_id=d["bug_id"],
            source_language=d["source_language"],
            fixed=bool(d["fixed"]),
            fixed_iteration=d["fixed_iteration"],
            attempted_targets=list(d["attempted_targets"]),
            tallies={int(i): (int(n), int(c)) for i, (n, c) in d["tallies"].items()},
        )


class CampaignState:
    """Campaign bookkeeping across all bugs.

    Mutation is confined to the orchestrator thread; everything handed out is
    a value or a copy.
    """

    def __init__(self) -> None:
        self._bugs: dict[str, BugCampaign] = {}

    def register(self, bug_id: str, source_language: str) -> None:
        if bug_id in self._bugs:
            raise ValueError(f"bug {bug_id!r} already registered")
        self._bugs[bug_id] = BugCampaign(bug_id=bug_id, source_language=source_language)

    def bug_ids(self) -> list[str]:
        return list(self._bugs)

    def campaign(self, bug_id: str) -> BugCampaign:
        try:
            return self._bugs[bug_id]
        except KeyError:
            raise KeyError(f"unknown bug {bug_id!r}") from None

    def record_attempt(self, bug_id: str, target_language: str) -> None:
        camp = self.campaign(bug_id)
        if target_language == camp.source_language:
            raise ValueError(f"bug {bug_id!r}: target equals source language {target_language!r}")
        if target_language in camp.attempted_targets:
            raise ValueError(f"bug {bug_id!r}: target {target_language!r} already attempted")
        camp.attempted_targets.append(target_language)

    def mark_iteration_result(self, bug_id: str, iteration: int, n: int, c: int) -> None:
        if not (n >= c >= 0):
            raise ValueError(f"bug {bug_id!r}: need n >= c >= 0, got n={n}, c={c}")
        camp = self.campaign(bug_id)
        if iteration in camp.tallies:
            raise ValueError(f"bug {bug_id!r}: iteration {iteration} already recorded")
        camp.tallies[iteration] = (n, c)
        if c > 0 and not camp.fixed:
            camp.fixed = True
            camp.fixed_iteration = iteration

    def remaining_targets(self, bug_id: str, languages: LanguageSet) -> list[str]:
        camp = self.campaign(bug_id)
        used = set(camp.attempted_targets)
        used.add(camp.source_language)
        return [name for name in languages if name not in used]

    def to_dict(self) -> dict[str, Any]:
        return {bug_id: camp.to_dict() for bug_id, camp in sorted(self._bugs.items())}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CampaignState:
        state = cls()
        for bug_id, camp in d.items():
            state._bugs[bug_id] = BugCampaign.from_dict(camp)
        return state
