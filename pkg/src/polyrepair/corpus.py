"""Corpus loading: bugs and problems from line-delimited record files.

Layout: `<root>/problems.jsonl` plus `<root>/bugs/<language>.jsonl`, one
record per line. The campaign's language set is the sorted display names of
the bug files found, which doubles as the stable tie-break order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from polyrepair.core import (
    MAX_DIFFICULTY,
    MIN_DIFFICULTY,
    BugInstance,
    LanguageSet,
    Outcome,
    ProblemSpec,
    TestCase,
)

LANGUAGE_SLUGS = {
    "C": "c",
    "C#": "csharp",
    "C++": "cpp",
    "Go": "go",
    "Java": "java",
    "JavaScript": "javascript",
    "Kotlin": "kotlin",
    "PHP": "php",
    "Python": "python",
    "Ruby": "ruby",
    "Rust": "rust",
}
SLUG_LANGUAGES = {slug: name for name, slug in LANGUAGE_SLUGS.items()}


def language_slug(name: str) -> str:
    if name in LANGUAGE_SLUGS:
        return LANGUAGE_SLUGS[name]
    slug = re.sub(r"[^a-z0-9_]+", "", name.lower())
    if not slug:
        raise ValueError(f"cannot derive a file name for language {name!r}")
    return slug


class CorpusError(Exception):
    """The corpus on disk cannot be used; message lists every diagnostic."""


@dataclass(frozen=True)
class CorpusManifest:
    language_counts: dict[str, int]
    total: int

    def to_text(self) -> str:
        lines = ["corpus manifest"]
        for language, count in self.language_counts.items():
            lines.append(f"  {language}: {count}")
        lines.append(f"  total: {self.total}")
        return "\n".join(lines) + "\n"


Located = tuple[str, dict]


def read_jsonl(path: Path) -> list[Located]:
    """Parse one-record-per-line files, tagging each record with file:line."""
    records: list[Located] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        location = f"{path}:{line_no}"
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{location}: invalid record: {exc}") from exc
        if not isinstance(data, dict):
            raise CorpusError(f"{location}: record must be an object")
        records.append((location, data))
    return records


def _locate(records) -> list[Located]:
    out: list[Located] = []
    for i, record in enumerate(records):
        if isinstance(record, tuple):
            out.append(record)
        else:
            out.append((f"record {i}", record))
    return out


PROBLEM_FIELDS = ("problem_id", "description", "input_spec", "output_spec", "difficulty", "tests")
BUG_FIELDS = ("bug_id", "lang", "source_code", "problem_id", "exec_outcome", "difficulty")


def validate_corpus(bug_records, problem_records, languages: LanguageSet | None = None) -> list[str]:
    """Collect every reason the corpus is unusable; empty means usable.

    Accepts raw record dicts (optionally (location, dict) pairs) so that it
    can run before type construction rejects bad data outright.
    """
    diagnostics: list[str] = []
    problems: dict[str, Located] = {}
    for location, record in _locate(problem_records):
        missing = [f for f in PROBLEM_FIELDS if f not in record]
        if missing:
            diagnostics.append(f"{location}: problem record missing fields {missing}")
            continue
        pid = record["problem_id"]
        if pid in problems:
            diagnostics.append(f"{location}: duplicate problem_id {pid!r}")
            continue
        problems[pid] = (location, record)
        if not isinstance(record["difficulty"], int) or not (
            MIN_DIFFICULTY <= record["difficulty"] <= MAX_DIFFICULTY
        ):
            diagnostics.append(
                f"{location}: difficulty {record['difficulty']!r} outside "
                f"[{MIN_DIFFICULTY}, {MAX_DIFFICULTY}]"
            )
        if not record["tests"]:
            diagnostics.append(f"{location}: problem {pid!r} has no tests")
    seen_bugs: set[str] = set()
    for location, record in _locate(bug_records):
        missing = [f for f in BUG_FIELDS if f not in record]
        if missing:
            diagnostics.append(f"{location}: bug record missing fields {missing}")
            continue
        bug_id = record["bug_id"]
        if bug_id in seen_bugs:
            diagnostics.append(f"{location}: duplicate bug_id {bug_id!r}")
            continue
        seen_bugs.add(bug_id)
        if languages is not None and record["lang"] not in languages:
            diagnostics.append(f"{location}: unknown language {record['lang']!r}")
        if record["problem_id"] not in problems:
            diagnostics.append(f"{location}: unknown problem_id {record['problem_id']!r}")
        else:
            _, problem = problems[record["problem_id"]]
            if record["difficulty"] != problem.get("difficulty"):
                diagnostics.append(
                    f"{location}: difficulty {record['difficulty']!r} disagrees with "
                    f"problem {record['problem_id']!r}"
                )
        if not isinstance(record["difficulty"], int) or not (
            MIN_DIFFICULTY <= record["difficulty"] <= MAX_DIFFICULTY
        ):
            diagnostics.append(
                f"{location}: difficulty {record['difficulty']!r} outside "
                f"[{MIN_DIFFICULTY}, {MAX_DIFFICULTY}]"
            )
        try:
            outcome = Outcome(record["exec_outcome"])
        except ValueError:
            diagnostics.append(f"{location}: unknown exec_outcome {record['exec_outcome']!r}")
            continue
        if outcome is Outcome.PASSED:
            diagnostics.append(f"{location}: bug {bug_id!r} marked PASSED is not a bug")
    return diagnostics


def _parse_problem(location: str, record: dict[str, Any]) -> ProblemSpec:
    try:
        tests = tuple(TestCase.from_dict(t) for t in record["tests"])
        return ProblemSpec(
            problem_id=record["problem_id"],
            description=record["description"],
            input_spec=record["input_spec"],
            output_spec=record["output_spec"],
            difficulty=record["difficulty"],
            tests=tests,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"{location}: bad problem record: {exc}") from exc


def load_corpus(
    root: str | Path, languages: LanguageSet | None = None
) -> tuple[list[BugInstance], dict[str, ProblemSpec], CorpusManifest, LanguageSet]:
    """Load every bug and problem under root.

    Bugs are ordered language-by-language (set order), preserving file order
    within a language; this is the corpus order used for deterministic
    scheduling and output sorting.
    """
    root = Path(root)
    problems_path = root / "problems.jsonl"
    bugs_dir = root / "bugs"
    if not problems_path.is_file():
        raise CorpusError(f"{problems_path}: missing problems file")
    if not bugs_dir.is_dir():
        raise CorpusError(f"{bugs_dir}: missing bugs directory")

    problem_records = read_jsonl(problems_path)
    files: dict[str, Path] = {}
    for path in sorted(bugs_dir.glob("*.jsonl")):
        name = SLUG_LANGUAGES.get(path.stem, path.stem)
        files[name] = path
    if languages is None:
        languages = LanguageSet(tuple(sorted(files)))
    else:
        extra = set(files) - set(languages.names)
        if extra:
            raise CorpusError(f"{bugs_dir}: bug files for languages outside the set: {sorted(extra)}")

    bug_records: list[Located] = []
    per_file_records: dict[str, list[Located]] = {}
    for language in languages:
        path = files.get(language)
        records = read_jsonl(path) if path is not None else []
        for location, record in records:
            if record.get("lang") != language:
                raise CorpusError(
                    f"{location}: language tag {record.get('lang')!r} does not match file "
                    f"for {language!r}"
                )
        per_file_records[language] = records
        bug_records.extend(records)

    diagnostics = validate_corpus(bug_records, problem_records, languages)
    if diagnostics:
        raise CorpusError("unusable corpus:\n" + "\n".join(diagnostics))

    problems = {
        record["problem_id"]: _parse_problem(location, record)
        for location, record in problem_records
    }
    bugs: list[BugInstance] = []
    counts: dict[str, int] = {}
    for language in languages:
        records = per_file_records.get(language, [])
        counts[language] = len(records)
        for location, record in records:
            bugs.append(
                BugInstance(
                    bug_id=record["bug_id"],
                    source_language=language,
                    code=record["source_code"],
                    problem=problems[record["problem_id"]],
                    initial_outcome=Outcome(record["exec_outcome"]),
                    error_type=record.get("error_type", record["exec_outcome"]),
                )
            )
    manifest = CorpusManifest(language_counts=counts, total=len(bugs))
    return bugs, problems, manifest, languages


def write_corpus(
    root: str | Path,
    problems: list[ProblemSpec],
    bugs: list[BugInstance],
    error_types: dict[str, str] | None = None,
) -> None:
    """Emit a corpus directory in the load_corpus layout (fixture helper)."""
    root = Path(root)
    (root / "bugs").mkdir(parents=True, exist_ok=True)
    with (root / "problems.jsonl").open("w", encoding="utf-8") as fh:
        for problem in problems:
            fh.write(json.dumps(problem.to_dict(), sort_keys=True) + "\n")
    by_language: dict[str, list[BugInstance]] = {}
    for bug in bugs:
        by_language.setdefault(bug.source_language, []).append(bug)
    for language, items in by_language.items():
        path = root / "bugs" / f"{language_slug(language)}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            for bug in items:
                record = {
                    "bug_id": bug.bug_id,
                    "lang": language,
                    "source_code": bug.code,
                    "problem_id": bug.problem.problem_id,
                    "exec_outcome": bug.initial_outcome.value,
                    "difficulty": bug.problem.difficulty,
                }
                if bug.error_type != bug.initial_outcome.value:
                    record["error_type"] = bug.error_type
                fh.write(json.dumps(record, sort_keys=True) + "\n")
